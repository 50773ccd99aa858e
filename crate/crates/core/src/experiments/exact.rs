//! Exact probabilities by enumeration on small regions, and the FKG-type
//! inequality `P(B ∩ E ∩ {ν_A}) ≥ P(B)·P(E ∩ {ν_A})`.

use serde::Serialize;

use super::{run_on_region, EstimatePlan};
use crate::events::{EventSpec, ResolvedEvent};
use crate::lattice::{Region, SiteId, SiteSet};
use crate::percolation::{enumerate_configs, label_clusters, BitConfig, EventPredicate, Law};
use crate::rng::{CounterStream, Seed, DOMAIN_AUX};
use crate::{Error, Result};

/// Hits of each event over all `2^|region|` configurations.
pub fn exact_counts(region: &Region, specs: &[EventSpec]) -> Result<(Vec<u64>, u64)> {
    if specs.iter().any(|s| s.radius_method == Some(crate::events::RadiusMethod::Green)) {
        return Err(Error::Plan("the green method is randomized; enumerate brackets only".into()));
    }
    let events: Vec<ResolvedEvent> = specs.iter().map(|s| s.resolve(region, None)).collect::<Result<_>>()?;
    let all: SiteSet = region.sites().collect();
    let mut hits = vec![0u64; events.len()];
    let mut total = 0u64;
    for c in enumerate_configs(region, &all)? {
        let labels = label_clusters(&c);
        for (h, e) in hits.iter_mut().zip(&events) {
            *h += u64::from(e.eval(&mut &labels, 0));
        }
        total += 1;
    }
    Ok((hits, total))
}

pub fn exact_probabilities(region: &Region, specs: &[EventSpec]) -> Result<Vec<f64>> {
    let (hits, total) = exact_counts(region, specs)?;
    Ok(hits.iter().map(|&h| h as f64 / total as f64).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnumerationRow {
    pub event: String,
    pub exact: f64,
    pub mc: f64,
    pub n: u64,
    /// `|mc − exact| / σ` with `σ² = p(1−p)/n` at the exact `p`; 0 when both
    /// are degenerate and equal, infinite when they differ.
    pub z: f64,
}

impl EnumerationRow {
    pub fn within(&self, sigmas: f64) -> bool {
        self.z <= sigmas
    }
}

/// Monte Carlo means of a plan next to exact probabilities on the same region.
pub fn enumeration_agreement(plan: &EstimatePlan, workers: usize) -> Result<Vec<EnumerationRow>> {
    if plan.law != Law::Critical {
        return Err(Error::Plan("enumeration compares against the critical law only".into()));
    }
    let region = plan.region.build()?;
    let specs = plan.expanded_events();
    let exact = exact_probabilities(&region, &specs)?;
    let run = run_on_region(plan, plan.region, workers)?;
    Ok(specs
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (p, mc) = (exact[k], run.counts.mean(k));
            let sd = (p * (1.0 - p) / plan.n as f64).sqrt();
            let z = if sd > 0.0 {
                (mc - p).abs() / sd
            } else if mc == p {
                0.0
            } else {
                f64::INFINITY
            };
            EnumerationRow { event: s.label(), exact: p, mc, n: plan.n, z }
        })
        .collect())
}

/// Exact counts behind one inequality check, over `2^bits` configurations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FkgVerdict {
    pub bits: u32,
    pub b: u64,
    pub e_nu: u64,
    pub b_e_nu: u64,
    /// `b_e_nu · 2^bits ≥ b · e_nu`, in exact integers.
    pub holds: bool,
    /// Equality in the above.
    pub tight: bool,
}

impl FkgVerdict {
    pub fn p_b(&self) -> f64 {
        self.b as f64 / 2f64.powi(self.bits as i32)
    }
}

fn is_increasing(region: &Region, f: &EventPredicate) -> Result<bool> {
    let support = f.support().clone();
    for c in enumerate_configs(region, &support)? {
        if !f.eval(&c) {
            continue;
        }
        let mut up = c.clone();
        for s in support.iter().filter(|&s| !c.is_open(s)) {
            up.set(s, true);
            if !f.eval(&up) {
                return Ok(false);
            }
            up.set(s, false);
        }
    }
    Ok(true)
}

/// Exact check of `P(B ∩ E ∩ {ν_A}) ≥ P(B)·P(E ∩ {ν_A})` for increasing `B`
/// supported off `A` and increasing `E`; `nu[k]` is the state of the `k`-th
/// site of `A` in ascending order.
pub fn fkg_check(region: &Region, b: &EventPredicate, e: &EventPredicate, a: &SiteSet, nu: &[bool]) -> Result<FkgVerdict> {
    let mut errs = Vec::new();
    if nu.len() != a.len() {
        errs.push(format!("assignment has {} states for {} sites of A", nu.len(), a.len()));
    }
    if !b.support().intersection(a).is_empty() {
        errs.push("B must be supported off A".to_string());
    }
    if !errs.is_empty() {
        return Err(Error::Plan(errs.join("; ")));
    }
    if !is_increasing(region, b)? || !is_increasing(region, e)? {
        return Err(Error::Plan("B and E must be increasing".into()));
    }
    let support = b.support().union(e.support()).union(a);
    let (mut nb, mut ne, mut nbe) = (0u64, 0u64, 0u64);
    let fixed: Vec<(SiteId, bool)> = a.iter().zip(nu.iter().copied()).collect();
    for c in enumerate_configs(region, &support)? {
        let hb = b.eval(&c);
        nb += u64::from(hb);
        if fixed.iter().all(|&(s, v)| c.is_open(s) == v) && e.eval(&c) {
            ne += 1;
            nbe += u64::from(hb);
        }
    }
    let bits = support.len() as u32;
    let lhs = u128::from(nbe) << bits;
    let rhs = u128::from(nb) * u128::from(ne);
    Ok(FkgVerdict { bits, b: nb, e_nu: ne, b_e_nu: nbe, holds: lhs >= rhs, tight: lhs == rhs })
}

/// A randomized inequality instance on a small region.
pub struct FkgInstance {
    pub b: EventPredicate,
    pub e: EventPredicate,
    pub a: SiteSet,
    pub nu: Vec<bool>,
}

/// Monotone DNF: a union of random clauses, each an intersection of open sites.
fn random_dnf(pool: &[SiteId], rng: &mut CounterStream) -> EventPredicate {
    let clauses: Vec<Vec<SiteId>> = (0..1 + rng.below(4))
        .map(|_| {
            let mut c: Vec<SiteId> = (0..1 + rng.below(3)).map(|_| pool[rng.below(pool.len() as u64) as usize]).collect();
            c.sort_unstable();
            c.dedup();
            c
        })
        .collect();
    let support: SiteSet = clauses.iter().flatten().copied().collect();
    EventPredicate::new(support, move |c: &BitConfig<'_>| clauses.iter().any(|cl| cl.iter().all(|&s| c.is_open(s))))
}

/// Open-path connection between two random sites through `pool`.
fn random_connection(region: &Region, pool: &[SiteId], rng: &mut CounterStream) -> EventPredicate {
    let x = pool[rng.below(pool.len() as u64) as usize];
    let y = pool[rng.below(pool.len() as u64) as usize];
    let support: SiteSet = pool.iter().copied().collect();
    let allowed = support.clone();
    let region = region.clone();
    EventPredicate::new(support, move |c: &BitConfig<'_>| {
        if !c.is_open(x) || !c.is_open(y) {
            return false;
        }
        let mut seen = vec![x];
        let mut stack = vec![x];
        while let Some(s) = stack.pop() {
            if s == y {
                return true;
            }
            for t in region.neighbors(s) {
                if allowed.contains(t) && c.is_open(t) && !seen.contains(&t) {
                    seen.push(t);
                    stack.push(t);
                }
            }
        }
        false
    })
}

/// Instance `k` of the randomized family for `seed`; `region` should have at
/// most about 18 sites.
pub fn random_fkg_instance(region: &Region, seed: Seed, k: u64) -> FkgInstance {
    let mut rng = CounterStream::new(seed, k, 0, DOMAIN_AUX);
    let sites: Vec<SiteId> = region.sites().collect();
    let na = rng.below(1 + (sites.len() as u64).min(5));
    let mut a: Vec<SiteId> = Vec::new();
    while (a.len() as u64) < na {
        let s = sites[rng.below(sites.len() as u64) as usize];
        if !a.contains(&s) {
            a.push(s);
        }
    }
    let a = SiteSet::new(a);
    let off: Vec<SiteId> = sites.iter().copied().filter(|&s| !a.contains(s)).collect();
    let b = if rng.below(2) == 0 { random_dnf(&off, &mut rng) } else { random_connection(region, &off, &mut rng) };
    let e = if rng.below(2) == 0 { random_dnf(&sites, &mut rng) } else { random_connection(region, &sites, &mut rng) };
    let nu = (0..a.len()).map(|_| rng.below(2) == 1).collect();
    FkgInstance { b, e, a, nu }
}
