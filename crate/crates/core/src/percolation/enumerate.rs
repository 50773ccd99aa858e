//! Exact enumeration over small supports and cylinder events.

use std::fmt;
use std::sync::Arc;

use super::BitConfig;
use crate::lattice::{Region, SiteId, SiteSet};
use crate::{Error, Result};

/// Hard cap on the number of enumerated bits (2^25 configurations).
pub const ENUMERATION_CAP_BITS: usize = 25;

type PredFn = dyn Fn(&BitConfig<'_>) -> bool + Send + Sync;

/// An event given as a total function of the configuration, together with the
/// set of sites it may read.
#[derive(Clone)]
pub struct EventPredicate {
    support: SiteSet,
    f: Arc<PredFn>,
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventPredicate").field("support", &self.support).finish_non_exhaustive()
    }
}

impl EventPredicate {
    pub fn new(support: SiteSet, f: impl Fn(&BitConfig<'_>) -> bool + Send + Sync + 'static) -> Self {
        EventPredicate { support, f: Arc::new(f) }
    }

    pub fn always(value: bool) -> Self {
        Self::new(SiteSet::empty(), move |_| value)
    }

    pub fn support(&self) -> &SiteSet {
        &self.support
    }

    #[inline]
    pub fn eval(&self, config: &BitConfig<'_>) -> bool {
        (self.f)(config)
    }

    pub fn and(&self, other: &EventPredicate) -> EventPredicate {
        let (a, b) = (self.clone(), other.clone());
        EventPredicate::new(self.support.union(&other.support), move |c| a.eval(c) && b.eval(c))
    }
}

fn check_cap(size: usize) -> Result<()> {
    if size > ENUMERATION_CAP_BITS {
        return Err(Error::SupportTooLarge { size, cap: ENUMERATION_CAP_BITS });
    }
    Ok(())
}

/// Every configuration on `support` (other sites closed), in binary-counter
/// order of the support bits.
pub fn enumerate_configs<'r>(region: &'r Region, support: &SiteSet) -> Result<EnumerateConfigs<'r>> {
    check_cap(support.len())?;
    if let Some(&bad) = support.as_slice().iter().find(|&&s| s as usize >= region.len()) {
        return Err(Error::InvalidRegion(format!("site {bad} is not in the region")));
    }
    Ok(EnumerateConfigs { region, support: support.as_slice().to_vec(), next: 0, end: 1u64 << support.len() })
}

pub struct EnumerateConfigs<'r> {
    region: &'r Region,
    support: Vec<SiteId>,
    next: u64,
    end: u64,
}

impl<'r> Iterator for EnumerateConfigs<'r> {
    type Item = BitConfig<'r>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next == self.end {
            return None;
        }
        let mut c = BitConfig::all_closed(self.region);
        for (k, &s) in self.support.iter().enumerate() {
            if (self.next >> k) & 1 == 1 {
                c.set(s, true);
            }
        }
        self.next += 1;
        Some(c)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = (self.end - self.next) as usize;
        (r, Some(r))
    }
}

impl ExactSizeIterator for EnumerateConfigs<'_> {}

/// `V_A`: configurations whose restriction to `A` extends to some
/// configuration in `V`. Support is `A ∩ support(V)`.
pub fn cylinder_event(v: &EventPredicate, a: &SiteSet) -> Result<EventPredicate> {
    let free: Vec<SiteId> = v.support.difference(a).into_vec();
    check_cap(free.len())?;
    let inner = v.clone();
    let support = v.support.intersection(a);
    Ok(EventPredicate::new(support, move |c| {
        let mut x = c.clone();
        (0u64..1 << free.len()).any(|m| {
            for (k, &s) in free.iter().enumerate() {
                x.set(s, (m >> k) & 1 == 1);
            }
            inner.eval(&x)
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_region;
    use crate::rng::{CounterStream, Seed, DOMAIN_AUX};
    use num_complex::Complex64;
    use std::collections::HashSet;

    fn small() -> Region {
        build_region(1.0, 2.1, Complex64::new(0.0, 2.0)).unwrap()
    }

    /// Random monotone DNF over `sites`.
    fn random_increasing(rng: &mut CounterStream, sites: &[SiteId]) -> EventPredicate {
        let clauses: Vec<Vec<SiteId>> = (0..1 + rng.below(3))
            .map(|_| (0..1 + rng.below(3)).map(|_| sites[rng.below(sites.len() as u64) as usize]).collect())
            .collect();
        let support: SiteSet = clauses.iter().flatten().copied().collect();
        EventPredicate::new(support, move |c| clauses.iter().any(|cl| cl.iter().all(|&s| c.is_open(s))))
    }

    #[test]
    fn enumeration_counts() {
        let r = small();
        assert_eq!(enumerate_configs(&r, &SiteSet::empty()).unwrap().count(), 1);
        let sup = SiteSet::new(vec![0, 3, 5]);
        let all: Vec<_> = enumerate_configs(&r, &sup).unwrap().collect();
        assert_eq!(all.len(), 8);
        let distinct: HashSet<Vec<u64>> = all.iter().map(|c| c.words().to_vec()).collect();
        assert_eq!(distinct.len(), 8);
        assert!(all.iter().all(|c| r.sites().filter(|s| !sup.contains(*s)).all(|s| !c.is_open(s))));
        let big = SiteSet::new((0..26).collect());
        assert!(matches!(enumerate_configs(&build_region(1.0, 4.0, Complex64::new(0.0, 4.0)).unwrap(), &big), Err(Error::SupportTooLarge { .. })));
    }

    #[test]
    fn enumeration_gives_exact_probabilities() {
        let r = small();
        let sup = SiteSet::new(vec![0, 1, 2, 3]);
        let v = EventPredicate::new(sup.clone(), |c| c.is_open(0) && (c.is_open(1) || c.is_open(2)));
        let hits = enumerate_configs(&r, &sup).unwrap().filter(|c| v.eval(c)).count();
        assert_eq!(hits, 6);
    }

    #[test]
    fn cylinder_trivial_cases() {
        let r = small();
        let sup = SiteSet::new(vec![1, 2, 4]);
        let v = EventPredicate::new(sup.clone(), |c| c.is_open(1) && c.is_open(2) && !c.is_open(4));
        let va = cylinder_event(&v, &sup).unwrap();
        for c in enumerate_configs(&r, &sup).unwrap() {
            assert_eq!(v.eval(&c), va.eval(&c));
        }
        let v0 = cylinder_event(&v, &SiteSet::empty()).unwrap();
        assert!(v0.support().is_empty());
        for c in enumerate_configs(&r, &sup).unwrap() {
            assert!(v0.eval(&c));
        }
    }

    #[test]
    fn cylinder_contains_event_and_shrinks_with_a() {
        let r = small();
        let sites: Vec<SiteId> = r.sites().collect();
        let mut rng = CounterStream::new(Seed(77), 0, 0, DOMAIN_AUX);
        for _ in 0..50 {
            let v = random_increasing(&mut rng, &sites[..10]);
            let a: SiteSet = sites[..10].iter().copied().filter(|_| rng.below(2) == 1).collect();
            let a2: SiteSet = a.iter().filter(|_| rng.below(2) == 1).collect();
            let va = cylinder_event(&v, &a).unwrap();
            let va2 = cylinder_event(&v, &a2).unwrap();
            let sup = SiteSet::new(sites[..10].to_vec());
            for c in enumerate_configs(&r, &sup).unwrap() {
                if v.eval(&c) {
                    assert!(va.eval(&c));
                }
                // a2 ⊆ a ⇒ V_a ⊆ V_a2
                if va.eval(&c) {
                    assert!(va2.eval(&c));
                }
            }
        }
    }
}
