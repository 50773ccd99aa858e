//! Monte Carlo harness: plans, shared-sample estimation, ratio statistics,
//! exact-enumeration checks and the headline comparisons.

mod exact;
mod headline;
mod output;
pub mod stats;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::confradius::{calibrate_green, GreenCalibration};
use crate::events::{EventSpec, GreenSetup, RadiusMethod, ResolvedEvent};
use crate::lattice::{Region, RegionParams};
use crate::percolation::{Explorer, Law};
use crate::rng::Seed;
use crate::{Error, Result};

pub use exact::{
    enumeration_agreement, exact_counts, exact_probabilities, fkg_check, random_fkg_instance, EnumerationRow,
    FkgInstance, FkgVerdict,
};
pub use headline::{
    bi_check, cardy_check, cardy_edges, coupling_ratio, doubling_test, lemma22_check, thm1_ratio, thm2_ratio, BiRow,
    CardyRow, CouplingPair, Doubled, DoublingRow, Lemma22Row, RatioRow, RatioTable, SweepConfig,
};
pub use output::{
    config_hash, doubling_csv, estimates_csv, ratio_table_csv, read_estimates, read_manifest, sig12, write_estimates,
    write_ratio_table, EstimateRow, Manifest, MANIFEST_SCHEMA,
};
pub use stats::{bernoulli_ci95, ratio_with_ci, CiMethod, RatioRecord, SharedCounts};

/// Most events a plan may carry (one bit each in the per-sample pattern).
pub const MAX_EVENTS: usize = 64;

/// Green-method parameters of a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    pub walk_budget: u64,
    /// Calibration JSON; built on the fly with `calibration_budget` walks per
    /// radius when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
    #[serde(default = "default_calibration_budget")]
    pub calibration_budget: u64,
}

fn default_calibration_budget() -> u64 {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatePlan {
    pub region: RegionParams,
    pub events: Vec<EventSpec>,
    pub n: u64,
    pub seed: Seed,
    /// Mesh sweep; empty means `region.mesh` only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub meshes: Vec<f64>,
    #[serde(default)]
    pub law: Law,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green: Option<GreenConfig>,
}

impl EstimatePlan {
    pub fn new(region: RegionParams, events: Vec<EventSpec>, n: u64, seed: Seed) -> Self {
        EstimatePlan { region, events, n, seed, meshes: Vec::new(), law: Law::Critical, green: None }
    }

    /// Radius events without a method become a bracket-lower/bracket-upper pair.
    pub fn expanded_events(&self) -> Vec<EventSpec> {
        let mut out = Vec::new();
        for e in &self.events {
            if e.kind.uses_radius() && e.radius_method.is_none() {
                for m in [RadiusMethod::BracketLower, RadiusMethod::BracketUpper] {
                    let mut x = e.clone().with_method(m);
                    if let Some(id) = &e.id {
                        x.id = Some(format!("{id}/{}", m.name()));
                    }
                    out.push(x);
                }
            } else {
                out.push(e.clone());
            }
        }
        out
    }

    pub fn mesh_list(&self) -> Vec<f64> {
        if self.meshes.is_empty() {
            vec![self.region.mesh]
        } else {
            self.meshes.clone()
        }
    }

    /// Checks that need no region; every problem is reported.
    pub fn validate_shape(&self) -> Result<()> {
        match self.problems() {
            errs if errs.is_empty() => Ok(()),
            errs => Err(Error::Plan(errs.join("; "))),
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.n == 0 {
            errs.push("n must be at least 1".to_string());
        }
        let events = self.expanded_events();
        if events.is_empty() {
            errs.push("plan has no events".into());
        }
        if events.len() > MAX_EVENTS {
            errs.push(format!("plan has {} events after bracket expansion; at most {MAX_EVENTS}", events.len()));
        }
        let mut labels: Vec<String> = events.iter().map(EventSpec::label).collect();
        labels.sort();
        for w in labels.windows(2) {
            if w[0] == w[1] {
                errs.push(format!("duplicate event id `{}`", w[0]));
            }
        }
        for (k, e) in events.iter().enumerate() {
            if let Err(err) = e.validate() {
                errs.push(format!("event {k} ({}): {err}", e.label()));
            }
            if e.radius_method == Some(RadiusMethod::Green) && self.green.is_none() {
                errs.push(format!("event {k} ({}) uses the green method but the plan has no `green` section", e.label()));
            }
        }
        if let Some(g) = &self.green {
            if g.walk_budget < 10_000 {
                errs.push(format!("green.walk_budget = {} is below 10^4", g.walk_budget));
            }
        }
        for &m in &self.mesh_list() {
            if !(m > 0.0) || !m.is_finite() {
                errs.push(format!("mesh {m} must be positive"));
            }
        }
        if !(self.region.halfwidth > 0.0) {
            errs.push(format!("region.halfwidth = {} must be positive", self.region.halfwidth));
        }
        errs
    }

    fn green_setup(&self) -> Result<Option<Arc<GreenSetup>>> {
        let Some(g) = &self.green else { return Ok(None) };
        let calibration = match &g.calibration {
            Some(p) => GreenCalibration::load(p)?,
            None => calibrate_green(g.calibration_budget),
        };
        Ok(Some(Arc::new(GreenSetup { calibration, walk_budget: g.walk_budget, seed: self.seed.derive(1) })))
    }
}

/// Estimate of one event at one mesh.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub event: String,
    pub kind: String,
    pub radius_method: String,
    pub mean: f64,
    pub n: u64,
    pub count: u64,
    pub ci95: f64,
    pub ci_method: CiMethod,
    pub mesh: f64,
    pub halfwidth: f64,
    pub seed: Seed,
}

/// Outcome of one pass at one mesh.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub region: RegionParams,
    pub seed: Seed,
    pub labels: Vec<String>,
    pub specs: Vec<EventSpec>,
    pub counts: SharedCounts,
    /// Number of samples per pattern of event outcomes (bit k = event k).
    pub patterns: BTreeMap<u64, u64>,
}

impl RunResult {
    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn records(&self) -> Vec<EstimateRecord> {
        self.specs
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let (ci95, ci_method) = bernoulli_ci95(self.counts.counts[k], self.counts.n);
                EstimateRecord {
                    event: self.labels[k].clone(),
                    kind: s.kind.name().to_string(),
                    radius_method: s.radius_method.filter(|_| s.kind.uses_radius()).map_or("", |m| m.name()).to_string(),
                    mean: self.counts.mean(k),
                    n: self.counts.n,
                    count: self.counts.counts[k],
                    ci95,
                    ci_method,
                    mesh: self.region.mesh,
                    halfwidth: self.region.halfwidth,
                    seed: self.seed,
                }
            })
            .collect()
    }

    /// Ratio of named events; see [`ratio_with_ci`].
    pub fn ratio(&self, comp: &[(&str, i32)]) -> Result<RatioRecord> {
        let idx: Vec<(usize, i32)> = comp
            .iter()
            .map(|&(l, e)| self.index(l).map(|k| (k, e)).ok_or_else(|| Error::Plan(format!("no event `{l}` in run"))))
            .collect::<Result<_>>()?;
        ratio_with_ci(&self.counts, &idx, &self.labels)
    }
}

fn counts_from_patterns(patterns: &BTreeMap<u64, u64>, k: usize, n: u64) -> SharedCounts {
    let mut counts = vec![0u64; k];
    let mut joint = vec![0u64; k * k];
    for (&pat, &c) in patterns {
        for a in (0..k).filter(|a| pat >> a & 1 == 1) {
            counts[a] += c;
            for b in (0..k).filter(|b| pat >> b & 1 == 1) {
                joint[a * k + b] += c;
            }
        }
    }
    SharedCounts { n, counts, joint }
}

/// Worker count from `PERCLAB_WORKERS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var("PERCLAB_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w: &usize| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One pass over the plan at `region`; every event on every sample.
pub fn run_on_region(plan: &EstimatePlan, region_params: RegionParams, workers: usize) -> Result<RunResult> {
    plan.validate_shape()?;
    let region = region_params.build()?;
    let green = plan.green_setup()?;
    let specs = plan.expanded_events();
    let events: Vec<ResolvedEvent> = specs.iter().map(|s| s.resolve(&region, green.as_ref())).collect::<Result<_>>()?;
    let patterns = sample_patterns(&region, &events, plan.seed, plan.law, plan.n, workers);
    let counts = counts_from_patterns(&patterns, events.len(), plan.n);
    Ok(RunResult {
        region: region_params,
        seed: plan.seed,
        labels: specs.iter().map(EventSpec::label).collect(),
        specs,
        counts,
        patterns,
    })
}

/// Pattern counts over samples `0..n`, split into contiguous chunks.
fn sample_patterns(
    region: &Region,
    events: &[ResolvedEvent],
    seed: Seed,
    law: Law,
    n: u64,
    workers: usize,
) -> BTreeMap<u64, u64> {
    let workers = (workers.max(1) as u64).min(n.max(1));
    let chunk = n.div_ceil(workers);
    let run = |lo: u64, hi: u64| {
        let mut ex = Explorer::new(region);
        let mut local: BTreeMap<u64, u64> = BTreeMap::new();
        for k in lo..hi {
            ex.set_sample(seed, k, law);
            let mut pat = 0u64;
            for (b, e) in events.iter().enumerate() {
                if e.eval(&mut ex, k) {
                    pat |= 1 << b;
                }
            }
            *local.entry(pat).or_default() += 1;
        }
        local
    };
    let parts: Vec<BTreeMap<u64, u64>> = if workers == 1 {
        vec![run(0, n)]
    } else {
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let (lo, hi) = ((w * chunk).min(n), ((w + 1) * chunk).min(n));
                    sc.spawn(move || run(lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    let mut merged = BTreeMap::new();
    for p in parts {
        for (pat, c) in p {
            *merged.entry(pat).or_default() += c;
        }
    }
    merged
}

/// One pass per mesh of the plan.
pub fn run_estimates(plan: &EstimatePlan, workers: usize) -> Result<Vec<RunResult>> {
    plan.validate_shape()?;
    // Margin violations surface before any sampling.
    for &mesh in &plan.mesh_list() {
        let params = RegionParams { mesh, ..plan.region };
        let region = params.build()?;
        for s in plan.expanded_events() {
            if s.radius_method == Some(RadiusMethod::Green) {
                continue;
            }
            s.resolve(&region, None)?;
        }
    }
    plan.mesh_list().into_iter().map(|mesh| run_on_region(plan, RegionParams { mesh, ..plan.region }, workers)).collect()
}

#[cfg(test)]
mod tests;
