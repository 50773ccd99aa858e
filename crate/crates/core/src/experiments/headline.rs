//! Mesh sweeps of event ratios against the predicted limits.

use num_complex::Complex64;
use serde::Serialize;

use super::stats::doubling_flag;
use super::{run_on_region, EstimatePlan, RunResult};
use crate::events::{EventKind, EventSpec, MarkedPoints, RadiusMethod};
use crate::lattice::RegionParams;
use crate::percolation::Law;
use crate::rng::Seed;
use crate::theory::{bi_prediction, cardy_crossing, k_f, lemma22_prediction, psi_factor};
use crate::{Error, Result};

const ONE_ARM: f64 = 5.0 / 48.0;
const BRACKETS: [RadiusMethod; 2] = [RadiusMethod::BracketLower, RadiusMethod::BracketUpper];

/// Window and sampling parameters shared by the headline runs. The window is
/// anchored on the real axis at `center`, so doubling keeps the marks centred.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub center: f64,
    pub halfwidth: f64,
    pub meshes: Vec<f64>,
    pub n: u64,
    pub seed: Seed,
    pub workers: usize,
    /// Rerun the finest mesh at twice the halfwidth with the same seed.
    pub doubling: bool,
    pub law: Law,
}

impl SweepConfig {
    pub fn new(center: f64, halfwidth: f64, meshes: Vec<f64>, n: u64, seed: Seed) -> Self {
        SweepConfig { center, halfwidth, meshes, n, seed, workers: 1, doubling: false, law: Law::Critical }
    }

    fn region(&self, mesh: f64) -> RegionParams {
        RegionParams { mesh, halfwidth: self.halfwidth, anchor: [self.center, 0.0] }
    }

    fn finest(&self) -> Option<f64> {
        self.meshes.iter().copied().reduce(f64::min)
    }

    fn plan(&self, events: Vec<EventSpec>, mesh: f64) -> EstimatePlan {
        let mut p = EstimatePlan::new(self.region(mesh), events, self.n, self.seed);
        p.law = self.law;
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Doubled {
    pub halfwidth: f64,
    pub value: Option<f64>,
    pub ci95: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub variant: String,
    pub mesh: f64,
    pub halfwidth: f64,
    pub n: u64,
    /// `None` when a component had no hits.
    pub value: Option<f64>,
    pub ci95: Option<f64>,
    pub theory: f64,
    pub doubled: Option<Doubled>,
    pub note: Option<String>,
}

impl RatioRow {
    pub fn distance(&self) -> Option<f64> {
        self.value.map(|v| (v - self.theory).abs())
    }

    /// Whether `[value ± ci95]` meets `theory·(1 ± rel)`.
    pub fn overlaps_band(&self, rel: f64) -> bool {
        match (self.value, self.ci95) {
            (Some(v), Some(c)) => v + c >= self.theory * (1.0 - rel) && v - c <= self.theory * (1.0 + rel),
            _ => false,
        }
    }

    pub fn doubling_flag(&self) -> Option<bool> {
        let d = self.doubled.as_ref()?;
        Some(doubling_flag(d.value? - self.value?, self.ci95?, d.ci95?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioTable {
    pub name: String,
    pub rows: Vec<RatioRow>,
    /// Per-event matched-seed shifts at the finest mesh, when doubling ran.
    pub doubling: Vec<DoublingRow>,
}

impl RatioTable {
    pub fn variant(&self, v: &str) -> Vec<&RatioRow> {
        self.rows.iter().filter(|r| r.variant == v).collect()
    }

    pub fn variants(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.variant) {
                out.push(r.variant.clone());
            }
        }
        out
    }
}

/// A named product of event powers over labels in one plan.
struct Variant {
    name: String,
    comp: Vec<(String, i32)>,
    theory: f64,
}

fn ratio_of(run: &RunResult, v: &Variant) -> (Option<f64>, Option<f64>, Option<String>) {
    let comp: Vec<(&str, i32)> = v.comp.iter().map(|(l, e)| (l.as_str(), *e)).collect();
    match run.ratio(&comp) {
        Ok(r) => (Some(r.value), Some(r.ci95), None),
        Err(Error::Unestimable(c)) => (None, None, Some(format!("unestimable: `{c}` has zero count"))),
        Err(e) => (None, None, Some(e.to_string())),
    }
}

fn sweep(name: &str, cfg: &SweepConfig, events: Vec<EventSpec>, variants: &[Variant]) -> Result<RatioTable> {
    let mut rows = Vec::new();
    let mut doubling = Vec::new();
    let finest = cfg.finest();
    for &mesh in &cfg.meshes {
        let plan = cfg.plan(events.clone(), mesh);
        let run = run_on_region(&plan, plan.region, cfg.workers)?;
        let doubled_run = match (cfg.doubling, finest) {
            (true, Some(f)) if f == mesh => Some(run_on_region(&plan, plan.region.doubled(), cfg.workers)?),
            _ => None,
        };
        if let Some(d) = &doubled_run {
            doubling = doubling_rows(&run, d);
        }
        for v in variants {
            let (value, ci95, note) = ratio_of(&run, v);
            let doubled = doubled_run.as_ref().map(|d| {
                let (value, ci95, _) = ratio_of(d, v);
                Doubled { halfwidth: d.region.halfwidth, value, ci95 }
            });
            rows.push(RatioRow {
                variant: v.name.clone(),
                mesh,
                halfwidth: cfg.halfwidth,
                n: cfg.n,
                value,
                ci95,
                theory: v.theory,
                doubled,
                note,
            });
        }
    }
    Ok(RatioTable { name: name.to_string(), rows, doubling })
}

fn ev(id: &str, kind: EventKind, marks: MarkedPoints) -> EventSpec {
    EventSpec::new(kind, marks).with_id(id)
}

fn bracketed(id: &str, kind: EventKind, marks: MarkedPoints) -> [EventSpec; 2] {
    BRACKETS.map(|m| EventSpec::new(kind, marks).with_method(m).with_id(format!("{id}/{}", m.name())))
}

fn comp(parts: &[(&str, i32)]) -> Vec<(String, i32)> {
    parts.iter().map(|&(l, e)| (l.to_string(), e)).collect()
}

/// `P(u1↔u2↔w)² / (P(u1↔u2)·P(u1↔w)·P(u2↔w))` per mesh against `K_F`.
///
/// When `marks` carries `s1, s2, s3`, interval companions
/// `P(E_combined)² / (P(E_II)·P(E_IR)·P(E_IR2))` are reported per bracket as
/// diagnostics next to the point ratio.
pub fn thm1_ratio(marks: MarkedPoints, cfg: &SweepConfig) -> Result<RatioTable> {
    let kf = k_f();
    let mut events = vec![
        ev("3pt", EventKind::ThreePoint, marks),
        ev("bb", EventKind::TwoPointBB, marks),
        ev("bi", EventKind::TwoPointBI, marks),
        ev("bi2", EventKind::TwoPointBI2, marks),
    ];
    let mut variants =
        vec![Variant { name: "point".into(), comp: comp(&[("3pt", 2), ("bb", -1), ("bi", -1), ("bi2", -1)]), theory: kf }];
    if marks.s1.is_some() && marks.s2.is_some() && marks.s3.is_some() {
        events.push(ev("e_ii", EventKind::E_II, marks));
        for id in ["comb", "e_ir", "e_ir2"] {
            let kind = match id {
                "comb" => EventKind::E_combined,
                "e_ir" => EventKind::E_IR,
                _ => EventKind::E_IR2,
            };
            events.extend(bracketed(id, kind, marks));
        }
        for m in BRACKETS {
            let l = |id: &str| format!("{id}/{}", m.name());
            variants.push(Variant {
                name: format!("interval/{}", m.name()),
                comp: vec![(l("comb"), 2), ("e_ii".into(), -1), (l("e_ir"), -1), (l("e_ir2"), -1)],
                theory: kf,
            });
        }
    }
    sweep("thm1", cfg, events, &variants)
}

/// `P({u2, w} ⊂ C(I)) / (P(w ∈ C(I))·P(u2 ∈ C(I)))`, `I = [u1, u1+s]`,
/// per mesh against `ψ(u1, s, u2, w)`.
pub fn thm2_ratio(marks: MarkedPoints, cfg: &SweepConfig) -> Result<RatioTable> {
    let s = marks.s.ok_or_else(|| Error::EventSpec("thm2_ratio needs the interval length `s`".into()))?;
    let psi = psi_factor(marks.u1, s, marks.u2, marks.w())?;
    let pt_marks = MarkedPoints { s1: Some(s), ..marks };
    let events = vec![
        ev("both", EventKind::E_interval_two_targets, marks),
        ev("w_in", EventKind::E_pt_IR, marks),
        ev("u2_in", EventKind::E_pt_II, pt_marks),
    ];
    let variants =
        [Variant { name: "point".into(), comp: comp(&[("both", 1), ("w_in", -1), ("u2_in", -1)]), theory: psi }];
    sweep("thm2", cfg, events, &variants)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma22Row {
    pub s3: f64,
    pub method: String,
    pub mesh: f64,
    /// `s3^{-5/48}·P(E_IR)`.
    pub rescaled: f64,
    pub ci95: f64,
    /// The predicted limit of `rescaled`.
    pub prediction: f64,
}

fn single_run(cfg: &SweepConfig, events: Vec<EventSpec>) -> Result<RunResult> {
    let mesh = cfg.finest().ok_or_else(|| Error::Plan("no mesh given".into()))?;
    let plan = cfg.plan(events, mesh);
    run_on_region(&plan, plan.region, cfg.workers)
}

fn mean_ci(run: &RunResult, label: &str) -> (f64, f64) {
    let k = run.index(label).expect("label in plan");
    (run.counts.mean(k), super::bernoulli_ci95(run.counts.counts[k], run.counts.n).0)
}

/// `s3^{-5/48}·P(dist-to-cluster-of-[u1,u1+s] event at w)` for each `s3`, both
/// brackets, on one stream at the finest mesh of `cfg`.
pub fn lemma22_check(u1: f64, s: f64, w: Complex64, s3_list: &[f64], cfg: &SweepConfig) -> Result<Vec<Lemma22Row>> {
    let mut events = Vec::new();
    for (k, &s3) in s3_list.iter().enumerate() {
        let marks = MarkedPoints::new(u1, u1 + 2.0 * s + 1.0, w).with_scales(s, s, s3);
        events.extend(bracketed(&format!("ir{k}"), EventKind::E_IR, marks));
    }
    let run = single_run(cfg, events)?;
    let mut rows = Vec::new();
    for (k, &s3) in s3_list.iter().enumerate() {
        let prediction = lemma22_prediction(u1, s, w, s3)? / s3.powf(ONE_ARM);
        for m in BRACKETS {
            let (p, ci) = mean_ci(&run, &format!("ir{k}/{}", m.name()));
            let scale = s3.powf(-ONE_ARM);
            rows.push(Lemma22Row {
                s3,
                method: m.name().into(),
                mesh: run.region.mesh,
                rescaled: p * scale,
                ci95: ci * scale,
                prediction,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiRow {
    pub method: String,
    pub mesh: f64,
    /// `s3^{-5/48}·P(E_combined)/P(E_II)`.
    pub rescaled: Option<f64>,
    pub ci95: Option<f64>,
    pub prediction: f64,
    pub e_ii: f64,
    pub e_ii_ci95: f64,
    /// Crossing formula for the same two intervals.
    pub cardy: f64,
}

/// Conditional interval-to-interval one-arm check on one stream.
pub fn bi_check(u1: f64, s: f64, u2: f64, s2: f64, w: Complex64, s3: f64, cfg: &SweepConfig) -> Result<Vec<BiRow>> {
    let marks = MarkedPoints::new(u1, u2, w).with_scales(s, s2, s3);
    let mut events = vec![ev("e_ii", EventKind::E_II, marks)];
    events.extend(bracketed("comb", EventKind::E_combined, marks));
    let run = single_run(cfg, events)?;
    let prediction = bi_prediction(u1, s, u2, w, s3)? / s3.powf(ONE_ARM);
    let (e_ii, e_ii_ci95) = mean_ci(&run, "e_ii");
    let cardy = cardy_edges(run.region.mesh, u1, u1 + s, u2 - s2, u2 + s2)?;
    BRACKETS
        .iter()
        .map(|m| {
            let label = format!("comb/{}", m.name());
            let r = run.ratio(&[(label.as_str(), 1), ("e_ii", -1)]).ok();
            let scale = s3.powf(-ONE_ARM);
            Ok(BiRow {
                method: m.name().into(),
                mesh: run.region.mesh,
                rescaled: r.as_ref().map(|r| r.value * scale),
                ci95: r.as_ref().map(|r| r.ci95 * scale),
                prediction,
                e_ii,
                e_ii_ci95,
                cardy,
            })
        })
        .collect()
}

/// Crossing formula with each interval widened to the outer edges of its
/// end hexagons.
pub fn cardy_edges(mesh: f64, x1: f64, x2: f64, x3: f64, x4: f64) -> Result<f64> {
    let h = mesh / 2.0;
    cardy_crossing(x1 - h, x2 + h, x3 - h, x4 + h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CardyRow {
    pub mesh: f64,
    pub halfwidth: f64,
    pub n: u64,
    pub value: f64,
    pub ci95: f64,
    /// Endpoints at the outer hexagon edges.
    pub cardy: f64,
    /// Endpoints as given.
    pub cardy_raw: f64,
    pub doubled: Option<Doubled>,
}

impl CardyRow {
    pub fn agrees(&self) -> bool {
        (self.value - self.cardy).abs() <= self.ci95
    }
}

/// Interval-to-interval crossing `[u1, u1+s1] ↔ [u2-s2, u2+s2]` per mesh.
pub fn cardy_check(u1: f64, s1: f64, u2: f64, s2: f64, cfg: &SweepConfig) -> Result<Vec<CardyRow>> {
    let w = Complex64::new(u1, 1.0);
    let marks = MarkedPoints::new(u1, u2, w).with_scales(s1, s2, 1.0);
    let events = vec![ev("cross", EventKind::E_II, marks)];
    let finest = cfg.finest();
    let mut rows = Vec::new();
    for &mesh in &cfg.meshes {
        let plan = cfg.plan(events.clone(), mesh);
        let run = run_on_region(&plan, plan.region, cfg.workers)?;
        let (value, ci95) = mean_ci(&run, "cross");
        let doubled = match (cfg.doubling, finest) {
            (true, Some(f)) if f == mesh => {
                let d = run_on_region(&plan, plan.region.doubled(), cfg.workers)?;
                let (v, c) = mean_ci(&d, "cross");
                Some(Doubled { halfwidth: d.region.halfwidth, value: Some(v), ci95: Some(c) })
            }
            _ => None,
        };
        rows.push(CardyRow {
            mesh,
            halfwidth: cfg.halfwidth,
            n: cfg.n,
            value,
            ci95,
            cardy: cardy_edges(mesh, u1, u1 + s1, u2 - s2, u2 + s2)?,
            cardy_raw: cardy_crossing(u1, u1 + s1, u2 - s2, u2 + s2)?,
            doubled,
        });
    }
    Ok(rows)
}

/// A comparable pair `(V, V•)`, `(W, W•)` of one-arm-like events and their
/// point versions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingPair {
    pub v: EventKind,
    pub v_pt: EventKind,
    pub w: EventKind,
    pub w_pt: EventKind,
}

impl CouplingPair {
    /// `(E_II, E_pt_II)` against `(E_IR2, E_pt_R2)`, both around `u2`.
    pub const CROSSING_VS_RADIUS: CouplingPair =
        CouplingPair { v: EventKind::E_II, v_pt: EventKind::E_pt_II, w: EventKind::E_IR2, w_pt: EventKind::E_pt_R2 };
    /// `(E_combined, partial)` against `(E_II, E_pt_II)`, both around `u2`.
    pub const COMBINED_VS_CROSSING: CouplingPair =
        CouplingPair { v: EventKind::E_combined, v_pt: EventKind::E_pt_combined_partial, w: EventKind::E_II, w_pt: EventKind::E_pt_II };

    pub fn name(&self) -> String {
        format!("{}:{}|{}:{}", self.v, self.v_pt, self.w, self.w_pt)
    }
}

/// `P(V•)P(W) / (P(V)P(W•))` with the pair's shrinking scale `s` put in `s2`,
/// one stream for all `s`. Radius-bearing pairs give one variant per bracket.
pub fn coupling_ratio(pair: CouplingPair, marks: MarkedPoints, s_list: &[f64], cfg: &SweepConfig) -> Result<RatioTable> {
    let kinds = [pair.v, pair.v_pt, pair.w, pair.w_pt];
    let uses_radius = kinds.iter().any(|k| k.uses_radius());
    let methods: Vec<Option<RadiusMethod>> =
        if uses_radius { BRACKETS.iter().copied().map(Some).collect() } else { vec![None] };
    let mut events = Vec::new();
    let mut variants = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (k, &s) in s_list.iter().enumerate() {
        let m = MarkedPoints { s2: Some(s), ..marks };
        for method in &methods {
            let mut labels = Vec::new();
            for kind in kinds {
                let mut spec = EventSpec::new(kind, m);
                let mut label = format!("s{k}/{kind}");
                if kind.uses_radius() {
                    let meth = method.expect("radius pair has a method");
                    spec = spec.with_method(meth);
                    label = format!("{label}/{}", meth.name());
                }
                if seen.insert(label.clone()) {
                    events.push(spec.with_id(label.clone()));
                }
                labels.push(label);
            }
            let name = match method {
                Some(m) => format!("s={s}/{}", m.name()),
                None => format!("s={s}"),
            };
            // V• W / (V W•); an identical pair cancels exactly.
            variants.push(Variant {
                name,
                comp: vec![(labels[1].clone(), 1), (labels[2].clone(), 1), (labels[0].clone(), -1), (labels[3].clone(), -1)],
                theory: 1.0,
            });
        }
    }
    let single = SweepConfig { meshes: cfg.finest().into_iter().collect(), ..cfg.clone() };
    let mut t = sweep(&pair.name(), &single, events, &variants)?;
    t.name = pair.name();
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingRow {
    pub event: String,
    pub mean: f64,
    pub ci95: f64,
    pub doubled_mean: f64,
    pub doubled_ci95: f64,
    pub shift: f64,
    pub flagged: bool,
}

/// Rerun `plan` at twice its halfwidth with the same seed and compare every
/// event mean at its first mesh.
pub fn doubling_test(plan: &EstimatePlan, workers: usize) -> Result<Vec<DoublingRow>> {
    let region = RegionParams { mesh: plan.mesh_list()[0], ..plan.region };
    let a = run_on_region(plan, region, workers)?;
    let b = run_on_region(plan, region.doubled(), workers)?;
    Ok(doubling_rows(&a, &b))
}

fn doubling_rows(a: &RunResult, b: &RunResult) -> Vec<DoublingRow> {
    a.labels
        .iter()
        .map(|l| {
            let (mean, ci95) = mean_ci(a, l);
            let (doubled_mean, doubled_ci95) = mean_ci(b, l);
            let shift = doubled_mean - mean;
            DoublingRow {
                event: l.clone(),
                mean,
                ci95,
                doubled_mean,
                doubled_ci95,
                shift,
                flagged: doubling_flag(shift, ci95, doubled_ci95),
            }
        })
        .collect()
}
