//! Connection events, the interval/radius family and their point versions.
//!
//! An [`EventSpec`] is resolved against a [`Region`] into a conjunction of
//! atoms: `Connect(A, B)` (an open path from `A` to `B`), `Radius` (the
//! conformal radius of `w` against `C(A)` is below `s3`) and `Open(x)`.
//! Resolved events evaluate on anything implementing [`Probe`]: full cluster
//! labels or the lazy [`Explorer`].

pub mod circuits;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::confradius::{green_radius_with, GreenCalibration};
use crate::lattice::{Region, SiteId, SiteSet};
use crate::percolation::{ClusterLabels, EventPredicate, Explorer};
use crate::rng::{CounterStream, Seed, DOMAIN_WALKS};
use crate::{Error, Result};

pub use circuits::{innermost_open_circuit, outermost_open_circuit, separates, Circuit};

/// `u1, u2` on the real axis, `w` in the half-plane and the scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkedPoints {
    pub u1: f64,
    pub u2: f64,
    pub w: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s3: Option<f64>,
}

impl MarkedPoints {
    pub fn new(u1: f64, u2: f64, w: Complex64) -> Self {
        MarkedPoints { u1, u2, w: [w.re, w.im], s: None, s1: None, s2: None, s3: None }
    }

    pub fn with_scales(mut self, s1: f64, s2: f64, s3: f64) -> Self {
        self.s1 = Some(s1);
        self.s2 = Some(s2);
        self.s3 = Some(s3);
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }

    pub fn w(&self) -> Complex64 {
        Complex64::new(self.w[0], self.w[1])
    }
}

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    TwoPointBB,
    TwoPointBI,
    TwoPointBI2,
    ThreePoint,
    E_II,
    E_IR,
    E_IR2,
    E_combined,
    E_pt_II,
    E_pt_R1,
    E_pt_R2,
    E_pt_combined_partial,
    E_pt_combined_full,
    E_interval_two_targets,
    /// `[u1, u1+s] ↔ w`, the single-target factor of the interval formula.
    E_pt_IR,
    /// The hexagon of `w` is open.
    SiteOpen,
    Always,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scale {
    S,
    S1,
    S2,
    S3,
}

impl EventKind {
    pub const ALL: [EventKind; 17] = [
        EventKind::TwoPointBB,
        EventKind::TwoPointBI,
        EventKind::TwoPointBI2,
        EventKind::ThreePoint,
        EventKind::E_II,
        EventKind::E_IR,
        EventKind::E_IR2,
        EventKind::E_combined,
        EventKind::E_pt_II,
        EventKind::E_pt_R1,
        EventKind::E_pt_R2,
        EventKind::E_pt_combined_partial,
        EventKind::E_pt_combined_full,
        EventKind::E_interval_two_targets,
        EventKind::E_pt_IR,
        EventKind::SiteOpen,
        EventKind::Always,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::TwoPointBB => "TwoPointBB",
            EventKind::TwoPointBI => "TwoPointBI",
            EventKind::TwoPointBI2 => "TwoPointBI2",
            EventKind::ThreePoint => "ThreePoint",
            EventKind::E_II => "E_II",
            EventKind::E_IR => "E_IR",
            EventKind::E_IR2 => "E_IR2",
            EventKind::E_combined => "E_combined",
            EventKind::E_pt_II => "E_pt_II",
            EventKind::E_pt_R1 => "E_pt_R1",
            EventKind::E_pt_R2 => "E_pt_R2",
            EventKind::E_pt_combined_partial => "E_pt_combined_partial",
            EventKind::E_pt_combined_full => "E_pt_combined_full",
            EventKind::E_interval_two_targets => "E_interval_two_targets",
            EventKind::E_pt_IR => "E_pt_IR",
            EventKind::SiteOpen => "SiteOpen",
            EventKind::Always => "Always",
        }
    }

    /// Whether the event involves a conformal radius.
    pub fn uses_radius(self) -> bool {
        matches!(
            self,
            EventKind::E_IR
                | EventKind::E_IR2
                | EventKind::E_combined
                | EventKind::E_pt_R1
                | EventKind::E_pt_R2
                | EventKind::E_pt_combined_partial
                | EventKind::E_pt_combined_full
        )
    }

    fn scales(self) -> &'static [Scale] {
        use Scale::*;
        match self {
            EventKind::TwoPointBB
            | EventKind::TwoPointBI
            | EventKind::TwoPointBI2
            | EventKind::ThreePoint
            | EventKind::SiteOpen
            | EventKind::Always => &[],
            EventKind::E_II => &[S1, S2],
            EventKind::E_IR => &[S1, S3],
            EventKind::E_IR2 => &[S2, S3],
            EventKind::E_combined => &[S1, S2, S3],
            EventKind::E_pt_II => &[S1],
            EventKind::E_pt_R1 | EventKind::E_pt_R2 | EventKind::E_pt_combined_full => &[S3],
            EventKind::E_pt_combined_partial => &[S1, S3],
            EventKind::E_interval_two_targets | EventKind::E_pt_IR => &[S],
        }
    }

    fn uses_u1(self) -> bool {
        !matches!(self, EventKind::TwoPointBI2 | EventKind::E_IR2 | EventKind::E_pt_R2 | EventKind::SiteOpen | EventKind::Always)
    }

    fn uses_u2(self) -> bool {
        matches!(
            self,
            EventKind::TwoPointBB
                | EventKind::TwoPointBI2
                | EventKind::ThreePoint
                | EventKind::E_II
                | EventKind::E_IR2
                | EventKind::E_combined
                | EventKind::E_pt_II
                | EventKind::E_pt_R2
                | EventKind::E_pt_combined_partial
                | EventKind::E_pt_combined_full
                | EventKind::E_interval_two_targets
        )
    }

    fn uses_w(self) -> bool {
        matches!(
            self,
            EventKind::TwoPointBI
                | EventKind::TwoPointBI2
                | EventKind::ThreePoint
                | EventKind::E_interval_two_targets
                | EventKind::E_pt_IR
                | EventKind::SiteOpen
        ) || self.uses_radius()
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusMethod {
    /// `dist(w, C(A)) < s3/4`, which implies `ρ < s3`.
    BracketLower,
    /// `dist(w, C(A)) < s3`, which `ρ < s3` implies.
    BracketUpper,
    Green,
}

impl RadiusMethod {
    pub fn name(self) -> &'static str {
        match self {
            RadiusMethod::BracketLower => "bracket-lower",
            RadiusMethod::BracketUpper => "bracket-upper",
            RadiusMethod::Green => "green",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: EventKind,
    pub marks: MarkedPoints,
    /// Absent means "both bracket variants" where a plan expands events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_method: Option<RadiusMethod>,
}

impl EventSpec {
    pub fn new(kind: EventKind, marks: MarkedPoints) -> Self {
        EventSpec { id: None, kind, marks, radius_method: None }
    }

    pub fn with_method(mut self, m: RadiusMethod) -> Self {
        self.radius_method = Some(m);
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    /// The id, or `kind[/method]` when none was given.
    pub fn label(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        match (self.kind.uses_radius(), self.radius_method) {
            (true, Some(m)) => format!("{}/{}", self.kind, m.name()),
            _ => self.kind.name().to_string(),
        }
    }

    fn scale(&self, s: Scale) -> Option<f64> {
        match s {
            Scale::S => self.marks.s,
            Scale::S1 => self.marks.s1,
            Scale::S2 => self.marks.s2,
            Scale::S3 => self.marks.s3,
        }
    }

    /// Region-independent consistency checks; all problems are reported.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let k = self.kind;
        let m = &self.marks;
        for (name, v) in [("u1", m.u1), ("u2", m.u2), ("w.re", m.w[0]), ("w.im", m.w[1])] {
            if !v.is_finite() {
                errs.push(format!("{name} must be finite"));
            }
        }
        if k.uses_w() && !(m.w[1] > 0.0) {
            errs.push(format!("Im w = {} must be positive", m.w[1]));
        }
        if k.uses_u1() && k.uses_u2() && m.u1 == m.u2 {
            errs.push("u1 and u2 must differ".into());
        }
        for &sc in k.scales() {
            let name = match sc {
                Scale::S => "s",
                Scale::S1 => "s1",
                Scale::S2 => "s2",
                Scale::S3 => "s3",
            };
            match self.scale(sc) {
                None => errs.push(format!("{k} requires {name}")),
                Some(v) if !(v > 0.0) || !v.is_finite() => errs.push(format!("{name} = {v} must be positive")),
                _ => {}
            }
        }
        if k == EventKind::E_interval_two_targets {
            if let Some(s) = m.s {
                if !(m.u2 > m.u1 + s) {
                    errs.push(format!("{k} requires u2 > u1 + s"));
                }
            }
        }
        if k.uses_radius() {
            if let Some(s3) = m.s3 {
                if m.w[1] < s3 {
                    errs.push(format!("radius events require Im w >= s3, got Im w = {} < {s3}", m.w[1]));
                }
            }
            if self.radius_method.is_none() {
                errs.push(format!("{k} needs a radius_method (plans expand a missing one into both brackets)"));
            }
        }
        match errs.len() {
            0 => Ok(()),
            _ => Err(Error::EventSpec(errs.join("; "))),
        }
    }

    fn margin(&self) -> f64 {
        self.kind.scales().iter().filter_map(|&s| self.scale(s)).fold(0.0, f64::max)
    }

    /// Resolve into site sets of `region`. `green` is required for the green
    /// radius method.
    pub fn resolve(&self, region: &Region, green: Option<&Arc<GreenSetup>>) -> Result<ResolvedEvent> {
        self.validate()?;
        let k = self.kind;
        let m = &self.marks;
        let margin = self.margin();
        let mut pts = Vec::new();
        if k.uses_u1() {
            pts.push(Complex64::new(m.u1, 0.0));
            for s in [m.s1, m.s].into_iter().flatten() {
                pts.push(Complex64::new(m.u1 + s, 0.0));
            }
        }
        if k.uses_u2() {
            pts.push(Complex64::new(m.u2, 0.0));
        }
        if k.uses_w() {
            pts.push(m.w());
        }
        for p in pts {
            if !region.contains_with_margin(p, margin) {
                return Err(Error::EventSpec(format!(
                    "{k}: point {} + {}i is not inside the window with margin {margin}",
                    p.re, p.im
                )));
            }
        }
        let point = |x: f64| region.site_of_point(Complex64::new(x, 0.0)).map(SiteSet::singleton);
        let get = |s: Option<f64>| s.expect("validated");
        let w = m.w();
        let wsite = || region.site_of_point(w).map(SiteSet::singleton);
        let i1 = || region.boundary_interval_sites(m.u1, m.u1 + get(m.s1));
        let j2 = || region.boundary_interval_sites(m.u2 - get(m.s2), m.u2 + get(m.s2));
        let is = || region.boundary_interval_sites(m.u1, m.u1 + get(m.s));
        let radius = |anchor: SiteSet| -> Result<Atom> {
            let s3 = get(m.s3);
            let method = self.radius_method.expect("validated");
            let own = region.site_of_point(w)?;
            let target = match method {
                RadiusMethod::BracketLower => region.disk_sites(w, s3 / 4.0).union(&SiteSet::singleton(own)),
                RadiusMethod::BracketUpper => region.disk_sites(w, s3).union(&SiteSet::singleton(own)),
                RadiusMethod::Green => SiteSet::empty(),
            };
            let setup = match method {
                RadiusMethod::Green => Some(Arc::clone(green.ok_or_else(|| {
                    Error::EventSpec("green radius method needs a calibration (green setup)".into())
                })?)),
                _ => None,
            };
            Ok(Atom::Radius { anchor, w, own, s3, target, setup })
        };
        use EventKind::*;
        let atoms = match k {
            TwoPointBB => vec![Atom::Connect(point(m.u1)?, point(m.u2)?)],
            TwoPointBI => vec![Atom::Connect(point(m.u1)?, wsite()?)],
            TwoPointBI2 => vec![Atom::Connect(point(m.u2)?, wsite()?)],
            ThreePoint => vec![Atom::Connect(point(m.u1)?, point(m.u2)?), Atom::Connect(point(m.u1)?, wsite()?)],
            E_II => vec![Atom::Connect(i1()?, j2()?)],
            E_IR => vec![radius(i1()?)?],
            E_IR2 => vec![radius(j2()?)?],
            E_combined => vec![Atom::Connect(i1()?, j2()?), radius(i1()?)?],
            E_pt_II => vec![Atom::Connect(i1()?, point(m.u2)?)],
            E_pt_R1 => vec![radius(point(m.u1)?)?],
            E_pt_R2 => vec![radius(point(m.u2)?)?],
            E_pt_combined_partial => vec![Atom::Connect(i1()?, point(m.u2)?), radius(i1()?)?],
            E_pt_combined_full => vec![Atom::Connect(point(m.u1)?, point(m.u2)?), radius(point(m.u1)?)?],
            E_interval_two_targets => vec![Atom::Connect(is()?, point(m.u2)?), Atom::Connect(is()?, wsite()?)],
            E_pt_IR => vec![Atom::Connect(is()?, wsite()?)],
            SiteOpen => vec![Atom::Open(region.site_of_point(w)?)],
            Always => vec![],
        };
        Ok(ResolvedEvent { spec: self.clone(), atoms })
    }
}

/// Calibration and walk parameters for the green radius method.
#[derive(Clone, Debug)]
pub struct GreenSetup {
    pub calibration: GreenCalibration,
    pub walk_budget: u64,
    pub seed: Seed,
}

#[derive(Clone, Debug)]
enum Atom {
    Connect(SiteSet, SiteSet),
    Radius { anchor: SiteSet, w: Complex64, own: SiteId, s3: f64, target: SiteSet, setup: Option<Arc<GreenSetup>> },
    Open(SiteId),
}

/// Cluster queries an event needs.
pub trait Probe {
    fn region(&self) -> &Region;
    fn is_open(&mut self, site: SiteId) -> bool;
    fn connected(&mut self, a: &[SiteId], b: &[SiteId]) -> bool;
    /// `C(a)` in any order.
    fn cluster(&mut self, a: &[SiteId]) -> Vec<SiteId>;
}

impl Probe for &ClusterLabels<'_> {
    fn region(&self) -> &Region {
        ClusterLabels::region(self)
    }

    fn is_open(&mut self, site: SiteId) -> bool {
        self.label(site) != crate::percolation::NO_LABEL
    }

    fn connected(&mut self, a: &[SiteId], b: &[SiteId]) -> bool {
        ClusterLabels::connected(self, a, b)
    }

    fn cluster(&mut self, a: &[SiteId]) -> Vec<SiteId> {
        self.cluster_of(a)
    }
}

impl Probe for Explorer<'_> {
    fn region(&self) -> &Region {
        Explorer::region(self)
    }

    fn is_open(&mut self, site: SiteId) -> bool {
        Explorer::is_open(self, site)
    }

    fn connected(&mut self, a: &[SiteId], b: &[SiteId]) -> bool {
        Explorer::connected(self, a, b)
    }

    fn cluster(&mut self, a: &[SiteId]) -> Vec<SiteId> {
        Explorer::cluster(self, a)
    }
}

/// An [`EventSpec`] bound to a region.
#[derive(Clone, Debug)]
pub struct ResolvedEvent {
    spec: EventSpec,
    atoms: Vec<Atom>,
}

impl ResolvedEvent {
    pub fn spec(&self) -> &EventSpec {
        &self.spec
    }

    /// Evaluate on one sample. `sample_index` keys the walks of the green method.
    pub fn eval<P: Probe + ?Sized>(&self, p: &mut P, sample_index: u64) -> bool {
        self.atoms.iter().enumerate().all(|(k, atom)| match atom {
            Atom::Connect(a, b) => p.connected(a.as_slice(), b.as_slice()),
            Atom::Open(x) => p.is_open(*x),
            Atom::Radius { anchor, w, own, s3, target, setup } => match setup {
                None => p.connected(anchor.as_slice(), target.as_slice()),
                Some(g) => {
                    let cl = SiteSet::new(p.cluster(anchor.as_slice()));
                    let region = p.region();
                    let dist = crate::confradius::boundary_distance(region, *w, &cl);
                    let mut rng = CounterStream::new(g.seed, sample_index, k as u64, DOMAIN_WALKS);
                    let blocked = |s| cl.contains(s);
                    let est = green_radius_with(region, *w, *own, &blocked, dist, g.walk_budget, &g.calibration, &mut rng)
                        .expect("w validated in the upper half-plane");
                    est.point.unwrap_or(est.lower) < *s3
                }
            },
        })
    }

    /// Exact-enumeration view: support is the whole region.
    pub fn predicate(self: &Arc<Self>, region: &Region) -> EventPredicate {
        let ev = Arc::clone(self);
        EventPredicate::new(region.sites().collect(), move |c| {
            let labels = crate::percolation::label_clusters(c);
            ev.eval(&mut &labels, 0)
        })
    }
}

/// Resolve and evaluate in one go.
pub fn evaluate(labels: &ClusterLabels<'_>, spec: &EventSpec) -> Result<bool> {
    let ev = spec.resolve(labels.region(), None)?;
    Ok(ev.eval(&mut &*labels, 0))
}

/// Distance from `w` to the nearest site of `C(anchor)`: 0 when `w`'s own
/// hexagon belongs to it, `+∞` when `C(anchor)` is empty.
pub fn distance_to_cluster(labels: &ClusterLabels<'_>, w: Complex64, anchor: &SiteSet) -> f64 {
    let region = labels.region();
    let ls = labels.labels_of(anchor.as_slice());
    if let Ok(s) = region.site_of_point(w) {
        if ls.binary_search(&labels.label(s)).is_ok() {
            return 0.0;
        }
    }
    ls.iter()
        .flat_map(|&l| labels.members(l))
        .map(|&s| (region.position(s) - w).norm())
        .fold(f64::INFINITY, f64::min)
}
