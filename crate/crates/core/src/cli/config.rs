//! Strict JSON configs. Every unknown key, missing key and mistyped value is
//! collected before anything runs.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::events::{EventKind, MarkedPoints, RadiusMethod};
use crate::experiments::EstimatePlan;
use crate::lattice::RegionParams;
use crate::percolation::Law;
use crate::rng::Seed;

type Check = fn(&Value, &str, &mut Vec<String>);

/// `(name, required, check)`.
type Field = (&'static str, bool, Check);

fn leaf<T: DeserializeOwned>(v: &Value, path: &str, errs: &mut Vec<String>) {
    if let Err(e) = serde_json::from_value::<T>(v.clone()) {
        errs.push(format!("{path}: {e}"));
    }
}

fn object(v: &Value, path: &str, fields: &[Field], errs: &mut Vec<String>) {
    let Some(map) = v.as_object() else {
        errs.push(format!("{path}: expected an object"));
        return;
    };
    for key in map.keys() {
        if !fields.iter().any(|f| f.0 == key) {
            let known: Vec<&str> = fields.iter().map(|f| f.0).collect();
            errs.push(format!("{path}: unknown field `{key}` (expected one of {})", known.join(", ")));
        }
    }
    for &(name, required, check) in fields {
        match map.get(name) {
            Some(x) => check(x, &format!("{path}.{name}"), errs),
            None if required => errs.push(format!("{path}: missing field `{name}`")),
            None => {}
        }
    }
}

const REGION: &[Field] = &[("mesh", true, leaf::<f64>), ("halfwidth", true, leaf::<f64>), ("anchor", true, leaf::<[f64; 2]>)];

const MARKS: &[Field] = &[
    ("u1", true, leaf::<f64>),
    ("u2", true, leaf::<f64>),
    ("w", true, leaf::<[f64; 2]>),
    ("s", false, leaf::<f64>),
    ("s1", false, leaf::<f64>),
    ("s2", false, leaf::<f64>),
    ("s3", false, leaf::<f64>),
];

const EVENT: &[Field] = &[
    ("id", false, leaf::<String>),
    ("kind", true, leaf::<EventKind>),
    ("marks", true, marks),
    ("radius_method", false, leaf::<RadiusMethod>),
];

const GREEN: &[Field] =
    &[("walk_budget", true, leaf::<u64>), ("calibration", false, leaf::<String>), ("calibration_budget", false, leaf::<u64>)];

const PLAN: &[Field] = &[
    ("region", true, region),
    ("events", true, events),
    ("n", true, leaf::<u64>),
    ("seed", true, leaf::<Seed>),
    ("meshes", false, leaf::<Vec<f64>>),
    ("law", false, leaf::<Law>),
    ("green", false, green),
];

fn region(v: &Value, path: &str, errs: &mut Vec<String>) {
    object(v, path, REGION, errs);
}

fn marks(v: &Value, path: &str, errs: &mut Vec<String>) {
    object(v, path, MARKS, errs);
}

fn green(v: &Value, path: &str, errs: &mut Vec<String>) {
    object(v, path, GREEN, errs);
}

fn events(v: &Value, path: &str, errs: &mut Vec<String>) {
    let Some(list) = v.as_array() else {
        errs.push(format!("{path}: expected an array"));
        return;
    };
    for (k, e) in list.iter().enumerate() {
        object(e, &format!("{path}[{k}]"), EVENT, errs);
    }
}

fn parse_json(text: &str, origin: &str) -> Result<Value, Vec<String>> {
    serde_json::from_str(text).map_err(|e| vec![format!("{origin}: invalid JSON: {e}")])
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<Seed>,
    pub n: Option<u64>,
}

fn apply(v: &mut Value, o: &Overrides) {
    if let Some(map) = v.as_object_mut() {
        if let Some(seed) = o.seed {
            map.insert("seed".into(), Value::String(seed.to_string()));
        }
        if let Some(n) = o.n {
            map.insert("n".into(), Value::from(n));
        }
    }
}

fn finish<T: DeserializeOwned>(v: Value, errs: Vec<String>) -> Result<T, Vec<String>> {
    if !errs.is_empty() {
        return Err(errs);
    }
    serde_json::from_value(v).map_err(|e| vec![e.to_string()])
}

/// Estimation plan: schema, then plan-level checks, then window margins.
pub fn parse_plan(text: &str, origin: &str, o: &Overrides) -> Result<EstimatePlan, Vec<String>> {
    let mut v = parse_json(text, origin)?;
    apply(&mut v, o);
    let mut errs = Vec::new();
    object(&v, origin, PLAN, &mut errs);
    let plan: EstimatePlan = finish(v, errs)?;
    let mut errs = plan.problems();
    for mesh in plan.mesh_list() {
        let params = RegionParams { mesh, ..plan.region };
        match params.build() {
            Ok(r) => {
                for e in plan.expanded_events() {
                    if e.radius_method == Some(RadiusMethod::Green) || e.validate().is_err() {
                        continue;
                    }
                    if let Err(err) = e.resolve(&r, None) {
                        errs.push(format!("mesh {mesh}: event `{}`: {err}", e.label()));
                    }
                }
            }
            Err(err) => errs.push(format!("mesh {mesh}: {err}")),
        }
    }
    if errs.is_empty() {
        Ok(plan)
    } else {
        Err(errs)
    }
}

/// Circuit statistics over sampled configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitsConfig {
    pub region: RegionParams,
    pub z: [f64; 2],
    pub a: f64,
    pub b: f64,
    pub n: u64,
    pub seed: Seed,
    #[serde(default)]
    pub law: Law,
}

const CIRCUITS: &[Field] = &[
    ("region", true, region),
    ("z", true, leaf::<[f64; 2]>),
    ("a", true, leaf::<f64>),
    ("b", true, leaf::<f64>),
    ("n", true, leaf::<u64>),
    ("seed", true, leaf::<Seed>),
    ("law", false, leaf::<Law>),
];

pub fn parse_circuits(text: &str, origin: &str, o: &Overrides) -> Result<CircuitsConfig, Vec<String>> {
    let mut v = parse_json(text, origin)?;
    apply(&mut v, o);
    let mut errs = Vec::new();
    object(&v, origin, CIRCUITS, &mut errs);
    let c: CircuitsConfig = finish(v, errs)?;
    let mut errs = Vec::new();
    if c.n == 0 {
        errs.push("n must be at least 1".into());
    }
    if !(0.0 < c.a && c.a < c.b) {
        errs.push(format!("annulus radii must satisfy 0 < a < b, got a = {}, b = {}", c.a, c.b));
    }
    if let Err(e) = c.region.build() {
        errs.push(e.to_string());
    }
    if errs.is_empty() {
        Ok(c)
    } else {
        Err(errs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Thm1,
    Thm2,
    Cardy,
    Coupling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairName {
    CrossingVsRadius,
    CombinedVsCrossing,
}

/// A headline mesh sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub experiment: Experiment,
    pub marks: MarkedPoints,
    pub center: f64,
    pub halfwidth: f64,
    pub meshes: Vec<f64>,
    pub n: u64,
    pub seed: Seed,
    #[serde(default)]
    pub doubling: bool,
    #[serde(default)]
    pub law: Law,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairName>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub s_list: Vec<f64>,
}

const SWEEP: &[Field] = &[
    ("experiment", true, leaf::<Experiment>),
    ("marks", true, marks),
    ("center", true, leaf::<f64>),
    ("halfwidth", true, leaf::<f64>),
    ("meshes", true, leaf::<Vec<f64>>),
    ("n", true, leaf::<u64>),
    ("seed", true, leaf::<Seed>),
    ("doubling", false, leaf::<bool>),
    ("law", false, leaf::<Law>),
    ("pair", false, leaf::<PairName>),
    ("s_list", false, leaf::<Vec<f64>>),
];

pub fn parse_sweep(text: &str, origin: &str, o: &Overrides) -> Result<SweepFile, Vec<String>> {
    let mut v = parse_json(text, origin)?;
    apply(&mut v, o);
    let mut errs = Vec::new();
    object(&v, origin, SWEEP, &mut errs);
    let s: SweepFile = finish(v, errs)?;
    let mut errs = Vec::new();
    if s.n == 0 {
        errs.push("n must be at least 1".into());
    }
    if s.meshes.is_empty() || s.meshes.iter().any(|&m| !(m > 0.0)) {
        errs.push("meshes must be a non-empty list of positive numbers".into());
    }
    if !(s.halfwidth > 0.0) {
        errs.push(format!("halfwidth = {} must be positive", s.halfwidth));
    }
    match s.experiment {
        Experiment::Coupling => {
            if s.pair.is_none() {
                errs.push("coupling needs `pair`".into());
            }
            if s.s_list.is_empty() {
                errs.push("coupling needs a non-empty `s_list`".into());
            }
        }
        Experiment::Thm2 if s.marks.s.is_none() => errs.push("thm2 needs `marks.s`".into()),
        Experiment::Cardy if s.marks.s1.is_none() || s.marks.s2.is_none() => {
            errs.push("cardy needs `marks.s1` and `marks.s2`".into())
        }
        _ => {}
    }
    if errs.is_empty() {
        Ok(s)
    } else {
        Err(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "region": {"mesh": 0.25, "halfwidth": 2.0, "anchor": [0.0, 0.0]},
        "events": [{"kind": "TwoPointBB", "marks": {"u1": -0.5, "u2": 0.5, "w": [0.0, 0.5]}}],
        "n": 10, "seed": "0x2a"
    }"#;

    #[test]
    fn good_plan_parses() {
        let p = parse_plan(GOOD, "cfg", &Overrides::default()).unwrap();
        assert_eq!(p.seed, Seed(42));
        let p = parse_plan(GOOD, "cfg", &Overrides { seed: Some(Seed(7)), n: Some(3) }).unwrap();
        assert_eq!((p.seed, p.n), (Seed(7), 3));
    }

    #[test]
    fn every_violation_is_listed() {
        let bad = r#"{
            "region": {"mesh": "x", "halfwidth": 2.0, "anchor": [0.0, 0.0], "extra": 1},
            "events": [{"kind": "Nope", "marks": {"u1": 0, "u2": 1, "w": [0, 1], "bogus": 2}, "colour": "red"}],
            "n": 10,
            "typo": true
        }"#;
        let errs = parse_plan(bad, "cfg", &Overrides::default()).unwrap_err();
        let text = errs.join("\n");
        for needle in ["cfg.region.mesh", "`extra`", "cfg.events[0].kind", "`bogus`", "`colour`", "`typo`", "missing field `seed`"] {
            assert!(text.contains(needle), "{needle} not reported in:\n{text}");
        }
        assert_eq!(errs.len(), 7, "{text}");
    }

    #[test]
    fn margin_violations_are_reported_per_event() {
        let far = GOOD.replace("\"u1\": -0.5", "\"u1\": -5.0");
        let errs = parse_plan(&far, "cfg", &Overrides::default()).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("TwoPointBB"), "{errs:?}");
    }
}
