//! CSV tables and the JSON run manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CiMethod, DoublingRow, EstimatePlan, EstimateRecord, RatioTable};
use crate::fsutil::{sha256_hex, write_atomic};
use crate::lattice::EMBEDDING_ID;
use crate::{Error, Result};

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: u32,
    pub embedding: String,
    pub config_hash: String,
    pub plan: serde_json::Value,
}

impl Manifest {
    pub fn for_plan(plan: &EstimatePlan) -> Result<Self> {
        Ok(Manifest {
            schema: MANIFEST_SCHEMA,
            embedding: EMBEDDING_ID.to_string(),
            config_hash: config_hash(plan)?,
            plan: serde_json::to_value(plan)?,
        })
    }
}

/// SHA-256 of the compact plan JSON (fields in declaration order).
pub fn config_hash(plan: &EstimatePlan) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(plan)?))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let m: Manifest = serde_json::from_slice(&std::fs::read(path)?)?;
    if m.schema != MANIFEST_SCHEMA {
        return Err(Error::Plan(format!("{}: manifest schema {} is not {MANIFEST_SCHEMA}", path.display(), m.schema)));
    }
    Ok(m)
}

/// Shortest decimal that round-trips the value rounded to 12 significant digits.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float");
    format!("{r}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), sig12)
}

/// One line of `estimates.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub run_hash: String,
    pub event: String,
    pub kind: String,
    pub radius_method: String,
    pub mesh: String,
    pub halfwidth: String,
    pub n: u64,
    pub count: u64,
    pub mean: String,
    pub ci95: String,
    pub ci_method: String,
    pub seed: String,
}

impl EstimateRow {
    fn new(run_hash: &str, r: &EstimateRecord) -> Self {
        EstimateRow {
            run_hash: run_hash.to_string(),
            event: r.event.clone(),
            kind: r.kind.clone(),
            radius_method: r.radius_method.clone(),
            mesh: sig12(r.mesh),
            halfwidth: sig12(r.halfwidth),
            n: r.n,
            count: r.count,
            mean: sig12(r.mean),
            ci95: sig12(r.ci95),
            ci_method: match r.ci_method {
                CiMethod::Normal => "normal",
                CiMethod::Wilson => "wilson",
            }
            .to_string(),
            seed: r.seed.to_string(),
        }
    }
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Plan(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Plan(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn estimates_csv(run_hash: &str, records: &[EstimateRecord]) -> Result<String> {
    to_csv(records.iter().map(|r| EstimateRow::new(run_hash, r)))
}

pub fn read_estimates(path: &Path) -> Result<Vec<EstimateRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Plan(format!("{}: {e}", path.display())))?;
    r.deserialize().map(|row| row.map_err(|e| Error::Plan(format!("{}: {e}", path.display())))).collect()
}

/// Writes `estimates.csv` and `manifest.json` into `dir`; returns the run hash.
pub fn write_estimates(dir: &Path, plan: &EstimatePlan, records: &[EstimateRecord]) -> Result<String> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest::for_plan(plan)?;
    let hash = manifest.config_hash.clone();
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    write_atomic(&dir.join("estimates.csv"), estimates_csv(&hash, records)?.as_bytes())?;
    Ok(hash)
}

#[derive(Serialize)]
struct RatioLine<'a> {
    run_hash: &'a str,
    name: &'a str,
    variant: &'a str,
    mesh: String,
    halfwidth: String,
    n: u64,
    value: String,
    ci95: String,
    theory: String,
    rel_dev: String,
    doubled_value: String,
    doubled_ci95: String,
    doubling_flag: String,
    note: &'a str,
}

pub fn ratio_table_csv(run_hash: &str, table: &RatioTable) -> Result<String> {
    to_csv(table.rows.iter().map(|r| RatioLine {
        run_hash,
        name: &table.name,
        variant: &r.variant,
        mesh: sig12(r.mesh),
        halfwidth: sig12(r.halfwidth),
        n: r.n,
        value: opt(r.value),
        ci95: opt(r.ci95),
        theory: sig12(r.theory),
        rel_dev: opt(r.value.map(|v| v / r.theory - 1.0)),
        doubled_value: opt(r.doubled.as_ref().and_then(|d| d.value)),
        doubled_ci95: opt(r.doubled.as_ref().and_then(|d| d.ci95)),
        doubling_flag: r.doubling_flag().map_or(String::new(), |f| f.to_string()),
        note: r.note.as_deref().unwrap_or(""),
    }))
}

pub fn write_ratio_table(path: &Path, run_hash: &str, table: &RatioTable) -> Result<()> {
    write_atomic(path, ratio_table_csv(run_hash, table)?.as_bytes())
}

#[derive(Serialize)]
struct DoublingLine<'a> {
    event: &'a str,
    mean: String,
    ci95: String,
    doubled_mean: String,
    doubled_ci95: String,
    shift: String,
    flagged: bool,
}

pub fn doubling_csv(rows: &[DoublingRow]) -> Result<String> {
    to_csv(rows.iter().map(|r| DoublingLine {
        event: &r.event,
        mean: sig12(r.mean),
        ci95: sig12(r.ci95),
        doubled_mean: sig12(r.doubled_mean),
        doubled_ci95: sig12(r.doubled_ci95),
        shift: sig12(r.shift),
        flagged: r.flagged,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn sig12_rounds() {
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(123456.7890123456), "123456.789012");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn estimates_roundtrip_through_csv() {
        let rec = EstimateRecord {
            event: "a,b".into(),
            kind: "E_II".into(),
            radius_method: String::new(),
            mean: 0.25,
            n: 4,
            count: 1,
            ci95: 0.1,
            ci_method: CiMethod::Wilson,
            mesh: 0.125,
            halfwidth: 2.0,
            seed: Seed(7),
        };
        let text = estimates_csv("h", &[rec]).unwrap();
        assert!(text.starts_with("run_hash,event,kind,radius_method,mesh,halfwidth,n,count,mean,ci95,ci_method,seed\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(&p, &text).unwrap();
        let rows = read_estimates(&p).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].event, "a,b");
        assert_eq!(rows[0].ci_method, "wilson");
        assert_eq!(rows[0].seed, "0x7");
    }
}
