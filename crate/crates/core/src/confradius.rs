//! Conformal radius `ρ(w, A)`: the Koebe bracket and a random-walk estimator.
//!
//! The estimator counts returns of simple random walk to `w`'s site before
//! the walk is killed on the blocking set, below the real axis or outside the
//! window. Returns grow like `(√3/π)·ln(ρ/η)` plus a lattice constant; the
//! constant is removed by calibrating against lattice disks, where `ρ` equals
//! the radius.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::{Region, SiteSet, DIRECTIONS, NO_SITE};
use crate::rng::{CounterStream, Seed, DOMAIN_WALKS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Bracket,
    Green,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub lower: f64,
    pub upper: f64,
    pub point: Option<f64>,
    pub method: EstimateMethod,
}

/// `[dist, 4·dist]`, from Koebe's quarter theorem and Schwarz's lemma.
pub fn koebe_bracket(dist: f64) -> RadiusEstimate {
    assert!(dist >= 0.0, "distance must be nonnegative, got {dist}");
    RadiusEstimate { lower: dist, upper: 4.0 * dist, point: None, method: EstimateMethod::Bracket }
}

/// Monotone table from expected returns `g` to `r/η`.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenCalibration {
    g: Vec<f64>,
    r_over_mesh: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    g: Vec<f64>,
    r_over_mesh: Vec<f64>,
    checksum: String,
}

fn table_checksum(g: &[f64], r: &[f64]) -> String {
    let bytes: Vec<u8> = g.iter().chain(r).flat_map(|v| v.to_bits().to_le_bytes()).collect();
    crate::fsutil::sha256_hex(&bytes)
}

/// One disk measurement: radius (in mesh units), mean returns and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskMeasurement {
    pub r_over_mesh: f64,
    pub g: f64,
    pub stderr: f64,
}

/// Dyadic radii measured directly; larger radii follow the log law.
pub const MEASURED_RADII: [f64; 7] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
pub const TABLE_MAX: f64 = 4096.0;

impl GreenCalibration {
    /// Build from raw `(r/η, g)` points: pool-adjacent-violators smoothing of
    /// `g`, then a strictly increasing nudge.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Calibration("need at least two calibration points".into()));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let r: Vec<f64> = pts.iter().map(|p| p.0).collect();
        if r.windows(2).any(|w| !(w[0] < w[1])) || r[0] <= 0.0 {
            return Err(Error::Calibration("radii must be positive and distinct".into()));
        }
        let mut g = isotonic(&pts.iter().map(|p| p.1).collect::<Vec<_>>());
        for k in 1..g.len() {
            if g[k] <= g[k - 1] {
                g[k] = g[k - 1] + 1e-9 * g[k - 1].abs().max(1.0);
            }
        }
        Ok(GreenCalibration { g, r_over_mesh: r })
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn r_over_mesh(&self) -> &[f64] {
        &self.r_over_mesh
    }

    pub fn checksum(&self) -> String {
        table_checksum(&self.g, &self.r_over_mesh)
    }

    /// `r/η` for an expected return count, interpolating `ln r` linearly in `g`
    /// (extended linearly past either end).
    pub fn invert(&self, g: f64) -> f64 {
        let n = self.g.len();
        let ln_r = |k: usize| self.r_over_mesh[k].ln();
        let k = if g <= self.g[0] {
            0
        } else if g >= self.g[n - 1] {
            n - 2
        } else {
            self.g.partition_point(|&x| x <= g) - 1
        };
        let t = (g - self.g[k]) / (self.g[k + 1] - self.g[k]);
        (ln_r(k) + t * (ln_r(k + 1) - ln_r(k))).exp()
    }

    pub fn to_json(&self) -> String {
        let f = CalibrationFile { g: self.g.clone(), r_over_mesh: self.r_over_mesh.clone(), checksum: self.checksum() };
        serde_json::to_string_pretty(&f).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CalibrationFile = serde_json::from_str(text)?;
        if f.g.len() != f.r_over_mesh.len() {
            return Err(Error::Calibration("g and r_over_mesh differ in length".into()));
        }
        if table_checksum(&f.g, &f.r_over_mesh) != f.checksum {
            return Err(Error::Calibration("checksum mismatch".into()));
        }
        if f.g.windows(2).any(|w| !(w[0] < w[1])) || f.r_over_mesh.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Calibration("table is not strictly increasing".into()));
        }
        Ok(GreenCalibration { g: f.g, r_over_mesh: f.r_over_mesh })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::fsutil::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn isotonic(y: &[f64]) -> Vec<f64> {
    // Blocks of (mean, weight), merged while they violate monotonicity.
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, w2) = blocks.pop().expect("len > 1");
            let (m1, w1) = blocks.pop().expect("len > 1");
            blocks.push(((m1 * w1 as f64 + m2 * w2 as f64) / (w1 + w2) as f64, w1 + w2));
        }
    }
    blocks.into_iter().flat_map(|(m, w)| std::iter::repeat_n(m, w)).collect()
}

/// Mean number of visits to the centre (time 0 included) of walks started at
/// the centre of the lattice disk `{i² + ij + j² < R²}`.
pub fn measure_disk(r_over_mesh: f64, walks: u64, seed: Seed, stream: u64) -> DiskMeasurement {
    let r2 = r_over_mesh * r_over_mesh;
    let inside = |i: i64, j: i64| ((i * i + i * j + j * j) as f64) < r2;
    let mut rng = CounterStream::new(seed, stream, r_over_mesh.to_bits(), DOMAIN_WALKS);
    let (mut sum, mut sum2) = (0u64, 0u64);
    for _ in 0..walks {
        let (mut i, mut j) = (0i64, 0i64);
        let mut visits = 1u64;
        loop {
            let (di, dj) = DIRECTIONS[rng.below(6) as usize];
            i += i64::from(di);
            j += i64::from(dj);
            if !inside(i, j) {
                break;
            }
            if i == 0 && j == 0 {
                visits += 1;
            }
        }
        sum += visits;
        sum2 += visits * visits;
    }
    let n = walks as f64;
    let mean = sum as f64 / n;
    let var = (sum2 as f64 / n - mean * mean).max(0.0);
    DiskMeasurement { r_over_mesh, g: mean, stderr: (var / n).sqrt() }
}

/// Calibration from `walk_budget` walks per measured radius, with a fixed seed.
pub fn calibrate_green(walk_budget: u64) -> GreenCalibration {
    calibrate_green_seeded(walk_budget, Seed(0x67_7265_656e)).0
}

pub fn calibrate_green_seeded(walk_budget: u64, seed: Seed) -> (GreenCalibration, Vec<DiskMeasurement>) {
    let measured: Vec<DiskMeasurement> = MEASURED_RADII.iter().map(|&r| measure_disk(r, walk_budget.max(1), seed, 0)).collect();
    let (slope, c) = log_law_fit(&measured[measured.len() - 3..]);
    let mut points: Vec<(f64, f64)> = measured.iter().map(|m| (m.r_over_mesh, m.g)).collect();
    let mut r = 2.0 * MEASURED_RADII[MEASURED_RADII.len() - 1];
    while r <= TABLE_MAX {
        points.push((r, slope * r.ln() + c));
        r *= 2.0;
    }
    (GreenCalibration::from_points(&points).expect("valid calibration points"), measured)
}

/// Least-squares `g ≈ slope·ln r + c`, used to extend the table past the
/// largest measured disk.
pub fn log_law_fit(ms: &[DiskMeasurement]) -> (f64, f64) {
    let n = ms.len() as f64;
    let mx = ms.iter().map(|m| m.r_over_mesh.ln()).sum::<f64>() / n;
    let my = ms.iter().map(|m| m.g).sum::<f64>() / n;
    let sxy: f64 = ms.iter().map(|m| (m.r_over_mesh.ln() - mx) * (m.g - my)).sum();
    let sxx: f64 = ms.iter().map(|m| (m.r_over_mesh.ln() - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Returns-to-start statistics of walks on a region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkSummary {
    pub finished: u64,
    pub visits: u64,
}

/// Run `walks` walks from `start`, killed when they leave the region or step
/// on a blocked site. Walks still alive after `max_steps` are discarded.
pub fn region_walks(
    region: &Region,
    start: crate::lattice::SiteId,
    blocked: &dyn Fn(crate::lattice::SiteId) -> bool,
    walks: u64,
    max_steps: u64,
    rng: &mut CounterStream,
) -> WalkSummary {
    let mut out = WalkSummary { finished: 0, visits: 0 };
    if blocked(start) {
        return out;
    }
    for _ in 0..walks {
        let mut x = start;
        let mut visits = 1u64;
        let mut steps = 0u64;
        let done = loop {
            let y = region.neighbor_slots(x)[rng.below(6) as usize];
            if y == NO_SITE || blocked(y) {
                break true;
            }
            x = y;
            if x == start {
                visits += 1;
            }
            steps += 1;
            if steps >= max_steps {
                break false;
            }
        };
        if done {
            out.finished += 1;
            out.visits += visits;
        }
    }
    out
}

/// Distance from `w` to the nearest blocking site, capped by `Im w` (the real
/// axis is part of the boundary).
pub fn boundary_distance(region: &Region, w: Complex64, blocking: &SiteSet) -> f64 {
    blocking.iter().map(|s| (region.position(s) - w).norm()).fold(w.im, f64::min)
}

/// Random-walk estimate of `ρ(w, blocking)`, clipped into the Koebe bracket.
pub fn green_radius(
    region: &Region,
    w: Complex64,
    blocking: &SiteSet,
    walk_budget: u64,
    cal: &GreenCalibration,
    rng: &mut CounterStream,
) -> Result<RadiusEstimate> {
    let start = region.site_of_point(w)?;
    let blocked = |s| blocking.contains(s);
    green_radius_with(region, w, start, &blocked, boundary_distance(region, w, blocking), walk_budget, cal, rng)
}

/// [`green_radius`] with the blocking set given as a predicate and the bracket
/// distance precomputed.
#[allow(clippy::too_many_arguments)]
pub fn green_radius_with(
    region: &Region,
    w: Complex64,
    start: crate::lattice::SiteId,
    blocked: &dyn Fn(crate::lattice::SiteId) -> bool,
    dist: f64,
    walk_budget: u64,
    cal: &GreenCalibration,
    rng: &mut CounterStream,
) -> Result<RadiusEstimate> {
    if !(w.im > 0.0) {
        return Err(Error::Domain(format!("w = {w} must lie in the open upper half-plane")));
    }
    if blocked(start) {
        return Ok(RadiusEstimate { lower: 0.0, upper: 0.0, point: Some(0.0), method: EstimateMethod::Green });
    }
    let span = region.halfwidth() / region.mesh();
    let max_steps = (64.0 * span * span).max(1e4) as u64;
    let summary = region_walks(region, start, blocked, walk_budget, max_steps, rng);
    let bracket = koebe_bracket(dist);
    if summary.finished == 0 {
        return Ok(bracket);
    }
    let g = summary.visits as f64 / summary.finished as f64;
    let point = (region.mesh() * cal.invert(g)).clamp(bracket.lower, bracket.upper);
    Ok(RadiusEstimate { point: Some(point), method: EstimateMethod::Green, ..bracket })
}
