//! Confidence intervals for Bernoulli means and delta-method intervals for
//! products of powers of means estimated on one shared sample stream.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const Z95: f64 = 1.959_963_984_540_054;

/// Below this many hits the normal interval is replaced by Wilson's.
pub const WILSON_BELOW: u64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Normal,
    Wilson,
}

/// 95% half-width for `count` hits in `n` trials, and the method used.
///
/// An event that held on every sample keeps the normal (zero) width.
pub fn bernoulli_ci95(count: u64, n: u64) -> (f64, CiMethod) {
    assert!(n > 0 && count <= n);
    let p = count as f64 / n as f64;
    let nf = n as f64;
    if count < WILSON_BELOW && count < n {
        let z2 = Z95 * Z95;
        let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf);
        (half, CiMethod::Wilson)
    } else {
        (Z95 * (p * (1.0 - p) / nf).sqrt(), CiMethod::Normal)
    }
}

/// Wilson score interval `(lo, hi)`.
pub fn wilson_interval(count: u64, n: u64) -> (f64, f64) {
    let p = count as f64 / n as f64;
    let nf = n as f64;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf);
    let lo = if count == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if count == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Hit counts of `k` events on `n` shared samples, with pairwise joint counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedCounts {
    pub n: u64,
    pub counts: Vec<u64>,
    /// Row-major `k × k`; the diagonal repeats `counts`.
    pub joint: Vec<u64>,
}

impl SharedCounts {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.counts[k] as f64 / self.n as f64
    }

    pub fn joint_count(&self, a: usize, b: usize) -> u64 {
        self.joint[a * self.len() + b]
    }

    /// Covariance of the two sample means.
    pub fn cov(&self, a: usize, b: usize) -> f64 {
        let n = self.n as f64;
        (self.joint_count(a, b) as f64 / n - self.mean(a) * self.mean(b)) / n
    }
}

/// `Π p_k^{e_k}` over event indices.
pub type Composition = Vec<(usize, i32)>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRecord {
    pub value: f64,
    pub ci95: f64,
    /// Standard deviation of `ln value`.
    pub log_sd: f64,
}

/// Composed ratio of means with a first-order delta-method interval using the
/// shared-sample covariances. `names` labels components in errors.
pub fn ratio_with_ci(c: &SharedCounts, comp: &[(usize, i32)], names: &[String]) -> Result<RatioRecord> {
    let mut merged: Vec<(usize, i32)> = Vec::new();
    for &(k, e) in comp {
        match merged.iter_mut().find(|(j, _)| *j == k) {
            Some((_, acc)) => *acc += e,
            None => merged.push((k, e)),
        }
    }
    merged.retain(|&(_, e)| e != 0);
    for &(k, _) in &merged {
        if c.counts[k] == 0 {
            let name = names.get(k).cloned().unwrap_or_else(|| format!("#{k}"));
            return Err(Error::Unestimable(name));
        }
    }
    let value = merged.iter().map(|&(k, e)| c.mean(k).powi(e)).product::<f64>();
    let log_sd = log_variance(&merged, |k| c.mean(k), |a, b| c.cov(a, b)).max(0.0).sqrt();
    Ok(RatioRecord { value, ci95: Z95 * value * log_sd, log_sd })
}

/// `Var ln Π p_k^{e_k} ≈ Σ e_a e_b Cov_ab / (p_a p_b)`.
pub fn log_variance(comp: &[(usize, i32)], mean: impl Fn(usize) -> f64, cov: impl Fn(usize, usize) -> f64) -> f64 {
    let mut var = 0.0;
    for &(a, ea) in comp {
        for &(b, eb) in comp {
            var += f64::from(ea * eb) * cov(a, b) / (mean(a) * mean(b));
        }
    }
    var
}

/// `|shift| > 2·√(ci1² + ci2²)`.
pub fn doubling_flag(shift: f64, ci1: f64, ci2: f64) -> bool {
    shift.abs() > 2.0 * (ci1 * ci1 + ci2 * ci2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterStream, Seed, DOMAIN_AUX};
    use proptest::prelude::*;

    fn counts_from(samples: &[Vec<bool>]) -> SharedCounts {
        let k = samples[0].len();
        let mut counts = vec![0; k];
        let mut joint = vec![0; k * k];
        for s in samples {
            for a in 0..k {
                if s[a] {
                    counts[a] += 1;
                    for b in 0..k {
                        joint[a * k + b] += u64::from(s[b]);
                    }
                }
            }
        }
        SharedCounts { n: samples.len() as u64, counts, joint }
    }

    #[test]
    fn wilson_and_normal_switch() {
        assert_eq!(bernoulli_ci95(100, 100), (0.0, CiMethod::Normal));
        let (h, m) = bernoulli_ci95(0, 1000);
        assert_eq!(m, CiMethod::Wilson);
        assert!(h > 0.0);
        let (h, m) = bernoulli_ci95(500, 1000);
        assert_eq!(m, CiMethod::Normal);
        assert!((h - Z95 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-15);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }

    #[test]
    fn identical_ratio_is_exactly_one() {
        let mut rng = CounterStream::new(Seed(4), 0, 0, DOMAIN_AUX);
        let samples: Vec<Vec<bool>> = (0..1000).map(|_| vec![rng.next_f64() < 0.3; 2]).collect();
        let c = counts_from(&samples);
        let r = ratio_with_ci(&c, &[(0, 1), (1, -1)], &[]).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.ci95.abs() < 1e-12);
        let r = ratio_with_ci(&c, &[(0, 1), (0, -1)], &[]).unwrap();
        assert_eq!((r.value, r.ci95), (1.0, 0.0));
    }

    #[test]
    fn unestimable_component() {
        let c = counts_from(&[vec![true, false], vec![true, false]]);
        let err = ratio_with_ci(&c, &[(0, 1), (1, -1)], &["a".into(), "b".into()]).unwrap_err();
        assert!(matches!(err, Error::Unestimable(ref s) if s == "b"));
    }

    proptest! {
        #[test]
        fn independent_components_sum_relative_variances(
            p in proptest::collection::vec(0.05f64..0.95, 3),
            e in proptest::collection::vec(-2i32..=2, 3),
            n in 100f64..1e5,
        ) {
            let comp: Vec<(usize, i32)> = (0..3).map(|i| (i, e[i])).collect();
            let var = |k: usize| p[k] * (1.0 - p[k]) / n;
            let got = log_variance(&comp, |k| p[k], |a, b| if a == b { var(a) } else { 0.0 });
            let want: f64 = (0..3).map(|k| f64::from(e[k] * e[k]) * var(k) / (p[k] * p[k])).sum();
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300));
        }
    }

    #[test]
    fn delta_method_coverage_on_correlated_stream() {
        // A = u<0.4, B = u<0.25 ∨ v<0.1, C = v<0.5; target P(A)²/(P(B)P(C)).
        let pb = 0.25 + 0.75 * 0.1;
        let truth = 0.4 * 0.4 / (pb * 0.5);
        let reps = 500;
        let mut covered = 0;
        for rep in 0..reps {
            let mut rng = CounterStream::new(Seed(77), rep, 0, DOMAIN_AUX);
            let samples: Vec<Vec<bool>> = (0..4000)
                .map(|_| {
                    let (u, v) = (rng.next_f64(), rng.next_f64());
                    vec![u < 0.4, u < 0.25 || v < 0.1, v < 0.5]
                })
                .collect();
            let c = counts_from(&samples);
            let r = ratio_with_ci(&c, &[(0, 2), (1, -1), (2, -1)], &[]).unwrap();
            covered += usize::from((r.value - truth).abs() <= r.ci95);
        }
        let cov = covered as f64 / reps as f64;
        assert!((0.90..=0.99).contains(&cov), "coverage {cov}");
    }

    #[test]
    fn doubling_flag_definition() {
        assert!(!doubling_flag(0.0, 0.0, 0.0));
        assert!(doubling_flag(0.3, 0.1, 0.0));
        assert!(!doubling_flag(0.2, 0.1, 0.0));
        assert!(doubling_flag(-0.29, 0.1, 0.1));
        assert!(!doubling_flag(0.28, 0.1, 0.1));
    }
}
