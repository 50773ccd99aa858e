//! Predicted constants and limit functions.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::maps::{harmonic_measure, mobius_to_pm1, strip_of_disk_coordinate, StripPoint};
use super::special::{gamma, hyp2f1};
use crate::{Error, Result};

const ONE_ARM: f64 = 5.0 / 48.0;

/// `K_F = 2^7 π^5 / (3^{3/2} Γ(1/3)^9)`.
pub fn k_f() -> f64 {
    128.0 * PI.powi(5) / (3f64.powf(1.5) * gamma(1.0 / 3.0).powi(9))
}

/// `K_F` through logarithms; agrees with [`k_f`] to rounding.
pub fn k_f_via_logs() -> f64 {
    (7.0 * 2f64.ln() + 5.0 * PI.ln() - 1.5 * 3f64.ln() - 9.0 * gamma(1.0 / 3.0).ln()).exp()
}

/// `H(x) = ₂F₁(−1/2, −1/3; 7/6; e^{−2πx})`, `x ≥ 0`.
pub fn h_fn(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("H(x) needs x ≥ 0, got {x}")));
    }
    hyp2f1(-0.5, -1.0 / 3.0, 7.0 / 6.0, (-2.0 * PI * x).exp())
}

fn h0() -> f64 {
    h_fn(0.0).expect("H(0)")
}

/// `K1 = 18 π^{5/48} / (5π·2^{5/48}) · H(0)^{−1}`.
pub fn k1() -> f64 {
    18.0 * PI.powf(ONE_ARM) / (5.0 * PI * 2f64.powf(ONE_ARM)) / h0()
}

/// `K2 = 18/(5π)`.
pub fn k2() -> f64 {
    18.0 / (5.0 * PI)
}

/// Geometry shared by the interval predictions.
#[derive(Clone, Copy, Debug)]
pub struct IntervalGeometry {
    /// `w̃ = Π(w)`.
    pub wt: Complex64,
    /// `|Π′(w)|`.
    pub dpi: f64,
    pub strip: StripPoint,
}

pub fn interval_geometry(u1: f64, s: f64, u2: f64, w: Complex64) -> Result<IntervalGeometry> {
    if !(w.im > 0.0) {
        return Err(Error::Domain(format!("w = {w} must lie in the open upper half-plane")));
    }
    let pi = mobius_to_pm1(u1, s, u2)?;
    let wt = pi.apply(w);
    Ok(IntervalGeometry { wt, dpi: pi.derivative(w).norm(), strip: strip_of_disk_coordinate(wt) })
}

impl IntervalGeometry {
    /// `|Ψ′(w)| = |Π′(w)| / (π √|1 − w̃²|)`.
    pub fn strip_derivative(&self) -> f64 {
        self.dpi / (PI * (1.0 - self.wt * self.wt).norm().sqrt())
    }

    /// `|φ′(w)| = |Π′(w)| / (2 Im w̃)`.
    pub fn disk_derivative(&self) -> f64 {
        self.dpi / (2.0 * self.wt.im)
    }

    /// `sin(πω/2)` through `w̃`.
    pub fn sin_half_omega(&self) -> f64 {
        let m2 = self.wt.norm_sqr();
        (0.5 - (m2 - 1.0) / (2.0 * (1.0 - self.wt * self.wt).norm())).max(0.0).sqrt()
    }
}

fn psi_of_x(x: f64) -> Result<f64> {
    Ok((PI * x / 3.0).exp() * h_fn(x)? / h0())
}

/// `ψ(u1, s, u2, w) = e^{πx/3} H(x)/H(0)` with `x = Re Ψ(w)`.
pub fn psi_factor(u1: f64, s: f64, u2: f64, w: Complex64) -> Result<f64> {
    if !(u2 > u1 + s) {
        return Err(Error::Domain(format!("psi_factor needs u2 > u1 + s, got u1={u1}, s={s}, u2={u2}")));
    }
    psi_of_x(interval_geometry(u1, s, u2, w)?.strip.x)
}

/// `G(x,y) = e^{πx/3} H(x) sinh(πx)^{−1/3} (sinh²·sin² / (sinh² + sin²))^{11/96}`.
pub fn g_function(p: StripPoint) -> Result<f64> {
    if !(p.x > 0.0) {
        return Err(Error::Domain(format!("G(x, y) needs x > 0, got {}", p.x)));
    }
    if !(p.y > 0.0 && p.y < 1.0) {
        return Err(Error::Domain(format!("G(x, y) needs 0 < y < 1, got {}", p.y)));
    }
    let sh2 = (PI * p.x).sinh().powi(2);
    let sn2 = (PI * p.y).sin().powi(2);
    Ok((PI * p.x / 3.0).exp() * h_fn(p.x)? * (PI * p.x).sinh().powf(-1.0 / 3.0) * (sh2 * sn2 / (sh2 + sn2)).powf(11.0 / 96.0))
}

/// `s3^{5/48}·K1·|Ψ′(w)|^{5/48}·G(Re Ψ(w), Im Ψ(w))`.
pub fn bi_prediction(u1: f64, s: f64, u2: f64, w: Complex64, s3: f64) -> Result<f64> {
    if !(s3 > 0.0) {
        return Err(Error::Domain(format!("s3 = {s3} must be positive")));
    }
    let g = interval_geometry(u1, s, u2, w)?;
    Ok(s3.powf(ONE_ARM) * k1() * g.strip_derivative().powf(ONE_ARM) * g_function(g.strip)?)
}

/// `s3^{5/48}·K2·|φ′(w)|^{5/48}·sin(πω/2)^{1/3}`.
pub fn lemma22_prediction(u1: f64, s: f64, w: Complex64, s3: f64) -> Result<f64> {
    if !(s3 > 0.0) {
        return Err(Error::Domain(format!("s3 = {s3} must be positive")));
    }
    let omega = harmonic_measure(u1, s, w)?;
    let dphi = 1.0 / (2.0 * w.im);
    Ok(s3.powf(ONE_ARM) * k2() * dphi.powf(ONE_ARM) * (PI * omega / 2.0).sin().powf(1.0 / 3.0))
}

fn cardy_constant() -> f64 {
    // Fixed by P(1/2) = 1/2.
    let h = hyp2f1(1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 0.5).expect("in range");
    0.5 / (0.5f64.powf(1.0 / 3.0) * h)
}

/// Crossing probability between `[x1, x2]` and `[x3, x4]` on the boundary.
pub fn cardy_crossing(x1: f64, x2: f64, x3: f64, x4: f64) -> Result<f64> {
    if !(x1 < x2 && x2 < x3 && x3 < x4) || ![x1, x4].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain(format!("cardy_crossing needs x1 < x2 < x3 < x4, got {x1}, {x2}, {x3}, {x4}")));
    }
    let lambda = (x2 - x1) * (x4 - x3) / ((x3 - x1) * (x4 - x2));
    cardy_of_cross_ratio(lambda)
}

pub fn cardy_of_cross_ratio(lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("cross-ratio {lambda} outside [0, 1]")));
    }
    Ok(cardy_constant() * lambda.powf(1.0 / 3.0) * hyp2f1(1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, lambda)?)
}

/// Residuals of the strip-map identity chain at `w̃`; each entry should be 0.
pub fn identity_residuals(wt: Complex64) -> [f64; 5] {
    let st = strip_of_disk_coordinate(wt);
    let sh2 = (PI * st.x).sinh().powi(2);
    let sn2 = (PI * st.y).sin().powi(2);
    let one_minus = (1.0 - wt * wt).norm();
    let m2 = wt.norm_sqr();
    let re_asin = wt.asin().re;
    let omega = harmonic_measure(-1.0, 2.0, wt).unwrap_or(f64::NAN);
    let sin_half = (0.5 - (m2 - 1.0) / (2.0 * one_minus)).max(0.0).sqrt();
    let last_factor = re_asin.cos() / (one_minus.sqrt() * (PI * omega / 2.0).sin());
    let scale = one_minus.max(1.0);
    [
        (sh2 * sn2 - wt.im * wt.im) / (wt.im * wt.im).max(1.0),
        (sh2 + sn2 - one_minus) / scale,
        (2.0 * re_asin.cos().powi(2) - (one_minus + 1.0 - m2)) / scale,
        (PI * omega / 2.0).sin() - sin_half,
        last_factor - 1.0,
    ]
}
