//! Conformal maps of the upper half-plane used by the predictions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

/// A point of the half-strip `{0 < Im < 1, Re > 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StripPoint {
    pub x: f64,
    pub y: f64,
}

/// `z ↦ k·(z − m)/(z − u2)` sending `u1, u1+s, u2` to `−1, 1, ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap {
    pub k: f64,
    pub m: f64,
    pub u2: f64,
}

pub fn mobius_to_pm1(u1: f64, s: f64, u2: f64) -> Result<MobiusMap> {
    if !(s > 0.0) || ![u1, s, u2].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain(format!("mobius_to_pm1 needs finite inputs and s > 0, got s = {s}")));
    }
    if u2 >= u1 && u2 <= u1 + s {
        return Err(Error::Domain(format!("u2 = {u2} lies in [u1, u1 + s] = [{u1}, {}]", u1 + s)));
    }
    let k = (2.0 * u1 + s - 2.0 * u2) / s;
    let m = u1 + (u1 - u2) / k;
    Ok(MobiusMap { k, m, u2 })
}

impl MobiusMap {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.k * (z - self.m) / (z - self.u2)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d = z - self.u2;
        self.k * (self.m - self.u2) / (d * d)
    }

    /// `k·(m − u2) > 0` is exactly the condition for mapping H onto itself.
    pub fn preserves_half_plane(&self) -> bool {
        self.k * (self.m - self.u2) > 0.0
    }
}

/// `Ψ̃(z) = (−i/π)·arcsin z + i/2`, principal branch, mapping H onto the strip.
pub fn strip_of_disk_coordinate(wt: Complex64) -> StripPoint {
    let a = wt.asin();
    StripPoint { x: a.im / PI, y: 0.5 - a.re / PI }
}

fn check_upper(w: Complex64) -> Result<()> {
    if !(w.im > 0.0) || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Domain(format!("w = {w} must lie in the open upper half-plane")));
    }
    Ok(())
}

/// `(Re Ψ(w), Im Ψ(w))` for the map taking `{H, u1, u1+s, u2}` to `{S, i, 0, ∞}`.
pub fn strip_map(u1: f64, s: f64, u2: f64, w: Complex64) -> Result<StripPoint> {
    check_upper(w)?;
    let pi = mobius_to_pm1(u1, s, u2)?;
    Ok(strip_of_disk_coordinate(pi.apply(w)))
}

/// Harmonic measure of `(u1, u1+s)` seen from `w`: the subtended angle over π.
pub fn harmonic_measure(u1: f64, s: f64, w: Complex64) -> Result<f64> {
    check_upper(w)?;
    if !(s > 0.0) {
        return Err(Error::Domain(format!("interval length s = {s} must be positive")));
    }
    Ok(((w - (u1 + s)).arg() - (w - u1).arg()) / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterStream, Seed, DOMAIN_AUX};

    fn random_upper(rng: &mut CounterStream) -> Complex64 {
        Complex64::new(8.0 * rng.next_f64() - 4.0, 0.01 + 4.0 * rng.next_f64())
    }

    #[test]
    fn mobius_hits_anchors() {
        let p = mobius_to_pm1(0.0, 1.0, 10.0).unwrap();
        assert!((p.apply(Complex64::new(0.0, 0.0)) + 1.0).norm() < 1e-12);
        assert!((p.apply(Complex64::new(1.0, 0.0)) - 1.0).norm() < 1e-12);
        assert!(p.apply(Complex64::new(10.0 - 1e-9, 0.0)).norm() > 1e6);
        let mid = p.apply(Complex64::new(0.5, 0.0));
        assert!(mid.im.abs() < 1e-15 && mid.re > -1.0 && mid.re < 1.0);
        for (u1, s, u2) in [(0.0, 1.0, 10.0), (0.0, 1.0, -3.0), (2.0, 0.5, 2.6), (-1.0, 2.0, -1.5)] {
            assert!(mobius_to_pm1(u1, s, u2).unwrap().preserves_half_plane());
        }
        assert!(mobius_to_pm1(0.0, 1.0, 0.5).is_err());
        assert!(mobius_to_pm1(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mobius_derivative_matches_finite_differences() {
        let mut rng = CounterStream::new(Seed(1), 0, 0, DOMAIN_AUX);
        let p = mobius_to_pm1(-0.3, 1.2, 2.0).unwrap();
        for _ in 0..100 {
            let w = random_upper(&mut rng);
            // Step scaled to the distance from the pole at u2.
            let h = 1e-5 * (w - 2.0).norm();
            let fd = (p.apply(w + h) - p.apply(w - h)) / (2.0 * h);
            assert!((fd - p.derivative(w)).norm() < 1e-8 * p.derivative(w).norm());
        }
    }

    #[test]
    fn strip_anchors_and_range() {
        let near_u1 = strip_map(0.0, 1.0, 3.0, Complex64::new(1e-9, 1e-9)).unwrap();
        assert!(near_u1.x.abs() < 1e-3 && (near_u1.y - 1.0).abs() < 1e-3);
        let near_u1s = strip_map(0.0, 1.0, 3.0, Complex64::new(1.0 + 1e-9, 1e-9)).unwrap();
        assert!(near_u1s.x.abs() < 1e-3 && near_u1s.y.abs() < 1e-3);
        let mut rng = CounterStream::new(Seed(2), 0, 0, DOMAIN_AUX);
        for _ in 0..1000 {
            let p = strip_map(0.0, 1.0, 3.0, random_upper(&mut rng)).unwrap();
            assert!(p.y > 0.0 && p.y < 1.0 && p.x > 0.0);
        }
        assert!(strip_map(0.0, 1.0, 3.0, Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn harmonic_measure_cases() {
        assert!((harmonic_measure(-1.0, 2.0, Complex64::new(0.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!(harmonic_measure(0.0, 1.0, Complex64::new(0.0, 1e6)).unwrap() < 1e-6);
        let mut rng = CounterStream::new(Seed(3), 0, 0, DOMAIN_AUX);
        for _ in 0..1000 {
            let w = random_upper(&mut rng);
            let om = harmonic_measure(0.0, 1.0, w).unwrap();
            assert!(om > 0.0 && om < 1.0);
            // The interval seen from w̃ = Π(w) subtends the same angle.
            let wt = mobius_to_pm1(0.0, 1.0, 4.0).unwrap().apply(w);
            let om2 = harmonic_measure(-1.0, 2.0, wt).unwrap();
            assert!((om - om2).abs() < 1e-10);
        }
    }
}
