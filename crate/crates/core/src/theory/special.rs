//! Gamma and Gauss hypergeometric functions on the real line.

use std::f64::consts::PI;

use crate::{Error, Result};

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Γ(x) for real `x`; NaN at the poles `0, −1, −2, …`.
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x == x.round() && x <= 171.0 {
        return (1..x as u32).map(f64::from).product();
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Γ(x) for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_fn needs x > 0, got {x}")));
    }
    Ok(gamma(x))
}

/// 1/Γ(x), zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

const MAX_TERMS: usize = 50_000_000;

/// Plain power series of ₂F₁, stopping once `|term| < 1e-16·|sum|`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() < 1e-16 * sum.abs() {
            break;
        }
    }
    sum
}

/// Gauss sum ₂F₁(a,b;c;1) = Γ(c)Γ(c−a−b)/(Γ(c−a)Γ(c−b)), for `c − a − b > 0`.
pub fn gauss_sum(a: f64, b: f64, c: f64) -> f64 {
    gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b)
}

/// ₂F₁(a, b; c; z) for `z ∈ [0, 1]`.
///
/// Uses the series for `z ≤ 1/2` (and whenever `c − a − b` is an integer, where
/// the connection formula degenerates), the `1 − z` connection formula above
/// 1/2, and the Gauss sum at `z = 1`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!("hyp2f1: c = {c} is a nonpositive integer")));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("hyp2f1: z = {z} outside [0, 1]")));
    }
    let d = c - a - b;
    if z == 1.0 {
        if !(d > 0.0) {
            return Err(Error::Domain(format!("hyp2f1 diverges at z = 1 when c − a − b = {d} ≤ 0")));
        }
        return Ok(gauss_sum(a, b, c));
    }
    if z <= 0.5 || d == d.round() {
        return Ok(hyp2f1_series(a, b, c, z));
    }
    let y = 1.0 - z;
    let t1 = gamma(c) * gamma(d) * rgamma(c - a) * rgamma(c - b);
    let t2 = gamma(c) * gamma(-d) * rgamma(a) * rgamma(b);
    let f1 = if t1 == 0.0 { 0.0 } else { hyp2f1_series(a, b, 1.0 - d, y) };
    let f2 = if t2 == 0.0 { 0.0 } else { hyp2f1_series(c - a, c - b, d + 1.0, y) };
    Ok(t1 * f1 + y.powf(d) * t2 * f2)
}
