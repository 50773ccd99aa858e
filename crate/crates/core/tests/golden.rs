//! Theory engine against values produced by `scripts/golden_values.py`
//! (mpmath, 50 digits).

#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use perclab::theory::*;

fn close(got: f64, want: f64, rel: f64) {
    assert!(((got - want) / want).abs() < rel, "got {got:.17e}, want {want:.17e}");
}

#[test]
fn gamma_values() {
    close(gamma(1.0 / 3.0), 2.6789385347077476337, 1e-13);
    close(gamma(7.0 / 6.0), 0.92771933363003920071, 1e-13);
    close(gamma(2.5), 1.3293403881791370205, 1e-13);
}

#[test]
fn constants() {
    close(k_f(), 1.0607491861019557907, 1e-11);
    close(k1(), 1.0357986672300128648, 1e-11);
    close(k2(), 1.1459155902616464175, 1e-11);
}

#[test]
fn hypergeometric_values() {
    close(h_fn(0.0).unwrap(), 1.1595952669639283658, 1e-13);
    close(h_fn(1.0).unwrap(), 1.0002668158743915833, 1e-13);
    close(h_fn(0.25).unwrap(), 1.0302003523294562937, 1e-13);
    close(hyp2f1(1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 0.3).unwrap(), 1.0588427864528826431, 1e-13);
    close(hyp2f1(1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 0.9).unwrap(), 1.3406163291240483309, 1e-12);
    close(hyp2f1(0.5, 0.25, 1.5, 0.75).unwrap(), 1.0946853467439328798, 1e-12);
}

#[test]
fn predictions() {
    let w = Complex64::new(1.0, 1.0);
    close(cardy_crossing(0.0, 1.0, 2.0, 3.0).unwrap(), 0.37354879133423045443, 1e-12);
    close(cardy_crossing(0.0, 1.0, 1.5, 2.5).unwrap(), 0.4735132265570080633, 1e-12);
    close(psi_factor(0.0, 1.0, 3.0, w).unwrap(), 1.484386432582098304, 1e-12);
    let p = strip_map(0.0, 1.0, 3.0, w).unwrap();
    close(p.x, 0.51316768265648531713, 1e-12);
    close(p.y, 0.52444785861147669281, 1e-12);
    close(bi_prediction(0.0, 1.0, 3.0, w, 0.1).unwrap(), 0.90390377452546789369, 1e-12);
    close(lemma22_prediction(0.0, 1.0, w, 0.1).unwrap(), 0.60894101069970192686, 1e-12);
}
