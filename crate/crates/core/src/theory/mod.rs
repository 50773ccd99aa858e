//! Closed-form side of the comparisons: special functions, conformal maps and
//! the predicted limits.

mod maps;
mod predictions;
mod special;

pub use maps::{harmonic_measure, mobius_to_pm1, strip_map, strip_of_disk_coordinate, MobiusMap, StripPoint};
pub use predictions::{
    bi_prediction, cardy_crossing, cardy_of_cross_ratio, g_function, h_fn, identity_residuals, interval_geometry, k1,
    k2, k_f, k_f_via_logs, lemma22_prediction, psi_factor, IntervalGeometry,
};
pub use special::{gamma, gamma_fn, gauss_sum, hyp2f1, hyp2f1_series, rgamma};
