#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Laboratory for factorization formulas of critical site percolation on the
//! triangular lattice in the upper half-plane.
//!
//! The crate is split along the natural seams of the problem:
//!
//! * [`lattice`] — the η-mesh triangular lattice truncated to a square window.
//! * [`percolation`] — counter-based sampling, cluster labeling and exact
//!   enumeration over small supports.
//! * [`events`] — connection events, the interval/radius event family and
//!   open (semi-)circuit detection.
//! * [`confradius`] — conformal radius bracketing and a calibrated random-walk
//!   estimator.
//! * [`theory`] — special functions, conformal maps and predicted limits.
//! * [`experiments`] — estimation plans, ratio statistics and the headline
//!   comparisons.
//! * [`cli`] — the `perclab` command line front end.

pub mod cli;
pub mod confradius;
pub mod error;
pub mod fsutil;
pub mod events;
pub mod experiments;
pub mod lattice;
pub mod percolation;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
