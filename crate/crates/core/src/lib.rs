//! Joint transmit waveform and receive filter design for a MIMO
//! dual-function radar-communication base station.
//!
//! The radar side runs space-time adaptive processing against
//! signal-dependent clutter; the communication side carries PSK symbols to
//! several single-antenna users through symbol-level precoding with
//! constructive interference. The waveform is chosen to maximize the radar
//! output SINR of the MVDR receive filter under the communication
//! constraints and one of three waveform constraints (constant modulus,
//! PAPR, constant modulus plus similarity to a reference).
//!
//! Module map:
//!
//! * [`model`] steering vectors, shift/permutation matrices, and the linear
//!   operators mapping the waveform to target and clutter returns.
//! * [`clutter`] clutter scenes, inner clutter covariances, rank factors.
//! * [`comm`] channels, PSK symbols, constructive-interference constraints,
//!   zero-forcing equalities and Monte Carlo symbol error rates.
//! * [`radar`] MVDR filter, output SINR, concentrated objective and the
//!   space-time cross-ambiguity function.
//! * [`surrogate`] the majorizer of the concentrated objective.
//! * [`convex`] interior-point solver for the convex waveform subproblems.
//! * [`designer`] the MM / nonlinear-equality ADMM design loops.
//! * [`experiments`] scenario configuration, runs, sweeps and exports.

pub mod clutter;
pub mod comm;
pub mod convex;
mod cser;
pub mod designer;
mod error;
pub mod experiments;
pub mod model;
pub mod radar;
pub mod surrogate;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex column vector.
pub type CVec = DVector<Complex64>;
/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(value)`.
pub fn linear_to_db(value: f64) -> f64 {
    10.0 * value.log10()
}
