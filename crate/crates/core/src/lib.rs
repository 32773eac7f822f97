//! Numerical workbench for coupled-mode (CME) wavepackets in the 1D periodic
//! nonlinear Schrödinger equation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod cli;
pub mod cme;
pub mod config;
pub mod error;
pub mod harness;
pub mod pnls;
pub mod potentials;
pub mod quadrature;
pub mod soliton;

pub use error::{Error, Result};

/// Float formatting used by every CSV writer: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
