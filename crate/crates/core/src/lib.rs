//! Semi-classical signal analysis (SCSA).
//!
//! A sampled signal `y` is treated as the potential of the discretized
//! Schrödinger operator `-h^2 D2 - diag(y)`. Its negative eigenvalues
//! `-kappa^2` and normalized eigenvectors `psi` give back the signal as
//! `y_h = 4h sum kappa psi^2`, and smaller `h` uses more bound states.
//!
//! Start at [`scsa::estimate`]; [`hselect`] picks `h` for noisy data and
//! [`noise`] bounds the error the noise causes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diff;
pub mod eigen;
pub mod error;
pub mod hselect;
pub mod io;
pub mod matrix;
pub mod noise;
pub mod scsa;
pub mod signal;

pub use error::{Result, ScsaError};
pub use matrix::Matrix;
