//! Second-order differentiation matrices.
//!
//! Two schemes are available:
//!
//! * [`DiffScheme::FourierPseudospectral`]: the dense periodic pseudo-spectral
//!   matrix. It treats the samples as one period of length `M dx`, so the last
//!   sample couples to the first (wrap-around). `-D2` is only positive
//!   *semi*definite: the constant vector lies in its null space.
//! * [`DiffScheme::CentralFdDirichlet`]: the three-point stencil with zero
//!   boundary values; `-D2` is positive definite with a closed-form spectrum.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigen::{self, Tridiagonal};
use crate::error::{Result, ScsaError};
use crate::matrix::Matrix;

/// Largest dimension assembled densely unless a different cap is passed.
pub const DEFAULT_MAX_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    FourierPseudospectral,
    CentralFdDirichlet,
}

impl fmt::Display for DiffScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiffScheme::FourierPseudospectral => "fourier",
            DiffScheme::CentralFdDirichlet => "fd",
        })
    }
}

impl FromStr for DiffScheme {
    type Err = ScsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" | "fourier_pseudospectral" => Ok(DiffScheme::FourierPseudospectral),
            "fd" | "central_fd_dirichlet" => Ok(DiffScheme::CentralFdDirichlet),
            other => Err(ScsaError::domain(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Symmetric second-order differentiation matrix on a uniform grid.
#[derive(Debug, Clone)]
pub struct D2Matrix {
    scheme: DiffScheme,
    dx: f64,
    entries: Matrix,
}

impl D2Matrix {
    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// Tridiagonal form of the finite-difference matrix; `None` for the dense scheme.
    pub fn tridiagonal(&self) -> Option<Tridiagonal> {
        match self.scheme {
            DiffScheme::CentralFdDirichlet => {
                let n = self.dim();
                Some(Tridiagonal {
                    diag: (0..n).map(|i| self.entries[(i, i)]).collect(),
                    off: (0..n.saturating_sub(1))
                        .map(|i| self.entries[(i, i + 1)])
                        .collect(),
                })
            }
            DiffScheme::FourierPseudospectral => None,
        }
    }
}

fn check_args(m: usize, dx: f64, max_dim: usize) -> Result<()> {
    if m < 2 {
        return Err(ScsaError::domain(format!("D2 needs M >= 2, got {m}")));
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(ScsaError::domain(format!("D2 needs dx > 0, got {dx}")));
    }
    if m > max_dim {
        return Err(ScsaError::domain(format!(
            "M = {m} exceeds the dense assembly cap of {max_dim}"
        )));
    }
    Ok(())
}

/// Builds the upper triangle from `f(i, j)` and mirrors it.
fn symmetric_from(m: usize, f: impl Fn(usize, usize) -> f64) -> Matrix {
    let mut out = Matrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let v = f(i, j);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Fourier pseudo-spectral `D2` with spacing `dx`.
///
/// With `t = 2 pi / M` the entries are `(t / dx)^2` times
///
/// * even M: `-pi^2/(3 t^2) - 1/6` on the diagonal, `-(-1)^(k-j) / (2 sin^2((k-j) t / 2))` off it;
/// * odd M: `-pi^2/(3 t^2) + 1/12` on the diagonal, `-(-1)^(k-j) cot((k-j) t/2) / (2 sin((k-j) t/2))` off it.
pub fn fourier_d2(m: usize, dx: f64) -> Result<D2Matrix> {
    fourier_d2_capped(m, dx, DEFAULT_MAX_DIM)
}

pub fn fourier_d2_capped(m: usize, dx: f64, max_dim: usize) -> Result<D2Matrix> {
    check_args(m, dx, max_dim)?;
    let step = 2.0 * PI / m as f64;
    let scale = (step / dx).powi(2);
    let even = m.is_multiple_of(2);
    let diag = -PI * PI / (3.0 * step * step) + if even { -1.0 / 6.0 } else { 1.0 / 12.0 };
    let entries = symmetric_from(m, |i, j| {
        if i == j {
            return scale * diag;
        }
        let d = j - i;
        let sign = if d % 2 == 0 { -1.0 } else { 1.0 };
        let half = d as f64 * step / 2.0;
        let s = half.sin();
        let core = if even {
            0.5 / (s * s)
        } else {
            0.5 * half.cos() / (s * s)
        };
        scale * sign * core
    });
    Ok(D2Matrix {
        scheme: DiffScheme::FourierPseudospectral,
        dx,
        entries,
    })
}

/// Three-point central difference `D2` with homogeneous Dirichlet ends.
pub fn central_fd_d2(m: usize, dx: f64) -> Result<D2Matrix> {
    central_fd_d2_capped(m, dx, DEFAULT_MAX_DIM)
}

pub fn central_fd_d2_capped(m: usize, dx: f64, max_dim: usize) -> Result<D2Matrix> {
    check_args(m, dx, max_dim)?;
    let inv = 1.0 / (dx * dx);
    let entries = symmetric_from(m, |i, j| match j - i {
        0 => -2.0 * inv,
        1 => inv,
        _ => 0.0,
    });
    Ok(D2Matrix {
        scheme: DiffScheme::CentralFdDirichlet,
        dx,
        entries,
    })
}

pub fn build_d2(scheme: DiffScheme, m: usize, dx: f64) -> Result<D2Matrix> {
    match scheme {
        DiffScheme::FourierPseudospectral => fourier_d2(m, dx),
        DiffScheme::CentralFdDirichlet => central_fd_d2(m, dx),
    }
}

/// Closed-form eigenvalues of `-D2` for the finite-difference scheme, ascending.
pub fn central_fd_eigenvalues(m: usize, dx: f64) -> Vec<f64> {
    (1..=m)
        .map(|k| {
            let s = (k as f64 * PI / (2.0 * (m + 1) as f64)).sin();
            4.0 * s * s / (dx * dx)
        })
        .collect()
}

/// Extreme eigenvalues of `-D2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorSpectrum {
    /// Largest eigenvalue of `-D2`.
    pub d1: f64,
    /// Smallest eigenvalue of `-D2`.
    pub d_m: f64,
    /// Semidefiniteness tolerance, `1e3 eps ||D2||_inf`.
    pub tol_psd: f64,
}

impl OperatorSpectrum {
    /// `true` when `-D2` is numerically positive definite (`d_M > tol_psd`).
    pub fn is_definite(&self) -> bool {
        self.d_m > self.tol_psd
    }
}

pub fn psd_tolerance(d2: &D2Matrix) -> f64 {
    1e3 * f64::EPSILON * d2.entries.norm_inf()
}

/// Largest and smallest eigenvalue of `-D2`; analytic for the FD scheme.
pub fn extreme_spectrum(d2: &D2Matrix) -> Result<OperatorSpectrum> {
    let tol_psd = psd_tolerance(d2);
    let (d1, d_m) = match d2.scheme {
        DiffScheme::CentralFdDirichlet => {
            let ev = central_fd_eigenvalues(d2.dim(), d2.dx);
            (ev[ev.len() - 1], ev[0])
        }
        DiffScheme::FourierPseudospectral => {
            let neg = Matrix::from_fn(d2.dim(), |i, j| -d2.entries[(i, j)]);
            let ev = eigen::symmetric_eigenvalues(&neg)?;
            (ev[ev.len() - 1], ev[0])
        }
    };
    Ok(OperatorSpectrum { d1, d_m, tol_psd })
}
