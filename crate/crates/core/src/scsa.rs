//! Semi-classical signal analysis.
//!
//! A signal `y` is used as the potential of the discretized Schrodinger
//! operator `A_h = -h^2 D2 - diag(y)`. Its negative eigenvalues `-kappa_n^2`
//! and eigenvectors `psi_n` (scaled so that `dx sum psi^2 = 1`) give the
//! estimate `y_h = 4 h sum_n kappa_n psi_n^2`.

use serde::Serialize;

use crate::diff::{D2Matrix, OperatorSpectrum};
use crate::eigen;
use crate::error::{Result, ScsaError};
use crate::matrix::Matrix;
use crate::signal::{Grid, SampledSignal};

/// `-h^2 D2 - diag(potential)`.
#[derive(Debug, Clone)]
pub struct SchrodingerMatrix<'a> {
    h: f64,
    d2: &'a D2Matrix,
    potential: &'a SampledSignal,
    entries: Matrix,
}

impl<'a> SchrodingerMatrix<'a> {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn d2(&self) -> &'a D2Matrix {
        self.d2
    }

    pub fn potential(&self) -> &'a SampledSignal {
        self.potential
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// Negativity gate for eigenvalues, `1e3 eps ||A||_inf`.
    pub fn tol_neg(&self) -> f64 {
        eigen::default_tol_neg(&self.entries)
    }
}

pub fn assemble<'a>(
    h: f64,
    d2: &'a D2Matrix,
    potential: &'a SampledSignal,
) -> Result<SchrodingerMatrix<'a>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(ScsaError::domain(format!("h must be positive, got {h}")));
    }
    if d2.dim() != potential.len() {
        return Err(ScsaError::domain(format!(
            "D2 is {}x{} but the potential has {} samples",
            d2.dim(),
            d2.dim(),
            potential.len()
        )));
    }
    let h2 = h * h;
    let y = potential.values();
    let entries = Matrix::from_fn(d2.dim(), |i, j| {
        let v = -h2 * d2.entries()[(i, j)];
        if i == j {
            v - y[i]
        } else {
            v
        }
    });
    Ok(SchrodingerMatrix {
        h,
        d2,
        potential,
        entries,
    })
}

/// Bound states of one Schrodinger matrix.
#[derive(Debug, Clone)]
pub struct NegativeSpectrum {
    h: f64,
    grid: Grid,
    tol_neg: f64,
    kappas: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

impl NegativeSpectrum {
    #[cfg(test)]
    pub(crate) fn from_parts(
        h: f64,
        grid: Grid,
        kappas: Vec<f64>,
        eigenvectors: Vec<Vec<f64>>,
    ) -> Self {
        NegativeSpectrum {
            h,
            grid,
            tol_neg: 0.0,
            kappas,
            eigenvectors,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    /// Negativity gate used when the spectrum was extracted.
    pub fn tol_neg(&self) -> f64 {
        self.tol_neg
    }

    /// Number of bound states, `N_h`.
    pub fn count(&self) -> usize {
        self.kappas.len()
    }

    /// Descending.
    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    /// Eigenvectors paired with [`kappas`](Self::kappas), scaled so `dx sum psi^2 = 1`.
    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    /// `dx sum psi^2 - 1` per mode.
    pub fn normalization_residuals(&self) -> Vec<f64> {
        let dx = self.dx();
        self.eigenvectors
            .iter()
            .map(|v| dx * v.iter().map(|x| x * x).sum::<f64>() - 1.0)
            .collect()
    }

    /// Largest `|dx sum psi^2 - 1|`, 0 without bound states.
    pub fn max_normalization_residual(&self) -> f64 {
        self.normalization_residuals()
            .iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            h: self.h,
            n_h: self.count(),
            kappas: self.kappas.clone(),
            normalization_residuals: self.normalization_residuals(),
        }
    }
}

/// JSON export of a [`NegativeSpectrum`].
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub h: f64,
    #[serde(rename = "N_h")]
    pub n_h: usize,
    pub kappas: Vec<f64>,
    pub normalization_residuals: Vec<f64>,
}

/// Eigenvalues below `-tol_neg` become `kappa = sqrt(-lambda)`, largest first.
pub fn negative_spectrum(a: &SchrodingerMatrix<'_>) -> Result<NegativeSpectrum> {
    let tol = a.tol_neg();
    let partial = eigen::eigenpairs_below(&a.entries, -tol)?;
    let grid = *a.potential.grid();
    let scale = 1.0 / grid.dx().sqrt();
    let kappas = partial.eigenvalues[..partial.vectors.len()]
        .iter()
        .map(|&l| (-l).max(0.0).sqrt())
        .collect();
    let eigenvectors = partial
        .vectors
        .into_iter()
        .map(|v| v.into_iter().map(|x| x * scale).collect())
        .collect();
    Ok(NegativeSpectrum {
        h: a.h,
        grid,
        tol_neg: tol,
        kappas,
        eigenvectors,
    })
}

/// `4 h sum_n kappa_n psi_n^2`.
pub fn reconstruct(spec: &NegativeSpectrum) -> SampledSignal {
    let mut values = vec![0.0; spec.grid.len()];
    for (kappa, psi) in spec.kappas.iter().zip(&spec.eigenvectors) {
        let w = 4.0 * spec.h * kappa;
        for (out, p) in values.iter_mut().zip(psi) {
            *out += w * p * p;
        }
    }
    SampledSignal::new(spec.grid, values).expect("reconstruction of finite modes is finite")
}

/// Assemble, solve and reconstruct in one go.
pub fn estimate(
    potential: &SampledSignal,
    d2: &D2Matrix,
    h: f64,
) -> Result<(NegativeSpectrum, SampledSignal)> {
    let a = assemble(h, d2, potential)?;
    let spec = negative_spectrum(&a)?;
    let y = reconstruct(&spec);
    Ok((spec, y))
}

/// Thresholds on `h` that pin the number of bound states.
///
/// For `h < h_all` every sample with a positive value contributes a bound
/// state (`N_h = M - n_zero`); for `h > h_none` there are none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundThresholds {
    /// Samples with value `<= tol_zero`.
    pub n_zero: usize,
    /// Smallest value above `tol_zero`; `None` when there is none.
    pub y_min_pos: Option<f64>,
    pub y_max: f64,
    /// `sqrt(y_min_pos / d1)`; `None` when no sample is positive.
    pub h_all: Option<f64>,
    /// `sqrt(y_max / d_M)`, infinite when `-D2` is only semidefinite or no
    /// sample is positive.
    #[serde(serialize_with = "serialize_extended")]
    pub h_none: f64,
}

impl BoundThresholds {
    /// Number of bound states guaranteed for `h < h_all`.
    pub fn full_count(&self, m: usize) -> usize {
        m - self.n_zero
    }
}

fn serialize_extended<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

pub fn count_thresholds(
    potential: &SampledSignal,
    spectrum: &OperatorSpectrum,
    tol_zero: f64,
) -> Result<BoundThresholds> {
    if !(spectrum.d1 > 0.0) {
        return Err(ScsaError::domain("count thresholds need d1 > 0"));
    }
    if !(tol_zero >= 0.0) {
        return Err(ScsaError::domain("tol_zero must be >= 0"));
    }
    let y = potential.values();
    let n_zero = y.iter().filter(|&&v| v <= tol_zero).count();
    let y_min_pos = y
        .iter()
        .copied()
        .filter(|&v| v > tol_zero)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h_all = y_min_pos.map(|v| (v / spectrum.d1).sqrt());
    let h_none = if !spectrum.is_definite() || y_max <= tol_zero {
        f64::INFINITY
    } else {
        (y_max / spectrum.d_m).sqrt()
    };
    Ok(BoundThresholds {
        n_zero,
        y_min_pos,
        y_max,
        h_all,
        h_none,
    })
}

/// `N_h` along an increasing grid of `h`, by full eigenvalue solves.
///
/// A rise of `N_h` between consecutive grid points is logged, not treated as
/// an error.
pub fn nh_profile(
    potential: &SampledSignal,
    d2: &D2Matrix,
    h_grid: &[f64],
) -> Result<Vec<(f64, usize)>> {
    check_h_grid(h_grid)?;
    let mut out = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let a = assemble(h, d2, potential)?;
        let ev = eigen::symmetric_eigenvalues(&a.entries)?;
        out.push((h, eigen::negative_count(&ev, a.tol_neg())));
    }
    for pair in out.windows(2) {
        if pair[1].1 > pair[0].1 {
            log::warn!(
                "N_h rises from {} at h = {} to {} at h = {}",
                pair[0].1,
                pair[0].0,
                pair[1].1,
                pair[1].0
            );
        }
    }
    Ok(out)
}

pub(crate) fn check_h_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.is_empty() {
        return Err(ScsaError::domain("h grid is empty"));
    }
    if h_grid.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
        return Err(ScsaError::domain(
            "h grid values must be positive and finite",
        ));
    }
    if h_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScsaError::domain("h grid must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{central_fd_d2, central_fd_eigenvalues, extreme_spectrum, fourier_d2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant(m: usize, dx: f64, c: f64) -> SampledSignal {
        let grid = Grid::new(0.0, dx * (m - 1) as f64, m).unwrap();
        SampledSignal::new(grid, vec![c; m]).unwrap()
    }

    #[test]
    fn assemble_entries_and_errors() {
        let d2 = central_fd_d2(3, 1.0).unwrap();
        let y = constant(3, 1.0, 0.5);
        let a = assemble(2.0, &d2, &y).unwrap();
        assert_eq!(a.entries()[(0, 0)], -4.0 * -2.0 - 0.5);
        assert_eq!(a.entries()[(0, 1)], -4.0);
        assert!(assemble(0.0, &d2, &y).is_err());
        assert!(assemble(-1.0, &d2, &y).is_err());
        let wrong = constant(4, 1.0, 0.5);
        assert!(assemble(1.0, &d2, &wrong).is_err());
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let (m, dx, c, h) = (12, 0.4, 3.0, 0.3);
        let d2 = central_fd_d2(m, dx).unwrap();
        let y = constant(m, dx, c);
        let a = assemble(h, &d2, &y).unwrap();
        let ev = eigen::symmetric_eigenvalues(a.entries()).unwrap();
        for (got, mu) in ev.iter().zip(central_fd_eigenvalues(m, dx)) {
            assert!((got - (h * h * mu - c)).abs() < 1e-12);
        }
        let spec = negative_spectrum(&a).unwrap();
        let want: Vec<f64> = central_fd_eigenvalues(m, dx)
            .into_iter()
            .filter(|mu| h * h * mu < c)
            .map(|mu| c - h * h * mu)
            .collect();
        assert_eq!(spec.count(), want.len());
        for (k, w) in spec.kappas().iter().zip(&want) {
            assert!((k * k - w).abs() <= 1e-9 * w);
        }
    }

    #[test]
    fn three_point_single_bound_state() {
        // A_h eigenvalues {1 - sqrt2, 1, 1 + sqrt2}: one bound state
        let d2 = central_fd_d2(3, 1.0).unwrap();
        let y = constant(3, 1.0, 1.0);
        let spec = negative_spectrum(&assemble(1.0, &d2, &y).unwrap()).unwrap();
        assert_eq!(spec.count(), 1);
        assert!((spec.kappas()[0] - (2f64.sqrt() - 1.0).sqrt()).abs() < 1e-13);
        assert!(spec.normalization_residuals()[0].abs() < 1e-10);
    }

    #[test]
    fn zero_potential_has_no_bound_states() {
        for d2 in [
            fourier_d2(40, 0.1).unwrap(),
            central_fd_d2(40, 0.1).unwrap(),
        ] {
            let y = constant(40, 0.1, 0.0);
            let spec = negative_spectrum(&assemble(0.7, &d2, &y).unwrap()).unwrap();
            assert_eq!(spec.count(), 0);
            assert!(reconstruct(&spec).values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn large_h_empties_the_spectrum() {
        let d2 = central_fd_d2(3, 1.0).unwrap();
        let y = constant(3, 1.0, 1.0);
        let t = count_thresholds(&y, &extreme_spectrum(&d2).unwrap(), 0.0).unwrap();
        assert!((t.h_none - (1.0 / (2.0 - 2f64.sqrt())).sqrt()).abs() < 1e-12);
        assert!((t.h_none - 1.3066).abs() < 1e-4);
        let spec = negative_spectrum(&assemble(1.4, &d2, &y).unwrap()).unwrap();
        assert_eq!(spec.count(), 0);
    }

    #[test]
    fn reconstruction_ignores_eigenvector_sign() {
        let grid = Grid::new(0.0, 6.0, 61).unwrap();
        let y = crate::signal::sech2_signal(&grid, 3.0);
        let d2 = fourier_d2(61, grid.dx()).unwrap();
        let spec = negative_spectrum(&assemble(0.3, &d2, &y).unwrap()).unwrap();
        assert!(spec.count() >= 2);
        let mut flipped = spec.clone();
        for v in flipped.eigenvectors[0].iter_mut() {
            *v = -*v;
        }
        assert_eq!(reconstruct(&spec), reconstruct(&flipped));
        assert!(reconstruct(&spec).values().iter().all(|&v| v >= 0.0));
        for r in spec.normalization_residuals() {
            assert!(r.abs() < 1e-10);
        }
    }

    #[test]
    fn thresholds_for_zero_potential() {
        let d2 = central_fd_d2(10, 0.1).unwrap();
        let y = constant(10, 0.1, 0.0);
        let t = count_thresholds(&y, &extreme_spectrum(&d2).unwrap(), 0.0).unwrap();
        assert_eq!(t.n_zero, 10);
        assert_eq!(t.h_all, None);
        assert_eq!(t.h_none, f64::INFINITY);
        for h in [0.01, 0.1, 1.0] {
            let s = negative_spectrum(&assemble(h, &d2, &y).unwrap()).unwrap();
            assert_eq!(s.count(), 0);
        }
    }

    #[test]
    fn fourier_thresholds_have_no_upper_cutoff() {
        let d2 = fourier_d2(30, 0.1).unwrap();
        let y = constant(30, 0.1, 1.0);
        let t = count_thresholds(&y, &extreme_spectrum(&d2).unwrap(), 0.0).unwrap();
        assert!(t.h_none.is_infinite());
        assert!(t.h_all.unwrap() > 0.0);
    }

    #[test]
    fn positive_potential_saturates_below_h_all() {
        // brute force: halfway below h_all every sample yields a bound state
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let m = rng.random_range(2..=50);
            let dx = rng.random_range(0.05..1.0);
            let grid = Grid::new(0.0, dx * (m - 1) as f64, m).unwrap();
            let y = SampledSignal::new(grid, (0..m).map(|_| rng.random_range(0.05..2.0)).collect())
                .unwrap();
            let d2 = central_fd_d2(m, dx).unwrap();
            let t = count_thresholds(&y, &extreme_spectrum(&d2).unwrap(), 0.0).unwrap();
            assert_eq!(t.n_zero, 0);
            let h = t.h_all.unwrap() / 2.0;
            let spec = negative_spectrum(&assemble(h, &d2, &y).unwrap()).unwrap();
            assert_eq!(spec.count(), m);
            assert!(t.h_all.unwrap() <= t.h_none);
        }
    }

    #[test]
    fn profile_is_non_increasing_and_validates_grid() {
        let grid = Grid::new(0.0, 8.0, 81).unwrap();
        let y = crate::signal::sech2_signal(&grid, 4.0);
        let d2 = central_fd_d2(81, grid.dx()).unwrap();
        let t = count_thresholds(&y, &extreme_spectrum(&d2).unwrap(), 0.0).unwrap();
        let hs = [0.1, 0.2, 0.5, 1.0, 2.0 * t.h_none, 3.0 * t.h_none];
        let p = nh_profile(&y, &d2, &hs).unwrap();
        assert!(p.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(p[4].1, 0);
        assert_eq!(p[5].1, 0);
        assert!(nh_profile(&y, &d2, &[0.2, 0.1]).is_err());
        assert!(nh_profile(&y, &d2, &[0.0, 0.1]).is_err());
        assert!(nh_profile(&y, &d2, &[]).is_err());
    }

    #[test]
    fn spectrum_report_shape() {
        let d2 = central_fd_d2(3, 1.0).unwrap();
        let y = constant(3, 1.0, 1.0);
        let spec = negative_spectrum(&assemble(1.0, &d2, &y).unwrap()).unwrap();
        let v = serde_json::to_value(spec.report()).unwrap();
        assert_eq!(v["N_h"], 1);
        assert_eq!(v["kappas"].as_array().unwrap().len(), 1);
        assert_eq!(v["normalization_residuals"].as_array().unwrap().len(), 1);
    }
}
