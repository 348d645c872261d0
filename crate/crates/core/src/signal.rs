//! Sampling grids, sampled signals, test-signal generators and noise injection.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScsaError};

/// Uniform sampling lattice `x_j = a + j dx`, `j = 0..m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    b: f64,
    m: usize,
    dx: f64,
}

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(ScsaError::domain("grid endpoints must be finite"));
        }
        if m < 2 {
            return Err(ScsaError::domain(format!(
                "grid needs at least 2 samples, got {m}"
            )));
        }
        if b <= a {
            return Err(ScsaError::domain(format!(
                "grid needs b > a, got [{a}, {b}]"
            )));
        }
        Ok(Grid {
            a,
            b,
            m,
            dx: (b - a) / (m - 1) as f64,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Sample location, zero-based.
    pub fn x(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|j| self.x(j))
    }
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ScsaError::domain(format!(
                "signal has {} samples but grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScsaError::domain(format!("sample {j} is not finite")));
        }
        Ok(SampledSignal { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        SampledSignal {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        SampledSignal::new(grid, grid.points().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub(crate) fn same_grid(&self, other: &SampledSignal) -> Result<()> {
        if self.grid != other.grid {
            return Err(ScsaError::domain("signals live on different grids"));
        }
        Ok(())
    }

    /// Component-wise `self - other`.
    pub fn sub(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SampledSignal {
            grid: self.grid,
            values,
        })
    }
}

/// `sech^2(x - center)` sampled on `grid`.
pub fn sech2_signal(grid: &Grid, center: f64) -> SampledSignal {
    let values = grid
        .points()
        .map(|x| {
            let s = 1.0 / (x - center).cosh();
            s * s
        })
        .collect();
    SampledSignal {
        grid: *grid,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    GaussianIid,
}

/// White noise description. Samples are standard normals from
/// `rand_distr::StandardNormal` (ziggurat) driven by `ChaCha20Rng::seed_from_u64(seed)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn gaussian(mean: f64, variance: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::GaussianIid,
            mean,
            variance,
            seed,
        }
    }
}

/// Result of [`add_noise`].
#[derive(Debug, Clone)]
pub struct NoisyObservation {
    pub noisy: SampledSignal,
    pub noise: SampledSignal,
    /// Standard deviation actually applied to the unit-variance draws.
    pub sigma: f64,
}

/// `n` standard normal draws for `seed`.
pub fn standard_normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Adds white noise to `clean`.
///
/// Without a target SNR the noise is `mean + sqrt(variance) z`. With a target,
/// the model variance is ignored and the unit-variance draws are scaled by the
/// positive `c` for which `mean + c z` hits the requested SNR exactly.
pub fn add_noise(
    clean: &SampledSignal,
    model: &NoiseModel,
    target_snr_db: Option<f64>,
) -> Result<NoisyObservation> {
    if !(model.variance >= 0.0) || !model.mean.is_finite() || !model.variance.is_finite() {
        return Err(ScsaError::domain("noise variance must be finite and >= 0"));
    }
    let z = standard_normals(model.seed, clean.len());
    let sigma = match target_snr_db {
        None => model.variance.sqrt(),
        Some(snr) => {
            if !snr.is_finite() {
                return Err(ScsaError::domain("target SNR must be finite"));
            }
            let power = clean.energy();
            if power == 0.0 {
                return Err(ScsaError::domain(
                    "cannot hit a target SNR for an identically zero signal",
                ));
            }
            let target_energy = power / 10f64.powf(snr / 10.0);
            // c^2 sum z^2 + 2 c mean sum z + m mean^2 = target_energy
            let m = clean.len() as f64;
            let qa: f64 = z.iter().map(|v| v * v).sum();
            let qb = 2.0 * model.mean * z.iter().sum::<f64>();
            let qc = m * model.mean * model.mean - target_energy;
            if qc >= 0.0 {
                return Err(ScsaError::domain(
                    "noise mean alone already exceeds the requested noise power",
                ));
            }
            (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
        }
    };
    let noise: Vec<f64> = z.iter().map(|v| model.mean + sigma * v).collect();
    let noisy = clean
        .values
        .iter()
        .zip(&noise)
        .map(|(c, w)| c + w)
        .collect();
    Ok(NoisyObservation {
        noisy: SampledSignal {
            grid: clean.grid,
            values: noisy,
        },
        noise: SampledSignal {
            grid: clean.grid,
            values: noise,
        },
        sigma,
    })
}

/// `10 log10(sum clean^2 / sum noise^2)`, unweighted.
pub fn snr_db(clean: &SampledSignal, noise: &SampledSignal) -> Result<f64> {
    clean.same_grid(noise)?;
    let noise_energy = noise.energy();
    if noise_energy == 0.0 {
        return Err(ScsaError::domain("SNR undefined for zero noise"));
    }
    Ok(10.0 * (clean.energy() / noise_energy).log10())
}

/// Unweighted Euclidean norm of `a - b`.
pub fn l2_error(a: &SampledSignal, b: &SampledSignal) -> Result<f64> {
    a.same_grid(b)?;
    Ok(l2_distance(&a.values, &b.values))
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_grid() -> Grid {
        Grid::new(0.0, 12.0, 1201).unwrap()
    }

    #[test]
    fn grid_spacing() {
        assert!((reference_grid().dx() - 1e-2).abs() < 1e-15);
        assert_eq!(Grid::new(0.0, 1.0, 2).unwrap().dx(), 1.0);
        assert!((Grid::new(-1.0, 1.0, 201).unwrap().dx() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn grid_reaches_right_endpoint() {
        for &(a, b, m) in &[(0.0, 12.0, 1201), (-3.7, 5.1, 977), (1e3, 1e3 + 1.0, 64)] {
            let g = Grid::new(a, b, m).unwrap();
            assert!((g.x(m - 1) - b).abs() <= 4.0 * f64::EPSILON * b.abs());
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(1.0, 1.0, 10).is_err());
        assert!(Grid::new(2.0, 1.0, 10).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 10).is_err());
    }

    #[test]
    fn signal_rejects_bad_values() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        assert!(SampledSignal::new(g, vec![0.0; 2]).is_err());
        assert!(SampledSignal::new(g, vec![0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn sech2_values() {
        let g = reference_grid();
        let s = sech2_signal(&g, 6.0);
        assert_eq!(s.values()[600], 1.0);
        // 4 / (e^6 + e^-6)^2
        let want = 4.0 / (6f64.exp() + (-6f64).exp()).powi(2);
        assert!((s.values()[0] - want).abs() < 1e-18);
        assert!((s.values()[0] - 2.4578e-5).abs() < 2e-9);
        for t in 1..600 {
            let (l, r) = (s.values()[600 - t], s.values()[600 + t]);
            assert!((l - r).abs() <= 1e-12 * l, "t={t}: {l} vs {r}");
        }
        assert!(s.values().iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn zero_variance_noise_is_identity() {
        let g = reference_grid();
        let clean = sech2_signal(&g, 6.0);
        let obs = add_noise(&clean, &NoiseModel::gaussian(0.0, 0.0, 7), None).unwrap();
        assert_eq!(obs.noisy, clean);
        assert!(obs.noise.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn target_snr_is_hit() {
        let clean = sech2_signal(&reference_grid(), 6.0);
        let obs = add_noise(&clean, &NoiseModel::gaussian(0.0, 1.0, 1), Some(11.0)).unwrap();
        assert!((snr_db(&clean, &obs.noise).unwrap() - 11.0).abs() < 1e-9);
        let obs = add_noise(&clean, &NoiseModel::gaussian(0.01, 1.0, 2), Some(11.0)).unwrap();
        assert!((snr_db(&clean, &obs.noise).unwrap() - 11.0).abs() < 1e-9);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let clean = sech2_signal(&reference_grid(), 6.0);
        let m = NoiseModel::gaussian(0.0, 0.3, 42);
        let a = add_noise(&clean, &m, None).unwrap();
        let b = add_noise(&clean, &m, None).unwrap();
        assert_eq!(a.noise, b.noise);
        let c = add_noise(&clean, &NoiseModel { seed: 43, ..m }, None).unwrap();
        assert_ne!(a.noise, c.noise);
    }

    #[test]
    fn target_snr_on_zero_signal_fails() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let z = SampledSignal::zeros(g);
        assert!(add_noise(&z, &NoiseModel::gaussian(0.0, 1.0, 0), Some(10.0)).is_err());
    }

    #[test]
    fn snr_definition() {
        let g = Grid::new(0.0, 1.0, 2).unwrap();
        let clean = SampledSignal::new(g, vec![10f64.sqrt(), 0.0]).unwrap();
        let noise = SampledSignal::new(g, vec![0.0, 1.0]).unwrap();
        assert!((snr_db(&clean, &noise).unwrap() - 10.0).abs() < 1e-12);
        assert!(snr_db(&noise, &noise).unwrap().abs() < 1e-15);
        let louder = SampledSignal::new(g, vec![10.0 * 10f64.sqrt(), 0.0]).unwrap();
        assert!((snr_db(&louder, &noise).unwrap() - 30.0).abs() < 1e-12);
        assert!(snr_db(&clean, &SampledSignal::zeros(g)).is_err());
    }

    #[test]
    fn l2_error_examples() {
        let g = Grid::new(0.0, 1.0, 2).unwrap();
        let a = SampledSignal::new(g, vec![3.0, 4.0]).unwrap();
        let z = SampledSignal::zeros(g);
        assert_eq!(l2_error(&a, &a).unwrap(), 0.0);
        assert_eq!(l2_error(&a, &z).unwrap(), 5.0);
        let other = SampledSignal::zeros(Grid::new(0.0, 2.0, 2).unwrap());
        assert!(l2_error(&a, &other).is_err());
    }
}
