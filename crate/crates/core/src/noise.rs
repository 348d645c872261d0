//! Noise-induced error of the SCSA estimate.
//!
//! For a diagonal noise perturbation `W`, Weyl's inequality bounds the shift of
//! each squared bound-state parameter by `max|w_j|`. A probabilistic amplitude
//! bound `B` on the noise (Chebyshev, or three-sigma for Gaussian noise) then
//! turns into an a-posteriori bound on `||y^noisy_h - y^clean_h||_2` that only
//! needs the noisy spectrum.

use std::f64::consts::SQRT_2;

use serde::{Serialize, Serializer};

use crate::diff::D2Matrix;
use crate::error::{Result, ScsaError};
use crate::scsa::{self, NegativeSpectrum};
use crate::signal::{self, NoiseModel, SampledSignal};

/// Probability attached to the three-sigma rule for Gaussian noise.
pub const THREE_SIGMA_PROBABILITY: f64 = 0.997;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeRule {
    Chebyshev,
    ThreeSigmaGaussian,
}

/// Noise amplitude bound `B` holding with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChebyshevBound {
    pub gamma: f64,
    pub p: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub rule: AmplitudeRule,
}

/// `B = max(|mu - gamma sigma|, |mu + gamma sigma|)` with `p = 1 - 1/gamma^2`.
///
/// For `gamma <= 1` the probability is not positive; the record is still returned.
pub fn chebyshev_bound(mu: f64, sigma: f64, gamma: f64) -> Result<ChebyshevBound> {
    if !(sigma >= 0.0) || !sigma.is_finite() || !mu.is_finite() {
        return Err(ScsaError::domain(
            "chebyshev bound needs finite mu and sigma >= 0",
        ));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(ScsaError::domain("chebyshev bound needs gamma > 0"));
    }
    Ok(ChebyshevBound {
        gamma,
        p: 1.0 - 1.0 / (gamma * gamma),
        b: (mu - gamma * sigma).abs().max((mu + gamma * sigma).abs()),
        rule: AmplitudeRule::Chebyshev,
    })
}

/// `B = 3 sigma` at probability 0.997 (zero-mean Gaussian noise).
pub fn three_sigma_bound(sigma: f64) -> Result<ChebyshevBound> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(ScsaError::domain("three-sigma bound needs sigma >= 0"));
    }
    Ok(ChebyshevBound {
        gamma: 3.0,
        p: THREE_SIGMA_PROBABILITY,
        b: 3.0 * sigma,
        rule: AmplitudeRule::ThreeSigmaGaussian,
    })
}

/// Comparison of matched clean and noisy bound states against `max|w_j|`.
#[derive(Debug, Clone, Serialize)]
pub struct WeylReport {
    /// `|kappa_noisy^2 - kappa_clean^2|` per mode, matched by rank.
    pub gaps: Vec<f64>,
    /// `max_j |w_j|`.
    pub bound: f64,
    /// Rounding allowance added to `bound` when flagging violations.
    pub tolerance: f64,
    /// Modes whose gap exceeds `bound + tolerance`.
    pub violations: Vec<usize>,
}

fn check_matched(clean: &NegativeSpectrum, noisy: &NegativeSpectrum) -> Result<()> {
    if clean.grid() != noisy.grid() {
        return Err(ScsaError::domain(
            "clean and noisy spectra live on different grids",
        ));
    }
    if clean.h() != noisy.h() {
        return Err(ScsaError::domain(format!(
            "clean and noisy spectra use different h ({} vs {})",
            clean.h(),
            noisy.h()
        )));
    }
    if clean.count() != noisy.count() {
        return Err(ScsaError::Condition {
            condition: "C5",
            detail: format!(
                "clean spectrum has {} bound states, noisy has {}",
                clean.count(),
                noisy.count()
            ),
        });
    }
    Ok(())
}

/// Weyl check `|kappa_noisy^2 - kappa_clean^2| <= max|w|` per matched mode.
pub fn weyl_gap_check(
    clean: &NegativeSpectrum,
    noisy: &NegativeSpectrum,
    noise: &SampledSignal,
) -> Result<WeylReport> {
    check_matched(clean, noisy)?;
    if noise.grid() != clean.grid() {
        return Err(ScsaError::domain("noise lives on a different grid"));
    }
    let bound = noise.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // eigenvalues carry O(eps ||A||) error; tol_neg is 1e3 eps ||A||_inf
    let tolerance = clean.tol_neg() + noisy.tol_neg();
    let gaps: Vec<f64> = clean
        .kappas()
        .iter()
        .zip(noisy.kappas())
        .map(|(c, n)| (n * n - c * c).abs())
        .collect();
    let violations = gaps
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > bound + tolerance)
        .map(|(i, _)| i)
        .collect();
    Ok(WeylReport {
        gaps,
        bound,
        tolerance,
        violations,
    })
}

/// Modes violating `kappa_noisy^2 < 2 kappa_clean^2`, the precondition of
/// [`kappa_gap_bound`].
pub fn c6_violations(clean: &NegativeSpectrum, noisy: &NegativeSpectrum) -> Result<Vec<usize>> {
    check_matched(clean, noisy)?;
    Ok(clean
        .kappas()
        .iter()
        .zip(noisy.kappas())
        .enumerate()
        .filter(|(_, (c, n))| !(*n * *n < 2.0 * *c * *c))
        .map(|(i, _)| i)
        .collect())
}

/// `B / (sqrt(2) kappa_noisy)`: bound on `|kappa_noisy - kappa_clean|`.
pub fn kappa_gap_bound(noisy_kappa: f64, b: f64) -> Result<f64> {
    if !(noisy_kappa > 0.0) {
        return Err(ScsaError::domain(format!(
            "kappa must be positive, got {noisy_kappa}"
        )));
    }
    Ok(b / (SQRT_2 * noisy_kappa))
}

/// A-posteriori bound on `||y^noisy_h - y^clean_h||_2`.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseErrorBound {
    pub h: f64,
    pub dx: f64,
    pub bound_value: f64,
    /// `2 kappa_n + B / (sqrt(2) kappa_n)`.
    pub per_mode_terms: Vec<f64>,
    pub probability_floor: f64,
}

/// `(4 h / sqrt(dx)) sum_n (2 kappa_n + B / (sqrt(2) kappa_n))` over the noisy spectrum.
pub fn aposteriori_bound(spec: &NegativeSpectrum, b: f64, p: f64) -> Result<NoiseErrorBound> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(ScsaError::domain(
            "amplitude bound B must be finite and >= 0",
        ));
    }
    let per_mode_terms = spec
        .kappas()
        .iter()
        .map(|&k| kappa_gap_bound(k, b).map(|gap| 2.0 * k + gap))
        .collect::<Result<Vec<f64>>>()
        .map_err(|_| ScsaError::Condition {
            condition: "kappa > 0",
            detail: "noisy spectrum contains a non-positive kappa".into(),
        })?;
    let bound_value = 4.0 * spec.h() / spec.dx().sqrt() * per_mode_terms.iter().sum::<f64>();
    Ok(NoiseErrorBound {
        h: spec.h(),
        dx: spec.dx(),
        bound_value,
        per_mode_terms,
        probability_floor: p,
    })
}

/// Whether the clean and noisy spectra have the same number of bound states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C5Status {
    Satisfied,
    Violated,
    /// No clean reference to compare against.
    Unknown,
}

impl Serialize for C5Status {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            C5Status::Satisfied => s.serialize_bool(true),
            C5Status::Violated => s.serialize_bool(false),
            C5Status::Unknown => s.serialize_str("unknown"),
        }
    }
}

/// Bound report as written by the `bound` command.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub h: f64,
    #[serde(rename = "N_h")]
    pub n_h: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub gamma: f64,
    pub p: f64,
    /// `None` when the bound-state counts are known to differ.
    pub bound_value: Option<f64>,
    pub per_mode_terms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_error: Option<f64>,
    pub c5_satisfied: C5Status,
    pub c6_violations: Vec<usize>,
}

/// Builds the bound report for a noisy spectrum, with an optional clean
/// reference spectrum for the count check (`c5`: equal N_h), the per-mode
/// check (`c6`: kappa_noisy^2 < 2 kappa_clean^2) and the empirical error.
pub fn bound_report(
    noisy: &NegativeSpectrum,
    amplitude: &ChebyshevBound,
    clean: Option<&NegativeSpectrum>,
) -> Result<BoundReport> {
    let bound = aposteriori_bound(noisy, amplitude.b, amplitude.p)?;
    let (c5, c6, empirical) = match clean {
        None => (C5Status::Unknown, Vec::new(), None),
        Some(clean) => {
            let err = signal::l2_error(&scsa::reconstruct(noisy), &scsa::reconstruct(clean))?;
            match c6_violations(clean, noisy) {
                Ok(c6) => (C5Status::Satisfied, c6, Some(err)),
                Err(ScsaError::Condition { .. }) => (C5Status::Violated, Vec::new(), Some(err)),
                Err(e) => return Err(e),
            }
        }
    };
    Ok(BoundReport {
        h: noisy.h(),
        n_h: noisy.count(),
        b: amplitude.b,
        gamma: amplitude.gamma,
        p: amplitude.p,
        bound_value: (c5 != C5Status::Violated).then_some(bound.bound_value),
        per_mode_terms: bound.per_mode_terms,
        empirical_error: empirical,
        c5_satisfied: c5,
        c6_violations: c6,
    })
}

/// Monte Carlo check of the a-posteriori bound.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarloConfig {
    pub trials: usize,
    /// Trial `i` draws its noise with seed `seed + i`.
    pub seed: u64,
    pub snr_db: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            trials: 200,
            seed: 0,
            snr_db: 11.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloTrial {
    pub seed: u64,
    pub sigma: f64,
    pub c5_satisfied: bool,
    pub noise_error: f64,
    pub bound_value: f64,
    pub max_normalization_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub trials: Vec<MonteCarloTrial>,
    /// Fraction of trials with `noise_error <= bound_value`.
    pub coverage: f64,
    pub probability_floor: f64,
}

/// Draws Gaussian noise at the configured SNR, and compares the realized noise
/// error `||y^noisy_h - y^clean_h||_2` with the three-sigma a-posteriori bound.
pub fn monte_carlo_coverage(
    clean: &SampledSignal,
    d2: &D2Matrix,
    h: f64,
    config: &MonteCarloConfig,
) -> Result<CoverageReport> {
    if config.trials == 0 {
        return Err(ScsaError::domain("Monte Carlo needs at least one trial"));
    }
    let (clean_spec, clean_est) = scsa::estimate(clean, d2, h)?;
    let mut trials = Vec::with_capacity(config.trials);
    for i in 0..config.trials {
        let seed = config.seed.wrapping_add(i as u64);
        let obs = signal::add_noise(
            clean,
            &NoiseModel::gaussian(0.0, 1.0, seed),
            Some(config.snr_db),
        )?;
        let (noisy_spec, noisy_est) = scsa::estimate(&obs.noisy, d2, h)?;
        let amplitude = three_sigma_bound(obs.sigma)?;
        let bound = aposteriori_bound(&noisy_spec, amplitude.b, amplitude.p)?;
        trials.push(MonteCarloTrial {
            seed,
            sigma: obs.sigma,
            c5_satisfied: noisy_spec.count() == clean_spec.count(),
            noise_error: signal::l2_error(&noisy_est, &clean_est)?,
            bound_value: bound.bound_value,
            max_normalization_residual: noisy_spec
                .max_normalization_residual()
                .max(clean_spec.max_normalization_residual()),
        });
    }
    let covered = trials
        .iter()
        .filter(|t| t.noise_error <= t.bound_value)
        .count();
    Ok(CoverageReport {
        coverage: covered as f64 / trials.len() as f64,
        trials,
        probability_floor: THREE_SIGMA_PROBABILITY,
    })
}
