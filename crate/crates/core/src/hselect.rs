//! Choosing `h` without the clean signal.
//!
//! The sweep runs SCSA on the noisy signal for every `h` of a grid and records
//! residual norms. The raw residual `||y - y_h||` keeps falling as `h` shrinks,
//! because the estimate starts to follow the noise. Low-pass filtering both
//! signals with the same second-order filter before taking the residual
//! removes most of the noise, and the local minima of the filtered residual
//! track those of the true estimation error.

use std::f64::consts::PI;

use serde::Serialize;

use crate::diff::D2Matrix;
use crate::error::{Result, ScsaError};
use crate::noise;
use crate::scsa::{self, check_h_grid};
use crate::signal::{l2_distance, SampledSignal};

/// Discrete biquad from `H(s) = wc^2 / (s^2 + 2 wc s + wc^2)` by the bilinear
/// transform with unit sample period, no prewarping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ButterworthFilter {
    pub w_c: f64,
    /// Numerator `b0 + b1 z^-1 + b2 z^-2`.
    pub b: [f64; 3],
    /// Denominator, `a[0] = 1`.
    pub a: [f64; 3],
}

pub fn butterworth2(w_c: f64) -> Result<ButterworthFilter> {
    if !(w_c > 0.0 && w_c < PI) {
        return Err(ScsaError::domain(format!(
            "cutoff must lie in (0, pi) rad/sample, got {w_c}"
        )));
    }
    // s = 2 (1 - z^-1) / (1 + z^-1), then multiply through by (1 + z^-1)^2
    let w2 = w_c * w_c;
    let a0 = 4.0 + 4.0 * w_c + w2;
    let a1 = 2.0 * w2 - 8.0;
    let a2 = 4.0 - 4.0 * w_c + w2;
    Ok(ButterworthFilter {
        w_c,
        b: [w2 / a0, 2.0 * w2 / a0, w2 / a0],
        a: [1.0, a1 / a0, a2 / a0],
    })
}

impl ButterworthFilter {
    /// Complex frequency response at `omega` rad/sample, as `(re, im)`.
    pub fn response(&self, omega: f64) -> (f64, f64) {
        let poly = |c: &[f64; 3]| {
            // c0 + c1 e^{-iw} + c2 e^{-2iw}
            let re = c[0] + c[1] * omega.cos() + c[2] * (2.0 * omega).cos();
            let im = -c[1] * omega.sin() - c[2] * (2.0 * omega).sin();
            (re, im)
        };
        let (nr, ni) = poly(&self.b);
        let (dr, di) = poly(&self.a);
        let den = dr * dr + di * di;
        ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
    }

    pub fn gain(&self, omega: f64) -> f64 {
        let (re, im) = self.response(omega);
        re.hypot(im)
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    pub fn nyquist_gain(&self) -> f64 {
        (self.b[0] - self.b[1] + self.b[2]) / (self.a[0] - self.a[1] + self.a[2])
    }

    /// Pole magnitudes, roots of `z^2 + a1 z + a2`.
    pub fn pole_radii(&self) -> [f64; 2] {
        let (p, q) = (self.a[1], self.a[2]);
        let disc = p * p - 4.0 * q;
        if disc >= 0.0 {
            let r = disc.sqrt();
            [((-p + r) / 2.0).abs(), ((-p - r) / 2.0).abs()]
        } else {
            // complex pair, |z|^2 = q
            [q.sqrt(), q.sqrt()]
        }
    }

    pub fn is_stable(&self) -> bool {
        self.pole_radii().iter().all(|&r| r < 1.0)
    }

    /// Number of samples after which the impulse response stays below `tol`.
    pub fn settling_length(&self, tol: f64) -> usize {
        let r = self.pole_radii().into_iter().fold(0.0, f64::max);
        // double pole: |h[n]| <= C (n + 1) r^n; walk until the envelope drops
        let c = self.b.iter().map(|v| v.abs()).sum::<f64>() / (1.0 - r).powi(2);
        let mut n = 0usize;
        let mut env = c;
        while env * (n as f64 + 1.0) >= tol {
            n += 1;
            env *= r;
        }
        n
    }
}

/// Causal direct-form II transposed filtering with zero initial state.
pub fn filter_signal(f: &ButterworthFilter, s: &SampledSignal) -> SampledSignal {
    let [b0, b1, b2] = f.b;
    let [_, a1, a2] = f.a;
    let (mut z1, mut z2) = (0.0, 0.0);
    let values = s
        .values()
        .iter()
        .map(|&x| {
            let y = b0 * x + z1;
            z1 = b1 * x - a1 * y + z2;
            z2 = b2 * x - a2 * y;
            y
        })
        .collect();
    SampledSignal::new(*s.grid(), values).expect("filtering finite samples stays finite")
}

/// `||f(a) - f(b)||_2` with the same filter applied to both signals.
pub fn filtered_residual(
    f: &ButterworthFilter,
    a: &SampledSignal,
    b: &SampledSignal,
) -> Result<f64> {
    a.same_grid(b)?;
    Ok(l2_distance(
        filter_signal(f, a).values(),
        filter_signal(f, b).values(),
    ))
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub h: f64,
    /// `None` when the eigensolve failed at this `h`.
    pub n_h: Option<usize>,
    /// `||y^noisy - y^noisy_h||_2`
    pub raw_residual: Option<f64>,
    /// `||f(y^noisy) - f(y^noisy_h)||_2`
    pub filtered_residual: Option<f64>,
    /// `||y^clean - y^noisy_h||_2`, only with a clean reference.
    pub true_error: Option<f64>,
    /// A-posteriori noise bound, only when an amplitude bound was supplied.
    pub noise_bound: Option<f64>,
    /// Largest `|dx sum psi^2 - 1|` over the bound states at this `h`.
    pub max_normalization_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HSweepResult {
    pub points: Vec<SweepPoint>,
}

impl HSweepResult {
    pub fn h_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.h).collect()
    }

    /// `h` with the smallest recorded true error (first one on ties).
    pub fn true_error_minimizer(&self) -> Option<f64> {
        argmin(
            self.points
                .iter()
                .filter_map(|p| p.true_error.map(|e| (p.h, e))),
        )
    }

    /// CSV with columns `h,N_h,raw_residual,filtered_residual,true_error,noise_bound`;
    /// cells that do not apply are left empty.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let mut out = String::from("h,N_h,raw_residual,filtered_residual,true_error,noise_bound\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                format_args!("{:.16e}", p.h),
                p.n_h.map(|n| n.to_string()).unwrap_or_default(),
                cell(p.raw_residual),
                cell(p.filtered_residual),
                cell(p.true_error),
                cell(p.noise_bound),
            ));
        }
        out
    }
}

fn argmin(items: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    items
        .fold(None, |best: Option<(f64, f64)>, (h, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((h, v)),
        })
        .map(|(h, _)| h)
}

/// Runs SCSA on `noisy` for every `h`. Eigensolver failures are recorded on
/// their row and the sweep carries on.
pub fn sweep(
    noisy: &SampledSignal,
    d2: &D2Matrix,
    h_grid: &[f64],
    filter: &ButterworthFilter,
    clean: Option<&SampledSignal>,
    bound_b: Option<f64>,
) -> Result<HSweepResult> {
    check_h_grid(h_grid)?;
    if d2.dim() != noisy.len() {
        return Err(ScsaError::domain("D2 and signal sizes differ"));
    }
    if let Some(c) = clean {
        noisy.same_grid(c)?;
    }
    let filtered_noisy = filter_signal(filter, noisy);
    let mut points = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let point = match scsa::estimate(noisy, d2, h) {
            Ok((spec, est)) => {
                // the probability label plays no part in the bound value
                let noise_bound = match bound_b {
                    Some(b) => Some(noise::aposteriori_bound(&spec, b, f64::NAN)?.bound_value),
                    None => None,
                };
                SweepPoint {
                    h,
                    n_h: Some(spec.count()),
                    raw_residual: Some(l2_distance(noisy.values(), est.values())),
                    filtered_residual: Some(l2_distance(
                        filtered_noisy.values(),
                        filter_signal(filter, &est).values(),
                    )),
                    true_error: clean.map(|c| l2_distance(c.values(), est.values())),
                    noise_bound,
                    max_normalization_residual: Some(spec.max_normalization_residual()),
                    error: None,
                }
            }
            Err(e @ ScsaError::NoConvergence { .. }) => {
                log::warn!("sweep point h = {h} failed: {e}");
                SweepPoint {
                    h,
                    n_h: None,
                    raw_residual: None,
                    filtered_residual: None,
                    true_error: None,
                    noise_bound: None,
                    max_normalization_residual: None,
                    error: Some(e.to_string()),
                }
            }
            Err(e) => return Err(e),
        };
        points.push(point);
    }
    Ok(HSweepResult { points })
}

/// `||y^clean - y^clean_h||_2` along the grid: the truncation error of the
/// noise-free estimate.
pub fn clean_error_curve(clean: &SampledSignal, d2: &D2Matrix, h_grid: &[f64]) -> Result<Vec<f64>> {
    check_h_grid(h_grid)?;
    h_grid
        .iter()
        .map(|&h| {
            let (_, est) = scsa::estimate(clean, d2, h)?;
            Ok(l2_distance(clean.values(), est.values()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HSelection {
    pub recommended_h: f64,
    pub local_minima: Vec<f64>,
    /// Set when no interior local minimum exists; `recommended_h` is then the
    /// global minimizer.
    pub no_interior_minimum: bool,
}

/// Interior local minima of `values` over `hs`. A flat run counts once, at its
/// smallest `h`, when both neighbours of the run are strictly larger.
pub fn local_minima(hs: &[f64], values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        if j + 1 < n && values[i - 1] > values[i] && values[j + 1] > values[i] {
            out.push(i);
        }
        i = j + 1;
    }
    debug_assert!(out.iter().all(|&k| k < hs.len()));
    out
}

/// Picks `h` from the filtered-residual curve: the local minimum with the
/// smallest value, ties to the smaller `h`.
pub fn select_h(result: &HSweepResult) -> Result<HSelection> {
    let (hs, values): (Vec<f64>, Vec<f64>) = result
        .points
        .iter()
        .filter_map(|p| p.filtered_residual.map(|v| (p.h, v)))
        .unzip();
    if hs.is_empty() {
        return Err(ScsaError::domain("sweep has no filtered residuals"));
    }
    let minima = local_minima(&hs, &values);
    if minima.is_empty() {
        let best = argmin(hs.iter().copied().zip(values.iter().copied())).expect("non-empty");
        return Ok(HSelection {
            recommended_h: best,
            local_minima: Vec::new(),
            no_interior_minimum: true,
        });
    }
    let best = argmin(minima.iter().map(|&i| (hs[i], values[i]))).expect("non-empty");
    Ok(HSelection {
        recommended_h: best,
        local_minima: minima.iter().map(|&i| hs[i]).collect(),
        no_interior_minimum: false,
    })
}

/// `start, start + step, ...` up to `stop` inclusive (with a small slack for
/// rounding).
pub fn h_range(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(start > 0.0) || !(step > 0.0) || !(stop >= start) || !stop.is_finite() {
        return Err(ScsaError::domain(format!(
            "bad h range {start}:{step}:{stop}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // rounded to 12 decimals so 0.2 + 3 * 0.1 prints as 0.5
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Default grid `0.2:0.1:2.0`.
pub fn default_h_grid() -> Vec<f64> {
    h_range(0.2, 0.1, 2.0).expect("valid constant range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::central_fd_d2;
    use crate::signal::{sech2_signal, Grid};

    #[test]
    fn filter_dc_and_nyquist() {
        for wc in [0.001, 0.01, 0.3, 2.0] {
            let f = butterworth2(wc).unwrap();
            assert!((f.dc_gain() - 1.0).abs() < 1e-10);
            assert!(f.nyquist_gain().abs() < 1e-10);
            assert!((f.gain(0.0) - 1.0).abs() < 1e-10);
            assert!(f.gain(PI) < 1e-10);
            assert!(f.is_stable());
            assert_eq!(f.a[0], 1.0);
        }
        assert!(butterworth2(0.0).is_err());
        assert!(butterworth2(PI).is_err());
        assert!(butterworth2(-0.1).is_err());
    }

    #[test]
    fn filter_gain_at_cutoff() {
        // |H(i wc)| = wc^2 / |(i wc + wc)^2| = 1/2 for the critically damped prototype;
        // the bilinear map moves this by O(wc^2).
        let f = butterworth2(0.01).unwrap();
        let analog = 0.5;
        assert!(
            (f.gain(0.01) - analog).abs() < 0.02 * analog,
            "{}",
            f.gain(0.01)
        );
    }

    #[test]
    fn filter_basic_signals() {
        let grid = Grid::new(0.0, 1.0, 3000).unwrap();
        let f = butterworth2(0.01).unwrap();
        let zero = SampledSignal::zeros(grid);
        assert!(filter_signal(&f, &zero).values().iter().all(|&v| v == 0.0));
        let c = SampledSignal::new(grid, vec![2.5; 3000]).unwrap();
        let out = filter_signal(&f, &c);
        assert!((out.values()[2999] - 2.5).abs() < 1e-6);
    }

    #[test]
    fn filter_is_linear() {
        let grid = Grid::new(0.0, 1.0, 500).unwrap();
        let a = SampledSignal::from_fn(grid, |x| (17.0 * x).sin()).unwrap();
        let b = SampledSignal::from_fn(grid, |x| x * x - 0.3).unwrap();
        let (alpha, beta) = (1.7, -0.4);
        let mix = SampledSignal::from_fn(grid, |x| alpha * (17.0 * x).sin() + beta * (x * x - 0.3))
            .unwrap();
        let f = butterworth2(0.05).unwrap();
        let (fa, fb, fm) = (
            filter_signal(&f, &a),
            filter_signal(&f, &b),
            filter_signal(&f, &mix),
        );
        let scale = fm.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..500 {
            let want = alpha * fa.values()[j] + beta * fb.values()[j];
            assert!((fm.values()[j] - want).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn impulse_response_settles() {
        let f = butterworth2(0.01).unwrap();
        let n = f.settling_length(1e-12);
        let grid = Grid::new(0.0, 1.0, n + 200).unwrap();
        let mut x = vec![0.0; n + 200];
        x[0] = 1.0;
        let y = filter_signal(&f, &SampledSignal::new(grid, x).unwrap());
        assert!(y.values()[n..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn residual_is_symmetric_and_zero_on_equal_inputs() {
        let grid = Grid::new(0.0, 12.0, 1201).unwrap();
        let a = sech2_signal(&grid, 6.0);
        let b = SampledSignal::from_fn(grid, |x| (x / 3.0).cos()).unwrap();
        let f = butterworth2(0.01).unwrap();
        assert_eq!(filtered_residual(&f, &a, &a).unwrap(), 0.0);
        assert_eq!(
            filtered_residual(&f, &a, &b).unwrap(),
            filtered_residual(&f, &b, &a).unwrap()
        );
    }

    fn curve(values: &[f64], hs: &[f64]) -> HSweepResult {
        HSweepResult {
            points: hs
                .iter()
                .zip(values)
                .map(|(&h, &v)| SweepPoint {
                    h,
                    n_h: Some(1),
                    raw_residual: Some(v),
                    filtered_residual: Some(v),
                    true_error: None,
                    noise_bound: None,
                    max_normalization_residual: None,
                    error: None,
                })
                .collect(),
        }
    }

    #[test]
    fn select_examples() {
        let hs = [0.2, 0.3, 0.4, 0.5, 0.6];
        let s = select_h(&curve(&[5.0, 3.0, 4.0, 2.0, 6.0], &hs)).unwrap();
        assert_eq!(s.local_minima, vec![0.3, 0.5]);
        assert_eq!(s.recommended_h, 0.5);
        assert!(!s.no_interior_minimum);

        let s = select_h(&curve(&[5.0, 4.0, 3.0, 2.0, 1.0], &hs)).unwrap();
        assert!(s.no_interior_minimum);
        assert_eq!(s.recommended_h, 0.6);

        let s = select_h(&curve(&[1.0], &[0.4])).unwrap();
        assert!(s.no_interior_minimum);
        assert_eq!(s.recommended_h, 0.4);
    }

    #[test]
    fn select_ties_and_plateaus() {
        let hs = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        // equal minima: smaller h wins
        let s = select_h(&curve(&[5.0, 2.0, 4.0, 2.0, 6.0, 7.0], &hs)).unwrap();
        assert_eq!(s.recommended_h, 0.3);
        // plateau counted once, at its first point
        let s = select_h(&curve(&[5.0, 2.0, 2.0, 2.0, 6.0, 7.0], &hs)).unwrap();
        assert_eq!(s.local_minima, vec![0.3]);
        // plateau touching the end is not interior
        let s = select_h(&curve(&[5.0, 4.0, 3.0, 3.0, 3.0, 3.0], &hs)).unwrap();
        assert!(s.no_interior_minimum);
        assert_eq!(s.recommended_h, 0.4);
    }

    #[test]
    fn h_range_matches_default() {
        let g = default_h_grid();
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[2], 0.4);
        assert_eq!(g[18], 2.0);
        assert!(h_range(0.0, 0.1, 1.0).is_err());
        assert!(h_range(0.5, 0.1, 0.2).is_err());
        assert_eq!(h_range(0.4, 0.1, 0.4).unwrap(), vec![0.4]);
    }

    #[test]
    fn noise_free_sweep_true_error_equals_raw() {
        let grid = Grid::new(0.0, 8.0, 81).unwrap();
        let y = sech2_signal(&grid, 4.0);
        let d2 = central_fd_d2(81, grid.dx()).unwrap();
        let f = butterworth2(0.01).unwrap();
        let r = sweep(&y, &d2, &[0.3, 0.5, 0.9], &f, Some(&y), Some(0.0)).unwrap();
        for p in &r.points {
            assert_eq!(p.true_error, p.raw_residual);
            assert!(p.noise_bound.unwrap() >= 0.0);
        }
        let again = sweep(&y, &d2, &[0.3, 0.5, 0.9], &f, Some(&y), Some(0.0)).unwrap();
        assert_eq!(r, again);
        let csv = r.to_csv();
        assert!(csv.starts_with("h,N_h,raw_residual,filtered_residual,true_error,noise_bound\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
