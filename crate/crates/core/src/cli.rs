//! Command-line front end. The `scsa` binary is a thin wrapper around [`run`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diff::{build_d2, extreme_spectrum, D2Matrix, DiffScheme};
use crate::error::{Result, ScsaError};
use crate::hselect::{self, butterworth2};
use crate::io::{self, checksum_file, InputChecksum, Manifest};
use crate::noise::{self, AmplitudeRule, ChebyshevBound, THREE_SIGMA_PROBABILITY};
use crate::scsa;
use crate::signal::{self, sech2_signal, Grid, NoiseModel, SampledSignal};

#[derive(Debug, Parser)]
#[command(
    name = "scsa",
    version,
    about = "Semi-classical signal analysis toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample sech^2(x - center) and add seeded Gaussian noise.
    #[command(allow_negative_numbers = true)]
    Generate(GenerateArgs),
    /// Reconstruct a signal from its bound states at one h.
    #[command(allow_negative_numbers = true)]
    Denoise(DenoiseArgs),
    /// Sweep h, record residuals and recommend h from the filtered residual.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// A-posteriori noise error bound at one h.
    #[command(allow_negative_numbers = true)]
    Bound(BoundArgs),
    /// Number of bound states across an h grid.
    #[command(allow_negative_numbers = true)]
    NhProfile(ProfileArgs),
}

/// `a,b,M`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [a, b, m] = parts[..] else {
            return Err(format!("expected a,b,M, got `{s}`"));
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}`"));
        Ok(GridSpec {
            a: num(a)?,
            b: num(b)?,
            m: m.parse().map_err(|_| format!("bad sample count `{m}`"))?,
        })
    }
}

/// `start:step:stop`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HRange {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl HRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        hselect::h_range(self.start, self.step, self.stop)
    }
}

impl Default for HRange {
    fn default() -> Self {
        HRange {
            start: 0.2,
            step: 0.1,
            stop: 2.0,
        }
    }
}

impl fmt::Display for HRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.step, self.stop)
    }
}

impl FromStr for HRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, step, stop] = parts[..] else {
            return Err(format!("expected start:step:stop, got `{s}`"));
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}`"));
        Ok(HRange {
            start: num(start)?,
            step: num(step)?,
            stop: num(stop)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Format of the main data output.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, default_value = "0,12,1201")]
    pub grid: GridSpec,
    /// Soliton center; defaults to the middle of the grid.
    #[arg(long)]
    pub center: Option<f64>,
    /// Target SNR in dB; the default when --sigma is not given is 11.
    #[arg(long, conflicts_with = "sigma")]
    pub snr: Option<f64>,
    /// Noise standard deviation, instead of a target SNR.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DenoiseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    pub h: f64,
    #[arg(long, default_value = "fourier")]
    pub scheme: DiffScheme,
    /// Clean reference; adds the relative error to the report.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// Noise amplitude options for bound computations.
#[derive(Debug, Clone, Args, Serialize)]
pub struct AmplitudeArgs {
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    #[arg(long, default_value_t = 3.0)]
    pub gamma: f64,
    /// Gaussian noise: use the three-sigma rule (requires gamma = 3).
    #[arg(long)]
    pub gaussian: bool,
}

impl AmplitudeArgs {
    fn bound(&self) -> Result<Option<ChebyshevBound>> {
        let Some(sigma) = self.sigma else {
            return Ok(None);
        };
        let mut b = noise::chebyshev_bound(self.mean, sigma, self.gamma)?;
        if self.gaussian {
            if self.gamma != 3.0 {
                return Err(ScsaError::domain(
                    "--gaussian implies the three-sigma rule; use --gamma 3",
                ));
            }
            b.p = THREE_SIGMA_PROBABILITY;
            b.rule = AmplitudeRule::ThreeSigmaGaussian;
        }
        Ok(Some(b))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "h-grid", default_value_t = HRange::default())]
    pub h_grid: HRange,
    #[arg(long, default_value = "fourier")]
    pub scheme: DiffScheme,
    /// Filter cutoff in rad/sample.
    #[arg(long, default_value_t = 0.01)]
    pub wc: f64,
    /// Clean reference; adds the true-error column.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// With --sigma, adds the noise-bound column.
    #[command(flatten)]
    pub amplitude: AmplitudeArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    pub h: f64,
    #[arg(long, default_value = "fourier")]
    pub scheme: DiffScheme,
    /// Clean reference: checks equal bound-state counts and kappa_noisy^2 < 2 kappa_clean^2, and reports the empirical error.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    #[command(flatten)]
    pub amplitude: AmplitudeArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "h-grid", default_value_t = HRange::default())]
    pub h_grid: HRange,
    #[arg(long, default_value = "fourier")]
    pub scheme: DiffScheme,
    /// Samples at or below this value count as zeros.
    #[arg(long = "tol-zero", default_value_t = 0.0)]
    pub tol_zero: f64,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Denoise(a) => denoise(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Bound(a) => bound(&a),
        Command::NhProfile(a) => nh_profile(&a),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| ScsaError::io(dir, e))
}

fn d2_for(scheme: DiffScheme, s: &SampledSignal) -> Result<D2Matrix> {
    build_d2(scheme, s.len(), s.grid().dx())
}

fn load(path: &Path, inputs: &mut Vec<InputChecksum>) -> Result<SampledSignal> {
    let s = io::read_signal(path)?;
    inputs.push(checksum_file(path)?);
    Ok(s)
}

#[derive(Serialize)]
struct SignalJson<'a> {
    x: Vec<f64>,
    value: &'a [f64],
}

/// Writes `stem.csv` or `stem.json` and returns the file path.
fn write_signal_as(dir: &Path, stem: &str, s: &SampledSignal, format: Format) -> Result<PathBuf> {
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            io::write_signal(&path, s)?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            io::write_json(
                &path,
                &SignalJson {
                    x: s.grid().points().collect(),
                    value: s.values(),
                },
            )?;
            Ok(path)
        }
    }
}

fn write_manifest<C: Serialize, R: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    inputs: Vec<InputChecksum>,
    outputs: Vec<PathBuf>,
    result: R,
) -> Result<()> {
    let m = Manifest::new(command, config, inputs, outputs, result);
    io::write_json(&dir.join("manifest.json"), &m)
}

#[derive(Serialize)]
struct GenerateResult {
    seed: u64,
    sigma: f64,
    /// `None` when the noise is identically zero.
    realized_snr_db: Option<f64>,
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let grid = Grid::new(args.grid.a, args.grid.b, args.grid.m)?;
    let center = args.center.unwrap_or(0.5 * (grid.a() + grid.b()));
    let clean = sech2_signal(&grid, center);
    let (model, target) = match args.sigma {
        Some(sigma) => {
            if !(sigma >= 0.0) {
                return Err(ScsaError::domain("--sigma must be >= 0"));
            }
            (
                NoiseModel::gaussian(args.mean, sigma * sigma, args.seed),
                None,
            )
        }
        None => (
            NoiseModel::gaussian(args.mean, 1.0, args.seed),
            Some(args.snr.unwrap_or(11.0)),
        ),
    };
    let obs = signal::add_noise(&clean, &model, target)?;
    let realized = (obs.noise.energy() > 0.0)
        .then(|| signal::snr_db(&clean, &obs.noise))
        .transpose()?;

    let dir = &args.common.out;
    prepare_out(dir)?;
    let fmt = args.common.format;
    let outputs = vec![
        write_signal_as(dir, "clean", &clean, fmt)?,
        write_signal_as(dir, "noisy", &obs.noisy, fmt)?,
        write_signal_as(dir, "noise", &obs.noise, fmt)?,
    ];
    write_manifest(
        dir,
        "generate",
        args,
        Vec::new(),
        outputs,
        GenerateResult {
            seed: args.seed,
            sigma: obs.sigma,
            realized_snr_db: realized,
        },
    )
}

#[derive(Serialize)]
struct DenoiseResult {
    #[serde(rename = "N_h")]
    n_h: usize,
    max_normalization_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_error: Option<f64>,
}

fn denoise(args: &DenoiseArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let y = load(&args.input, &mut inputs)?;
    let clean = args
        .clean
        .as_deref()
        .map(|p| load(p, &mut inputs))
        .transpose()?;
    if let Some(c) = &clean {
        y.same_grid(c)?;
    }
    let d2 = d2_for(args.scheme, &y)?;
    let (spec, est) = scsa::estimate(&y, &d2, args.h)?;
    let report = spec.report();
    if report.n_h == 0 {
        log::info!("no bound states at h = {}; the estimate is zero", args.h);
    }
    let relative_error = match &clean {
        Some(c) => Some(signal::l2_error(&est, c)? / c.energy().sqrt()),
        None => None,
    };

    let dir = &args.common.out;
    prepare_out(dir)?;
    let estimate_path = write_signal_as(dir, "estimate", &est, args.common.format)?;
    let spectrum_path = dir.join("spectrum.json");
    io::write_json(&spectrum_path, &report)?;
    let result = DenoiseResult {
        n_h: report.n_h,
        max_normalization_residual: spec.max_normalization_residual(),
        relative_error,
    };
    write_manifest(
        dir,
        "denoise",
        args,
        inputs,
        vec![estimate_path, spectrum_path],
        result,
    )
}

#[derive(Serialize)]
struct SweepSummary {
    recommended_h: f64,
    local_minima: Vec<f64>,
    no_interior_minimum: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    true_error_minimizer: Option<f64>,
    /// `(h, N_h)` pairs; `N_h` is null where the eigensolve failed.
    #[serde(rename = "N_h")]
    n_h: Vec<(f64, Option<usize>)>,
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let y = load(&args.input, &mut inputs)?;
    let clean = args
        .clean
        .as_deref()
        .map(|p| load(p, &mut inputs))
        .transpose()?;
    let filter = butterworth2(args.wc)?;
    let bound_b = args.amplitude.bound()?.map(|b| b.b);
    let h_grid = args.h_grid.values()?;
    let d2 = d2_for(args.scheme, &y)?;
    let result = hselect::sweep(&y, &d2, &h_grid, &filter, clean.as_ref(), bound_b)?;
    let selection = hselect::select_h(&result)?;
    if selection.no_interior_minimum {
        log::warn!("filtered residual has no interior minimum; recommending its global minimizer");
    }

    let dir = &args.common.out;
    prepare_out(dir)?;
    let table_path = match args.common.format {
        Format::Csv => {
            let p = dir.join("sweep.csv");
            io::write_atomic(&p, result.to_csv().as_bytes())?;
            p
        }
        Format::Json => {
            let p = dir.join("sweep.json");
            io::write_json(&p, &result)?;
            p
        }
    };
    let summary = SweepSummary {
        recommended_h: selection.recommended_h,
        local_minima: selection.local_minima,
        no_interior_minimum: selection.no_interior_minimum,
        true_error_minimizer: result.true_error_minimizer(),
        n_h: result.points.iter().map(|p| (p.h, p.n_h)).collect(),
    };
    let summary_path = dir.join("summary.json");
    io::write_json(&summary_path, &summary)?;
    write_manifest(
        dir,
        "sweep",
        args,
        inputs,
        vec![table_path, summary_path],
        summary,
    )
}

fn bound(args: &BoundArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let y = load(&args.input, &mut inputs)?;
    let clean = args
        .clean
        .as_deref()
        .map(|p| load(p, &mut inputs))
        .transpose()?;
    let amplitude = args
        .amplitude
        .bound()?
        .ok_or_else(|| ScsaError::domain("bound needs the noise level --sigma"))?;
    let d2 = d2_for(args.scheme, &y)?;
    let (noisy_spec, _) = scsa::estimate(&y, &d2, args.h)?;
    let clean_spec = match &clean {
        Some(c) => {
            y.same_grid(c)?;
            Some(scsa::estimate(c, &d2, args.h)?.0)
        }
        None => None,
    };
    let report = noise::bound_report(&noisy_spec, &amplitude, clean_spec.as_ref())?;

    let dir = &args.common.out;
    prepare_out(dir)?;
    let path = dir.join("bound.json");
    io::write_json(&path, &report)?;
    write_manifest(dir, "bound", args, inputs, vec![path], report)
}

#[derive(Serialize)]
struct ProfileRow {
    h: f64,
    #[serde(rename = "N_h")]
    n_h: usize,
}

#[derive(Serialize)]
struct ProfileSummary {
    thresholds: scsa::BoundThresholds,
    /// `-D2` is positive definite (otherwise only semidefinite).
    d2_definite: bool,
    non_increasing: bool,
}

fn nh_profile(args: &ProfileArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let y = load(&args.input, &mut inputs)?;
    let h_grid = args.h_grid.values()?;
    let d2 = d2_for(args.scheme, &y)?;
    let spectrum = extreme_spectrum(&d2)?;
    let thresholds = scsa::count_thresholds(&y, &spectrum, args.tol_zero)?;
    let profile = scsa::nh_profile(&y, &d2, &h_grid)?;
    let rows: Vec<ProfileRow> = profile
        .iter()
        .map(|&(h, n_h)| ProfileRow { h, n_h })
        .collect();

    let dir = &args.common.out;
    prepare_out(dir)?;
    let table_path = match args.common.format {
        Format::Csv => {
            let p = dir.join("nh_profile.csv");
            let mut text = String::from("h,N_h\n");
            for r in &rows {
                text.push_str(&format!("{:.16e},{}\n", r.h, r.n_h));
            }
            io::write_atomic(&p, text.as_bytes())?;
            p
        }
        Format::Json => {
            let p = dir.join("nh_profile.json");
            io::write_json(&p, &rows)?;
            p
        }
    };
    let summary = ProfileSummary {
        thresholds,
        d2_definite: spectrum.is_definite(),
        non_increasing: rows.windows(2).all(|w| w[1].n_h <= w[0].n_h),
    };
    write_manifest(dir, "nh-profile", args, inputs, vec![table_path], summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_and_range() {
        assert_eq!(
            "0,12,1201".parse::<GridSpec>().unwrap(),
            GridSpec {
                a: 0.0,
                b: 12.0,
                m: 1201
            }
        );
        assert!("0,12".parse::<GridSpec>().is_err());
        assert!("0,12,1.5".parse::<GridSpec>().is_err());
        let r: HRange = "0.2:0.1:2".parse().unwrap();
        assert_eq!(r.values().unwrap(), hselect::default_h_grid());
        assert!("0.2:0.1".parse::<HRange>().is_err());
    }

    #[test]
    fn amplitude_rules() {
        let mut a = AmplitudeArgs {
            sigma: Some(1.0),
            mean: 0.0,
            gamma: 3.0,
            gaussian: true,
        };
        let b = a.bound().unwrap().unwrap();
        assert_eq!((b.b, b.p), (3.0, 0.997));
        a.gaussian = false;
        let b = a.bound().unwrap().unwrap();
        assert_eq!(b.b, 3.0);
        assert!((b.p - 8.0 / 9.0).abs() < 1e-15);
        a.gaussian = true;
        a.gamma = 2.0;
        assert!(a.bound().is_err());
        a.sigma = None;
        assert!(a.bound().unwrap().is_none());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
