//! File formats: signal CSV, atomic writes, checksums and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Result, ScsaError};
use crate::signal::{Grid, SampledSignal};

/// Relative tolerance on the spacing of `x` values read back from a CSV.
const GRID_UNIFORMITY_TOL: f64 = 1e-9;

/// Renders a signal as `x,value` CSV, 17 significant digits, LF endings.
pub fn signal_to_csv(s: &SampledSignal) -> String {
    let mut out = String::with_capacity(48 * s.len() + 8);
    out.push_str("x,value\n");
    for (x, v) in s.grid().points().zip(s.values()) {
        out.push_str(&format!("{x:.16e},{v:.16e}\n"));
    }
    out
}

/// Parses `x,value` CSV. The grid is rebuilt from the first and last `x` and
/// the spacing must be uniform. `path` only labels errors.
pub fn signal_from_csv(text: &str, path: &Path) -> Result<SampledSignal> {
    let parse_err = |row: usize, detail: String| ScsaError::Parse {
        path: path.to_path_buf(),
        row,
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.len() != 2 || &header[0] != "x" || &header[1] != "value" {
        return Err(parse_err(
            1,
            format!(
                "expected header `x,value`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let (mut xs, mut values) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            parse_err(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<f64> {
            let raw = &record[i];
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(row, format!("`{raw}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(row, format!("non-finite value `{raw}`")))
            }
        };
        xs.push(field(0)?);
        values.push(field(1)?);
    }
    if xs.len() < 2 {
        return Err(parse_err(xs.len() + 1, "need at least 2 samples".into()));
    }
    let m = xs.len();
    let grid = Grid::new(xs[0], xs[m - 1], m).map_err(|e| parse_err(2, e.to_string()))?;
    let tol = GRID_UNIFORMITY_TOL * (grid.b() - grid.a()).max(1.0);
    if let Some(j) = (0..m).find(|&j| (xs[j] - grid.x(j)).abs() > tol) {
        return Err(parse_err(
            j + 2,
            format!(
                "x = {} breaks the uniform grid (expected {})",
                xs[j],
                grid.x(j)
            ),
        ));
    }
    SampledSignal::new(grid, values)
}

pub fn read_signal(path: &Path) -> Result<SampledSignal> {
    let text = fs::read_to_string(path).map_err(|e| ScsaError::io(path, e))?;
    signal_from_csv(&text, path)
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| ScsaError::io(dir, e))?;
    tmp.write_all(contents)
        .map_err(|e| ScsaError::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| ScsaError::io(tmp.path(), e))?;
    tmp.persist(path)
        .map_err(|e| ScsaError::io(path, e.error))?;
    Ok(())
}

pub fn write_signal(path: &Path, s: &SampledSignal) -> Result<()> {
    write_atomic(path, signal_to_csv(s).as_bytes())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputChecksum {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn checksum_file(path: &Path) -> Result<InputChecksum> {
    let bytes = fs::read(path).map_err(|e| ScsaError::io(path, e))?;
    Ok(InputChecksum {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}

/// Provenance block written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: C,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_hash: String,
    pub inputs: Vec<InputChecksum>,
    pub outputs: Vec<PathBuf>,
    pub result: R,
}

impl<C: Serialize, R: Serialize> Manifest<C, R> {
    pub fn new(
        command: impl Into<String>,
        config: C,
        inputs: Vec<InputChecksum>,
        outputs: Vec<PathBuf>,
        result: R,
    ) -> Self {
        let encoded = serde_json::to_vec(&config).expect("serializable config");
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config_hash: sha256_hex(&encoded),
            config,
            inputs,
            outputs,
            result,
        }
    }
}
