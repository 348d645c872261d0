//! End-to-end runs of the `scsa` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scsa_core::diff::{central_fd_d2, extreme_spectrum};
use scsa_core::io::read_signal;
use scsa_core::scsa::count_thresholds;
use scsa_core::signal::{sech2_signal, Grid};
use serde_json::Value;

fn scsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scsa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = scsa(args);
    assert!(
        out.status.success(),
        "scsa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small default-shaped data set: sech^2 on [0,12] with 241 samples at 11 dB.
fn small_set(dir: &Path) -> PathBuf {
    let out = dir.join("gen");
    ok(&[
        "generate",
        "--grid",
        "0,12,241",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    out
}

#[test]
fn generate_defaults_reproduce_setup() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    ok(&["generate", "--out", s(&out)]);
    let clean = read_signal(&out.join("clean.csv")).unwrap();
    let noisy = read_signal(&out.join("noisy.csv")).unwrap();
    assert_eq!(clean.len(), 1201);
    assert_eq!(clean.grid().a(), 0.0);
    assert_eq!(clean.grid().b(), 12.0);
    assert!((clean.grid().dx() - 0.01).abs() < 1e-15);
    assert_eq!(clean.values()[600], 1.0);
    let m = json(&out.join("manifest.json"));
    let snr = m["result"]["realized_snr_db"].as_f64().unwrap();
    assert!((snr - 11.0).abs() < 1e-9, "{snr}");
    assert_eq!(m["command"], "generate");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_ne!(clean.values(), noisy.values());
}

#[test]
fn generate_zero_sigma_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let z = dir.path().join("z");
    ok(&[
        "generate",
        "--grid",
        "0,12,121",
        "--sigma",
        "0",
        "--out",
        s(&z),
    ]);
    assert_eq!(
        fs::read(z.join("noisy.csv")).unwrap(),
        fs::read(z.join("clean.csv")).unwrap()
    );
    assert!(json(&z.join("manifest.json"))["result"]["realized_snr_db"].is_null());

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&[
            "generate",
            "--grid",
            "0,12,121",
            "--seed",
            "42",
            "--out",
            s(out),
        ]);
    }
    for f in ["clean.csv", "noisy.csv", "noise.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    // same out dir twice: manifest identical too
    let m1 = fs::read(a.join("manifest.json")).unwrap();
    ok(&[
        "generate",
        "--grid",
        "0,12,121",
        "--seed",
        "42",
        "--out",
        s(&a),
    ]);
    assert_eq!(m1, fs::read(a.join("manifest.json")).unwrap());

    let c = dir.path().join("c");
    ok(&[
        "generate",
        "--grid",
        "0,12,121",
        "--seed",
        "43",
        "--out",
        s(&c),
    ]);
    assert_ne!(
        fs::read(a.join("noise.csv")).unwrap(),
        fs::read(c.join("noise.csv")).unwrap()
    );
}

#[test]
fn generate_rejects_bad_parameters_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let r = scsa(&["generate", "--grid", "5,1,100", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = scsa(&["generate", "--sigma", "-1", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = scsa(&["generate", "--sigma", "1", "--snr", "3", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn denoise_round_trip_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_set(dir.path());
    let d = dir.path().join("d");
    ok(&[
        "denoise",
        "--in",
        s(&g.join("noisy.csv")),
        "--clean",
        s(&g.join("clean.csv")),
        "--h",
        "0.5",
        "--out",
        s(&d),
    ]);
    let est = read_signal(&d.join("estimate.csv")).unwrap();
    assert_eq!(est.len(), 241);
    let spec = json(&d.join("spectrum.json"));
    let n = spec["N_h"].as_u64().unwrap() as usize;
    assert!(n >= 1);
    assert_eq!(spec["kappas"].as_array().unwrap().len(), n);
    for r in spec["normalization_residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap().abs() <= 1e-10);
    }
    let m = json(&d.join("manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    assert!(m["result"]["relative_error"].as_f64().unwrap() < 0.2);

    // rerun: byte-identical outputs
    let before: Vec<Vec<u8>> = ["estimate.csv", "spectrum.json", "manifest.json"]
        .iter()
        .map(|f| fs::read(d.join(f)).unwrap())
        .collect();
    ok(&[
        "denoise",
        "--in",
        s(&g.join("noisy.csv")),
        "--clean",
        s(&g.join("clean.csv")),
        "--h",
        "0.5",
        "--out",
        s(&d),
    ]);
    for (f, b) in ["estimate.csv", "spectrum.json", "manifest.json"]
        .iter()
        .zip(before)
    {
        assert_eq!(fs::read(d.join(f)).unwrap(), b, "{f}");
    }
}

#[test]
fn denoise_soliton_is_near_exact() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&["generate", "--sigma", "0", "--out", s(&g)]);
    let d = dir.path().join("d");
    let h = format!("{}", 1.0 / 2f64.sqrt());
    ok(&[
        "denoise",
        "--in",
        s(&g.join("clean.csv")),
        "--clean",
        s(&g.join("clean.csv")),
        "--h",
        &h,
        "--out",
        s(&d),
    ]);
    let spec = json(&d.join("spectrum.json"));
    assert_eq!(spec["N_h"], 1);
    let k = spec["kappas"][0].as_f64().unwrap();
    assert!((k - 1.0 / 2f64.sqrt()).abs() < 0.02 / 2f64.sqrt());
    let rel = json(&d.join("manifest.json"))["result"]["relative_error"]
        .as_f64()
        .unwrap();
    assert!(rel < 5e-2, "{rel}");
}

#[test]
fn denoise_beyond_h_none_gives_zero() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_set(dir.path());
    let clean = read_signal(&g.join("clean.csv")).unwrap();
    let d2 = central_fd_d2(clean.len(), clean.grid().dx()).unwrap();
    let t = count_thresholds(&clean, &extreme_spectrum(&d2).unwrap(), 0.0).unwrap();
    let h = format!("{}", 1.001 * t.h_none);
    let d = dir.path().join("d");
    ok(&[
        "denoise",
        "--in",
        s(&g.join("clean.csv")),
        "--scheme",
        "fd",
        "--h",
        &h,
        "--out",
        s(&d),
    ]);
    assert_eq!(json(&d.join("spectrum.json"))["N_h"], 0);
    let est = read_signal(&d.join("estimate.csv")).unwrap();
    assert!(est.values().iter().all(|&v| v == 0.0));
}

#[test]
fn malformed_input_reports_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "x,value\n0,1\n0.5,2\n1,oops\n").unwrap();
    let r = scsa(&["denoise", "--in", s(&p), "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("row 4"), "{err}");

    let r = scsa(&["denoise", "--in", s(&dir.path().join("missing.csv"))]);
    assert_eq!(r.status.code(), Some(4));
    let r = scsa(&["denoise", "--in", s(&p), "--h", "-1"]);
    assert_eq!(r.status.code(), Some(2));
    let r = scsa(&["denoise", "--in", s(&p), "--scheme", "chebyshev"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn sweep_without_clean_and_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_set(dir.path());
    let o = dir.path().join("s");
    ok(&[
        "sweep",
        "--in",
        s(&g.join("noisy.csv")),
        "--h-grid",
        "0.3:0.2:1.5",
        "--out",
        s(&o),
    ]);
    let csv = fs::read_to_string(o.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("h,N_h,raw_residual,filtered_residual,true_error,noise_bound")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 6);
        assert!(cells[4].is_empty() && cells[5].is_empty());
        assert!(!cells[3].is_empty());
    }
    let summary = json(&o.join("summary.json"));
    assert!(summary["recommended_h"].as_f64().is_some());
    assert!(summary.get("true_error_minimizer").is_none());

    let one = dir.path().join("one");
    ok(&[
        "sweep",
        "--in",
        s(&g.join("noisy.csv")),
        "--h-grid",
        "0.5:0.1:0.5",
        "--format",
        "json",
        "--out",
        s(&one),
    ]);
    let summary = json(&one.join("summary.json"));
    assert_eq!(summary["no_interior_minimum"], true);
    assert_eq!(summary["recommended_h"], 0.5);
    assert_eq!(
        json(&one.join("sweep.json"))["points"]
            .as_array()
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn sweep_with_noise_bound_column() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_set(dir.path());
    let o = dir.path().join("s");
    ok(&[
        "sweep",
        "--in",
        s(&g.join("noisy.csv")),
        "--clean",
        s(&g.join("clean.csv")),
        "--h-grid",
        "0.4:0.3:1.0",
        "--sigma",
        "0.1",
        "--gaussian",
        "--out",
        s(&o),
    ]);
    let csv = fs::read_to_string(o.join("sweep.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let cells: Vec<&str> = row.split(',').collect();
        assert!(cells[4].parse::<f64>().unwrap() >= 0.0);
        assert!(cells[5].parse::<f64>().unwrap() >= 0.0);
    }
    assert!(json(&o.join("summary.json"))["true_error_minimizer"]
        .as_f64()
        .is_some());
}

#[test]
fn bound_probability_labels() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_set(dir.path());
    let noisy = g.join("noisy.csv");
    let a = dir.path().join("a");
    ok(&[
        "bound",
        "--in",
        s(&noisy),
        "--sigma",
        "1",
        "--gamma",
        "3",
        "--gaussian",
        "--out",
        s(&a),
    ]);
    let r = json(&a.join("bound.json"));
    assert_eq!(r["B"], 3.0);
    assert_eq!(r["p"], 0.997);
    assert_eq!(r["c5_satisfied"], "unknown");
    assert!(r.get("empirical_error").is_none());

    let b = dir.path().join("b");
    ok(&[
        "bound",
        "--in",
        s(&noisy),
        "--sigma",
        "1",
        "--gamma",
        "3",
        "--out",
        s(&b),
    ]);
    let r = json(&b.join("bound.json"));
    assert_eq!(r["B"], 3.0);
    assert!((r["p"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-15);

    let r = scsa(&[
        "bound",
        "--in",
        s(&noisy),
        "--out",
        s(&dir.path().join("c")),
    ]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn bound_is_zero_without_bound_states() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_set(dir.path());
    let o = dir.path().join("o");
    ok(&[
        "bound",
        "--in",
        s(&g.join("clean.csv")),
        "--scheme",
        "fd",
        "--h",
        "50",
        "--sigma",
        "0.1",
        "--gaussian",
        "--out",
        s(&o),
    ]);
    let r = json(&o.join("bound.json"));
    assert_eq!(r["N_h"], 0);
    assert_eq!(r["bound_value"], 0.0);
}

#[test]
fn bound_on_reference_setup_is_not_sharp() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&["generate", "--out", s(&g)]);
    let sigma = json(&g.join("manifest.json"))["result"]["sigma"]
        .as_f64()
        .unwrap();
    let o = dir.path().join("o");
    ok(&[
        "bound",
        "--in",
        s(&g.join("noisy.csv")),
        "--clean",
        s(&g.join("clean.csv")),
        "--h",
        "0.4",
        "--sigma",
        &format!("{sigma:e}"),
        "--gaussian",
        "--out",
        s(&o),
    ]);
    let r = json(&o.join("bound.json"));
    let bound = r["bound_value"].as_f64().unwrap();
    let empirical = r["empirical_error"].as_f64().unwrap();
    assert!(bound > empirical, "{bound} vs {empirical}");
    assert_eq!(r["c5_satisfied"], true);
}

#[test]
fn reference_sweep_and_denoise_at_0_4() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&["generate", "--out", s(&g)]);
    let (noisy, clean) = (g.join("noisy.csv"), g.join("clean.csv"));
    let o = dir.path().join("s");
    ok(&[
        "sweep",
        "--in",
        s(&noisy),
        "--clean",
        s(&clean),
        "--out",
        s(&o),
    ]);
    let summary = json(&o.join("summary.json"));
    let n_h: Vec<u64> = summary["N_h"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[1].as_u64().unwrap())
        .collect();
    assert_eq!(n_h.len(), 19);
    assert!(n_h.windows(2).all(|w| w[1] <= w[0]));

    let clean_sig = read_signal(&clean).unwrap();
    let norm = clean_sig.energy().sqrt();
    let min_true = fs::read_to_string(o.join("sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);

    let d = dir.path().join("d");
    ok(&[
        "denoise",
        "--in",
        s(&noisy),
        "--clean",
        s(&clean),
        "--h",
        "0.4",
        "--out",
        s(&d),
    ]);
    let rel = json(&d.join("manifest.json"))["result"]["relative_error"]
        .as_f64()
        .unwrap();
    assert!(
        rel <= min_true / norm + 0.10,
        "{rel} vs {}",
        min_true / norm
    );
}

#[test]
fn nh_profile_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(0.0, 12.0, 121).unwrap();
    let p = dir.path().join("y.csv");
    scsa_core::io::write_signal(&p, &sech2_signal(&grid, 6.0)).unwrap();
    let o = dir.path().join("p");
    ok(&[
        "nh-profile",
        "--in",
        s(&p),
        "--scheme",
        "fd",
        "--h-grid",
        "0.1:0.1:2.0",
        "--out",
        s(&o),
    ]);
    let csv = fs::read_to_string(o.join("nh_profile.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    let m = json(&o.join("manifest.json"));
    assert_eq!(m["result"]["non_increasing"], true);
    assert_eq!(m["result"]["d2_definite"], true);
    assert!(m["result"]["thresholds"]["h_none"].as_f64().is_some());

    let o2 = dir.path().join("p2");
    ok(&[
        "nh-profile",
        "--in",
        s(&p),
        "--h-grid",
        "0.2:0.6:2.0",
        "--format",
        "json",
        "--out",
        s(&o2),
    ]);
    let m = json(&o2.join("manifest.json"));
    assert_eq!(m["result"]["thresholds"]["h_none"], "inf");
    assert_eq!(m["result"]["d2_definite"], false);
    assert_eq!(
        json(&o2.join("nh_profile.json")).as_array().unwrap().len(),
        4
    );
}
