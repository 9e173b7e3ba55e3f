use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use slitcorr::config::{parse_config, ScenarioConfig};
use slitcorr_core::analytic::{correlation_map, Normalization, PathMode, ScanPoint};
use slitcorr_core::model::linspace;
use slitcorr_core::DetectorSpec;

fn slitcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slitcorr")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[mask_t]\nseparation = 0.8e-3\n[run]\nseed = 9\n");
    let o = slitcorr(&["print-config", "--config", &cfg, "--engine", "both"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let parsed = parse_config(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let mut expected = ScenarioConfig::default();
    expected.mask_t.separation = 0.8e-3;
    expected.run.seed = 9;
    expected.run.engine = slitcorr::Engine::Both;
    assert_eq!(parsed, expected);
}

#[test]
fn invalid_value_exits_with_usage_code_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[setup]\nz = -1.0\n");
    let o = slitcorr(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("setup.z"), "{}", stderr(&o));
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[setup]\nz = 0.07\nwavelenght = 1e-6\n");
    let o = slitcorr(&["print-config", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_with_usage_code() {
    assert_eq!(slitcorr(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(slitcorr(&["run", "--engine", "quantum"]).status.code(), Some(1));
    assert_eq!(
        slitcorr(&["run", "--engine", "montecarlo", "--realizations", "10"]).status.code(),
        Some(1)
    );
}

#[test]
fn unresolvable_source_grid_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[setup]\ncoherence_length = 2e-6\n[run]\nengine = \"montecarlo\"\nrealizations = 200\nsource_points = 128\n",
    );
    let out = dir.path().join("out");
    let o = slitcorr(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn analytic_column_matches_direct_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[run]\nscenario = \"custom\"\n[scan]\naxis = \"detector_T\"\nstart = -0.5e-3\nstop = 0.5e-3\npoints = 51\n",
    );
    let out = dir.path().join("out");
    let o = slitcorr(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["files"][0], "custom_scan.csv");

    let (header, rows) = read_csv(&out.join("custom_scan.csv"));
    assert_eq!(header, ["s_m", "XC_m", "XT_m", "xC_m", "xT_m", "corr_norm", "corr_mc", "corr_mc_stderr"]);
    let c = ScenarioConfig::default();
    let setup = c.setup().unwrap();
    let xs = linspace(-0.5e-3, 0.5e-3, 51);
    let pts: Vec<_> = xs
        .iter()
        .map(|&x| ScanPoint {
            mask_c: c.mask_c().unwrap(),
            mask_t: c.mask_t().unwrap(),
            det_c: DetectorSpec::new(0.0, 50e-6).unwrap(),
            det_t: DetectorSpec::new(x, 50e-6).unwrap(),
        })
        .collect();
    let direct = correlation_map(&setup, &pts, PathMode::FourPath, Normalization::Peak);
    for (row, d) in rows.iter().zip(&direct) {
        let v: f64 = row[5].parse().unwrap();
        assert!((v - d).abs() <= 1e-11 * d.abs().max(1e-300) + 1e-300, "{v} vs {d}");
        assert!(row[6].is_empty() && row[7].is_empty());
    }
}

#[test]
fn csv_is_lf_terminated_with_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = slitcorr(&["run", "--scenario", "fig3bc", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("fig3bc_first_order_T.csv")).unwrap();
    assert!(!text.contains('\r'));
    let first = text.lines().nth(1).unwrap();
    let mantissa = first.split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 12);
}

#[test]
fn monte_carlo_csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[run]\nscenario = \"custom\"\nengine = \"both\"\nrealizations = 500\nsource_points = 256\n\
         [scan]\naxis = \"detector_diagonal\"\nstart = -0.5e-3\nstop = 0.5e-3\npoints = 21\n",
    );
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_slitcorr"))
            .env("RAYON_NUM_THREADS", threads)
            .args(["run", "--config", &cfg, "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("custom_scan.csv")).unwrap()
    };
    let (a, b) = (run("1", "one"), run("4", "four"));
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().lines().nth(1).unwrap().split(',').all(|f| !f.is_empty()));
}
