//! The acceptance suite behind `slitcorr selftest`.
//!
//! Every criterion runs at the default geometry. The full set of tables is
//! generated twice so the determinism criterion can compare the CSV bytes.

use serde::Serialize;
use slitcorr_core::analytic::{correlation_map, Normalization, PathMode};
use slitcorr_core::model::linspace;
use slitcorr_core::speckle::{run_plan, MonteCarloConfig, MonteCarloPlan};
use slitcorr_core::{DetectorSpec, SingleSlit};

use crate::config::{Engine, ScenarioConfig};
use crate::scenario::{self, Context, Point, Report, RunError, ScenarioOutput};
use crate::table::Table;

pub const MAP_REALIZATIONS: u64 = 20_000;
pub const FIRST_ORDER_REALIZATIONS: u64 = 10_000;
pub const SIEGERT_REALIZATIONS: u64 = 100_000;

const MM: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}: {} ({})",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone)]
pub struct SelftestResult {
    pub output: ScenarioOutput,
    pub criteria: Vec<Criterion>,
}

impl SelftestResult {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

fn context<'a>(seed: u64, realizations: u64, progress: &'a dyn Fn(&str)) -> Result<Context<'a>, RunError> {
    let mut cfg = ScenarioConfig::default();
    cfg.run.engine = Engine::Both;
    cfg.run.seed = seed;
    cfg.run.realizations = realizations;
    Context::from_config(&cfg, progress)
}

/// Normalized fluctuation correlation of co-located point detectors behind
/// co-located pinholes.
fn siegert(ctx: &Context, seed: u64) -> Result<ScenarioOutput, RunError> {
    (ctx.progress)(&format!("siegert: {SIEGERT_REALIZATIONS} realizations"));
    let pinhole = SingleSlit::new(0.0, 0.0)?;
    let mut plan = MonteCarloPlan::new();
    let (mc, mt) = (plan.add_mask_c(&pinhole), plan.add_mask_t(&pinhole));
    let dc = plan.add_detector_c(mc, DetectorSpec::point(0.0))?;
    let dt = plan.add_detector_t(mt, DetectorSpec::point(0.0))?;
    plan.add_pair(dc, dt)?;
    let r = run_plan(&ctx.setup, &plan, &MonteCarloConfig::new(SIEGERT_REALIZATIONS, seed))?
        .accumulator
        .finalize()?[0];
    let mut t = Table::new(
        "siegert",
        &["realizations", "mean_IC", "mean_IT", "fluct_corr", "normalized", "normalized_stderr"],
    );
    t.push(vec![
        Some(r.n as f64),
        Some(r.mean_ic),
        Some(r.mean_it),
        Some(r.fluct_corr),
        Some(r.normalized),
        Some(r.normalized_std_error),
    ]);
    let mut report = Report::default();
    report.metrics.insert("siegert_normalized".to_string(), r.normalized);
    report.metrics.insert("siegert_normalized_stderr".to_string(), r.normalized_std_error);
    Ok(ScenarioOutput {
        tables: vec![t],
        report,
    })
}

/// Four-path and two-path detector maps at the default separations and with
/// both separations reduced to a fifth of the coherence length.
fn path_reduction(ctx: &Context) -> Result<ScenarioOutput, RunError> {
    (ctx.progress)("path reduction: four-path and two-path maps");
    let narrow = ctx.setup.source().coherence_length() / 5.0;
    let cases = [
        ("default", ctx.mask_c, ctx.mask_t),
        ("narrow", ctx.mask_c.with_separation(narrow)?, ctx.mask_t.with_separation(narrow)?),
    ];
    let grid = linspace(-scenario::MAP_HALF_RANGE, scenario::MAP_HALF_RANGE, scenario::MAP_POINTS);
    let mut t = Table::new(
        "path_reduction",
        &["xC_m", "xT_m", "four_default", "two_default", "four_narrow", "two_narrow"],
    );
    let mut cols = Vec::new();
    let mut report = Report::default();
    for (label, c, tm) in cases {
        let pts: Vec<Point> = grid
            .iter()
            .flat_map(|&xc| {
                grid.iter().map(move |&xt| Point {
                    mask_c: c,
                    mask_t: tm,
                    det_c: DetectorSpec::point(xc),
                    det_t: DetectorSpec::point(xt),
                })
            })
            .collect();
        let four = correlation_map(&ctx.setup, &pts, PathMode::FourPath, Normalization::Peak);
        let two = correlation_map(&ctx.setup, &pts, PathMode::TwoPath, Normalization::Peak);
        let diff = four.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.metrics.insert(format!("path_max_difference_{label}"), diff);
        cols.push(four);
        cols.push(two);
    }
    let mut k = 0;
    for &xc in &grid {
        for &xt in &grid {
            t.push(vec![
                Some(xc),
                Some(xt),
                Some(cols[0][k]),
                Some(cols[1][k]),
                Some(cols[2][k]),
                Some(cols[3][k]),
            ]);
            k += 1;
        }
    }
    report.metrics.insert("path_narrow_separation_m".to_string(), narrow);
    Ok(ScenarioOutput {
        tables: vec![t],
        report,
    })
}

/// All selftest tables for one seed.
pub fn generate(seed: u64, progress: &dyn Fn(&str)) -> Result<ScenarioOutput, RunError> {
    let maps = context(seed, MAP_REALIZATIONS, progress)?;
    let first_order = context(seed, FIRST_ORDER_REALIZATIONS, progress)?;
    Ok(scenario::merge_outputs(vec![
        scenario::fig2(&maps)?,
        scenario::fig3a(&maps)?,
        scenario::fig3bc(&first_order)?,
        siegert(&maps, seed)?,
        path_reduction(&maps)?,
    ]))
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn fmt_mm(x: f64) -> String {
    format!("{:.5} mm", x / MM)
}

fn metric(report: &Report, key: &str) -> Option<f64> {
    report.metrics.get(key).copied()
}

fn criterion(id: u8, name: &'static str, checks: Vec<(bool, String)>) -> Criterion {
    Criterion {
        id,
        name,
        passed: !checks.is_empty() && checks.iter().all(|c| c.0),
        detail: checks.into_iter().map(|c| c.1).collect::<Vec<_>>().join("; "),
    }
}

fn missing(what: &str) -> (bool, String) {
    (false, format!("{what}: missing"))
}

fn mask_scan_period(r: &Report) -> Criterion {
    let mut checks = Vec::new();
    let scans: Vec<&str> = r
        .fits
        .iter()
        .filter(|f| f.scan.starts_with("fig2_") && f.engine == "analytic")
        .map(|f| f.scan.as_str())
        .collect();
    for scan in &scans {
        let a = r.fit(scan, "analytic").unwrap();
        match a.period_m {
            Some(p) => checks.push((
                rel(p, a.predicted_period_m) < 0.01,
                format!("{scan} analytic {} vs {}", fmt_mm(p), fmt_mm(a.predicted_period_m)),
            )),
            None => checks.push(missing(scan)),
        }
    }
    // Monte Carlo against the analytic fit of the undisplaced scan
    match (r.fit(scans.first().copied().unwrap_or(""), "analytic"), r.fit(scans.first().copied().unwrap_or(""), "montecarlo")) {
        (Some(a), Some(m)) => match (a.period_m, m.period_m, m.period_stderr_m) {
            (Some(pa), Some(pm), Some(se)) => checks.push((
                (pm - pa).abs() < 3.0 * se,
                format!("Monte Carlo {} ± {} vs analytic {}", fmt_mm(pm), fmt_mm(se), fmt_mm(pa)),
            )),
            _ => checks.push(missing("Monte Carlo period")),
        },
        _ => checks.push(missing("Monte Carlo fit")),
    }
    criterion(1, "mask-scan fringe period", checks)
}

fn shift_law(r: &Report) -> Criterion {
    let checks = r
        .shifts
        .iter()
        .filter(|s| s.engine == "analytic")
        .map(|s| match s.shift_m {
            Some(v) => (
                (v - s.predicted_shift_m).abs() < 0.01 * MM,
                format!("{} vs {}", fmt_mm(v), fmt_mm(s.predicted_shift_m)),
            ),
            None => (false, format!("{}: {}", s.scans, s.error.clone().unwrap_or_default())),
        })
        .collect();
    criterion(2, "fringe-shift law", checks)
}

fn cut_periods(r: &Report, id: u8, name: &'static str, scans: &[&str], tol: f64) -> Criterion {
    let checks = scans
        .iter()
        .map(|scan| match r.fit(scan, "analytic") {
            Some(f) => match f.period_m {
                Some(p) => (
                    rel(p, f.predicted_period_m) < tol,
                    format!("{scan} {} vs {}", fmt_mm(p), fmt_mm(f.predicted_period_m)),
                ),
                None => (false, format!("{scan}: {}", f.error.clone().unwrap_or_default())),
            },
            None => missing(scan),
        })
        .collect();
    criterion(id, name, checks)
}

fn first_order_contrast(r: &Report) -> Criterion {
    let checks = r
        .visibilities
        .iter()
        .filter(|v| v.scan.starts_with("fig3bc_"))
        .map(|v| {
            let label = format!("{} {} {}", v.mask, v.illumination, v.engine);
            match v.visibility {
                Some(x) => {
                    let ok = if v.illumination == "laser" { x > 0.95 } else { x < 0.1 };
                    (ok, format!("{label} {x:.3}"))
                }
                None => missing(&label),
            }
        })
        .collect();
    criterion(5, "first-order contrast", checks)
}

fn threshold(id: u8, name: &'static str, r: &Report, key: &str, ok: impl Fn(f64) -> bool) -> (u8, &'static str, (bool, String)) {
    let check = match metric(r, key) {
        Some(v) => (ok(v), format!("{key} = {v:.4}")),
        None => missing(key),
    };
    (id, name, check)
}

/// Evaluates criteria 1–9 on one selftest output.
pub fn evaluate(out: &ScenarioOutput) -> Vec<Criterion> {
    let r = &out.report;
    let mut v = vec![
        mask_scan_period(r),
        shift_law(r),
        cut_periods(r, 3, "detector-scan periods", &["fig3a_cut_xT", "fig3a_cut_xC"], 0.01),
        cut_periods(r, 4, "diagonal beating", &["fig3a_diagonal", "fig3a_antidiagonal"], 0.02),
        first_order_contrast(r),
    ];
    let (id, name, c) = threshold(6, "Siegert property", r, "siegert_normalized", |x| (0.9..=1.1).contains(&x));
    v.push(criterion(id, name, vec![c]));
    let (id, name, c) = threshold(7, "Monte Carlo map matches analytic", r, "map_rms_deviation", |x| x < 0.05);
    v.push(criterion(id, name, vec![c]));
    let a = threshold(8, "", r, "path_max_difference_default", |x| x < 0.05).2;
    let b = threshold(8, "", r, "path_max_difference_narrow", |x| x > 0.2).2;
    v.push(criterion(8, "four-path versus two-path", vec![a, b]));
    let checks = ["analytic", "montecarlo"]
        .iter()
        .map(|e| threshold(9, "", r, &format!("bucket_visibility_ratio_{e}"), |x| x < 0.2).2)
        .collect();
    v.push(criterion(9, "bucket-detector collapse", checks));
    v
}

fn determinism(a: &ScenarioOutput, b: &ScenarioOutput) -> Criterion {
    let mut checks = Vec::new();
    if a.tables.len() != b.tables.len() {
        checks.push((false, "table count differs".to_string()));
    }
    let mut bytes = 0;
    for (x, y) in a.tables.iter().zip(&b.tables) {
        let (bx, by) = (x.to_csv_bytes(), y.to_csv_bytes());
        bytes += bx.len();
        if bx != by {
            checks.push((false, format!("{}.csv differs", x.name)));
        }
    }
    if checks.is_empty() {
        checks.push((true, format!("{} files, {bytes} bytes identical", a.tables.len())));
    }
    criterion(10, "determinism", checks)
}

/// Generates the selftest tables twice and evaluates all criteria.
pub fn run_selftest(seed: u64, progress: &dyn Fn(&str)) -> Result<SelftestResult, RunError> {
    progress("selftest: first pass");
    let mut first = generate(seed, progress)?;
    progress("selftest: second pass");
    let second = generate(seed, progress)?;
    let mut criteria = evaluate(&first);
    criteria.push(determinism(&first, &second));
    first.report.scenario = "selftest";
    first.report.engine = Engine::Both.name();
    first.report.seed = seed;
    first.report.realizations = MAP_REALIZATIONS;
    first.report.criteria = criteria.clone();
    Ok(SelftestResult {
        output: first,
        criteria,
    })
}
