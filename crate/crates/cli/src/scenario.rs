//! Named experiment reproductions and custom sweeps.
//!
//! Every scenario collects its correlation scans into one Monte Carlo plan, so
//! all scans of a run share the same realizations.

use std::collections::BTreeMap;

use serde::Serialize;
use slitcorr_core::analytic::{
    correlation_map, first_order_intensity_with_detector, Illumination, Normalization, PathMode, ScanPoint,
};
use slitcorr_core::correlator::{bucket_integrate, bucket_integrate_values, CorrelationResult, CorrelatorError};
use slitcorr_core::fringe::{
    estimate_mask_displacement, fit_fringe, fringe_shift, fringe_visibility, invert_period, FringeError, FringeFit,
    SensingEstimate,
};
use slitcorr_core::model::linspace;
use slitcorr_core::speckle::{first_order_scan, run_plan, MonteCarloConfig, MonteCarloPlan, SpeckleError};
use slitcorr_core::{DetectorSpec, DoubleSlitMask, ModelError, OpticalSetup, ScanAxis};
use thiserror::Error;

use crate::config::{ConfigError, Engine, Scenario, ScenarioConfig};
use crate::table::Table;

pub type Point = ScanPoint<DoubleSlitMask, DoubleSlitMask>;

const MM: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("geometry: {0}")]
    Model(#[from] ModelError),
    #[error("Monte Carlo: {0}")]
    Speckle(#[from] SpeckleError),
    #[error("correlator: {0}")]
    Correlator(#[from] CorrelatorError),
    #[error("fringe analysis: {0}")]
    Fringe(#[from] FringeError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub scan: String,
    pub engine: &'static str,
    pub axis: &'static str,
    pub period_m: Option<f64>,
    pub period_stderr_m: Option<f64>,
    pub predicted_period_m: f64,
    pub relative_error: Option<f64>,
    pub sensed: Option<SensingEstimate>,
    pub error: Option<String>,
    #[serde(skip)]
    pub fit: Option<FringeFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftRecord {
    pub scans: String,
    pub engine: &'static str,
    pub shift_m: Option<f64>,
    pub predicted_shift_m: f64,
    /// Mask C displacement inferred from the shift.
    pub displacement_c_m: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilityRecord {
    pub scan: String,
    pub engine: &'static str,
    pub mask: &'static str,
    pub illumination: &'static str,
    pub visibility: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub scenario: &'static str,
    pub engine: &'static str,
    pub seed: u64,
    pub realizations: u64,
    pub files: Vec<String>,
    pub fits: Vec<FitRecord>,
    pub shifts: Vec<ShiftRecord>,
    pub visibilities: Vec<VisibilityRecord>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<crate::acceptance::Criterion>,
}

impl Report {
    pub fn fit(&self, scan: &str, engine: &str) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.scan == scan && f.engine == engine)
    }

    pub fn shift(&self, scans: &str, engine: &str) -> Option<&ShiftRecord> {
        self.shifts.iter().find(|f| f.scans == scans && f.engine == engine)
    }

    pub fn visibility(&self, scan: &str, engine: &str) -> Option<&VisibilityRecord> {
        self.visibilities.iter().find(|f| f.scan == scan && f.engine == engine)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub report: Report,
}

impl ScenarioOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Geometry, Monte Carlo settings and progress sink shared by a run.
pub struct Context<'a> {
    pub setup: OpticalSetup,
    pub mask_c: DoubleSlitMask,
    pub mask_t: DoubleSlitMask,
    pub detector_aperture: f64,
    pub monte_carlo: Option<MonteCarloConfig>,
    pub progress: &'a dyn Fn(&str),
}

impl<'a> Context<'a> {
    pub fn from_config(cfg: &ScenarioConfig, progress: &'a dyn Fn(&str)) -> Result<Self, RunError> {
        cfg.validate()?;
        let monte_carlo = cfg.run.engine.uses_monte_carlo().then(|| {
            MonteCarloConfig::new(cfg.run.realizations, cfg.run.seed).with_source_points(cfg.run.source_points)
        });
        Ok(Self {
            setup: cfg.setup()?,
            mask_c: cfg.mask_c()?,
            mask_t: cfg.mask_t()?,
            detector_aperture: cfg.detector.aperture,
            monte_carlo,
            progress,
        })
    }

    fn detector(&self, x: f64) -> Result<DetectorSpec, RunError> {
        Ok(DetectorSpec::new(x, self.detector_aperture)?)
    }

    fn point(&self, mask_c: DoubleSlitMask, mask_t: DoubleSlitMask, x_c: f64, x_t: f64) -> Result<Point, RunError> {
        Ok(Point {
            mask_c,
            mask_t,
            det_c: self.detector(x_c)?,
            det_t: self.detector(x_t)?,
        })
    }
}

/// Maps scan points onto a shared Monte Carlo plan, reusing masks and detectors.
#[derive(Default)]
struct PlanBuilder {
    plan: MonteCarloPlan,
    masks_c: Vec<DoubleSlitMask>,
    masks_t: Vec<DoubleSlitMask>,
    dets_c: Vec<(usize, DetectorSpec)>,
    dets_t: Vec<(usize, DetectorSpec)>,
}

#[derive(Debug, Clone, Copy)]
struct PairRef {
    pair: usize,
    det_t: usize,
}

fn find_or_push<T: PartialEq + Copy>(items: &mut Vec<T>, item: T) -> (usize, bool) {
    match items.iter().position(|x| *x == item) {
        Some(i) => (i, false),
        None => {
            items.push(item);
            (items.len() - 1, true)
        }
    }
}

impl PlanBuilder {
    fn add(&mut self, p: &Point) -> Result<PairRef, RunError> {
        let (mc, new) = find_or_push(&mut self.masks_c, p.mask_c);
        if new {
            self.plan.add_mask_c(&p.mask_c);
        }
        let (mt, new) = find_or_push(&mut self.masks_t, p.mask_t);
        if new {
            self.plan.add_mask_t(&p.mask_t);
        }
        let (dc, new) = find_or_push(&mut self.dets_c, (mc, p.det_c));
        if new {
            self.plan.add_detector_c(mc, p.det_c)?;
        }
        let (dt, new) = find_or_push(&mut self.dets_t, (mt, p.det_t));
        if new {
            self.plan.add_detector_t(mt, p.det_t)?;
        }
        Ok(PairRef {
            pair: self.plan.add_pair(dc, dt)?,
            det_t: dt,
        })
    }

    fn add_all(&mut self, points: &[Point]) -> Result<Vec<PairRef>, RunError> {
        points.iter().map(|p| self.add(p)).collect()
    }
}

struct McResults {
    pairs: Vec<CorrelationResult>,
    mean_t: Vec<f64>,
}

fn run_monte_carlo(ctx: &Context, builder: &PlanBuilder, what: &str) -> Result<Option<McResults>, RunError> {
    let Some(mc) = &ctx.monte_carlo else {
        return Ok(None);
    };
    (ctx.progress)(&format!(
        "{what}: {} realizations over {} detector pairs",
        mc.realizations,
        builder.plan.pairs().len()
    ));
    let out = run_plan(&ctx.setup, &builder.plan, mc)?;
    Ok(Some(McResults {
        pairs: out.accumulator.finalize()?,
        mean_t: out.mean_intensity_t,
    }))
}

fn peak(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

const CORR_COLUMNS: [&str; 8] = ["s_m", "XC_m", "XT_m", "xC_m", "xT_m", "corr_norm", "corr_mc", "corr_mc_stderr"];

/// Correlation table over `points` with scan coordinate `s`; both columns peak-normalized.
fn correlation_table(
    name: &str,
    ctx: &Context,
    s: &[f64],
    points: &[Point],
    mc: Option<&[CorrelationResult]>,
) -> Table {
    let analytic = correlation_map(&ctx.setup, points, PathMode::FourPath, Normalization::Peak);
    let mc_peak = mc.map(|r| peak(r.iter().map(|x| x.fluct_corr)));
    let mut t = Table::new(name, &CORR_COLUMNS);
    for (i, p) in points.iter().enumerate() {
        let m = mc.map(|r| &r[i]);
        t.push(vec![
            Some(s[i]),
            Some(p.mask_c.center()),
            Some(p.mask_t.center()),
            Some(p.det_c.position()),
            Some(p.det_t.position()),
            Some(analytic[i]),
            m.zip(mc_peak).map(|(r, pk)| r.fluct_corr / pk),
            m.zip(mc_peak).map(|(r, pk)| r.std_error / pk),
        ]);
    }
    t
}

fn raw_analytic(ctx: &Context, points: &[Point]) -> Vec<f64> {
    correlation_map(&ctx.setup, points, PathMode::FourPath, Normalization::Raw)
}

fn select(results: &McResults, refs: &[PairRef]) -> Vec<CorrelationResult> {
    refs.iter().map(|r| results.pairs[r.pair]).collect()
}

fn fit_record(
    ctx: &Context,
    scan: &str,
    engine: &'static str,
    axis: ScanAxis,
    xs: &[f64],
    ys: &[f64],
    predicted: f64,
) -> FitRecord {
    let mut rec = FitRecord {
        scan: scan.to_string(),
        engine,
        axis: axis.name(),
        period_m: None,
        period_stderr_m: None,
        predicted_period_m: predicted,
        relative_error: None,
        sensed: None,
        error: None,
        fit: None,
    };
    match fit_fringe(xs, ys) {
        Ok(f) => {
            rec.period_m = Some(f.period);
            rec.period_stderr_m = Some(f.period_stderr);
            rec.relative_error = Some(f.period / predicted - 1.0);
            rec.sensed = invert_period(f.period, f.period_stderr, &ctx.setup, axis).ok();
            rec.fit = Some(f);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

fn shift_record(scans: String, engine: &'static str, a: &FitRecord, b: &FitRecord, predicted: f64, ctx: &Context) -> ShiftRecord {
    let mut rec = ShiftRecord {
        scans,
        engine,
        shift_m: None,
        predicted_shift_m: predicted,
        displacement_c_m: None,
        error: None,
    };
    match (&a.fit, &b.fit) {
        (Some(fa), Some(fb)) => match fringe_shift(fa, fb) {
            Ok(s) => {
                rec.shift_m = Some(s);
                rec.displacement_c_m =
                    Some(estimate_mask_displacement(s, ctx.mask_c.separation(), ctx.mask_t.separation()).value);
            }
            Err(e) => rec.error = Some(e.to_string()),
        },
        _ => rec.error = Some("missing fringe fit".to_string()),
    }
    rec
}

fn visibility_record(
    scan: &str,
    engine: &'static str,
    mask: &'static str,
    illumination: Illumination,
    xs: &[f64],
    ys: &[f64],
    period: f64,
) -> VisibilityRecord {
    let v = fringe_visibility(xs, ys, period);
    VisibilityRecord {
        scan: scan.to_string(),
        engine,
        mask,
        illumination: match illumination {
            Illumination::Laser => "laser",
            Illumination::Chaotic => "chaotic",
        },
        visibility: v.as_ref().ok().copied(),
        error: v.err().map(|e| e.to_string()),
    }
}

pub const FIG2_OFFSETS_MM: [f64; 3] = [0.0, 0.11, 0.17];

/// Mask-T centre scans at three mask-C displacements, detectors on axis.
pub fn fig2(ctx: &Context) -> Result<ScenarioOutput, RunError> {
    (ctx.progress)("fig2: mask scans");
    let xs = linspace(-0.4 * MM, 0.5 * MM, 61);
    let mut groups = Vec::new();
    for dx in FIG2_OFFSETS_MM {
        let mc = ctx.mask_c.with_center(ctx.mask_c.center() + dx * MM)?;
        let pts = xs
            .iter()
            .map(|&x| ctx.point(mc, ctx.mask_t.with_center(x)?, 0.0, 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        groups.push(pts);
    }
    let all: Vec<Point> = groups.concat();
    let mut builder = PlanBuilder::default();
    let refs = builder.add_all(&all)?;
    let mc = run_monte_carlo(ctx, &builder, "fig2")?;

    let s: Vec<f64> = (0..groups.len()).flat_map(|_| xs.iter().copied()).collect();
    let mc_all = mc.as_ref().map(|r| select(r, &refs));
    let mut tables = vec![correlation_table("fig2_mask_scan", ctx, &s, &all, mc_all.as_deref())];

    let predicted = ctx.setup.lambda_z() / ctx.mask_t.separation();
    let mut report = Report::default();
    let n = xs.len();
    for (g, dx) in FIG2_OFFSETS_MM.iter().enumerate() {
        let scan = format!("fig2_dXC_{dx:.2}mm");
        let range = g * n..(g + 1) * n;
        let raw = raw_analytic(ctx, &all[range.clone()]);
        report
            .fits
            .push(fit_record(ctx, &scan, "analytic", ScanAxis::MaskTCenter, &xs, &raw, predicted));
        if let Some(m) = &mc_all {
            let ys: Vec<f64> = m[range].iter().map(|r| r.fluct_corr).collect();
            report
                .fits
                .push(fit_record(ctx, &scan, "montecarlo", ScanAxis::MaskTCenter, &xs, &ys, predicted));
        }
    }
    for engine in ["analytic", "montecarlo"] {
        let fits: Vec<&FitRecord> = report.fits.iter().filter(|f| f.engine == engine).collect();
        if fits.is_empty() {
            continue;
        }
        let periods: Vec<f64> = fits.iter().filter_map(|f| f.period_m).collect();
        if !periods.is_empty() {
            report.metrics.insert(
                format!("fig2_mean_period_m_{engine}"),
                periods.iter().sum::<f64>() / periods.len() as f64,
            );
        }
        for g in 1..fits.len() {
            let dx = FIG2_OFFSETS_MM[g] * MM;
            let predicted_shift = dx * ctx.mask_c.separation() / ctx.mask_t.separation();
            let rec = shift_record(
                format!("{}->{}", fits[0].scan, fits[g].scan),
                if engine == "analytic" { "analytic" } else { "montecarlo" },
                fits[0],
                fits[g],
                predicted_shift,
                ctx,
            );
            report.shifts.push(rec);
        }
    }

    // first-order trace at the T detector during the undisplaced scan
    let mut trace = Table::new("fig2_first_order_T", &["XT_m", "intensity_norm", "intensity_mc_norm"]);
    let an: Vec<f64> = all[..n]
        .iter()
        .map(|p| first_order_intensity_with_detector(&ctx.setup, &p.mask_t, &p.det_t, Illumination::Chaotic))
        .collect();
    let an_peak = peak(an.iter().copied());
    let mc_trace: Option<Vec<f64>> = mc.as_ref().map(|r| refs[..n].iter().map(|p| r.mean_t[p.det_t]).collect());
    let mc_peak = mc_trace.as_ref().map(|v| peak(v.iter().copied()));
    for i in 0..n {
        trace.push(vec![
            Some(xs[i]),
            Some(an[i] / an_peak),
            mc_trace.as_ref().zip(mc_peak).map(|(v, p)| v[i] / p),
        ]);
    }
    tables.push(trace);
    Ok(ScenarioOutput { tables, report })
}

pub const MAP_POINTS: usize = 41;
pub const MAP_HALF_RANGE: f64 = 0.6 * MM;
pub const CUT_POINTS: usize = 121;
pub const DIAGONAL_HALF_RANGE: f64 = 2.0 * MM;
pub const ANTIDIAGONAL_HALF_RANGE: f64 = 0.3 * MM;
pub const BUCKET_HALF_RANGE: f64 = 3.0 * MM;
pub const BUCKET_T_POINTS: usize = 241;
pub const BUCKET_C_POINTS: usize = 61;

struct Cut {
    name: &'static str,
    axis: ScanAxis,
    half_range: f64,
    map: fn(f64) -> (f64, f64),
}

const CUTS: [Cut; 4] = [
    Cut {
        name: "fig3a_cut_xC",
        axis: ScanAxis::DetectorC,
        half_range: MAP_HALF_RANGE,
        map: |s| (s, 0.0),
    },
    Cut {
        name: "fig3a_cut_xT",
        axis: ScanAxis::DetectorT,
        half_range: MAP_HALF_RANGE,
        map: |s| (0.0, s),
    },
    Cut {
        name: "fig3a_diagonal",
        axis: ScanAxis::DetectorDiagonal,
        half_range: DIAGONAL_HALF_RANGE,
        map: |s| (s, s),
    },
    Cut {
        name: "fig3a_antidiagonal",
        axis: ScanAxis::DetectorAntidiagonal,
        half_range: ANTIDIAGONAL_HALF_RANGE,
        map: |s| (s, -s),
    },
];

fn predicted_detector_period(ctx: &Context, axis: ScanAxis) -> f64 {
    let (dc, dt) = (ctx.mask_c.separation(), ctx.mask_t.separation());
    let lf = ctx.setup.lambda_f();
    match axis {
        ScanAxis::DetectorC => lf / dc,
        ScanAxis::DetectorT => lf / dt,
        ScanAxis::DetectorDiagonal => lf / (dc - dt).abs(),
        ScanAxis::DetectorAntidiagonal => lf / (dc + dt),
        ScanAxis::MaskTCenter => ctx.setup.lambda_z() / dt,
        ScanAxis::MaskCCenter => ctx.setup.lambda_z() / dc,
        ScanAxis::Detector2d => f64::NAN,
    }
}

/// Detector-plane correlation map, its axis and diagonal cuts, and the
/// bucket-detector profile.
pub fn fig3a(ctx: &Context) -> Result<ScenarioOutput, RunError> {
    (ctx.progress)("fig3a: detector map, cuts and bucket profile");
    let (mc_mask, mt_mask) = (ctx.mask_c, ctx.mask_t);
    let grid = linspace(-MAP_HALF_RANGE, MAP_HALF_RANGE, MAP_POINTS);
    let mut map_pts = Vec::with_capacity(MAP_POINTS * MAP_POINTS);
    for &xc in &grid {
        for &xt in &grid {
            map_pts.push(ctx.point(mc_mask, mt_mask, xc, xt)?);
        }
    }
    let mut cut_pts = Vec::new();
    let mut cut_s = Vec::new();
    for cut in &CUTS {
        let s = linspace(-cut.half_range, cut.half_range, CUT_POINTS);
        let pts = s
            .iter()
            .map(|&v| {
                let (a, b) = (cut.map)(v);
                ctx.point(mc_mask, mt_mask, a, b)
            })
            .collect::<Result<Vec<_>, _>>()?;
        cut_pts.push(pts);
        cut_s.push(s);
    }
    let bucket_c = linspace(-MAP_HALF_RANGE, MAP_HALF_RANGE, BUCKET_C_POINTS);
    let bucket_t = linspace(-BUCKET_HALF_RANGE, BUCKET_HALF_RANGE, BUCKET_T_POINTS);
    let mut bucket_pts = Vec::with_capacity(bucket_c.len() * bucket_t.len());
    for &xc in &bucket_c {
        for &xt in &bucket_t {
            bucket_pts.push(ctx.point(mc_mask, mt_mask, xc, xt)?);
        }
    }

    let mut builder = PlanBuilder::default();
    let map_refs = builder.add_all(&map_pts)?;
    let cut_refs = cut_pts.iter().map(|p| builder.add_all(p)).collect::<Result<Vec<_>, _>>()?;
    let bucket_refs = builder.add_all(&bucket_pts)?;
    let mc = run_monte_carlo(ctx, &builder, "fig3a")?;

    let mut report = Report::default();
    let mut tables = Vec::new();
    let map_s: Vec<f64> = (0..map_pts.len()).map(|i| i as f64).collect();
    let map_mc = mc.as_ref().map(|r| select(r, &map_refs));
    let mut map_table = correlation_table("fig3a_map", ctx, &map_s, &map_pts, map_mc.as_deref());
    map_table.drop_column("s_m");
    if map_mc.is_some() {
        let an = map_table.column("corr_norm");
        let mc_col = map_table.column("corr_mc");
        let sq: f64 = an.iter().zip(&mc_col).map(|(a, b)| (a.unwrap() - b.unwrap()).powi(2)).sum();
        report
            .metrics
            .insert("map_rms_deviation".to_string(), (sq / an.len() as f64).sqrt());
    }
    tables.push(map_table);

    for (k, cut) in CUTS.iter().enumerate() {
        let mc_cut = mc.as_ref().map(|r| select(r, &cut_refs[k]));
        tables.push(correlation_table(cut.name, ctx, &cut_s[k], &cut_pts[k], mc_cut.as_deref()));
        let predicted = predicted_detector_period(ctx, cut.axis);
        let raw = raw_analytic(ctx, &cut_pts[k]);
        report
            .fits
            .push(fit_record(ctx, cut.name, "analytic", cut.axis, &cut_s[k], &raw, predicted));
        if let Some(m) = &mc_cut {
            let ys: Vec<f64> = m.iter().map(|r| r.fluct_corr).collect();
            report
                .fits
                .push(fit_record(ctx, cut.name, "montecarlo", cut.axis, &cut_s[k], &ys, predicted));
        }
    }

    // bucket detector behind mask T: sum over x_T, compare with the point detector at x_T = 0
    let period_c = ctx.setup.lambda_f() / mc_mask.separation();
    let bucket_an = bucket_integrate_values(&raw_analytic(ctx, &bucket_pts), BUCKET_T_POINTS);
    let centre = BUCKET_T_POINTS / 2;
    let point_an: Vec<f64> = raw_analytic(ctx, &bucket_pts)
        .chunks(BUCKET_T_POINTS)
        .map(|row| row[centre])
        .collect();
    let bucket_mc = mc.as_ref().map(|r| bucket_integrate(&select(r, &bucket_refs), BUCKET_T_POINTS));
    let point_mc: Option<Vec<f64>> = mc.as_ref().map(|r| {
        select(r, &bucket_refs)
            .chunks(BUCKET_T_POINTS)
            .map(|row| row[centre].fluct_corr)
            .collect()
    });
    let mut bucket_table = Table::new(
        "fig3a_bucket",
        &["xC_m", "bucket_norm", "point_norm", "bucket_mc", "point_mc"],
    );
    let norm = |v: &[f64]| -> Vec<f64> {
        let p = peak(v.iter().copied());
        v.iter().map(|x| x / p).collect()
    };
    let (bn, pn) = (norm(&bucket_an), norm(&point_an));
    let bm = bucket_mc.as_deref().map(norm);
    let pm = point_mc.as_deref().map(norm);
    for i in 0..bucket_c.len() {
        bucket_table.push(vec![
            Some(bucket_c[i]),
            Some(bn[i]),
            Some(pn[i]),
            bm.as_ref().map(|v| v[i]),
            pm.as_ref().map(|v| v[i]),
        ]);
    }
    tables.push(bucket_table);
    let mut series = vec![("analytic", bucket_an, point_an)];
    if let (Some(b), Some(p)) = (bucket_mc, point_mc) {
        series.push(("montecarlo", b, p));
    }
    for (engine, bucket, point) in series {
        let vb = visibility_record("fig3a_bucket", engine, "C", Illumination::Chaotic, &bucket_c, &bucket, period_c);
        let vp = visibility_record("fig3a_point", engine, "C", Illumination::Chaotic, &bucket_c, &point, period_c);
        if let (Some(b), Some(p)) = (vb.visibility, vp.visibility) {
            report.metrics.insert(format!("bucket_visibility_ratio_{engine}"), b / p);
        }
        report.visibilities.push(vb);
        report.visibilities.push(vp);
    }
    Ok(ScenarioOutput { tables, report })
}

pub const FIRST_ORDER_HALF_RANGE: f64 = 0.6 * MM;

/// First-order detector scans behind each mask under laser and chaotic light.
///
/// Uses point detectors: fringe contrast is a property of the interference
/// pattern, and a finite aperture would lower the laser contrast on its own.
pub fn fig3bc(ctx: &Context) -> Result<ScenarioOutput, RunError> {
    (ctx.progress)("fig3bc: first-order scans");
    let xs = linspace(-FIRST_ORDER_HALF_RANGE, FIRST_ORDER_HALF_RANGE, CUT_POINTS);
    let dets: Vec<DetectorSpec> = xs.iter().map(|&x| DetectorSpec::point(x)).collect();
    let mut tables = Vec::new();
    let mut report = Report::default();
    for (label, mask) in [("C", ctx.mask_c), ("T", ctx.mask_t)] {
        let period = ctx.setup.lambda_f() / mask.separation();
        let scan = format!("fig3bc_first_order_{label}");
        let analytic = |il| -> Vec<f64> {
            dets.iter()
                .map(|d| first_order_intensity_with_detector(&ctx.setup, &mask, d, il))
                .collect()
        };
        let (laser, chaotic) = (analytic(Illumination::Laser), analytic(Illumination::Chaotic));
        let (laser_mc, chaotic_mc) = match &ctx.monte_carlo {
            Some(cfg) => (
                Some(first_order_scan(&ctx.setup, &mask, &dets, None)?),
                Some(first_order_scan(&ctx.setup, &mask, &dets, Some(cfg))?),
            ),
            None => (None, None),
        };
        let mut rows: Vec<(&'static str, Illumination, &Vec<f64>)> =
            vec![("analytic", Illumination::Laser, &laser), ("analytic", Illumination::Chaotic, &chaotic)];
        if let (Some(l), Some(c)) = (&laser_mc, &chaotic_mc) {
            rows.push(("montecarlo", Illumination::Laser, l));
            rows.push(("montecarlo", Illumination::Chaotic, c));
        }
        for (engine, il, ys) in rows {
            let name = format!(
                "{scan}_{}",
                if il == Illumination::Laser { "laser" } else { "chaotic" }
            );
            report
                .visibilities
                .push(visibility_record(&name, engine, if label == "C" { "C" } else { "T" }, il, &xs, ys, period));
        }
        let norm = |v: &[f64]| -> Vec<f64> {
            let p = peak(v.iter().copied());
            v.iter().map(|x| x / p).collect()
        };
        let (ln, cn) = (norm(&laser), norm(&chaotic));
        let lm = laser_mc.as_deref().map(norm);
        let cm = chaotic_mc.as_deref().map(norm);
        let mut t = Table::new(&scan, &["xD_m", "laser_norm", "chaotic_norm", "laser_mc_norm", "chaotic_mc_norm"]);
        for i in 0..xs.len() {
            t.push(vec![
                Some(xs[i]),
                Some(ln[i]),
                Some(cn[i]),
                lm.as_ref().map(|v| v[i]),
                cm.as_ref().map(|v| v[i]),
            ]);
        }
        tables.push(t);
    }
    Ok(ScenarioOutput { tables, report })
}

/// One user-defined scan along `cfg.scan`.
pub fn custom(ctx: &Context, cfg: &ScenarioConfig) -> Result<ScenarioOutput, RunError> {
    let grid = cfg
        .scan_grid()?
        .ok_or_else(|| ConfigError::Invalid {
            field: "scan".to_string(),
            message: "missing".to_string(),
        })?;
    let axis = grid.axis();
    (ctx.progress)(&format!("custom: {} scan", axis.name()));
    let s = grid.points();
    let (c, t) = (ctx.mask_c, ctx.mask_t);
    let mut coords = Vec::new();
    let mut pts = Vec::new();
    for (i, &v) in s.iter().enumerate() {
        match axis {
            ScanAxis::Detector2d => {
                for &w in &s {
                    pts.push(ctx.point(c, t, v, w)?);
                    coords.push(i as f64);
                }
            }
            _ => {
                let p = match axis {
                    ScanAxis::MaskTCenter => ctx.point(c, t.with_center(v)?, 0.0, 0.0)?,
                    ScanAxis::MaskCCenter => ctx.point(c.with_center(v)?, t, 0.0, 0.0)?,
                    ScanAxis::DetectorC => ctx.point(c, t, v, 0.0)?,
                    ScanAxis::DetectorT => ctx.point(c, t, 0.0, v)?,
                    ScanAxis::DetectorDiagonal => ctx.point(c, t, v, v)?,
                    ScanAxis::DetectorAntidiagonal => ctx.point(c, t, v, -v)?,
                    ScanAxis::Detector2d => unreachable!(),
                };
                pts.push(p);
                coords.push(v);
            }
        }
    }
    let mut builder = PlanBuilder::default();
    let refs = builder.add_all(&pts)?;
    let mc = run_monte_carlo(ctx, &builder, "custom")?;
    let mc_vals = mc.as_ref().map(|r| select(r, &refs));
    let mut table = correlation_table("custom_scan", ctx, &coords, &pts, mc_vals.as_deref());
    let mut report = Report::default();
    if axis == ScanAxis::Detector2d {
        table.drop_column("s_m");
    } else {
        let predicted = predicted_detector_period(ctx, axis);
        let raw = raw_analytic(ctx, &pts);
        report
            .fits
            .push(fit_record(ctx, "custom_scan", "analytic", axis, &s, &raw, predicted));
        if let Some(m) = &mc_vals {
            let ys: Vec<f64> = m.iter().map(|r| r.fluct_corr).collect();
            report
                .fits
                .push(fit_record(ctx, "custom_scan", "montecarlo", axis, &s, &ys, predicted));
        }
    }
    Ok(ScenarioOutput {
        tables: vec![table],
        report,
    })
}

/// Runs the configured scenario. `selftest` is handled by [`crate::acceptance`].
pub fn run_scenario(cfg: &ScenarioConfig, progress: &dyn Fn(&str)) -> Result<ScenarioOutput, RunError> {
    let ctx = Context::from_config(cfg, progress)?;
    let mut out = match cfg.run.scenario {
        Scenario::Fig2 => fig2(&ctx)?,
        Scenario::Fig3a => fig3a(&ctx)?,
        Scenario::Fig3bc => fig3bc(&ctx)?,
        Scenario::Custom => custom(&ctx, cfg)?,
        Scenario::Selftest => {
            let mut out = crate::acceptance::run_selftest(cfg.run.seed, progress)?.output;
            out.report.files = out.tables.iter().map(|t| format!("{}.csv", t.name)).collect();
            return Ok(out);
        }
    };
    out.report.scenario = cfg.run.scenario.name();
    out.report.engine = cfg.run.engine.name();
    out.report.seed = cfg.run.seed;
    out.report.realizations = if cfg.run.engine == Engine::Analytic {
        0
    } else {
        cfg.run.realizations
    };
    out.report.files = out.tables.iter().map(|t| format!("{}.csv", t.name)).collect();
    Ok(out)
}

/// Concatenates scenario outputs into one.
pub fn merge_outputs(parts: Vec<ScenarioOutput>) -> ScenarioOutput {
    let mut out = ScenarioOutput {
        tables: Vec::new(),
        report: Report::default(),
    };
    for p in parts {
        out.tables.extend(p.tables);
        out.report.fits.extend(p.report.fits);
        out.report.shifts.extend(p.report.shifts);
        out.report.visibilities.extend(p.report.visibilities);
        out.report.metrics.extend(p.report.metrics);
    }
    out.report.files = out.tables.iter().map(|t| format!("{}.csv", t.name)).collect();
    out
}
