//! Fringe fitting and inversion of periods and shifts into mask geometry.
//!
//! The fringe model is a gaussian-enveloped cosine on a constant background,
//!
//! ```text
//! y(x) = A·exp(−κ(x − c)²/2)·(1 + V·cos(2πx/Λ + φ₀)) + B,
//! ```
//!
//! with `κ ≥ 0` so a flat envelope (`κ = 0`) is allowed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{OpticalSetup, ScanAxis};

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-10;
/// Minimum periodogram peak-to-median ratio accepted as a fringe.
pub const MIN_FRINGE_SNR: f64 = 3.0;
pub const MIN_POINTS: usize = 8;
/// Relative period mismatch always tolerated by [`fringe_shift`], on top of the
/// statistical 3σ allowance.
pub const PERIOD_MATCH_FLOOR: f64 = 5e-3;

const PERIODOGRAM_OVERSAMPLING: f64 = 20.0;
const FREQUENCY_CANDIDATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FringeError {
    #[error("need at least {MIN_POINTS} samples, got {0}")]
    TooFewPoints(usize),
    #[error("positions and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("positions must be strictly increasing")]
    NotMonotone,
    #[error("no fringe detected (periodogram peak/median = {snr:.2})")]
    NoFringe { snr: f64 },
    #[error("fit did not produce finite parameters")]
    FitFailed,
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("scan axis {0} has no single-period inversion")]
    UnknownAxis(&'static str),
    #[error("incompatible periods {a:e} and {b:e} (tolerance {tolerance:e})")]
    IncompatiblePeriods { a: f64, b: f64, tolerance: f64 },
}

/// Best-fit fringe parameters with standard errors from the residual covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub offset: f64,
    pub visibility: f64,
    pub period: f64,
    pub period_stderr: f64,
    /// Phase `φ₀` of the carrier at `x = 0`, in `(−π, π]`.
    pub phase: f64,
    pub phase_stderr: f64,
    pub envelope_center: f64,
    pub envelope_center_stderr: f64,
    /// `1/√κ`; infinite for a flat envelope.
    pub envelope_width: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FringeFit {
    pub fn evaluate(&self, x: f64) -> f64 {
        let env = if self.envelope_width.is_finite() {
            (-0.5 * ((x - self.envelope_center) / self.envelope_width).powi(2)).exp()
        } else {
            1.0
        };
        self.amplitude * env * (1.0 + self.visibility * (2.0 * PI * x / self.period + self.phase).cos()) + self.offset
    }

    pub fn has_envelope(&self) -> bool {
        self.envelope_width.is_finite()
    }
}

/// Parameters in scaled coordinates `u = (x − m)/s`, `v = (y − ȳ)/σ_y`.
#[derive(Debug, Clone, Copy)]
struct Params([f64; 7]);

const IA: usize = 0;
const IB: usize = 1;
const IV: usize = 2;
const IK: usize = 3;
const IP: usize = 4;
const IC: usize = 5;
const IKAPPA: usize = 6;

impl Params {
    fn clamp(mut self) -> Self {
        let p = &mut self.0;
        p[IV] = p[IV].clamp(0.0, 1.0);
        p[IKAPPA] = p[IKAPPA].max(0.0);
        p[IK] = p[IK].max(1e-6);
        self
    }

    fn eval(&self, u: f64) -> f64 {
        let p = &self.0;
        let g = (-0.5 * p[IKAPPA] * (u - p[IC]).powi(2)).exp();
        p[IA] * g * (1.0 + p[IV] * (p[IK] * u + p[IP]).cos()) + p[IB]
    }

    fn gradient(&self, u: f64, row: &mut [f64]) {
        let p = &self.0;
        let du = u - p[IC];
        let g = (-0.5 * p[IKAPPA] * du * du).exp();
        let (s, c) = (p[IK] * u + p[IP]).sin_cos();
        let carrier = 1.0 + p[IV] * c;
        row[IA] = g * carrier;
        row[IB] = 1.0;
        row[IV] = p[IA] * g * c;
        row[IK] = -p[IA] * g * p[IV] * s * u;
        row[IP] = -p[IA] * g * p[IV] * s;
        row[IC] = p[IA] * g * carrier * p[IKAPPA] * du;
        row[IKAPPA] = -0.5 * p[IA] * g * carrier * du * du;
    }
}

struct Problem {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl Problem {
    fn cost(&self, p: &Params) -> f64 {
        self.u.iter().zip(&self.v).map(|(&u, &v)| (p.eval(u) - v).powi(2)).sum()
    }

    fn jacobian(&self, p: &Params) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.u.len();
        let mut j = DMatrix::zeros(n, 7);
        let mut r = DVector::zeros(n);
        let mut row = [0.0; 7];
        for (i, (&u, &v)) in self.u.iter().zip(&self.v).enumerate() {
            p.gradient(u, &mut row);
            for (k, g) in row.iter().enumerate() {
                j[(i, k)] = *g;
            }
            r[i] = p.eval(u) - v;
        }
        (j, r)
    }

    /// Damped Gauss–Newton (Levenberg–Marquardt) with bounds enforced by clamping.
    fn levenberg_marquardt(&self, start: Params) -> (Params, f64, usize, bool) {
        let mut p = start.clamp();
        let mut cost = self.cost(&p);
        let mut lambda = 1e-3;
        for it in 1..=MAX_ITERATIONS {
            let (j, r) = self.jacobian(&p);
            let jtj = j.transpose() * &j;
            let jtr = j.transpose() * r;
            let diag_floor = 1e-12 * jtj.diagonal().max();
            let mut accepted = None;
            for _ in 0..30 {
                let mut a = jtj.clone();
                for k in 0..7 {
                    a[(k, k)] += lambda * (jtj[(k, k)] + diag_floor);
                }
                let Some(step) = a.lu().solve(&(-&jtr)) else {
                    lambda *= 4.0;
                    continue;
                };
                let mut trial = p;
                for k in 0..7 {
                    trial.0[k] += step[k];
                }
                let trial = trial.clamp();
                let c = self.cost(&trial);
                if c.is_finite() && c <= cost {
                    accepted = Some((trial, c));
                    lambda = (lambda / 3.0).max(1e-15);
                    break;
                }
                lambda *= 4.0;
            }
            let Some((next, c)) = accepted else {
                return (p, cost, it, true);
            };
            let moved: f64 = next.0.iter().zip(&p.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let size: f64 = p.0.iter().map(|a| a * a).sum::<f64>().sqrt();
            p = next;
            let done = moved <= STEP_TOLERANCE * (size + STEP_TOLERANCE) || cost - c <= 1e-15 * cost.max(1e-300);
            cost = c;
            if done {
                return (p, cost, it, true);
            }
        }
        (p, cost, MAX_ITERATIONS, false)
    }
}

fn validate(positions: &[f64], values: &[f64]) -> Result<(), FringeError> {
    if positions.len() != values.len() {
        return Err(FringeError::LengthMismatch(positions.len(), values.len()));
    }
    if positions.len() < MIN_POINTS {
        return Err(FringeError::TooFewPoints(positions.len()));
    }
    if let Some(i) = positions.iter().zip(values).position(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(FringeError::NonFinite(i));
    }
    if positions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FringeError::NotMonotone);
    }
    Ok(())
}

fn least_squares(columns: &[Vec<f64>], target: &[f64]) -> Option<DVector<f64>> {
    let a = DMatrix::from_fn(target.len(), columns.len(), |i, k| columns[k][i]);
    let b = DVector::from_column_slice(target);
    a.svd(true, true).solve(&b, 1e-12).ok()
}

/// Peak frequencies (cycles per unit `u`) of the amplitude periodogram of the
/// detrended data, strongest first, and the peak-to-median ratio.
fn periodogram_peaks(u: &[f64], v: &[f64]) -> (Vec<f64>, f64) {
    let quad: Vec<f64> = u.iter().map(|x| x * x).collect();
    let ones = vec![1.0; u.len()];
    let trend = least_squares(&[ones, u.to_vec(), quad], v).unwrap_or_else(|| DVector::zeros(3));
    let resid: Vec<f64> = u
        .iter()
        .zip(v)
        .map(|(&x, &y)| y - trend[0] - trend[1] * x - trend[2] * x * x)
        .collect();
    let range = u[u.len() - 1] - u[0];
    let min_step = u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mean_step = range / (u.len() - 1) as f64;
    let nyquist = 0.5 / mean_step.max(min_step);
    let df = 1.0 / (PERIODOGRAM_OVERSAMPLING * range);
    let f_lo = 1.0 / range;
    let mut freqs = Vec::new();
    let mut amps = Vec::new();
    let mut f = f_lo;
    while f <= nyquist {
        let (mut sc, mut ss) = (0.0, 0.0);
        for (&x, &r) in u.iter().zip(&resid) {
            let (s, c) = (2.0 * PI * f * x).sin_cos();
            sc += r * c;
            ss += r * s;
        }
        freqs.push(f);
        amps.push((sc * sc + ss * ss).sqrt());
        f += df;
    }
    if amps.len() < 3 {
        return (Vec::new(), 0.0);
    }
    let mut sorted = amps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut peaks: Vec<(f64, f64)> = (0..amps.len())
        .filter(|&i| (i == 0 || amps[i] >= amps[i - 1]) && (i + 1 == amps.len() || amps[i] >= amps[i + 1]))
        .map(|i| (amps[i], freqs[i]))
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let snr = if median > 0.0 { peaks[0].0 / median } else { f64::INFINITY };
    (peaks.into_iter().take(FREQUENCY_CANDIDATES).map(|p| p.1).collect(), snr)
}

/// Linear solve for `(A, B, V, φ)` given carrier wavenumber and envelope.
fn linear_start(prob: &Problem, k: f64, c: f64, kappa: f64) -> Option<Params> {
    if kappa == 0.0 {
        // a flat envelope makes A and B collinear, so fold the background into A
        let cos: Vec<f64> = prob.u.iter().map(|&u| (k * u).cos()).collect();
        let sin: Vec<f64> = prob.u.iter().map(|&u| -(k * u).sin()).collect();
        let sol = least_squares(&[vec![1.0; cos.len()], cos, sin], &prob.v)?;
        let amp = (sol[1] * sol[1] + sol[2] * sol[2]).sqrt();
        let a = sol[0].abs().max(amp);
        return Some(Params([a, sol[0] - a, amp / a, k, sol[2].atan2(sol[1]), 0.0, 0.0]));
    }
    let g: Vec<f64> = prob.u.iter().map(|&u| (-0.5 * kappa * (u - c).powi(2)).exp()).collect();
    let gc: Vec<f64> = prob.u.iter().zip(&g).map(|(&u, g)| g * (k * u).cos()).collect();
    let gs: Vec<f64> = prob.u.iter().zip(&g).map(|(&u, g)| -g * (k * u).sin()).collect();
    let sol = least_squares(&[vec![1.0; g.len()], g, gc, gs], &prob.v)?;
    let (b, a, pc, ps) = (sol[0], sol[1], sol[2], sol[3]);
    let amp = (pc * pc + ps * ps).sqrt();
    let (a, phase) = if a >= 0.0 {
        (a.max(amp), ps.atan2(pc))
    } else {
        (-a, (-ps).atan2(-pc))
    };
    let v = if a > 0.0 { amp / a } else { 0.0 };
    Some(Params([a, b, v, k, phase, c, kappa]))
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Fits the enveloped-cosine fringe model to a 1D scan.
///
/// The carrier frequency is seeded from the strongest periodogram peaks of the
/// quadratically detrended data; each candidate is refined with and without an
/// envelope and the lowest-residual fit is kept.
pub fn fit_fringe(positions: &[f64], values: &[f64]) -> Result<FringeFit, FringeError> {
    validate(positions, values)?;
    let n = positions.len();
    let (x0, x1) = (positions[0], positions[n - 1]);
    let m = 0.5 * (x0 + x1);
    let s = 0.5 * (x1 - x0);
    let y_mean = values.iter().sum::<f64>() / n as f64;
    let y_scale = (values.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if y_scale == 0.0 {
        return Err(FringeError::NoFringe { snr: 0.0 });
    }
    let prob = Problem {
        u: positions.iter().map(|x| (x - m) / s).collect(),
        v: values.iter().map(|y| (y - y_mean) / y_scale).collect(),
    };

    let (freqs, snr) = periodogram_peaks(&prob.u, &prob.v);
    if freqs.is_empty() || snr < MIN_FRINGE_SNR {
        return Err(FringeError::NoFringe { snr });
    }

    // envelope seed from the background-subtracted second moment
    let vmin = prob.v.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = prob.v.iter().map(|v| v - vmin).collect();
    let wsum: f64 = w.iter().sum();
    let c0 = prob.u.iter().zip(&w).map(|(u, w)| u * w).sum::<f64>() / wsum;
    let var = prob.u.iter().zip(&w).map(|(u, w)| w * (u - c0).powi(2)).sum::<f64>() / wsum;
    let flat_var = 1.0 / 3.0;
    let kappa0 = if var < 0.8 * flat_var { 1.0 / var } else { 0.0 };

    let mut best: Option<(Params, f64, usize, bool)> = None;
    for &f in &freqs {
        let k = 2.0 * PI * f;
        for kappa in [kappa0, 0.0] {
            let c = if kappa > 0.0 { c0 } else { 0.0 };
            let Some(start) = linear_start(&prob, k, c, kappa) else {
                continue;
            };
            let fit = prob.levenberg_marquardt(start);
            if fit.1.is_finite() && best.as_ref().is_none_or(|b| fit.1 < b.1) {
                best = Some(fit);
            }
        }
    }
    let (p, cost, iterations, converged) = best.ok_or(FringeError::FitFailed)?;

    let (j, _) = prob.jacobian(&p);
    let dof = (n as f64 - 7.0).max(1.0);
    let sigma2 = cost / dof;
    let cov = (j.transpose() * &j).pseudo_inverse(1e-14).map_err(|_| FringeError::FitFailed)? * sigma2;
    let sd = |k: usize| cov[(k, k)].max(0.0).sqrt();

    let q = p.0;
    let period = 2.0 * PI * s / q[IK];
    let flat = q[IKAPPA] <= 0.0;
    let (amplitude, offset, visibility) = if flat {
        let total = q[IA] * y_scale + q[IB] * y_scale + y_mean;
        (total, 0.0, q[IA] * q[IV] * y_scale / total)
    } else {
        (q[IA] * y_scale, q[IB] * y_scale + y_mean, q[IV])
    };
    let fit = FringeFit {
        amplitude,
        offset,
        visibility,
        period,
        period_stderr: period * sd(IK) / q[IK],
        phase: wrap_phase(q[IP] - q[IK] * m / s),
        phase_stderr: (sd(IP).powi(2) + (m / s * sd(IK)).powi(2) - 2.0 * m / s * cov[(IP, IK)])
            .max(0.0)
            .sqrt(),
        envelope_center: if flat { f64::NAN } else { m + s * q[IC] },
        envelope_center_stderr: if flat { f64::NAN } else { s * sd(IC) },
        envelope_width: if flat { f64::INFINITY } else { s / q[IKAPPA].sqrt() },
        residual_rms: (cost / n as f64).sqrt() * y_scale,
        iterations,
        converged,
    };
    if [fit.amplitude, fit.offset, fit.period, fit.phase].iter().any(|v| !v.is_finite()) {
        return Err(FringeError::FitFailed);
    }
    Ok(fit)
}

/// Fringe visibility at a known period from a linear least-squares fit of
/// `c₀ + c₁cos(2πx/Λ) + c₂sin(2πx/Λ)`: `√(c₁² + c₂²)/c₀`.
pub fn fringe_visibility(positions: &[f64], values: &[f64], period: f64) -> Result<f64, FringeError> {
    validate(positions, values)?;
    if !(period.is_finite() && period > 0.0) {
        return Err(FringeError::InvalidPeriod(period));
    }
    let k = 2.0 * PI / period;
    let cos: Vec<f64> = positions.iter().map(|x| (k * x).cos()).collect();
    let sin: Vec<f64> = positions.iter().map(|x| (k * x).sin()).collect();
    let sol = least_squares(&[vec![1.0; positions.len()], cos, sin], values).ok_or(FringeError::FitFailed)?;
    Ok((sol[1] * sol[1] + sol[2] * sol[2]).sqrt() / sol[0].abs())
}

/// `(max − min)/(max + min)` of a sampled pattern.
pub fn extremal_visibility(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / (max + min)
}

/// Mask quantity recovered from a fringe period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensedQuantity {
    SeparationC,
    SeparationT,
    /// `|d_C − d_T|`.
    SeparationDifference,
    /// `d_C + d_T`.
    SeparationSum,
    /// Displacement `ΔX̄_C` of mask C.
    DisplacementC,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingEstimate {
    pub quantity: SensedQuantity,
    pub value: f64,
    pub stderr: f64,
}

/// Converts a fringe period along `axis` into the mask quantity it encodes.
///
/// Detector scans give `λf/Λ`; mask-centre scans give `λz/Λ`. The diagonal
/// and anti-diagonal detector cuts give the difference and the sum of the two
/// separations.
pub fn invert_period(
    period: f64,
    period_stderr: f64,
    setup: &OpticalSetup,
    axis: ScanAxis,
) -> Result<SensingEstimate, FringeError> {
    if !(period.is_finite() && period > 0.0) {
        return Err(FringeError::InvalidPeriod(period));
    }
    let (scale, quantity) = match axis {
        ScanAxis::DetectorC => (setup.lambda_f(), SensedQuantity::SeparationC),
        ScanAxis::DetectorT => (setup.lambda_f(), SensedQuantity::SeparationT),
        ScanAxis::MaskCCenter => (setup.lambda_z(), SensedQuantity::SeparationC),
        ScanAxis::MaskTCenter => (setup.lambda_z(), SensedQuantity::SeparationT),
        ScanAxis::DetectorDiagonal => (setup.lambda_f(), SensedQuantity::SeparationDifference),
        ScanAxis::DetectorAntidiagonal => (setup.lambda_f(), SensedQuantity::SeparationSum),
        ScanAxis::Detector2d => return Err(FringeError::UnknownAxis(axis.name())),
    };
    let value = scale / period;
    Ok(SensingEstimate {
        quantity,
        value,
        stderr: value * period_stderr.abs() / period,
    })
}

/// Displacement of fringe pattern `b` relative to pattern `a`, positive along
/// increasing scan coordinate.
///
/// The carrier phase difference fixes the shift modulo one period; the
/// multiple of the period is the one bringing the shift closest to the
/// displacement of the fitted envelopes. Flat envelopes give the wrapped shift.
pub fn fringe_shift(a: &FringeFit, b: &FringeFit) -> Result<f64, FringeError> {
    let sigma = (a.period_stderr.powi(2) + b.period_stderr.powi(2)).sqrt();
    let mean = 0.5 * (a.period + b.period);
    let tolerance = (3.0 * sigma).max(PERIOD_MATCH_FLOOR * mean);
    let periods_match = (a.period - b.period).abs() <= tolerance;
    if !periods_match {
        return Err(FringeError::IncompatiblePeriods {
            a: a.period,
            b: b.period,
            tolerance,
        });
    }
    // carrier peaks sit at x = (2πn − φ₀)Λ/2π, so a phase drop moves fringes forward
    let wrapped = -wrap_phase(b.phase - a.phase) * mean / (2.0 * PI);
    if !(a.has_envelope() && b.has_envelope()) {
        return Ok(wrapped);
    }
    let target = b.envelope_center - a.envelope_center;
    let n = ((target - wrapped) / mean).round();
    Ok(wrapped + n * mean)
}

/// Mask-C displacement implied by a mask-scan fringe shift: `ΔX̄_C = shift·d_T/d_C`.
pub fn estimate_mask_displacement(shift: f64, separation_c: f64, separation_t: f64) -> SensingEstimate {
    SensingEstimate {
        quantity: SensedQuantity::DisplacementC,
        value: shift * separation_t / separation_c,
        stderr: f64::NAN,
    }
}
