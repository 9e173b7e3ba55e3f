//! Monte Carlo chaotic-source realizations propagated through both arms.
//!
//! The source is a grid of δ-correlated circular gaussian emitters. Each emitter
//! reaches a mask point through the Fresnel kernel `exp(iω(x_m − x_s)²/(2cz))`;
//! the lens maps the transmitted field to the focal plane through
//! `exp(−iω x_d x_m/(fc))`. Both arms see the same realization.
//!
//! Realization `k` of a run seeded with `s` is drawn from ChaCha8 seeded with
//! `s` on stream `k`, so any subset of realizations can be regenerated alone.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{ComplexAmplitude, DETECTOR_QUADRATURE_POINTS};
use crate::correlator::{merge_pairwise, CorrelationAccumulator, CorrelatorError};
use crate::model::{Aperture, DetectorSpec, OpticalSetup, SourceShape};
use crate::quadrature::average_rule;

pub const DEFAULT_SOURCE_POINTS: usize = 1024;
pub const MIN_SOURCE_POINTS: usize = 128;
pub const SLIT_POINTS: usize = 8;
const BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpeckleError {
    #[error("source grid needs at least {min} points, got {got}")]
    TooFewSourcePoints { min: usize, got: usize },
    #[error("source spacing {spacing:e} m does not resolve source width {width:e} m")]
    UnresolvedSource { spacing: f64, width: f64 },
    #[error(
        "source spacing {spacing:e} m exceeds the Nyquist bound {bound:e} m for a mask-source offset of {max_offset:e} m"
    )]
    GridResolution { spacing: f64, bound: f64, max_offset: f64 },
    #[error("plan references mask {index} but only {count} masks exist")]
    UnknownMask { index: usize, count: usize },
    #[error("plan references detector {index} but only {count} detectors exist")]
    UnknownDetector { index: usize, count: usize },
    #[error("at least 2 realizations are required, got {0}")]
    TooFewRealizations(u64),
    #[error(transparent)]
    Correlator(#[from] CorrelatorError),
}

/// Discretized source: emitter positions and `√intensity` weights with `Σ w² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceGrid {
    positions: Vec<f64>,
    amplitude_weights: Vec<f64>,
    spacing: f64,
}

impl SourceGrid {
    /// Uniform grid across the source support of `setup`.
    ///
    /// The hard-edge profile uses cell midpoints inside `[−D/2, D/2]`; the
    /// gaussian profile spans `±4σ` end to end.
    pub fn from_setup(setup: &OpticalSetup, n_points: usize) -> Result<Self, SpeckleError> {
        if n_points < MIN_SOURCE_POINTS {
            return Err(SpeckleError::TooFewSourcePoints {
                min: MIN_SOURCE_POINTS,
                got: n_points,
            });
        }
        let (lambda, z) = (setup.wavelength(), setup.z());
        let src = setup.source();
        let half = src.support_half_width(lambda, z);
        let (positions, spacing): (Vec<f64>, f64) = match src.shape() {
            SourceShape::UniformHardEdge => {
                let h = 2.0 * half / n_points as f64;
                ((0..n_points).map(|i| -half + (i as f64 + 0.5) * h).collect(), h)
            }
            SourceShape::Gaussian => {
                let h = 2.0 * half / (n_points - 1) as f64;
                ((0..n_points).map(|i| -half + i as f64 * h).collect(), h)
            }
        };
        let width = 2.0 * half;
        if spacing > width / 64.0 {
            return Err(SpeckleError::UnresolvedSource { spacing, width });
        }
        let intensity: Vec<f64> = positions.iter().map(|&x| src.intensity(x, lambda, z)).collect();
        let total: f64 = intensity.iter().sum();
        let amplitude_weights = intensity.iter().map(|i| (i / total).sqrt()).collect();
        Ok(Self {
            positions,
            amplitude_weights,
            spacing,
        })
    }

    /// A single coherent emitter at `x`, used for laser illumination.
    pub fn point(x: f64) -> Self {
        Self {
            positions: vec![x],
            amplitude_weights: vec![1.0],
            spacing: 0.0,
        }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn amplitude_weights(&self) -> &[f64] {
        &self.amplitude_weights
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Checks that the Fresnel phase `π(x_m − x_s)²/(λz)` changes by less than π
    /// between neighbouring emitters for every mask point in `mask_points`.
    pub fn check_nyquist(&self, setup: &OpticalSetup, mask_points: &[f64]) -> Result<(), SpeckleError> {
        if self.positions.len() < 2 || mask_points.is_empty() {
            return Ok(());
        }
        let (lo, hi) = (self.positions[0], self.positions[self.positions.len() - 1]);
        let max_offset = mask_points
            .iter()
            .map(|&m| (m - lo).abs().max((m - hi).abs()))
            .fold(0.0, f64::max);
        let bound = setup.lambda_z() / (2.0 * max_offset);
        if self.spacing > bound {
            return Err(SpeckleError::GridResolution {
                spacing: self.spacing,
                bound,
                max_offset,
            });
        }
        Ok(())
    }
}

/// One instantaneous source field.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRealization<'a> {
    pub grid: &'a SourceGrid,
    pub field: Vec<ComplexAmplitude>,
    pub realization_index: u64,
    pub seed: u64,
}

impl<'a> SourceRealization<'a> {
    /// Deterministic field equal to the amplitude weights, for coherent illumination.
    pub fn coherent(grid: &'a SourceGrid) -> Self {
        Self {
            grid,
            field: grid.amplitude_weights.iter().map(|&w| Complex64::new(w, 0.0)).collect(),
            realization_index: 0,
            seed: 0,
        }
    }
}

fn realization_rng(seed: u64, realization_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization_index);
    rng
}

fn fill_field(rng: &mut ChaCha8Rng, weights: &[f64], re: &mut [f64], im: &mut [f64]) {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for ((w, r), i) in weights.iter().zip(re.iter_mut()).zip(im.iter_mut()) {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        *r = w * scale * a;
        *i = w * scale * b;
    }
}

/// Draws an independent circular complex gaussian amplitude with `⟨|E|²⟩ = w²`
/// at every grid point.
pub fn sample_source(grid: &SourceGrid, seed: u64, realization_index: u64) -> SourceRealization<'_> {
    let n = grid.len();
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    fill_field(&mut realization_rng(seed, realization_index), &grid.amplitude_weights, &mut re, &mut im);
    SourceRealization {
        grid,
        field: re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect(),
        realization_index,
        seed,
    }
}

/// Quadrature points `(x, weight)` across every slit of an aperture; weights
/// average each slit, so a slit of any width carries unit amplitude.
pub fn slit_sampling<A: Aperture + ?Sized>(mask: &A) -> Vec<(f64, f64)> {
    let a = mask.slit_width();
    let n = if a > 0.0 { SLIT_POINTS } else { 1 };
    mask.slit_centers().into_iter().flat_map(|c| average_rule(c, a, n)).collect()
}

fn fresnel_kernel(setup: &OpticalSetup, x_m: f64, x_s: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI * (x_m - x_s).powi(2) / setup.lambda_z())
}

fn lens_phase(setup: &OpticalSetup, x_m: f64, x_d: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * x_d * x_m / setup.lambda_f())
}

/// Focal-plane field behind `mask` at detector position `x_d`, by direct summation.
pub fn field_at_detector<A: Aperture + ?Sized>(
    realization: &SourceRealization<'_>,
    setup: &OpticalSetup,
    mask: &A,
    x_d: f64,
) -> Result<ComplexAmplitude, SpeckleError> {
    let points = slit_sampling(mask);
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    realization.grid.check_nyquist(setup, &xs)?;
    let mut e = Complex64::new(0.0, 0.0);
    for &(x_m, q) in &points {
        let at_mask: Complex64 = realization
            .grid
            .positions
            .iter()
            .zip(&realization.field)
            .map(|(&x_s, f)| f * fresnel_kernel(setup, x_m, x_s))
            .sum();
        e += q * at_mask * lens_phase(setup, x_m, x_d);
    }
    Ok(e)
}

/// Instantaneous intensities at one detector in each arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetectorSample {
    pub i_c: f64,
    pub i_t: f64,
}

/// Sends one realization through both arms to point detectors at `x_c` and `x_t`.
pub fn run_realization<C, T>(
    realization: &SourceRealization<'_>,
    setup: &OpticalSetup,
    mask_c: &C,
    mask_t: &T,
    x_c: f64,
    x_t: f64,
) -> Result<DetectorSample, SpeckleError>
where
    C: Aperture + ?Sized,
    T: Aperture + ?Sized,
{
    Ok(DetectorSample {
        i_c: field_at_detector(realization, setup, mask_c, x_c)?.norm_sqr(),
        i_t: field_at_detector(realization, setup, mask_t, x_t)?.norm_sqr(),
    })
}

/// A detector in one arm: which mask it sits behind and its position/aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmDetector {
    pub mask: usize,
    pub detector: DetectorSpec,
}

#[derive(Debug, Clone, Default)]
struct Arm {
    masks: Vec<Vec<(f64, f64)>>,
    detectors: Vec<ArmDetector>,
}

impl Arm {
    fn add_mask<A: Aperture + ?Sized>(&mut self, mask: &A) -> usize {
        self.masks.push(slit_sampling(mask));
        self.masks.len() - 1
    }

    fn add_detector(&mut self, mask: usize, detector: DetectorSpec) -> Result<usize, SpeckleError> {
        if mask >= self.masks.len() {
            return Err(SpeckleError::UnknownMask {
                index: mask,
                count: self.masks.len(),
            });
        }
        self.detectors.push(ArmDetector { mask, detector });
        Ok(self.detectors.len() - 1)
    }
}

/// What to measure in one Monte Carlo run: masks and detectors in each arm, and
/// the `(C detector, T detector)` pairs whose intensities are correlated.
///
/// Every realization is shared by all masks and detectors of the plan.
#[derive(Debug, Clone, Default)]
pub struct MonteCarloPlan {
    arm_c: Arm,
    arm_t: Arm,
    pairs: Vec<(usize, usize)>,
}

impl MonteCarloPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_mask_c<A: Aperture + ?Sized>(&mut self, mask: &A) -> usize {
        self.arm_c.add_mask(mask)
    }

    pub fn add_mask_t<A: Aperture + ?Sized>(&mut self, mask: &A) -> usize {
        self.arm_t.add_mask(mask)
    }

    pub fn add_detector_c(&mut self, mask: usize, detector: DetectorSpec) -> Result<usize, SpeckleError> {
        self.arm_c.add_detector(mask, detector)
    }

    pub fn add_detector_t(&mut self, mask: usize, detector: DetectorSpec) -> Result<usize, SpeckleError> {
        self.arm_t.add_detector(mask, detector)
    }

    pub fn add_pair(&mut self, c: usize, t: usize) -> Result<usize, SpeckleError> {
        for (index, count) in [(c, self.arm_c.detectors.len()), (t, self.arm_t.detectors.len())] {
            if index >= count {
                return Err(SpeckleError::UnknownDetector { index, count });
            }
        }
        self.pairs.push((c, t));
        Ok(self.pairs.len() - 1)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn detectors_c(&self) -> &[ArmDetector] {
        &self.arm_c.detectors
    }

    pub fn detectors_t(&self) -> &[ArmDetector] {
        &self.arm_t.detectors
    }

    fn mask_points(&self) -> Vec<f64> {
        self.arm_c
            .masks
            .iter()
            .chain(&self.arm_t.masks)
            .flatten()
            .map(|p| p.0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub realizations: u64,
    pub seed: u64,
    pub source_points: usize,
    pub blocks: usize,
}

impl MonteCarloConfig {
    pub fn new(realizations: u64, seed: u64) -> Self {
        Self {
            realizations,
            seed,
            source_points: DEFAULT_SOURCE_POINTS,
            blocks: CorrelationAccumulator::DEFAULT_BLOCKS,
        }
    }

    pub fn with_source_points(mut self, n: usize) -> Self {
        self.source_points = n;
        self
    }
}

/// Result of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutput {
    /// Moments for every plan pair, in pair order.
    pub accumulator: CorrelationAccumulator,
    /// Mean intensity at every C-arm detector.
    pub mean_intensity_c: Vec<f64>,
    /// Mean intensity at every T-arm detector.
    pub mean_intensity_t: Vec<f64>,
}

/// Quadrature weight and lens phases over one mask's points.
type DetectorNode = (f64, Vec<Complex64>);

/// Precomputed propagation for one arm: Fresnel kernel rows per mask point and
/// lens phases per detector quadrature node.
struct ArmKernel {
    mask_offsets: Vec<usize>,
    kernel_re: Vec<Vec<f64>>,
    kernel_im: Vec<Vec<f64>>,
    /// Per detector: its mask and quadrature nodes.
    detector_nodes: Vec<(usize, Vec<DetectorNode>)>,
}

impl ArmKernel {
    fn new(setup: &OpticalSetup, arm: &Arm, grid: &SourceGrid) -> Self {
        let mut mask_offsets = Vec::with_capacity(arm.masks.len());
        let (mut kernel_re, mut kernel_im) = (Vec::new(), Vec::new());
        for mask in &arm.masks {
            mask_offsets.push(kernel_re.len());
            for &(x_m, _) in mask {
                let row: Vec<Complex64> = grid.positions.iter().map(|&x_s| fresnel_kernel(setup, x_m, x_s)).collect();
                kernel_re.push(row.iter().map(|c| c.re).collect());
                kernel_im.push(row.iter().map(|c| c.im).collect());
            }
        }
        let detector_nodes = arm
            .detectors
            .iter()
            .map(|d| {
                let mask = &arm.masks[d.mask];
                let n_nodes = if d.detector.aperture() > 0.0 {
                    DETECTOR_QUADRATURE_POINTS
                } else {
                    1
                };
                let nodes = average_rule(d.detector.position(), d.detector.aperture(), n_nodes)
                    .into_iter()
                    .map(|(x_d, w)| (w, mask.iter().map(|&(x_m, q)| q * lens_phase(setup, x_m, x_d)).collect()))
                    .collect();
                (d.mask, nodes)
            })
            .collect();
        Self {
            mask_offsets,
            kernel_re,
            kernel_im,
            detector_nodes,
        }
    }

    /// Mask-plane fields for a batch of source fields; output `[row][batch]`.
    fn mask_fields(&self, re: &[Vec<f64>], im: &[Vec<f64>], out: &mut [Vec<Complex64>]) {
        for (row, o) in out.iter_mut().enumerate() {
            let (kr, ki) = (&self.kernel_re[row], &self.kernel_im[row]);
            for ((slot, r), i) in o.iter_mut().zip(re).zip(im) {
                *slot = complex_dot(r, i, kr, ki);
            }
        }
    }

    fn intensities(&self, mask_fields: &[Vec<Complex64>], b: usize, out: &mut [f64]) {
        for ((mask, nodes), slot) in self.detector_nodes.iter().zip(out.iter_mut()) {
            let off = self.mask_offsets[*mask];
            let mut total = 0.0;
            for (w, phases) in nodes {
                let e: Complex64 = phases.iter().enumerate().map(|(j, p)| p * mask_fields[off + j][b]).sum();
                total += w * e.norm_sqr();
            }
            *slot = total;
        }
    }
}

#[inline]
fn complex_dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> Complex64 {
    const L: usize = 4;
    let mut sr = [0.0; L];
    let mut si = [0.0; L];
    let n = ar.len() / L * L;
    for k in (0..n).step_by(L) {
        for l in 0..L {
            let (xr, xi, yr, yi) = (ar[k + l], ai[k + l], br[k + l], bi[k + l]);
            sr[l] += xr * yr - xi * yi;
            si[l] += xr * yi + xi * yr;
        }
    }
    for k in n..ar.len() {
        sr[0] += ar[k] * br[k] - ai[k] * bi[k];
        si[0] += ar[k] * bi[k] + ai[k] * br[k];
    }
    Complex64::new(sr.iter().sum(), si.iter().sum())
}

struct BlockResult {
    acc: CorrelationAccumulator,
    sum_c: Vec<f64>,
    sum_t: Vec<f64>,
}

/// Runs `config.realizations` chaotic realizations through `plan`.
///
/// Realizations are split into contiguous jackknife blocks that run in
/// parallel and merge in a fixed pairwise tree, so the output is identical for
/// any thread count.
pub fn run_plan(setup: &OpticalSetup, plan: &MonteCarloPlan, config: &MonteCarloConfig) -> Result<MonteCarloOutput, SpeckleError> {
    let grid = SourceGrid::from_setup(setup, config.source_points)?;
    run_plan_on_grid(setup, plan, config, &grid)
}

/// [`run_plan`] with an explicit source grid.
pub fn run_plan_on_grid(
    setup: &OpticalSetup,
    plan: &MonteCarloPlan,
    config: &MonteCarloConfig,
    grid: &SourceGrid,
) -> Result<MonteCarloOutput, SpeckleError> {
    if config.realizations < 2 {
        return Err(SpeckleError::TooFewRealizations(config.realizations));
    }
    grid.check_nyquist(setup, &plan.mask_points())?;
    let kc = ArmKernel::new(setup, &plan.arm_c, grid);
    let kt = ArmKernel::new(setup, &plan.arm_t, grid);
    let n = config.realizations;
    let n_blocks = (config.blocks as u64).min(n).max(1) as usize;

    let results: Vec<BlockResult> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = n * b as u64 / n_blocks as u64;
            let hi = n * (b as u64 + 1) / n_blocks as u64;
            run_block(plan, config, grid, &kc, &kt, b, n_blocks, lo..hi)
        })
        .collect::<Result<_, _>>()?;

    let mut sum_c = vec![0.0; plan.arm_c.detectors.len()];
    let mut sum_t = vec![0.0; plan.arm_t.detectors.len()];
    let mut accs = Vec::with_capacity(results.len());
    for r in results {
        for (s, v) in sum_c.iter_mut().zip(&r.sum_c) {
            *s += v;
        }
        for (s, v) in sum_t.iter_mut().zip(&r.sum_t) {
            *s += v;
        }
        accs.push(r.acc);
    }
    let accumulator = merge_pairwise(accs)?.expect("at least one block");
    let nf = n as f64;
    Ok(MonteCarloOutput {
        accumulator,
        mean_intensity_c: sum_c.into_iter().map(|s| s / nf).collect(),
        mean_intensity_t: sum_t.into_iter().map(|s| s / nf).collect(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_block(
    plan: &MonteCarloPlan,
    config: &MonteCarloConfig,
    grid: &SourceGrid,
    kc: &ArmKernel,
    kt: &ArmKernel,
    block: usize,
    n_blocks: usize,
    range: std::ops::Range<u64>,
) -> Result<BlockResult, SpeckleError> {
    let ns = grid.len();
    let mut acc = CorrelationAccumulator::with_blocks(plan.pairs.len(), n_blocks);
    let mut sum_c = vec![0.0; plan.arm_c.detectors.len()];
    let mut sum_t = vec![0.0; plan.arm_t.detectors.len()];
    let mut re = vec![vec![0.0; ns]; BATCH];
    let mut im = vec![vec![0.0; ns]; BATCH];
    let mut fields_c = vec![vec![Complex64::new(0.0, 0.0); BATCH]; kc.kernel_re.len()];
    let mut fields_t = vec![vec![Complex64::new(0.0, 0.0); BATCH]; kt.kernel_re.len()];
    let mut ic = vec![0.0; sum_c.len()];
    let mut it = vec![0.0; sum_t.len()];
    let mut samples = vec![DetectorSample::default(); plan.pairs.len()];

    let mut start = range.start;
    while start < range.end {
        let len = ((range.end - start) as usize).min(BATCH);
        for b in 0..len {
            let mut rng = realization_rng(config.seed, start + b as u64);
            fill_field(&mut rng, &grid.amplitude_weights, &mut re[b], &mut im[b]);
        }
        kc.mask_fields(&re[..len], &im[..len], &mut fields_c);
        kt.mask_fields(&re[..len], &im[..len], &mut fields_t);
        for b in 0..len {
            kc.intensities(&fields_c, b, &mut ic);
            kt.intensities(&fields_t, b, &mut it);
            for (s, v) in sum_c.iter_mut().zip(&ic) {
                *s += v;
            }
            for (s, v) in sum_t.iter_mut().zip(&it) {
                *s += v;
            }
            for (slot, &(c, t)) in samples.iter_mut().zip(&plan.pairs) {
                *slot = DetectorSample { i_c: ic[c], i_t: it[t] };
            }
            acc.accumulate_in_block(block, &samples)?;
        }
        start += len as u64;
    }
    Ok(BlockResult { acc, sum_c, sum_t })
}

/// Mean first-order intensity behind `mask` at each detector under coherent
/// (point-source) or chaotic illumination.
pub fn first_order_scan<A: Aperture + ?Sized>(
    setup: &OpticalSetup,
    mask: &A,
    detectors: &[DetectorSpec],
    chaotic: Option<&MonteCarloConfig>,
) -> Result<Vec<f64>, SpeckleError> {
    let mut plan = MonteCarloPlan::new();
    let m = plan.add_mask_c(mask);
    for d in detectors {
        plan.add_detector_c(m, *d)?;
    }
    match chaotic {
        Some(config) => Ok(run_plan(setup, &plan, config)?.mean_intensity_c),
        None => {
            let grid = SourceGrid::point(0.0);
            let kc = ArmKernel::new(setup, &plan.arm_c, &grid);
            let realization = SourceRealization::coherent(&grid);
            let re = vec![realization.field.iter().map(|c| c.re).collect::<Vec<_>>()];
            let im = vec![realization.field.iter().map(|c| c.im).collect::<Vec<_>>()];
            let mut fields = vec![vec![Complex64::new(0.0, 0.0); 1]; kc.kernel_re.len()];
            kc.mask_fields(&re, &im, &mut fields);
            let mut out = vec![0.0; detectors.len()];
            kc.intensities(&fields, 0, &mut out);
            Ok(out)
        }
    }
}
