//! Streaming intensity statistics over chaotic-source realizations.
//!
//! Raw moment sums are kept per scan point and per jackknife block, so two
//! accumulators merge by plain addition. Subtracting the product of the means
//! from the mean product removes the `⟨I_C⟩⟨I_T⟩` background the way AC-coupled
//! detectors do, leaving `⟨ΔI_C ΔI_T⟩`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::speckle::DetectorSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelatorError {
    #[error("accumulator shape mismatch: {expected} scan points vs {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("jackknife block layout mismatch: {0} vs {1} blocks")]
    BlockMismatch(usize, usize),
    #[error("block {block} out of range for {n_blocks} blocks")]
    BlockOutOfRange { block: usize, n_blocks: usize },
    #[error("need at least 2 realizations to finalize, have {0}")]
    InsufficientData(u64),
    #[error("non-finite intensity sample ({i_c}, {i_t})")]
    NonFiniteSample { i_c: f64, i_t: f64 },
}

/// First and second moment sums of one `(I_C, I_T)` stream.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub sum_ic: f64,
    pub sum_it: f64,
    pub sum_icit: f64,
    pub sum_ic2: f64,
    pub sum_it2: f64,
}

impl Moments {
    #[inline]
    pub fn add(&mut self, s: DetectorSample) {
        self.sum_ic += s.i_c;
        self.sum_it += s.i_t;
        self.sum_icit += s.i_c * s.i_t;
        self.sum_ic2 += s.i_c * s.i_c;
        self.sum_it2 += s.i_t * s.i_t;
    }

    fn combine(&self, o: &Moments, sign: f64) -> Moments {
        Moments {
            sum_ic: self.sum_ic + sign * o.sum_ic,
            sum_it: self.sum_it + sign * o.sum_it,
            sum_icit: self.sum_icit + sign * o.sum_icit,
            sum_ic2: self.sum_ic2 + sign * o.sum_ic2,
            sum_it2: self.sum_it2 + sign * o.sum_it2,
        }
    }

    fn is_finite(&self) -> bool {
        [self.sum_ic, self.sum_it, self.sum_icit, self.sum_ic2, self.sum_it2]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    n: u64,
    moments: Vec<Moments>,
}

impl Block {
    fn empty(n_points: usize) -> Self {
        Self {
            n: 0,
            moments: vec![Moments::default(); n_points],
        }
    }

    fn add_block(&mut self, other: &Block) {
        self.n += other.n;
        for (m, o) in self.moments.iter_mut().zip(&other.moments) {
            *m = m.combine(o, 1.0);
        }
    }
}

/// Per-point estimates after a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub n: u64,
    pub mean_ic: f64,
    pub mean_it: f64,
    /// `⟨ΔI_C ΔI_T⟩`.
    pub fluct_corr: f64,
    /// `⟨ΔI_C ΔI_T⟩ / (⟨I_C⟩⟨I_T⟩)`, i.e. `g² − 1`.
    pub normalized: f64,
    /// Jackknife standard error of `fluct_corr`.
    pub std_error: f64,
    /// Jackknife standard error of `normalized`.
    pub normalized_std_error: f64,
}

/// Moment sums for a fixed set of scan points, split into jackknife blocks.
///
/// Blocks are stored sparsely: an accumulator that only ever touched block 7
/// carries only block 7, which keeps per-worker accumulators small.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationAccumulator {
    n_points: usize,
    n_blocks: usize,
    blocks: BTreeMap<usize, Block>,
}

impl CorrelationAccumulator {
    pub const DEFAULT_BLOCKS: usize = 50;

    pub fn new(n_points: usize) -> Self {
        Self::with_blocks(n_points, Self::DEFAULT_BLOCKS)
    }

    pub fn with_blocks(n_points: usize, n_blocks: usize) -> Self {
        assert!(n_blocks > 0, "at least one jackknife block");
        Self {
            n_points,
            n_blocks,
            blocks: BTreeMap::new(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    /// Number of accumulated realizations.
    pub fn n(&self) -> u64 {
        self.blocks.values().map(|b| b.n).sum()
    }

    /// Adds one realization: one sample per scan point. Samples are assigned to
    /// jackknife blocks round-robin in arrival order.
    pub fn accumulate(&mut self, samples: &[DetectorSample]) -> Result<(), CorrelatorError> {
        let block = (self.n() % self.n_blocks as u64) as usize;
        self.accumulate_in_block(block, samples)
    }

    /// Adds one realization to an explicit jackknife block.
    pub fn accumulate_in_block(&mut self, block: usize, samples: &[DetectorSample]) -> Result<(), CorrelatorError> {
        if samples.len() != self.n_points {
            return Err(CorrelatorError::ShapeMismatch {
                expected: self.n_points,
                got: samples.len(),
            });
        }
        if block >= self.n_blocks {
            return Err(CorrelatorError::BlockOutOfRange {
                block,
                n_blocks: self.n_blocks,
            });
        }
        if let Some(s) = samples.iter().find(|s| !(s.i_c.is_finite() && s.i_t.is_finite())) {
            return Err(CorrelatorError::NonFiniteSample { i_c: s.i_c, i_t: s.i_t });
        }
        let n_points = self.n_points;
        let b = self.blocks.entry(block).or_insert_with(|| Block::empty(n_points));
        b.n += 1;
        for (m, s) in b.moments.iter_mut().zip(samples) {
            m.add(*s);
        }
        Ok(())
    }

    /// Sum of two accumulators over the same scan points.
    pub fn merge(&self, other: &CorrelationAccumulator) -> Result<CorrelationAccumulator, CorrelatorError> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &CorrelationAccumulator) -> Result<(), CorrelatorError> {
        if other.n_points != self.n_points {
            return Err(CorrelatorError::ShapeMismatch {
                expected: self.n_points,
                got: other.n_points,
            });
        }
        if other.n_blocks != self.n_blocks {
            return Err(CorrelatorError::BlockMismatch(self.n_blocks, other.n_blocks));
        }
        for (&k, b) in &other.blocks {
            match self.blocks.get_mut(&k) {
                Some(mine) => mine.add_block(b),
                None => {
                    self.blocks.insert(k, b.clone());
                }
            }
        }
        Ok(())
    }

    /// Total realization count and moment sums over all blocks.
    pub fn totals(&self) -> (u64, Vec<Moments>) {
        let mut total = Block::empty(self.n_points);
        for b in self.blocks.values() {
            total.add_block(b);
        }
        (total.n, total.moments)
    }

    pub fn finalize(&self) -> Result<Vec<CorrelationResult>, CorrelatorError> {
        let (n, totals) = self.totals();
        if n < 2 {
            return Err(CorrelatorError::InsufficientData(n));
        }
        let live: Vec<&Block> = self.blocks.values().filter(|b| b.n > 0).collect();
        let mut out = Vec::with_capacity(self.n_points);
        for (p, tot) in totals.iter().enumerate() {
            debug_assert!(tot.is_finite());
            let (fluct, norm, mean_ic, mean_it) = estimates(n, tot);
            let (std_error, normalized_std_error) = if live.len() >= 2 {
                let loo: Vec<(f64, f64)> = live
                    .iter()
                    .filter(|b| b.n < n)
                    .map(|b| {
                        let (f, g, _, _) = estimates(n - b.n, &tot.combine(&b.moments[p], -1.0));
                        (f, g)
                    })
                    .collect();
                (jackknife(loo.iter().map(|x| x.0)), jackknife(loo.iter().map(|x| x.1)))
            } else {
                (f64::NAN, f64::NAN)
            };
            out.push(CorrelationResult {
                n,
                mean_ic,
                mean_it,
                fluct_corr: fluct,
                normalized: norm,
                std_error,
                normalized_std_error,
            });
        }
        Ok(out)
    }
}

fn estimates(n: u64, m: &Moments) -> (f64, f64, f64, f64) {
    let n = n as f64;
    let mean_ic = m.sum_ic / n;
    let mean_it = m.sum_it / n;
    let fluct = m.sum_icit / n - mean_ic * mean_it;
    (fluct, fluct / (mean_ic * mean_it), mean_ic, mean_it)
}

fn jackknife(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let b = values.clone().count() as f64;
    if b < 2.0 {
        return f64::NAN;
    }
    let mean = values.clone().sum::<f64>() / b;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    ((b - 1.0) / b * ss).sqrt()
}

/// Merges accumulators in a fixed pairwise tree: `(0,1), (2,3), …`, level by level.
///
/// The result depends only on the order of `accs`, never on how they were produced.
pub fn merge_pairwise(accs: Vec<CorrelationAccumulator>) -> Result<Option<CorrelationAccumulator>, CorrelatorError> {
    let mut level = accs;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(&b)?),
                None => next.push(a),
            }
        }
        level = next;
    }
    Ok(level.pop())
}

/// Sums a row-major `(x_C, x_T)` map of fluctuation correlations over `x_T`,
/// emulating a bucket detector behind mask T. Returns one value per `x_C`.
///
/// # Panics
/// If `map.len()` is not a multiple of `n_t`.
pub fn bucket_integrate(map: &[CorrelationResult], n_t: usize) -> Vec<f64> {
    let fluct: Vec<f64> = map.iter().map(|r| r.fluct_corr).collect();
    bucket_integrate_values(&fluct, n_t)
}

/// [`bucket_integrate`] for plain values.
pub fn bucket_integrate_values(map: &[f64], n_t: usize) -> Vec<f64> {
    assert!(n_t > 0 && map.len().is_multiple_of(n_t), "map is not a whole number of x_T rows");
    map.chunks(n_t).map(|row| row.iter().sum()).collect()
}
