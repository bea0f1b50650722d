//! Block-heterogeneous wideband occupancy.
//!
//! The `n` bands are split into contiguous blocks, each with its own
//! occupancy probability `p` and lag-1 persistence `ρ`. Over time every band
//! follows a two-state Markov chain with stationary occupancy `p`:
//!
//! ```text
//! P(occupied → occupied) = p + ρ(1 − p)
//! P(vacant   → occupied) = p(1 − ρ)
//! ```

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::recovery::{SparseSignal, WeightVector};
use crate::seed;
use crate::{Error, Result};

/// Floor on the mean block occupancy before taking its reciprocal.
pub const WEIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec {
    pub first_band: usize,
    pub band_count: usize,
    pub occupancy_prob: f64,
    pub persistence: f64,
}

impl BlockSpec {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.first_band..self.first_band + self.band_count
    }

    /// `p · band_count`.
    pub fn expected_occupied(&self) -> f64 {
        self.occupancy_prob * self.band_count as f64
    }

    fn validate(&self) -> Result<()> {
        if self.band_count == 0 {
            return Err(Error::InvalidModel("block band_count must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.occupancy_prob) {
            return Err(Error::InvalidModel("occupancy probability must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return Err(Error::InvalidModel("persistence must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Raised when the expected occupied count is not below `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseOccupancyWarning {
    pub expected_occupied: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidebandModel {
    n: usize,
    blocks: Vec<BlockSpec>,
    amplitude: (f64, f64),
}

impl WidebandModel {
    /// Blocks must tile `0..n` contiguously in order.
    pub fn new(blocks: Vec<BlockSpec>, amplitude: (f64, f64)) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidModel("model needs at least one block"));
        }
        let mut next = 0;
        for b in &blocks {
            b.validate()?;
            if b.first_band != next {
                return Err(Error::InvalidModel("blocks must partition the bands contiguously"));
            }
            next += b.band_count;
        }
        let (lo, hi) = amplitude;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidModel("amplitude range must satisfy 0 < low <= high"));
        }
        Ok(Self { n: next, blocks, amplitude })
    }

    /// Builds contiguous blocks from `(band_count, p, persistence)` triples.
    pub fn contiguous(shapes: &[(usize, f64, f64)], amplitude: (f64, f64)) -> Result<Self> {
        let mut first = 0;
        let blocks = shapes
            .iter()
            .map(|&(band_count, occupancy_prob, persistence)| {
                let b = BlockSpec { first_band: first, band_count, occupancy_prob, persistence };
                first += band_count;
                b
            })
            .collect();
        Self::new(blocks, amplitude)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    #[inline]
    pub fn amplitude(&self) -> (f64, f64) {
        self.amplitude
    }

    pub fn expected_occupied(&self) -> f64 {
        self.blocks.iter().map(BlockSpec::expected_occupied).sum()
    }

    /// `E[a²]` for `a ~ U[low, high]`.
    pub fn mean_occupied_power(&self) -> f64 {
        let (lo, hi) = self.amplitude;
        (lo * lo + lo * hi + hi * hi) / 3.0
    }

    pub fn sparsity_warning(&self) -> Option<DenseOccupancyWarning> {
        let expected = self.expected_occupied();
        (expected >= self.n as f64).then_some(DenseOccupancyWarning { expected_occupied: expected, n: self.n })
    }

    /// Index of the block containing `band`.
    pub fn block_of(&self, band: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.range().contains(&band))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancySnapshot {
    bits: Vec<bool>,
    per_block_counts: Vec<usize>,
}

impl OccupancySnapshot {
    pub fn from_bits(model: &WidebandModel, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != model.n() {
            return Err(Error::InvalidDimension("snapshot length must equal model band count"));
        }
        let per_block_counts = model.blocks().iter().map(|b| bits[b.range()].iter().filter(|&&o| o).count()).collect();
        Ok(Self { bits, per_block_counts })
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn per_block_counts(&self) -> &[usize] {
        &self.per_block_counts
    }

    pub fn occupied(&self) -> usize {
        self.per_block_counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyHistory {
    snapshots: Vec<OccupancySnapshot>,
    per_block_series: Vec<Vec<usize>>,
}

impl OccupancyHistory {
    pub fn from_snapshots(snapshots: Vec<OccupancySnapshot>) -> Self {
        let blocks = snapshots.first().map_or(0, |s| s.per_block_counts.len());
        let per_block_series =
            (0..blocks).map(|b| snapshots.iter().map(|s| s.per_block_counts[b]).collect()).collect();
        Self { snapshots, per_block_series }
    }

    /// Number of slots `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    #[inline]
    pub fn snapshots(&self) -> &[OccupancySnapshot] {
        &self.snapshots
    }

    /// `kᵢ(t)` for block `i`.
    pub fn block_series(&self, block: usize) -> &[usize] {
        &self.per_block_series[block]
    }

    pub fn block_series_f64(&self, block: usize) -> Vec<f64> {
        self.per_block_series[block].iter().map(|&k| k as f64).collect()
    }

    /// Time-average `k̄ᵢ` for every block.
    pub fn block_means(&self) -> Vec<f64> {
        self.per_block_series
            .iter()
            .map(|s| if s.is_empty() { 0.0 } else { s.iter().sum::<usize>() as f64 / s.len() as f64 })
            .collect()
    }

    /// Splits off the final slot, returning the shortened history and that slot.
    pub fn split_last(mut self) -> Option<(Self, OccupancySnapshot)> {
        let last = self.snapshots.pop()?;
        Some((Self::from_snapshots(self.snapshots), last))
    }
}

/// Independent Bernoulli(p) occupancy per band.
pub fn sample_occupancy(model: &WidebandModel, seed: u64) -> OccupancySnapshot {
    let mut rng = seed::rng(seed);
    let mut bits = Vec::with_capacity(model.n());
    for b in model.blocks() {
        for _ in 0..b.band_count {
            bits.push(rng.random::<f64>() < b.occupancy_prob);
        }
    }
    OccupancySnapshot::from_bits(model, bits).expect("length matches model")
}

/// `T` slots of the per-band Markov chain, started from its stationary law.
pub fn evolve_history(model: &WidebandModel, slots: usize, seed: u64) -> Result<OccupancyHistory> {
    if slots == 0 {
        return Err(Error::InvalidInput("history needs at least one slot"));
    }
    let mut rng = seed::rng(seed);
    let band_params: Vec<(f64, f64, f64)> = model
        .blocks()
        .iter()
        .flat_map(|b| {
            let p = b.occupancy_prob;
            let stay = p + b.persistence * (1.0 - p);
            let enter = p * (1.0 - b.persistence);
            core::iter::repeat_n((p, stay, enter), b.band_count)
        })
        .collect();

    let mut state: Vec<bool> = band_params.iter().map(|&(p, _, _)| rng.random::<f64>() < p).collect();
    let mut snapshots = Vec::with_capacity(slots);
    snapshots.push(OccupancySnapshot::from_bits(model, state.clone())?);
    for _ in 1..slots {
        for (s, &(_, stay, enter)) in state.iter_mut().zip(&band_params) {
            let u = rng.random::<f64>();
            *s = if *s { u < stay } else { u < enter };
        }
        snapshots.push(OccupancySnapshot::from_bits(model, state.clone())?);
    }
    Ok(OccupancyHistory::from_snapshots(snapshots))
}

/// Occupied bands get `±U[low, high]`, vacant bands exactly zero.
pub fn synthesize_signal(snapshot: &OccupancySnapshot, model: &WidebandModel, seed: u64) -> Result<SparseSignal> {
    if snapshot.bits().len() != model.n() {
        return Err(Error::InvalidDimension("snapshot length must equal model band count"));
    }
    let mut rng = seed::rng(seed);
    let (lo, hi) = model.amplitude();
    let mut values = vec![0.0; model.n()];
    let mut support = Vec::with_capacity(snapshot.occupied());
    for (i, &occ) in snapshot.bits().iter().enumerate() {
        if !occ {
            continue;
        }
        let mag = lo + (hi - lo) * rng.random::<f64>();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        values[i] = sign * mag;
        support.push(i);
    }
    SparseSignal::with_support(values, support)
}

/// Where the per-block mean occupancy behind the weights comes from.
#[derive(Debug, Clone, Copy)]
pub enum WeightSource<'a> {
    /// `k̄ᵢ = pᵢ · band_countᵢ`.
    Expected,
    /// Time-average of `kᵢ(t)` over a history.
    HistoryAverage(&'a OccupancyHistory),
    /// Per-block predictions `k̂ᵢ`.
    Predicted(&'a [f64]),
}

/// Block-constant weights `wᵢ = 1 / max(k̄ᵢ, 10⁻³)`.
pub fn block_weights(model: &WidebandModel, source: WeightSource<'_>) -> Result<WeightVector> {
    let means: Vec<f64> = match source {
        WeightSource::Expected => model.blocks().iter().map(BlockSpec::expected_occupied).collect(),
        WeightSource::HistoryAverage(h) => {
            if h.is_empty() || h.per_block_series.len() != model.blocks().len() {
                return Err(Error::InsufficientHistory { needed: 1, available: h.len() });
            }
            h.block_means()
        }
        WeightSource::Predicted(k_hat) => {
            if k_hat.len() < model.blocks().len() {
                return Err(Error::MissingPrediction { block: k_hat.len() });
            }
            if let Some(block) = k_hat.iter().position(|k| !k.is_finite()) {
                return Err(Error::MissingPrediction { block });
            }
            k_hat[..model.blocks().len()].to_vec()
        }
    };
    let mut weights = Vec::with_capacity(model.n());
    for (b, k) in model.blocks().iter().zip(means) {
        let w = 1.0 / k.max(WEIGHT_FLOOR);
        weights.extend(core::iter::repeat_n(w, b.band_count));
    }
    WeightVector::new(weights)
}
