//! End-to-end wideband sensing experiments.
//!
//! A trial runs occupancy → signal → compressed measurements → recovery →
//! detection → metrics. Every random stage draws from
//! [`derive_seed`](crate::seed::derive_seed)`(master_seed, trial, stage)`, so
//! all strategies and all measurement ratios of one trial see the same
//! occupancy, signal, sensing rows and noise (common random numbers).
//!
//! Noise level is set from an SNR in dB as
//! `noise_std = sqrt(E[a²] / 10^(snr/10))`, where `E[a²]` is the mean power of
//! an occupied band. Sensing columns have unit expected norm, so this is the
//! per-band signal power over the per-measurement noise variance.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;

use crate::linalg::DenseMatrix;
use crate::math::{ceil, ln, powf, round, sqrt};
use crate::predict::{predict_blocks, PredictorKind};
use crate::recovery::{
    ista_weighted_l1, omp, support_detect, MeasurementVector, RecoveryConfig, SparseSignal, WeightVector,
};
use crate::seed::{derive_seed, stage};
use crate::sensing::{build_dft_dictionary, build_sensing_matrix, effective_matrix, measure, Dictionary, Ensemble};
use crate::spectrum::{
    block_weights, evolve_history, sample_occupancy, synthesize_signal, OccupancyHistory, OccupancySnapshot,
    WeightSource, WidebandModel,
};
use crate::{Error, Result};

/// Trials per measurement count in [`phase_transition`].
pub const PHASE_TRANSITION_TRIALS: usize = 50;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensingStrategy {
    ConventionalL1,
    Omp,
    WeightedExpected,
    WeightedHistory,
    WeightedPredicted(PredictorKind),
}

impl SensingStrategy {
    /// History slots the strategy needs before the sensed slot.
    pub fn min_history(&self) -> usize {
        match self {
            Self::WeightedHistory => 1,
            Self::WeightedPredicted(kind) => kind.min_history(),
            _ => 0,
        }
    }
}

impl fmt::Display for SensingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConventionalL1 => f.write_str("conventional_l1"),
            Self::Omp => f.write_str("omp"),
            Self::WeightedExpected => f.write_str("weighted_l1_expected"),
            Self::WeightedHistory => f.write_str("weighted_l1_history"),
            Self::WeightedPredicted(kind) => write!(f, "weighted_l1_predicted:{kind}"),
        }
    }
}

impl FromStr for SensingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional_l1" => Ok(Self::ConventionalL1),
            "omp" => Ok(Self::Omp),
            "weighted_l1_expected" => Ok(Self::WeightedExpected),
            "weighted_l1_history" => Ok(Self::WeightedHistory),
            _ => match s.strip_prefix("weighted_l1_predicted:") {
                Some(kind) => Ok(Self::WeightedPredicted(kind.parse()?)),
                None => Err(Error::InvalidConfig("unknown sensing strategy")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DictionaryKind {
    Identity,
    /// Real inverse-DFT basis.
    #[default]
    Dft,
}

impl FromStr for DictionaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "dft" => Ok(Self::Dft),
            _ => Err(Error::InvalidConfig("dictionary must be identity or dft")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub miss_detection_rate: f64,
    pub false_alarm_rate: f64,
    pub support_error_count: usize,
    pub nmse: f64,
    /// Seconds spent in recovery; zero unless a real [`Clock`] is supplied.
    pub wall_time: f64,
}

/// Confusion-count metrics plus `‖x̂ − x‖² / ‖x‖²`.
///
/// NMSE is 0 when both `x` and `x̂` are zero and 1 when only `x` is.
pub fn compute_metrics(truth: &[bool], detected: &[bool], x: &SparseSignal, estimate: &SparseSignal) -> Result<Metrics> {
    if truth.len() != detected.len() || x.len() != estimate.len() {
        return Err(Error::InvalidInput("metric inputs must have equal lengths"));
    }
    let (mut occupied, mut vacant, mut missed, mut false_alarms) = (0usize, 0usize, 0usize, 0usize);
    for (&t, &d) in truth.iter().zip(detected) {
        match (t, d) {
            (true, false) => {
                occupied += 1;
                missed += 1;
            }
            (true, true) => occupied += 1,
            (false, true) => {
                vacant += 1;
                false_alarms += 1;
            }
            (false, false) => vacant += 1,
        }
    }
    let energy: f64 = x.values().iter().map(|v| v * v).sum();
    let err: f64 = x.values().iter().zip(estimate.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    let nmse = if energy > 0.0 {
        err / energy
    } else if err == 0.0 {
        0.0
    } else {
        1.0
    };
    Ok(Metrics {
        miss_detection_rate: missed as f64 / occupied.max(1) as f64,
        false_alarm_rate: false_alarms as f64 / vacant.max(1) as f64,
        support_error_count: missed + false_alarms,
        nmse,
        wall_time: 0.0,
    })
}

/// Source of elapsed seconds for [`Metrics::wall_time`].
pub trait Clock {
    fn now(&self) -> f64;
}

/// Always reads zero, keeping results independent of timing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: WidebandModel,
    pub m_over_n: Vec<f64>,
    pub noise_std: f64,
    pub strategies: Vec<SensingStrategy>,
    pub trials: usize,
    pub master_seed: u64,
    pub recovery: RecoveryConfig,
    /// History slots `T` observed before the sensed slot; 0 samples the
    /// sensed slot directly from the stationary law.
    pub history_length: usize,
    pub ensemble: Ensemble,
    pub dictionary: DictionaryKind,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1"));
        }
        if self.m_over_n.is_empty() || self.m_over_n.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(Error::InvalidConfig("m_over_n values must lie in (0, 1]"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidConfig("noise_std must be finite and >= 0"));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("at least one strategy is required"));
        }
        if self.strategies.iter().any(|s| s.min_history() > self.history_length) {
            return Err(Error::InvalidConfig("history_length too short for a history or predicted strategy"));
        }
        self.recovery.validate()
    }

    pub fn measurement_counts(&self) -> Vec<usize> {
        self.m_over_n.iter().map(|&r| measurement_count(self.model.n(), r)).collect()
    }
}

/// `round(ratio · n)` clamped to `[1, n]`.
pub fn measurement_count(n: usize, ratio: f64) -> usize {
    (round(ratio * n as f64) as usize).clamp(1, n)
}

/// Noise standard deviation giving `snr_db` for the model's amplitude law.
pub fn noise_std_for_snr(model: &WidebandModel, snr_db: f64) -> f64 {
    sqrt(model.mean_occupied_power() / powf(10.0, snr_db / 10.0))
}

/// Default detection threshold `3·noise_std/√m`.
pub fn default_threshold(noise_std: f64, m: usize) -> f64 {
    3.0 * noise_std / sqrt(m as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub strategy: SensingStrategy,
    pub m_over_n: f64,
    pub m: usize,
    pub trial: usize,
    pub occupied: usize,
    pub metrics: Metrics,
}

/// Occupancy and signal shared by every strategy and ratio of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialScenario {
    pub history: Option<OccupancyHistory>,
    pub snapshot: OccupancySnapshot,
    pub signal: SparseSignal,
}

pub fn trial_scenario(config: &ExperimentConfig, trial: usize) -> Result<TrialScenario> {
    let t = trial as u64;
    let (history, snapshot) = if config.history_length > 0 {
        let full = evolve_history(&config.model, config.history_length + 1, derive_seed(config.master_seed, t, stage::HISTORY))?;
        let (history, last) = full.split_last().expect("history has at least two slots");
        (Some(history), last)
    } else {
        (None, sample_occupancy(&config.model, derive_seed(config.master_seed, t, stage::SNAPSHOT)))
    };
    let signal = synthesize_signal(&snapshot, &config.model, derive_seed(config.master_seed, t, stage::SIGNAL))?;
    Ok(TrialScenario { history, snapshot, signal })
}

/// Everything fixed once `m` is chosen.
struct SensingSetup {
    m: usize,
    a: DenseMatrix,
    y: MeasurementVector,
    threshold: f64,
}

fn sensing_setup(config: &ExperimentConfig, psi: Option<&DenseMatrix>, scenario: &TrialScenario, trial: usize, m: usize) -> Result<SensingSetup> {
    let t = trial as u64;
    let n = config.model.n();
    let phi = build_sensing_matrix(m, n, config.ensemble, derive_seed(config.master_seed, t, stage::SENSING))?;
    let dict = psi.map_or(Dictionary::Identity, Dictionary::Basis);
    let y = measure(&phi, dict, &scenario.signal, config.noise_std, derive_seed(config.master_seed, t, stage::NOISE))?;
    let a = effective_matrix(&phi, dict)?;
    let threshold = config.recovery.support_threshold.unwrap_or_else(|| default_threshold(config.noise_std, m));
    Ok(SensingSetup { m, a, y, threshold })
}

/// Weights for a strategy, rescaled to unit mean; `None` for unweighted ones.
pub fn strategy_weights(
    strategy: SensingStrategy,
    model: &WidebandModel,
    history: Option<&OccupancyHistory>,
) -> Result<Option<WeightVector>> {
    let need_history = || history.ok_or(Error::InsufficientHistory { needed: strategy.min_history(), available: 0 });
    let raw = match strategy {
        SensingStrategy::ConventionalL1 | SensingStrategy::Omp => return Ok(None),
        SensingStrategy::WeightedExpected => block_weights(model, WeightSource::Expected)?,
        SensingStrategy::WeightedHistory => block_weights(model, WeightSource::HistoryAverage(need_history()?))?,
        SensingStrategy::WeightedPredicted(kind) => {
            let prediction = predict_blocks(kind, need_history()?, model)?;
            block_weights(model, WeightSource::Predicted(&prediction.k_hat))?
        }
    };
    Ok(Some(raw.normalized_mean()))
}

fn recover(
    strategy: SensingStrategy,
    config: &ExperimentConfig,
    setup: &SensingSetup,
    weights: Option<&WeightVector>,
) -> Result<SparseSignal> {
    let n = config.model.n();
    match strategy {
        SensingStrategy::Omp => {
            let budget = (round(config.model.expected_occupied()) as usize).min(setup.m);
            let tolerance = config.recovery.residual_tolerance.max(config.noise_std * sqrt(setup.m as f64));
            omp(&setup.a, &setup.y, budget, tolerance)
        }
        SensingStrategy::ConventionalL1 => ista_weighted_l1(&setup.a, &setup.y, &WeightVector::uniform(n), &config.recovery),
        _ => {
            let w = weights.expect("weighted strategies carry weights");
            ista_weighted_l1(&setup.a, &setup.y, w, &config.recovery)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    strategy: SensingStrategy,
    config: &ExperimentConfig,
    scenario: &TrialScenario,
    setup: &SensingSetup,
    weights: Option<&WeightVector>,
    ratio: f64,
    trial: usize,
    clock: &dyn Clock,
) -> Result<TrialResult> {
    let start = clock.now();
    let estimate = recover(strategy, config, setup, weights)?;
    let elapsed = clock.now() - start;
    let detected = support_detect(&estimate, setup.threshold);
    let mut metrics = compute_metrics(scenario.snapshot.bits(), &detected, &scenario.signal, &estimate)?;
    metrics.wall_time = elapsed;
    Ok(TrialResult { strategy, m_over_n: ratio, m: setup.m, trial, occupied: scenario.snapshot.occupied(), metrics })
}

fn dictionary_for(config: &ExperimentConfig) -> Result<Option<DenseMatrix>> {
    match config.dictionary {
        DictionaryKind::Identity => Ok(None),
        DictionaryKind::Dft => build_dft_dictionary(config.model.n()).map(Some),
    }
}

/// One strategy at one measurement ratio for one trial.
pub fn run_trial(
    config: &ExperimentConfig,
    strategy: SensingStrategy,
    ratio: f64,
    trial: usize,
    clock: &dyn Clock,
) -> Result<TrialResult> {
    config.validate()?;
    let psi = dictionary_for(config)?;
    let scenario = trial_scenario(config, trial)?;
    let setup = sensing_setup(config, psi.as_ref(), &scenario, trial, measurement_count(config.model.n(), ratio))?;
    let weights = strategy_weights(strategy, &config.model, scenario.history.as_ref())?;
    evaluate(strategy, config, &scenario, &setup, weights.as_ref(), ratio, trial, clock)
}

/// All strategies × ratios of one trial, ordered (strategy, ratio).
///
/// Produces exactly what [`run_trial`] gives for each slice, sharing the
/// scenario, sensing matrices and weights between slices. `psi` is the
/// dictionary from [`experiment_dictionary`].
pub fn run_trial_group(
    config: &ExperimentConfig,
    psi: Option<&DenseMatrix>,
    trial: usize,
    clock: &dyn Clock,
) -> Result<Vec<TrialResult>> {
    let scenario = trial_scenario(config, trial)?;
    let weights: Vec<Option<WeightVector>> = config
        .strategies
        .iter()
        .map(|&s| strategy_weights(s, &config.model, scenario.history.as_ref()))
        .collect::<Result<_>>()?;
    let setups: Vec<SensingSetup> = config
        .m_over_n
        .iter()
        .map(|&r| sensing_setup(config, psi, &scenario, trial, measurement_count(config.model.n(), r)))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(config.strategies.len() * setups.len());
    for (&strategy, w) in config.strategies.iter().zip(&weights) {
        for (setup, &ratio) in setups.iter().zip(&config.m_over_n) {
            out.push(evaluate(strategy, config, &scenario, setup, w.as_ref(), ratio, trial, clock)?);
        }
    }
    Ok(out)
}

/// Dictionary matrix for a config (`None` for identity).
pub fn experiment_dictionary(config: &ExperimentConfig) -> Result<Option<DenseMatrix>> {
    dictionary_for(config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub strategy: SensingStrategy,
    pub m_over_n: f64,
    pub trials: usize,
    pub mean_miss: f64,
    pub se_miss: f64,
    pub mean_fa: f64,
    pub se_fa: f64,
    pub mean_nmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by (strategy, ratio, trial).
    pub rows: Vec<TrialResult>,
    /// Ordered by (strategy, ratio).
    pub aggregates: Vec<AggregateRow>,
}

impl SweepResult {
    /// Per-trial values of `f` for one (strategy, ratio) cell.
    pub fn column(&self, strategy: SensingStrategy, ratio: f64, f: impl Fn(&Metrics) -> f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.strategy == strategy && r.m_over_n == ratio)
            .map(|r| f(&r.metrics))
            .collect()
    }
}

/// `(mean, standard error)`; the standard error is 0 for a single sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, sqrt(var / n as f64))
}

/// Orders per-trial groups from [`run_trial_group`] into sweep rows and
/// appends the aggregates. `groups[t]` must hold trial `t`.
pub fn assemble_sweep(config: &ExperimentConfig, groups: Vec<Vec<TrialResult>>) -> SweepResult {
    let cells = config.strategies.len() * config.m_over_n.len();
    let mut rows = Vec::with_capacity(cells * groups.len());
    for cell in 0..cells {
        for g in &groups {
            rows.push(g[cell].clone());
        }
    }
    let trials = groups.len();
    let aggregates = (0..cells)
        .map(|cell| {
            let slice = &rows[cell * trials..(cell + 1) * trials];
            let miss: Vec<f64> = slice.iter().map(|r| r.metrics.miss_detection_rate).collect();
            let fa: Vec<f64> = slice.iter().map(|r| r.metrics.false_alarm_rate).collect();
            let nmse: Vec<f64> = slice.iter().map(|r| r.metrics.nmse).collect();
            let (mean_miss, se_miss) = mean_and_se(&miss);
            let (mean_fa, se_fa) = mean_and_se(&fa);
            AggregateRow {
                strategy: slice[0].strategy,
                m_over_n: slice[0].m_over_n,
                trials,
                mean_miss,
                se_miss,
                mean_fa,
                se_fa,
                mean_nmse: mean_and_se(&nmse).0,
            }
        })
        .collect();
    SweepResult { rows, aggregates }
}

/// Sequential sweep over strategies × ratios × trials.
pub fn sweep(config: &ExperimentConfig, clock: &dyn Clock) -> Result<SweepResult> {
    config.validate()?;
    let psi = dictionary_for(config)?;
    let groups = (0..config.trials)
        .map(|t| run_trial_group(config, psi.as_ref(), t, clock))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_sweep(config, groups))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedDifference {
    /// Mean of `a − b`.
    pub mean: f64,
    pub std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

impl PairedDifference {
    pub fn excludes_zero(&self) -> bool {
        self.ci95_high < 0.0 || self.ci95_low > 0.0
    }
}

/// Normal-approximation 95% interval for the mean paired difference `a − b`.
pub fn paired_difference(a: &[f64], b: &[f64]) -> Result<PairedDifference> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput("paired samples must be non-empty and equal length"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, std_error) = mean_and_se(&d);
    Ok(PairedDifference { mean, std_error, ci95_low: mean - Z_95 * std_error, ci95_high: mean + Z_95 * std_error })
}

/// Random `k`-sparse vector with entries `±U[low, high]`.
pub fn random_sparse_signal(n: usize, k: usize, amplitude: (f64, f64), seed: u64) -> Result<SparseSignal> {
    if k > n {
        return Err(Error::InvalidInput("sparsity exceeds signal length"));
    }
    let mut rng = crate::seed::rng(seed);
    let mut support = sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut values = vec![0.0; n];
    for &i in &support {
        let mag = amplitude.0 + (amplitude.1 - amplitude.0) * rng.random::<f64>();
        values[i] = if rng.random::<bool>() { mag } else { -mag };
    }
    SparseSignal::with_support(values, support)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTransitionConfig {
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub seed: u64,
    /// Required exact-support success fraction.
    pub success_threshold: f64,
    pub trials: usize,
    pub ensemble: Ensemble,
    pub amplitude: (f64, f64),
}

impl PhaseTransitionConfig {
    pub fn new(n: usize, k_grid: Vec<usize>, seed: u64, success_threshold: f64) -> Self {
        Self { n, k_grid, seed, success_threshold, trials: PHASE_TRANSITION_TRIALS, ensemble: Ensemble::Gaussian, amplitude: (1.0, 2.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhasePoint {
    pub k: usize,
    pub m_star: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTransitionResult {
    pub points: Vec<PhasePoint>,
    /// Least-squares `c` in `m* ≈ c·k·ln(n/k)` over points with `k > 0`.
    pub fit_c: f64,
    /// Coefficient of determination of that fit.
    pub fit_r2: f64,
}

/// Noiseless OMP exact-support success count for `k`-sparse signals at `m`
/// measurements. Trial `t` reuses the same signal and sensing stream for
/// every `m`.
pub fn omp_success_count(config: &PhaseTransitionConfig, k: usize, m: usize) -> Result<usize> {
    let mut successes = 0;
    for t in 0..config.trials {
        let idx = ((k as u64) << 32) | t as u64;
        let x = random_sparse_signal(config.n, k, config.amplitude, derive_seed(config.seed, idx, stage::SIGNAL))?;
        let phi = build_sensing_matrix(m, config.n, config.ensemble, derive_seed(config.seed, idx, stage::SENSING))?;
        let y = measure(&phi, Dictionary::Identity, &x, 0.0, 0)?;
        let tol = 1e-9 * crate::math::norm2(y.values());
        match omp(&phi, &y, k, tol) {
            Ok(est) if est.nonzero_support() == x.nonzero_support() => successes += 1,
            Ok(_) | Err(Error::DegenerateSupport { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(successes)
}

/// Smallest `m` reaching the success threshold for each `k`, found by binary
/// search on `[k, n]`, plus the `c·k·ln(n/k)` fit.
pub fn phase_transition(config: &PhaseTransitionConfig) -> Result<PhaseTransitionResult> {
    if config.n == 0 || config.trials == 0 {
        return Err(Error::InvalidConfig("phase transition needs n >= 1 and trials >= 1"));
    }
    if !(config.success_threshold > 0.0 && config.success_threshold <= 1.0) {
        return Err(Error::InvalidConfig("success_threshold must lie in (0, 1]"));
    }
    if config.k_grid.iter().any(|&k| 2 * k > config.n) {
        return Err(Error::InvalidConfig("k values must not exceed n/2"));
    }
    let needed = ceil(config.success_threshold * config.trials as f64 - 1e-9) as usize;
    let mut points = Vec::with_capacity(config.k_grid.len());
    for &k in &config.k_grid {
        if k == 0 {
            points.push(PhasePoint { k, m_star: 0 });
            continue;
        }
        let (mut lo, mut hi) = (k, config.n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if omp_success_count(config, k, mid)? >= needed {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        points.push(PhasePoint { k, m_star: lo });
    }
    let (fit_c, fit_r2) = scaling_fit(config.n, &points);
    Ok(PhaseTransitionResult { points, fit_c, fit_r2 })
}

/// Through-origin least squares of `m*` on `k·ln(n/k)` and its R².
pub fn scaling_fit(n: usize, points: &[PhasePoint]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.k > 0)
        .map(|p| (p.k as f64 * ln(n as f64 / p.k as f64), p.m_star as f64))
        .collect();
    let szz: f64 = pts.iter().map(|(z, _)| z * z).sum();
    if pts.is_empty() || szz == 0.0 {
        return (0.0, 0.0);
    }
    let c = pts.iter().map(|(z, m)| z * m).sum::<f64>() / szz;
    let mean = pts.iter().map(|(_, m)| m).sum::<f64>() / pts.len() as f64;
    let ss_res: f64 = pts.iter().map(|(z, m)| (m - c * z) * (m - c * z)).sum();
    let ss_tot: f64 = pts.iter().map(|(_, m)| (m - mean) * (m - mean)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (c, r2)
}

/// Inputs to [`adaptive_measurements`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveInstance<'a> {
    pub signal: &'a SparseSignal,
    pub dictionary: Dictionary<'a>,
    pub ensemble: Ensemble,
    pub noise_std: f64,
    /// Seeds the sensing rows; the noise stream uses a derived seed.
    pub seed: u64,
    /// Detection threshold τ used to count `k̂`.
    pub support_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub k_hat: usize,
    pub m_final: usize,
    pub first_estimate: SparseSignal,
    pub estimate: SparseSignal,
}

fn adaptive_step(instance: &AdaptiveInstance<'_>, m: usize) -> Result<SparseSignal> {
    let n = instance.signal.len();
    let phi = build_sensing_matrix(m, n, instance.ensemble, instance.seed)?;
    let y = measure(&phi, instance.dictionary, instance.signal, instance.noise_std, derive_seed(instance.seed, 0, stage::NOISE))?;
    let a = effective_matrix(&phi, instance.dictionary)?;
    let tol = (1e-9 * crate::math::norm2(y.values())).max(instance.noise_std * sqrt(m as f64));
    omp(&a, &y, m, tol)
}

/// Two-step measurement adjustment.
///
/// Step one recovers from `m0` rows and counts `k̂` detected bands. Step two
/// sets `m = ceil(c·k̂·ln(n/max(k̂,1)))` clamped to `[m0, n]`, extends the
/// same row stream to `m` rows and recovers again. Both steps use OMP with a
/// residual stop at `max(1e-9‖y‖, noise_std·√m)`.
pub fn adaptive_measurements(instance: &AdaptiveInstance<'_>, m0: usize, safety_factor: f64) -> Result<AdaptiveOutcome> {
    let n = instance.signal.len();
    if m0 == 0 || m0 > n {
        return Err(Error::InvalidDimension("m0 must lie in [1, n]"));
    }
    if !(safety_factor > 0.0) || !safety_factor.is_finite() {
        return Err(Error::InvalidConfig("safety factor must be positive"));
    }
    let first = adaptive_step(instance, m0)?;
    let k_hat = support_detect(&first, instance.support_threshold).iter().filter(|&&b| b).count();
    let target = ceil(safety_factor * k_hat as f64 * ln(n as f64 / k_hat.max(1) as f64));
    let m_final = (target.max(0.0) as usize).clamp(m0, n);
    let estimate = if m_final > m0 { adaptive_step(instance, m_final)? } else { first.clone() };
    Ok(AdaptiveOutcome { k_hat, m_final, first_estimate: first, estimate })
}

/// Label used in tables for a strategy.
pub fn strategy_label(strategy: SensingStrategy) -> String {
    alloc::format!("{strategy}")
}
