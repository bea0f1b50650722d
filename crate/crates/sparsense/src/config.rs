//! JSON run configurations.
//!
//! Every object rejects unknown keys. Parse failures report the JSON key path
//! plus line and column; range violations report the key path and the
//! violated constraint. Omitted optional keys take the defaults documented on
//! each field.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use sparsense_core::pipeline::{
    noise_std_for_snr, DictionaryKind, ExperimentConfig, PhaseTransitionConfig, SensingStrategy,
};
use sparsense_core::sensing::Ensemble;
use sparsense_core::spectrum::{BlockSpec, WidebandModel};
use sparsense_core::{RecoveryConfig, StepSizePolicy};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error at `{key}` (line {line}, column {column}): {message}")]
    Parse { key: String, line: usize, column: usize, message: String },
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

/// Reads and strictly deserializes a JSON config file.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse { key, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })
}

fn parse_ensemble(key: &str, s: &str) -> Result<Ensemble, ConfigError> {
    s.parse().map_err(|_| invalid(key, "expected \"gaussian\" or \"rademacher\""))
}

fn check_amplitude(key: &str, a: [f64; 2]) -> Result<(f64, f64), ConfigError> {
    if !(a[0] > 0.0 && a[0] <= a[1] && a[1].is_finite()) {
        return Err(invalid(key, "must satisfy 0 < low <= high"));
    }
    Ok((a[0], a[1]))
}

fn default_amplitude() -> [f64; 2] {
    [1.0, 2.0]
}

fn default_gaussian() -> String {
    "gaussian".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockFile {
    pub bands: usize,
    pub p: f64,
    /// Default 0 (memoryless).
    #[serde(default)]
    pub persistence: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RecoveryFile {
    /// Default 5000.
    pub max_iterations: Option<usize>,
    /// Default 1e-10.
    pub tolerance: Option<f64>,
    /// Default 0.05.
    pub lambda: Option<f64>,
    /// Fixed ISTA step; default `0.99 / ‖A‖²`.
    pub step: Option<f64>,
    /// Detection threshold τ; default `3·noise_std/√m`.
    pub support_threshold: Option<f64>,
}

impl RecoveryFile {
    fn build(&self) -> Result<RecoveryConfig, ConfigError> {
        let d = RecoveryConfig::default();
        let cfg = RecoveryConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            residual_tolerance: self.tolerance.unwrap_or(d.residual_tolerance),
            step_size: self.step.map_or(StepSizePolicy::InverseSpectralNorm, StepSizePolicy::Fixed),
            lambda: self.lambda.unwrap_or(d.lambda),
            support_threshold: self.support_threshold,
        };
        if cfg.max_iterations == 0 {
            return Err(invalid("recovery.max_iterations", "must be >= 1"));
        }
        if !(cfg.residual_tolerance >= 0.0) {
            return Err(invalid("recovery.tolerance", "must be >= 0"));
        }
        if !(cfg.lambda >= 0.0) || !cfg.lambda.is_finite() {
            return Err(invalid("recovery.lambda", "must be finite and >= 0"));
        }
        if let Some(s) = self.step {
            if !(s > 0.0) || !s.is_finite() {
                return Err(invalid("recovery.step", "must be finite and > 0"));
            }
        }
        if let Some(t) = self.support_threshold {
            if !(t >= 0.0) {
                return Err(invalid("recovery.support_threshold", "must be >= 0"));
            }
        }
        Ok(cfg)
    }
}

/// `sense-sweep` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseSweepFile {
    pub blocks: Vec<BlockFile>,
    /// Occupied-band magnitude range; default `[1, 2]`.
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
    pub m_over_n: Vec<f64>,
    /// Exactly one of `noise_std` and `snr_db` may be given; default noiseless.
    pub noise_std: Option<f64>,
    pub snr_db: Option<f64>,
    /// Strategy names, e.g. `"conventional_l1"`, `"weighted_l1_predicted:ar1"`.
    pub strategies: Vec<String>,
    pub trials: usize,
    /// Default 0.
    #[serde(default)]
    pub seed: u64,
    /// History slots before the sensed slot; default 0.
    #[serde(default)]
    pub history_length: usize,
    /// Default `"gaussian"`.
    #[serde(default = "default_gaussian")]
    pub ensemble: String,
    /// `"dft"` (default) or `"identity"`.
    #[serde(default = "default_dictionary")]
    pub dictionary: String,
    #[serde(default)]
    pub recovery: RecoveryFile,
}

fn default_dictionary() -> String {
    "dft".into()
}

impl SenseSweepFile {
    pub fn build(&self, seed_override: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
        if self.blocks.is_empty() {
            return Err(invalid("blocks", "at least one block is required"));
        }
        let mut specs = Vec::with_capacity(self.blocks.len());
        let mut first = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.bands == 0 {
                return Err(invalid(format!("blocks[{i}].bands"), "must be >= 1"));
            }
            if !(0.0..=1.0).contains(&b.p) {
                return Err(invalid(format!("blocks[{i}].p"), "must lie in [0, 1]"));
            }
            if !(0.0..=1.0).contains(&b.persistence) || b.persistence == 1.0 {
                return Err(invalid(format!("blocks[{i}].persistence"), "must lie in [0, 1)"));
            }
            specs.push(BlockSpec { first_band: first, band_count: b.bands, occupancy_prob: b.p, persistence: b.persistence });
            first += b.bands;
        }
        let amplitude = check_amplitude("amplitude", self.amplitude)?;
        let model = WidebandModel::new(specs, amplitude).map_err(|e| invalid("blocks", e.to_string()))?;

        if self.m_over_n.is_empty() {
            return Err(invalid("m_over_n", "at least one ratio is required"));
        }
        for (i, r) in self.m_over_n.iter().enumerate() {
            if !(*r > 0.0 && *r <= 1.0) {
                return Err(invalid(format!("m_over_n[{i}]"), format!("{r} is outside (0, 1]")));
            }
        }
        let noise_std = match (self.noise_std, self.snr_db) {
            (Some(_), Some(_)) => return Err(invalid("snr_db", "give either noise_std or snr_db, not both")),
            (Some(s), None) if !(s >= 0.0) || !s.is_finite() => return Err(invalid("noise_std", "must be finite and >= 0")),
            (Some(s), None) => s,
            (None, Some(db)) if !db.is_finite() => return Err(invalid("snr_db", "must be finite")),
            (None, Some(db)) => noise_std_for_snr(&model, db),
            (None, None) => 0.0,
        };
        if self.strategies.is_empty() {
            return Err(invalid("strategies", "at least one strategy is required"));
        }
        let mut strategies = Vec::with_capacity(self.strategies.len());
        for (i, s) in self.strategies.iter().enumerate() {
            let parsed: SensingStrategy = s.parse().map_err(|e: sparsense_core::Error| invalid(format!("strategies[{i}]"), e.to_string()))?;
            if parsed.min_history() > self.history_length {
                return Err(invalid(
                    "history_length",
                    format!("strategy `{s}` needs at least {} history slots", parsed.min_history()),
                ));
            }
            strategies.push(parsed);
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        let dictionary: DictionaryKind =
            self.dictionary.parse().map_err(|_| invalid("dictionary", "expected \"dft\" or \"identity\""))?;
        let config = ExperimentConfig {
            model,
            m_over_n: self.m_over_n.clone(),
            noise_std,
            strategies,
            trials: self.trials,
            master_seed: seed_override.unwrap_or(self.seed),
            recovery: self.recovery.build()?,
            history_length: self.history_length,
            ensemble: parse_ensemble("ensemble", &self.ensemble)?,
            dictionary,
        };
        config.validate().map_err(|e| invalid("(config)", e.to_string()))?;
        Ok(config)
    }
}

/// `phase-transition` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTransitionFile {
    pub n: usize,
    pub k_grid: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Default 0.9.
    #[serde(default = "default_success")]
    pub success_threshold: f64,
    /// Trials per `m`; default 50.
    pub trials: Option<usize>,
    #[serde(default = "default_gaussian")]
    pub ensemble: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
}

fn default_success() -> f64 {
    0.9
}

impl PhaseTransitionFile {
    pub fn build(&self, seed_override: Option<u64>) -> Result<PhaseTransitionConfig, ConfigError> {
        if self.n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        for (i, &k) in self.k_grid.iter().enumerate() {
            if 2 * k > self.n {
                return Err(invalid(format!("k_grid[{i}]"), format!("{k} exceeds n/2")));
            }
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= 1.0) {
            return Err(invalid("success_threshold", "must lie in (0, 1]"));
        }
        let mut cfg = PhaseTransitionConfig::new(self.n, self.k_grid.clone(), seed_override.unwrap_or(self.seed), self.success_threshold);
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(invalid("trials", "must be >= 1"));
            }
            cfg.trials = t;
        }
        cfg.ensemble = parse_ensemble("ensemble", &self.ensemble)?;
        cfg.amplitude = check_amplitude("amplitude", self.amplitude)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatherMode {
    Clique,
    Aggregation,
}

impl GatherMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::Clique => "clique",
            Self::Aggregation => "aggregation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GatherSolverName {
    #[default]
    Omp,
    L1,
}

/// `gather-sim` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatherFile {
    /// Network size `N`.
    pub nodes: usize,
    /// Nodes pulled by the base station `m`.
    pub pull_count: usize,
    /// Updating nodes per round `p`.
    pub updaters: usize,
    /// Independent rounds (each with its own network and updates).
    pub rounds: usize,
    /// Default `["clique"]`.
    #[serde(default = "default_modes")]
    pub modes: Vec<GatherMode>,
    /// Aggregators for the `aggregation` mode; default 16.
    #[serde(default = "default_network_nodes")]
    pub network_nodes: usize,
    #[serde(default)]
    pub seed: u64,
    /// Update magnitudes; default `[1, 2]`.
    #[serde(default = "default_amplitude")]
    pub value_range: [f64; 2],
    /// `"omp"` (default) or `"l1"`.
    #[serde(default)]
    pub solver: GatherSolverName,
    /// Fixed OMP support size; default none (residual stop, up to `m` atoms).
    pub omp_budget: Option<usize>,
    #[serde(default)]
    pub recovery: RecoveryFile,
}

fn default_modes() -> Vec<GatherMode> {
    vec![GatherMode::Clique]
}

fn default_network_nodes() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatherScenario {
    pub nodes: usize,
    pub pull_count: usize,
    pub updaters: usize,
    pub rounds: usize,
    pub modes: Vec<GatherMode>,
    pub network_nodes: usize,
    pub seed: u64,
    pub value_range: (f64, f64),
    pub solver: GatherSolverName,
    pub omp_budget: Option<usize>,
    pub recovery: RecoveryConfig,
}

fn check_network(nodes: usize, pull_count: usize) -> Result<(), ConfigError> {
    if nodes == 0 {
        return Err(invalid("nodes", "must be >= 1"));
    }
    if pull_count == 0 || pull_count > nodes {
        return Err(invalid("pull_count", format!("must lie in [1, {nodes}]")));
    }
    Ok(())
}

impl GatherFile {
    pub fn build(&self, seed_override: Option<u64>) -> Result<GatherScenario, ConfigError> {
        check_network(self.nodes, self.pull_count)?;
        if self.updaters > self.nodes {
            return Err(invalid("updaters", format!("must be <= nodes ({})", self.nodes)));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds", "must be >= 1"));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "at least one mode is required"));
        }
        if self.network_nodes == 0 {
            return Err(invalid("network_nodes", "must be >= 1"));
        }
        if self.omp_budget == Some(0) {
            return Err(invalid("omp_budget", "must be >= 1"));
        }
        Ok(GatherScenario {
            nodes: self.nodes,
            pull_count: self.pull_count,
            updaters: self.updaters,
            rounds: self.rounds,
            modes: self.modes.clone(),
            network_nodes: self.network_nodes,
            seed: seed_override.unwrap_or(self.seed),
            value_range: check_amplitude("value_range", self.value_range)?,
            solver: self.solver,
            omp_budget: self.omp_budget,
            recovery: self.recovery.build()?,
        })
    }
}

/// `ar-gather` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArGatherFile {
    pub nodes: usize,
    pub pull_count: usize,
    /// Temporal coefficient α, `|α| < 1`.
    pub alpha: f64,
    pub rounds: usize,
    /// Non-zero innovations per round; default 1.
    #[serde(default = "one")]
    pub innovations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub value_range: [f64; 2],
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArGatherScenario {
    pub nodes: usize,
    pub pull_count: usize,
    pub alpha: f64,
    pub rounds: usize,
    pub innovations: usize,
    pub seed: u64,
    pub value_range: (f64, f64),
}

impl ArGatherFile {
    pub fn build(&self, seed_override: Option<u64>) -> Result<ArGatherScenario, ConfigError> {
        check_network(self.nodes, self.pull_count)?;
        if !(self.alpha.abs() < 1.0) {
            return Err(invalid("alpha", "must satisfy |alpha| < 1"));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds", "must be >= 1"));
        }
        if self.innovations > self.nodes {
            return Err(invalid("innovations", format!("must be <= nodes ({})", self.nodes)));
        }
        Ok(ArGatherScenario {
            nodes: self.nodes,
            pull_count: self.pull_count,
            alpha: self.alpha,
            rounds: self.rounds,
            innovations: self.innovations,
            seed: seed_override.unwrap_or(self.seed),
            value_range: check_amplitude("value_range", self.value_range)?,
        })
    }
}

/// `adaptive-demo` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveFile {
    pub n: usize,
    /// True sparsity of each trial signal.
    pub k: usize,
    pub m0: usize,
    /// Safety factor `c`; default 2.
    #[serde(default = "two")]
    pub safety_factor: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_std: f64,
    /// Default `max(3·noise_std/√m0, 1e-9)`.
    pub support_threshold: Option<f64>,
    #[serde(default = "default_gaussian")]
    pub ensemble: String,
    /// `"identity"` (default) or `"dft"`.
    #[serde(default = "default_identity")]
    pub dictionary: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
}

fn two() -> f64 {
    2.0
}

fn default_identity() -> String {
    "identity".into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveScenario {
    pub n: usize,
    pub k: usize,
    pub m0: usize,
    pub safety_factor: f64,
    pub trials: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub support_threshold: f64,
    pub ensemble: Ensemble,
    pub dictionary: DictionaryKind,
    pub amplitude: (f64, f64),
}

impl AdaptiveFile {
    pub fn build(&self, seed_override: Option<u64>) -> Result<AdaptiveScenario, ConfigError> {
        if self.n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        if self.k > self.n {
            return Err(invalid("k", "must be <= n"));
        }
        if self.m0 == 0 || self.m0 > self.n {
            return Err(invalid("m0", format!("must lie in [1, {}]", self.n)));
        }
        if !(self.safety_factor > 0.0) || !self.safety_factor.is_finite() {
            return Err(invalid("safety_factor", "must be finite and > 0"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(invalid("noise_std", "must be finite and >= 0"));
        }
        let support_threshold = match self.support_threshold {
            Some(t) if !(t >= 0.0) => return Err(invalid("support_threshold", "must be >= 0")),
            Some(t) => t,
            None => (3.0 * self.noise_std / (self.m0 as f64).sqrt()).max(1e-9),
        };
        Ok(AdaptiveScenario {
            n: self.n,
            k: self.k,
            m0: self.m0,
            safety_factor: self.safety_factor,
            trials: self.trials,
            seed: seed_override.unwrap_or(self.seed),
            noise_std: self.noise_std,
            support_threshold,
            ensemble: parse_ensemble("ensemble", &self.ensemble)?,
            dictionary: self.dictionary.parse().map_err(|_| invalid("dictionary", "expected \"dft\" or \"identity\""))?,
            amplitude: check_amplitude("amplitude", self.amplitude)?,
        })
    }
}
