//! Command runners: config in, tables out.

use std::time::Instant;

use rayon::prelude::*;
use sparsense_core::gather::{
    init_network, random_updates, ArState, GatherSolver, Topology,
};
use sparsense_core::pipeline::{
    adaptive_measurements, assemble_sweep, experiment_dictionary, phase_transition, random_sparse_signal,
    run_trial_group, AdaptiveInstance, Clock, DictionaryKind, ExperimentConfig, NoClock, PhaseTransitionConfig,
    PhaseTransitionResult, SweepResult,
};
use sparsense_core::recovery::support_detect;
use sparsense_core::seed::{derive_seed, stage};
use sparsense_core::sensing::{build_dft_dictionary, Dictionary};
use sparsense_core::WeightVector;

use crate::config::{AdaptiveScenario, ArGatherScenario, GatherMode, GatherScenario, GatherSolverName};
use crate::table::{fmt_float, Table};

pub const DETAIL_HEADER: &[&str] = &["strategy", "m_over_n", "trial", "miss_detection", "false_alarm", "nmse", "wall_time_s"];
pub const AGGREGATE_HEADER: &[&str] = &["strategy", "m_over_n", "mean_miss", "se_miss", "mean_fa", "se_fa"];
pub const GATHER_HEADER: &[&str] = &[
    "mode",
    "N",
    "m",
    "p",
    "exact_recovery",
    "bs_connections",
    "d2d_multicasts",
    "network_node_transmissions",
    "sink_transmissions",
];
pub const PHASE_HEADER: &[&str] = &["k", "m_star", "fit_c", "fit_r2"];
pub const AR_HEADER: &[&str] = &["round", "nmse", "exact_innovation", "sink_transmissions"];
pub const ADAPTIVE_HEADER: &[&str] = &["trial", "k", "k_hat", "m0", "m_final", "exact_m0", "exact_final"];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] sparsense_core::Error),
    #[error("cannot start thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Elapsed seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Runs `f` on a pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

/// Parallel sweep with the same output as the sequential core sweep.
pub fn sweep(config: &ExperimentConfig, threads: usize, timing: bool) -> Result<SweepResult, RunError> {
    config.validate()?;
    let psi = experiment_dictionary(config)?;
    let clock: Box<dyn Clock + Sync> = if timing { Box::new(WallClock::start()) } else { Box::new(NoClock) };
    let groups = with_threads(threads, || {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial_group(config, psi.as_ref(), t, clock.as_ref()))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(assemble_sweep(config, groups))
}

pub fn sweep_tables(result: &SweepResult) -> (Table, Table) {
    let mut detail = Table::new(DETAIL_HEADER);
    for r in &result.rows {
        detail.push(vec![
            r.strategy.to_string(),
            fmt_float(r.m_over_n),
            r.trial.to_string(),
            fmt_float(r.metrics.miss_detection_rate),
            fmt_float(r.metrics.false_alarm_rate),
            fmt_float(r.metrics.nmse),
            fmt_float(r.metrics.wall_time),
        ]);
    }
    let mut aggregate = Table::new(AGGREGATE_HEADER);
    for a in &result.aggregates {
        aggregate.push(vec![
            a.strategy.to_string(),
            fmt_float(a.m_over_n),
            fmt_float(a.mean_miss),
            fmt_float(a.se_miss),
            fmt_float(a.mean_fa),
            fmt_float(a.se_fa),
        ]);
    }
    (detail, aggregate)
}

pub fn phase_table(result: &PhaseTransitionResult) -> Table {
    let mut t = Table::new(PHASE_HEADER);
    for p in &result.points {
        t.push(vec![p.k.to_string(), p.m_star.to_string(), fmt_float(result.fit_c), fmt_float(result.fit_r2)]);
    }
    t
}

pub fn run_phase_transition(config: &PhaseTransitionConfig) -> Result<PhaseTransitionResult, RunError> {
    Ok(phase_transition(config)?)
}

/// One gather round's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct GatherRow {
    pub mode: GatherMode,
    pub round: usize,
    pub exact: bool,
    pub ledger: sparsense_core::gather::SignalingLedger,
}

fn gather_round(s: &GatherScenario, mode: GatherMode, round: usize) -> Result<GatherRow, sparsense_core::Error> {
    let r = round as u64;
    let topology = match mode {
        GatherMode::Clique => Topology::Clique,
        GatherMode::Aggregation => Topology::AggregationTree { network_nodes: s.network_nodes },
    };
    let mut net = init_network(s.nodes, s.pull_count, topology, derive_seed(s.seed, r, stage::NETWORK))?;
    let updates = random_updates(s.nodes, s.updaters, s.value_range, derive_seed(s.seed, r, stage::UPDATES))?;
    let weights = WeightVector::uniform(s.nodes);
    let solver = match s.solver {
        GatherSolverName::Omp => GatherSolver::Omp { budget: s.omp_budget },
        GatherSolverName::L1 => GatherSolver::WeightedL1 { weights: &weights, config: &s.recovery },
    };
    let outcome = match mode {
        GatherMode::Clique => {
            net.run_exchange(&updates)?;
            net.bs_pull_and_recover(solver)?
        }
        GatherMode::Aggregation => {
            net.run_aggregation_reporting(&updates, derive_seed(s.seed, r, stage::ASSIGN), solver)?
        }
    };
    Ok(GatherRow { mode, round, exact: outcome.exact, ledger: net.ledger() })
}

/// Rows ordered by (mode as configured, round).
pub fn gather_sim(s: &GatherScenario, threads: usize) -> Result<Vec<GatherRow>, RunError> {
    let jobs: Vec<(GatherMode, usize)> = s.modes.iter().flat_map(|&m| (0..s.rounds).map(move |r| (m, r))).collect();
    let rows = with_threads(threads, || {
        jobs.par_iter().map(|&(m, r)| gather_round(s, m, r)).collect::<Result<Vec<_>, _>>()
    })??;
    Ok(rows)
}

pub fn gather_table(s: &GatherScenario, rows: &[GatherRow]) -> Table {
    let mut t = Table::new(GATHER_HEADER);
    for row in rows {
        t.push(vec![
            row.mode.label().into(),
            s.nodes.to_string(),
            s.pull_count.to_string(),
            s.updaters.to_string(),
            u8::from(row.exact).to_string(),
            row.ledger.bs_connections.to_string(),
            row.ledger.d2d_multicasts.to_string(),
            row.ledger.network_node_transmissions.to_string(),
            row.ledger.sink_transmissions.to_string(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArRow {
    pub round: usize,
    pub nmse: f64,
    pub exact_innovation: bool,
    pub sink_transmissions: u64,
}

/// Sequential AR gathering over one network.
pub fn ar_gather(s: &ArGatherScenario) -> Result<Vec<ArRow>, RunError> {
    let mut net = init_network(s.nodes, s.pull_count, Topology::Clique, derive_seed(s.seed, 0, stage::NETWORK))?;
    let mut state = ArState::zeros(s.nodes);
    let mut rows = Vec::with_capacity(s.rounds);
    for round in 0..s.rounds {
        let u = random_updates(s.nodes, s.innovations, s.value_range, derive_seed(s.seed, round as u64, stage::UPDATES))?;
        let out = net.ar_gather_round(&state, s.alpha, &u, GatherSolver::Omp { budget: None })?;
        rows.push(ArRow {
            round,
            nmse: out.nmse,
            exact_innovation: out.exact_innovation,
            sink_transmissions: net.ledger().sink_transmissions,
        });
        state = out.state;
    }
    Ok(rows)
}

pub fn ar_table(rows: &[ArRow]) -> Table {
    let mut t = Table::new(AR_HEADER);
    for r in rows {
        t.push(vec![
            r.round.to_string(),
            fmt_float(r.nmse),
            u8::from(r.exact_innovation).to_string(),
            r.sink_transmissions.to_string(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRow {
    pub trial: usize,
    pub k_hat: usize,
    pub m_final: usize,
    pub exact_m0: bool,
    pub exact_final: bool,
}

pub fn adaptive_demo(s: &AdaptiveScenario, threads: usize) -> Result<Vec<AdaptiveRow>, RunError> {
    let psi = match s.dictionary {
        DictionaryKind::Identity => None,
        DictionaryKind::Dft => Some(build_dft_dictionary(s.n)?),
    };
    let trial = |t: usize| -> Result<AdaptiveRow, sparsense_core::Error> {
        let x = random_sparse_signal(s.n, s.k, s.amplitude, derive_seed(s.seed, t as u64, stage::SIGNAL))?;
        let instance = AdaptiveInstance {
            signal: &x,
            dictionary: psi.as_ref().map_or(Dictionary::Identity, Dictionary::Basis),
            ensemble: s.ensemble,
            noise_std: s.noise_std,
            seed: derive_seed(s.seed, t as u64, stage::SENSING),
            support_threshold: s.support_threshold,
        };
        let out = adaptive_measurements(&instance, s.m0, s.safety_factor)?;
        let truth: Vec<bool> = x.values().iter().map(|v| *v != 0.0).collect();
        Ok(AdaptiveRow {
            trial: t,
            k_hat: out.k_hat,
            m_final: out.m_final,
            exact_m0: support_detect(&out.first_estimate, s.support_threshold) == truth,
            exact_final: support_detect(&out.estimate, s.support_threshold) == truth,
        })
    };
    let rows = with_threads(threads, || (0..s.trials).into_par_iter().map(trial).collect::<Result<Vec<_>, _>>())??;
    Ok(rows)
}

pub fn adaptive_table(s: &AdaptiveScenario, rows: &[AdaptiveRow]) -> Table {
    let mut t = Table::new(ADAPTIVE_HEADER);
    for r in rows {
        t.push(vec![
            r.trial.to_string(),
            s.k.to_string(),
            r.k_hat.to_string(),
            s.m0.to_string(),
            r.m_final.to_string(),
            u8::from(r.exact_m0).to_string(),
            u8::from(r.exact_final).to_string(),
        ]);
    }
    t
}
