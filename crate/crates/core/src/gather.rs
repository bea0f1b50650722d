//! Compressive D2D data gathering.
//!
//! Each of `N` nodes holds one row of an `N × N` Gaussian coefficient matrix.
//! In a round, every node with an update multicasts it during its slot and
//! every listener adds `coefficient_row[j][i] · uᵢ` to its accumulator, so
//! node `j` ends up holding `(Φu)ⱼ`. Nodes then sleep. The base station pulls
//! the accumulators of the first `m` nodes and recovers the sparse update
//! vector `u` from those `m` measurements.
//!
//! Two variants share the coefficient matrix: an aggregation tree, where
//! active nodes report to network nodes that sum and forward, and an
//! autoregressive mode, where the base station recovers only the innovation
//! against its prediction `α·x̂ₜ₋₁`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::AddAssign;

use rand::seq::index::sample;
use rand::Rng as _;

use crate::linalg::{least_squares, DenseMatrix};
use crate::math::{abs, ceil, ln, norm2};
use crate::recovery::{ista_weighted_l1, omp, MeasurementVector, RecoveryConfig, WeightVector};
use crate::sensing::{build_sensing_matrix, Ensemble};
use crate::seed;
use crate::{Error, Result};

/// Per-entry tolerance for declaring a recovery exact.
pub const EXACT_TOLERANCE: f64 = 1e-6;

/// Sparse update map: node id → value.
pub type Updates = BTreeMap<usize, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Single broadcast domain; every node hears every multicast.
    Clique,
    /// Active nodes report to `network_nodes` aggregators.
    AggregationTree { network_nodes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoTNode {
    pub id: usize,
    pub coefficient_row: Vec<f64>,
    pub accumulator: f64,
    pub update_value: f64,
    pub awake: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignalingLedger {
    pub d2d_multicasts: u64,
    pub bs_connections: u64,
    pub sink_transmissions: u64,
    pub network_node_transmissions: u64,
    /// Cooperative sensing reports, one per secondary user per round.
    pub cooperative_reports: u64,
}

impl AddAssign for SignalingLedger {
    fn add_assign(&mut self, rhs: Self) {
        self.d2d_multicasts += rhs.d2d_multicasts;
        self.bs_connections += rhs.bs_connections;
        self.sink_transmissions += rhs.sink_transmissions;
        self.network_node_transmissions += rhs.network_node_transmissions;
        self.cooperative_reports += rhs.cooperative_reports;
    }
}

/// `S` sensing reports for a cooperative round with `S` secondary users.
pub fn cooperative_overhead(num_sus: usize) -> SignalingLedger {
    SignalingLedger { cooperative_reports: num_sus as u64, ..SignalingLedger::default() }
}

/// Pull-count guideline `ceil(c·p·ln(N/p))`, clamped to `[1, N]`.
pub fn pull_count_guideline(nodes: usize, updaters: usize, c: f64) -> usize {
    if updaters == 0 {
        return 1.min(nodes);
    }
    let m = ceil(c * updaters as f64 * ln(nodes as f64 / updaters as f64));
    (m.max(1.0) as usize).clamp(1, nodes.max(1))
}

#[derive(Debug, Clone, Copy)]
pub enum GatherSolver<'a> {
    /// OMP with a residual stop at `1e-9·‖y‖`. `budget: None` allows up to
    /// `m` atoms, for a base station that does not know how many nodes
    /// updated; `Some(k)` caps the support at `k`.
    Omp { budget: Option<usize> },
    WeightedL1 { weights: &'a WeightVector, config: &'a RecoveryConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Collecting,
    Asleep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatherNetwork {
    nodes: Vec<IoTNode>,
    update_prob: f64,
    pull_count: usize,
    topology: Topology,
    round: SignalingLedger,
    total: SignalingLedger,
    phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    /// Measurements assembled at the base station.
    pub measurements: Vec<f64>,
    pub estimate: Vec<f64>,
    /// Support and values match the true updates within [`EXACT_TOLERANCE`].
    pub exact: bool,
}

/// Builds a network whose node `i` holds row `i` of an `N × N` Gaussian matrix.
pub fn init_network(nodes: usize, pull_count: usize, topology: Topology, seed: u64) -> Result<GatherNetwork> {
    if nodes == 0 {
        return Err(Error::InvalidConfig("network needs at least one node"));
    }
    if pull_count == 0 || pull_count > nodes {
        return Err(Error::InvalidConfig("pull count must lie in [1, N]"));
    }
    if let Topology::AggregationTree { network_nodes } = topology {
        if network_nodes == 0 {
            return Err(Error::InvalidConfig("aggregation tree needs at least one network node"));
        }
    }
    let phi = build_sensing_matrix(nodes, nodes, Ensemble::Gaussian, seed)?;
    let nodes = (0..nodes)
        .map(|id| IoTNode { id, coefficient_row: phi.row(id).to_vec(), accumulator: 0.0, update_value: 0.0, awake: true })
        .collect();
    Ok(GatherNetwork {
        nodes,
        update_prob: 0.0,
        pull_count,
        topology,
        round: SignalingLedger::default(),
        total: SignalingLedger::default(),
        phase: Phase::Collecting,
    })
}

/// `p` distinct updaters with values drawn from `U[low, high]`.
pub fn random_updates(nodes: usize, updaters: usize, range: (f64, f64), seed: u64) -> Result<Updates> {
    if updaters > nodes {
        return Err(Error::InvalidConfig("more updaters than nodes"));
    }
    let mut rng = seed::rng(seed);
    let ids = sample(&mut rng, nodes, updaters).into_vec();
    Ok(ids.into_iter().map(|i| (i, range.0 + (range.1 - range.0) * rng.random::<f64>())).collect())
}

/// Each node updates independently with probability `q`.
pub fn bernoulli_updates(nodes: usize, q: f64, range: (f64, f64), seed: u64) -> Result<Updates> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidConfig("update probability must lie in [0, 1]"));
    }
    let mut rng = seed::rng(seed);
    let mut out = Updates::new();
    for i in 0..nodes {
        let hit = rng.random::<f64>() < q;
        let v = range.0 + (range.1 - range.0) * rng.random::<f64>();
        if hit {
            out.insert(i, v);
        }
    }
    Ok(out)
}

impl GatherNetwork {
    pub fn with_update_prob(mut self, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidConfig("update probability must lie in [0, 1]"));
        }
        self.update_prob = q;
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn nodes(&self) -> &[IoTNode] {
        &self.nodes
    }

    #[inline]
    pub fn pull_count(&self) -> usize {
        self.pull_count
    }

    #[inline]
    pub fn update_prob(&self) -> f64 {
        self.update_prob
    }

    #[inline]
    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Counters for the current round.
    #[inline]
    pub fn ledger(&self) -> SignalingLedger {
        self.round
    }

    /// Counters accumulated over every round since construction.
    #[inline]
    pub fn total_ledger(&self) -> SignalingLedger {
        let mut t = self.total;
        t += self.round;
        t
    }

    pub fn record(&mut self, delta: SignalingLedger) {
        self.round += delta;
    }

    /// Full `N × N` coefficient matrix (row `i` held by node `i`).
    pub fn coefficient_matrix(&self) -> DenseMatrix {
        let n = self.nodes.len();
        let entries = self.nodes.iter().flat_map(|node| node.coefficient_row.iter().copied()).collect();
        DenseMatrix::new(n, n, entries).expect("square by construction")
    }

    /// Rows of the pulled nodes.
    pub fn pull_matrix(&self) -> DenseMatrix {
        let n = self.nodes.len();
        let entries = self.nodes[..self.pull_count].iter().flat_map(|node| node.coefficient_row.iter().copied()).collect();
        DenseMatrix::new(self.pull_count, n, entries).expect("pull count validated")
    }

    /// Wakes every node, clears accumulators and updates, and starts a fresh
    /// per-round ledger.
    pub fn reset_round(&mut self) {
        for node in &mut self.nodes {
            node.accumulator = 0.0;
            node.update_value = 0.0;
            node.awake = true;
        }
        self.total += self.round;
        self.round = SignalingLedger::default();
        self.phase = Phase::Collecting;
    }

    fn check_updates(&self, updates: &Updates) -> Result<()> {
        match updates.keys().next_back() {
            Some(&node) if node >= self.nodes.len() => Err(Error::InvalidUpdate { node, nodes: self.nodes.len() }),
            _ => Ok(()),
        }
    }

    /// Slotted multicast exchange. Returns the ledger delta.
    ///
    /// Slots run in node-id order; only updating nodes transmit. Afterwards
    /// every node is asleep and accumulators are frozen until
    /// [`reset_round`](Self::reset_round).
    pub fn run_exchange(&mut self, updates: &Updates) -> Result<SignalingLedger> {
        if self.phase != Phase::Collecting {
            return Err(Error::ProtocolOrder("exchange after nodes went to sleep; reset the round first"));
        }
        self.check_updates(updates)?;
        for (&sender, &value) in updates {
            self.nodes[sender].update_value = value;
            for node in &mut self.nodes {
                node.accumulator += node.coefficient_row[sender] * value;
            }
        }
        for node in &mut self.nodes {
            node.awake = false;
        }
        self.phase = Phase::Asleep;
        let delta = SignalingLedger { d2d_multicasts: updates.len() as u64, ..SignalingLedger::default() };
        self.round += delta;
        Ok(delta)
    }

    fn truth(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.update_value).collect()
    }

    fn recover(&self, y: &[f64], scale: f64, solver: GatherSolver<'_>) -> Result<Vec<f64>> {
        let a = self.pull_matrix();
        let n = self.nodes.len();
        if self.pull_count == n {
            let all: Vec<usize> = (0..n).collect();
            return least_squares(&a, &all, y);
        }
        let meas = MeasurementVector::new(y.to_vec());
        let estimate = match solver {
            GatherSolver::Omp { budget } => {
                let k = budget.unwrap_or(self.pull_count).min(self.pull_count);
                omp(&a, &meas, k, 1e-9 * scale)?
            }
            GatherSolver::WeightedL1 { weights, config } => ista_weighted_l1(&a, &meas, weights, config)?,
        };
        Ok(estimate.into_values())
    }

    /// Base station reads the first `m` accumulators and recovers the updates.
    pub fn bs_pull_and_recover(&mut self, solver: GatherSolver<'_>) -> Result<RecoveryOutcome> {
        if self.phase != Phase::Asleep {
            return Err(Error::ProtocolOrder("pull before the exchange completed"));
        }
        let y: Vec<f64> = self.nodes[..self.pull_count].iter().map(|n| n.accumulator).collect();
        let estimate = self.recover(&y, norm2(&y), solver)?;
        self.round.bs_connections += self.pull_count as u64;
        let exact = is_exact(&estimate, &self.truth());
        Ok(RecoveryOutcome { measurements: y, estimate, exact })
    }

    /// Aggregation-tree reporting: each active node sends its weighted
    /// contribution to a network node chosen by `seed`, every network node
    /// sums what it received and reports once, and the base station adds the
    /// reports. Records `n_agg + p` network-node transmissions.
    pub fn run_aggregation_reporting(
        &mut self,
        updates: &Updates,
        seed: u64,
        solver: GatherSolver<'_>,
    ) -> Result<RecoveryOutcome> {
        let Topology::AggregationTree { network_nodes } = self.topology else {
            return Err(Error::InvalidTopology);
        };
        self.check_updates(updates)?;
        let m = self.pull_count;
        let mut rng = seed::rng(seed);
        let mut reports = vec![vec![0.0; m]; network_nodes];
        for (&iot, &value) in updates {
            let target = rng.random_range(0..network_nodes);
            for (slot, puller) in reports[target].iter_mut().zip(&self.nodes[..m]) {
                *slot += puller.coefficient_row[iot] * value;
            }
        }
        let mut y = vec![0.0; m];
        for report in &reports {
            for (yi, r) in y.iter_mut().zip(report) {
                *yi += r;
            }
        }
        self.round.network_node_transmissions += (network_nodes + updates.len()) as u64;
        let estimate = self.recover(&y, norm2(&y), solver)?;
        let mut truth = vec![0.0; self.nodes.len()];
        for (&i, &v) in updates {
            truth[i] = v;
        }
        let exact = is_exact(&estimate, &truth);
        Ok(RecoveryOutcome { measurements: y, estimate, exact })
    }

    /// One autoregressive gathering round.
    ///
    /// Truth evolves as `xₜ = α·xₜ₋₁ + u`. Nodes exchange their current
    /// values, the sink pulls `y = Φ_pull·xₜ` and recovers `û` from
    /// `y − α·Φ_pull·x̂ₜ₋₁`, then sets `x̂ₜ = α·x̂ₜ₋₁ + û`. Starts a new round.
    pub fn ar_gather_round(
        &mut self,
        state: &ArState,
        alpha: f64,
        innovations: &Updates,
        solver: GatherSolver<'_>,
    ) -> Result<ArRoundOutcome> {
        if !(abs(alpha) < 1.0) {
            return Err(Error::InvalidModel("AR coefficient must satisfy |alpha| < 1"));
        }
        let n = self.nodes.len();
        if state.truth.len() != n || state.estimate.len() != n {
            return Err(Error::InvalidDimension("AR state length must equal node count"));
        }
        self.check_updates(innovations)?;
        self.reset_round();

        let mut truth: Vec<f64> = state.truth.iter().map(|v| alpha * v).collect();
        for (&i, &u) in innovations {
            truth[i] += u;
        }
        let data: Updates = truth.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect();
        self.run_exchange(&data)?;

        let m = self.pull_count;
        let y: Vec<f64> = self.nodes[..m].iter().map(|node| node.accumulator).collect();
        let a = self.pull_matrix();
        let prediction: Vec<f64> = state.estimate.iter().map(|v| alpha * v).collect();
        let predicted_y = a.matvec(&prediction)?;
        let residual: Vec<f64> = y.iter().zip(&predicted_y).map(|(p, q)| p - q).collect();
        let innovation = self.recover(&residual, norm2(&y), solver)?;
        let estimate: Vec<f64> = prediction.iter().zip(&innovation).map(|(p, u)| p + u).collect();
        self.round.sink_transmissions += m as u64;

        let err: f64 = estimate.iter().zip(&truth).map(|(e, t)| (e - t) * (e - t)).sum();
        let energy: f64 = truth.iter().map(|t| t * t).sum();
        let nmse = if energy > 0.0 { err / energy } else if err == 0.0 { 0.0 } else { 1.0 };
        let mut true_innovation = vec![0.0; n];
        for (&i, &u) in innovations {
            true_innovation[i] = u;
        }
        let exact_innovation = is_exact(&innovation, &true_innovation);
        Ok(ArRoundOutcome { state: ArState { truth, estimate }, innovation, exact_innovation, nmse })
    }
}

/// True data and base-station estimate carried between AR rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ArState {
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
}

impl ArState {
    pub fn zeros(nodes: usize) -> Self {
        Self { truth: vec![0.0; nodes], estimate: vec![0.0; nodes] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArRoundOutcome {
    pub state: ArState,
    pub innovation: Vec<f64>,
    pub exact_innovation: bool,
    /// `‖x̂ₜ − xₜ‖² / ‖xₜ‖²`.
    pub nmse: f64,
}

fn is_exact(estimate: &[f64], truth: &[f64]) -> bool {
    estimate.iter().zip(truth).all(|(e, t)| {
        let same_support = (abs(*e) > EXACT_TOLERANCE) == (*t != 0.0);
        same_support && abs(e - t) <= EXACT_TOLERANCE
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_network() {
        let net = init_network(1, 1, Topology::Clique, 3).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.nodes()[0].coefficient_row.len(), 1);
        assert!(init_network(4, 5, Topology::Clique, 3).is_err());
        assert!(init_network(4, 0, Topology::Clique, 3).is_err());
    }

    #[test]
    fn deterministic_assignment() {
        let a = init_network(16, 4, Topology::Clique, 11).unwrap();
        let b = init_network(16, 4, Topology::Clique, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_updates_means_nothing_moves() {
        let mut net = init_network(8, 4, Topology::Clique, 1).unwrap();
        let d = net.run_exchange(&Updates::new()).unwrap();
        assert_eq!(d.d2d_multicasts, 0);
        assert!(net.nodes().iter().all(|n| n.accumulator == 0.0 && !n.awake));
        let out = net.bs_pull_and_recover(GatherSolver::Omp { budget: Some(2) }).unwrap();
        assert!(out.estimate.iter().all(|&v| v == 0.0));
        assert!(out.exact);
        assert_eq!(net.ledger().bs_connections, 4);
    }

    #[test]
    fn single_updater() {
        let mut net = init_network(8, 4, Topology::Clique, 2).unwrap();
        let updates = Updates::from([(3, 5.0)]);
        assert_eq!(net.run_exchange(&updates).unwrap().d2d_multicasts, 1);
        for node in net.nodes() {
            assert_eq!(node.accumulator, 5.0 * node.coefficient_row[3]);
        }
    }

    #[test]
    fn protocol_order_and_sleep() {
        let mut net = init_network(8, 4, Topology::Clique, 2).unwrap();
        assert!(matches!(net.bs_pull_and_recover(GatherSolver::Omp { budget: Some(1) }), Err(Error::ProtocolOrder(_))));
        net.run_exchange(&Updates::from([(1, 1.0)])).unwrap();
        let frozen: Vec<f64> = net.nodes().iter().map(|n| n.accumulator).collect();
        assert!(matches!(net.run_exchange(&Updates::from([(2, 1.0)])), Err(Error::ProtocolOrder(_))));
        assert_eq!(frozen, net.nodes().iter().map(|n| n.accumulator).collect::<Vec<_>>());
        net.reset_round();
        assert!(net.nodes().iter().all(|n| n.awake && n.accumulator == 0.0));
        assert_eq!(net.total_ledger().d2d_multicasts, 1);
    }

    #[test]
    fn out_of_range_update() {
        let mut net = init_network(8, 4, Topology::Clique, 2).unwrap();
        assert_eq!(net.run_exchange(&Updates::from([(8, 1.0)])).unwrap_err(), Error::InvalidUpdate { node: 8, nodes: 8 });
    }

    #[test]
    fn full_pull_solves_directly() {
        let mut net = init_network(12, 12, Topology::Clique, 5).unwrap();
        let updates: Updates = (0..12).map(|i| (i, 1.0 + i as f64 / 10.0)).collect();
        net.run_exchange(&updates).unwrap();
        assert!(net.bs_pull_and_recover(GatherSolver::Omp { budget: None }).unwrap().exact);
    }

    #[test]
    fn aggregation_counts_and_topology() {
        let mut clique = init_network(32, 16, Topology::Clique, 5).unwrap();
        assert_eq!(
            clique.run_aggregation_reporting(&Updates::new(), 1, GatherSolver::Omp { budget: None }).unwrap_err(),
            Error::InvalidTopology
        );
        let mut tree = init_network(32, 16, Topology::AggregationTree { network_nodes: 4 }, 5).unwrap();
        tree.run_aggregation_reporting(&Updates::new(), 1, GatherSolver::Omp { budget: None }).unwrap();
        assert_eq!(tree.ledger().network_node_transmissions, 4);
        tree.reset_round();
        let updates = random_updates(32, 10, (1.0, 2.0), 9).unwrap();
        tree.run_aggregation_reporting(&updates, 1, GatherSolver::Omp { budget: None }).unwrap();
        assert_eq!(tree.ledger().network_node_transmissions, 14);
    }

    #[test]
    fn ar_round_without_innovation_is_pure_propagation() {
        let mut net = init_network(16, 8, Topology::Clique, 3).unwrap();
        let prev: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 1.5 } else { 0.0 }).collect();
        let state = ArState { truth: prev.clone(), estimate: prev.clone() };
        let out = net.ar_gather_round(&state, 0.5, &Updates::new(), GatherSolver::Omp { budget: Some(1) }).unwrap();
        for (e, p) in out.state.estimate.iter().zip(&prev) {
            assert_eq!(*e, 0.5 * p);
        }
        assert_eq!(net.ledger().sink_transmissions, 8);
        assert!(matches!(
            net.ar_gather_round(&state, 1.0, &Updates::new(), GatherSolver::Omp { budget: Some(1) }),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn cooperative_reports_add_up() {
        assert_eq!(cooperative_overhead(0).cooperative_reports, 0);
        assert_eq!(cooperative_overhead(5).cooperative_reports, 5);
        let mut l = cooperative_overhead(3);
        l += cooperative_overhead(3);
        assert_eq!(l.cooperative_reports, 6);
    }

    #[test]
    fn guideline() {
        assert_eq!(pull_count_guideline(256, 8, 2.0), 56);
        assert_eq!(pull_count_guideline(256, 0, 2.0), 1);
        assert_eq!(pull_count_guideline(10, 9, 100.0), 10);
    }
}
