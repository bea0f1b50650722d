use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(&'static str),

    #[error("sparsity budget {budget} exceeds measurement count {rows}")]
    InvalidBudget { budget: usize, rows: usize },

    #[error("least squares is rank deficient on support {support:?}")]
    DegenerateSupport { support: Vec<usize> },

    #[error("invalid input: {0}")]
    InvalidInput(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),

    #[error("instance too large for exhaustive search: n = {n} (limit {limit})")]
    InstanceTooLarge { n: usize, limit: usize },

    #[error("no prediction available for block {block}")]
    MissingPrediction { block: usize },

    #[error("insufficient history: need {needed} slots, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("invalid model: {0}")]
    InvalidModel(&'static str),

    #[error("update for node {node} is out of range for a network of {nodes} nodes")]
    InvalidUpdate { node: usize, nodes: usize },

    #[error("protocol order violated: {0}")]
    ProtocolOrder(&'static str),

    #[error("operation requires an aggregation-tree topology")]
    InvalidTopology,
}
