//! Sparse recovery and compressive gathering primitives.
//!
//! The crate is `no_std` and only needs an allocator. It covers:
//!
//! * [`linalg`]: small dense matrices and least squares.
//! * [`sensing`]: random sensing ensembles, the real inverse-DFT dictionary
//!   and the forward measurement model.
//! * [`recovery`]: orthogonal matching pursuit, weighted iterative
//!   shrinkage-thresholding and an exhaustive support oracle.
//! * [`spectrum`]: block-heterogeneous wideband occupancy models and the
//!   per-band weights derived from them.
//! * [`predict`]: next-slot occupancy predictors.
//! * [`pipeline`]: end-to-end sensing trials, sweeps, phase-transition
//!   studies and two-step adaptive measurement.
//! * [`gather`]: the D2D multicast/pull gathering protocol and its
//!   signaling ledger.
//!
//! Every randomized operation takes an explicit 64-bit seed and is a pure
//! function of its arguments.
#![no_std]
// `!(x >= 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod gather;
pub mod linalg;
mod math;
pub mod pipeline;
pub mod predict;
pub mod recovery;
pub mod seed;
pub mod sensing;
pub mod spectrum;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use recovery::{MeasurementVector, RecoveryConfig, SparseSignal, StepSizePolicy, WeightVector};
