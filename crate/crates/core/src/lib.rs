//! Federated consensus optimization: FedADMM, FedAvg, FedProx, FedSGD and
//! SCAFFOLD on a deterministic single-process simulator, with runtime checks
//! of the primal-dual convergence inequalities.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod baselines;
pub mod data;
pub mod error;
pub mod model;
pub mod param;
pub mod sim;
pub mod solver;
pub mod summary;

pub use error::{Error, Result};
pub use param::ParamVector;
