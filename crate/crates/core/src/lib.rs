//! Rank-based compatibility for risk-model updates.
//!
//! When a deployed risk model is replaced, the update can reorder
//! patients the old model ranked correctly, even if headline
//! discrimination improves. This crate measures that effect and trains
//! updates that avoid it:
//!
//! - [`metrics`]: exact pair-counting measures: AUROC, accuracy, BTC,
//!   RBC (plus its general ordinal form), the joint pair-ordering table,
//!   and analytic bounds tying RBC to the two models' AUROCs.
//! - [`surrogate`]: a differentiable soft RBC, the weighted
//!   BCE/incompatibility objective, and its analytic gradient.
//! - [`trainer`]: from-scratch mini-batch SGD for L2-regularized
//!   logistic regression with validation early stopping.
//! - [`pipeline`]: the full update experiment: split, train, generate
//!   candidate pools, select with a beta-weighted rule, evaluate held
//!   out, replicate, and aggregate with empirical confidence intervals.
//! - [`combinatorics`]: log-space combination counts describing how many
//!   ways a given compatibility level can arise at fixed AUROCs.
//! - [`data_io`]: a synthetic class-conditional Gaussian generator and
//!   CSV/JSON persistence.
//!
//! Everything is deterministic given its seed; all metric functions are
//! pure and safe to call concurrently.

pub mod combinatorics;
pub mod data_io;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod surrogate;
pub mod trainer;

pub use dataset::{Dataset, ScoreVector};
pub use error::{Error, Result};
pub use metrics::{BoundSet, PopTable};
pub use surrogate::{ObjectiveValue, SurrogateConfig};
pub use trainer::{ModelMetadata, RiskModel, TrainConfig};
