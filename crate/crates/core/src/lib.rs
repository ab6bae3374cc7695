//! Simulation and statistical analysis of lending pools under rational
//! liquidators and correlated GBM price paths.
//!
//! - [`lp`]: pool configurations and the seven transition rules
//! - [`strategy`]: the seize-value maximising liquidator
//! - [`price`]: GBM estimation and path generation
//! - [`stats`]: Monte-Carlo simulation, confidence intervals, parameter sweeps
//! - [`scenario`]: experiment configuration, initial states, CSV I/O

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod lp;
pub mod num;
pub mod price;
pub mod scenario;
pub mod stats;
pub mod strategy;
