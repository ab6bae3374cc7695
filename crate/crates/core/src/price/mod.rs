//! GBM parameter estimation and correlated price-path generation.

mod gbm;
mod history;
mod path;

pub use gbm::{estimate_params, gbm_step, log_returns, GbmParams, TRIMESTER};
pub use history::{read_closes, Close};
pub use path::{generate_path, PricePath, ScenarioSpec, StepConvention};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PriceError {
    #[error("need at least {needed} closes, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("close #{index} is {value}, prices must be positive")]
    NonPositivePrice { index: usize, value: f64 },
    #[error("{path}: {detail}")]
    BadCsv { path: String, detail: String },
    #[error("unknown scenario {0:?} (expected ETH-WBTC, ETH-USDC or USDC-WBTC)")]
    UnknownScenario(String),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
}
