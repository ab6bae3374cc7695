use serde::{Deserialize, Serialize};

use super::PriceError;

/// Length of the estimation window in years, `T = 91/365`.
pub const TRIMESTER: f64 = 91.0 / 365.0;

/// Drift, volatility and initial USD price of one asset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub mu: f64,
    pub sigma: f64,
    pub p0: f64,
}

impl GbmParams {
    pub fn new(mu: f64, sigma: f64, p0: f64) -> Result<Self, PriceError> {
        let p = GbmParams { mu, sigma, p0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PriceError> {
        if !self.mu.is_finite() || !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(PriceError::InvalidSpec(format!(
                "mu {} / sigma {} must be finite with sigma >= 0",
                self.mu, self.sigma
            )));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(PriceError::InvalidSpec(format!("p0 {} must be positive", self.p0)));
        }
        Ok(())
    }
}

/// One GBM step: `p · exp((μ − σ²/2)·dt + σ·ε·√dt)`.
pub fn gbm_step(p: f64, params: &GbmParams, dt: f64, eps: f64) -> f64 {
    let drift = (params.mu - 0.5 * params.sigma * params.sigma) * dt;
    p * (drift + params.sigma * eps * dt.sqrt()).exp()
}

pub fn log_returns(closes: &[f64]) -> Result<Vec<f64>, PriceError> {
    if closes.len() < 2 {
        return Err(PriceError::TooShort {
            needed: 2,
            got: closes.len(),
        });
    }
    if let Some((index, &value)) = closes.iter().enumerate().find(|(_, c)| !(**c > 0.0)) {
        return Err(PriceError::NonPositivePrice { index, value });
    }
    Ok(closes.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
}

/// `μ` is the mean log return, `σ` the sample standard deviation of log
/// returns divided by `√T`.
pub fn estimate_params(closes: &[f64], p0: f64) -> Result<GbmParams, PriceError> {
    if closes.len() < 3 {
        return Err(PriceError::TooShort {
            needed: 3,
            got: closes.len(),
        });
    }
    let r = log_returns(closes)?;
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    GbmParams::new(mean, var.sqrt() / TRIMESTER.sqrt(), p0)
}
