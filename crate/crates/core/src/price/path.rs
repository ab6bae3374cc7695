use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gbm::{gbm_step, GbmParams, TRIMESTER};
use super::PriceError;
use crate::lp::TokenId;

/// How one simulation round maps onto GBM time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StepConvention {
    /// Each round is one historical trading day: the per-round log return has
    /// mean `μ` and standard deviation `σ·√T`, the distribution the parameters
    /// were estimated from.
    #[default]
    Daily,
    /// Literal GBM step of length `dt` with `μ`, `σ` taken as per-unit-time rates.
    Calendar { dt: f64 },
}

impl StepConvention {
    /// `(dt, params)` to feed to [`gbm_step`] for one round.
    pub fn step_params(&self, p: &GbmParams) -> (f64, GbmParams) {
        match *self {
            StepConvention::Daily => (
                TRIMESTER,
                GbmParams {
                    mu: p.mu / TRIMESTER + 0.5 * p.sigma * p.sigma,
                    ..*p
                },
            ),
            StepConvention::Calendar { dt } => (dt, *p),
        }
    }

    /// Closed-form mean and variance of `ln(P_n / P_0)` after `n` rounds.
    pub fn log_moments(&self, p: &GbmParams, n: usize) -> (f64, f64) {
        let (dt, q) = self.step_params(p);
        let n = n as f64;
        (
            (q.mu - 0.5 * q.sigma * q.sigma) * dt * n,
            q.sigma * q.sigma * dt * n,
        )
    }
}

/// Collateral/loan asset pair with its price dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub collateral: (TokenId, GbmParams),
    pub loan: (TokenId, GbmParams),
    pub rho: f64,
    pub horizon: usize,
    pub convention: StepConvention,
}

const ETH: GbmParams = GbmParams {
    mu: -0.012,
    sigma: 0.12,
    p0: 3269.08,
};
const USDC: GbmParams = GbmParams {
    mu: -7.84e-5,
    sigma: 0.005,
    p0: 0.99,
};
const WBTC: GbmParams = GbmParams {
    mu: 0.012,
    sigma: 0.094,
    p0: 57260.0,
};

impl ScenarioSpec {
    pub const NAMES: [&'static str; 3] = ["ETH-WBTC", "ETH-USDC", "USDC-WBTC"];

    /// One of the three built-in scenarios, matched case-insensitively.
    pub fn builtin(name: &str) -> Result<ScenarioSpec, PriceError> {
        let (c, l) = match name.to_ascii_uppercase().as_str() {
            "ETH-WBTC" => (("ETH", ETH), ("WBTC", WBTC)),
            "ETH-USDC" => (("ETH", ETH), ("USDC", USDC)),
            "USDC-WBTC" => (("USDC", USDC), ("WBTC", WBTC)),
            _ => return Err(PriceError::UnknownScenario(name.to_string())),
        };
        Ok(ScenarioSpec {
            name: format!("{}-{}", c.0, l.0),
            collateral: (TokenId::free(c.0), c.1),
            loan: (TokenId::free(l.0), l.1),
            rho: -1.0,
            horizon: 91,
            convention: StepConvention::default(),
        })
    }

    /// Lower-case name, as used on the command line and in result files.
    pub fn slug(&self) -> String {
        self.name.to_ascii_lowercase()
    }

    pub fn validate(&self) -> Result<(), PriceError> {
        self.collateral.1.validate()?;
        self.loan.1.validate()?;
        if self.collateral.0 == self.loan.0 || !self.collateral.0.is_free() || !self.loan.0.is_free() {
            return Err(PriceError::InvalidSpec(format!(
                "{}: collateral and loan must be distinct free tokens",
                self.name
            )));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(PriceError::InvalidSpec(format!("rho {} outside [-1, 1]", self.rho)));
        }
        if self.horizon == 0 {
            return Err(PriceError::InvalidSpec("horizon must be positive".into()));
        }
        if let StepConvention::Calendar { dt } = self.convention {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(PriceError::InvalidSpec(format!("dt {dt} must be positive")));
            }
        }
        Ok(())
    }
}

/// Per-round (collateral, loan) prices, round 0 included.
#[derive(Clone, Debug, PartialEq)]
pub struct PricePath {
    pub collateral: Vec<f64>,
    pub loan: Vec<f64>,
}

impl PricePath {
    pub fn len(&self) -> usize {
        self.collateral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.collateral.is_empty()
    }

    pub fn at(&self, round: usize) -> (f64, f64) {
        (self.collateral[round], self.loan[round])
    }
}

/// Seeded price path. The collateral shock is `ε`, the loan shock
/// `ρ·ε + √(1−ρ²)·ε₂`; both normals are drawn every round from
/// `ChaCha8Rng::seed_from_u64(seed)` so the stream layout does not depend on `ρ`.
pub fn generate_path(spec: &ScenarioSpec, seed: u64) -> PricePath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dt, c) = spec.convention.step_params(&spec.collateral.1);
    let (_, l) = spec.convention.step_params(&spec.loan.1);
    let side = (1.0 - spec.rho * spec.rho).max(0.0).sqrt();
    let mut collateral = Vec::with_capacity(spec.horizon + 1);
    let mut loan = Vec::with_capacity(spec.horizon + 1);
    let (mut pc, mut pl) = (spec.collateral.1.p0, spec.loan.1.p0);
    collateral.push(pc);
    loan.push(pl);
    for _ in 0..spec.horizon {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        pc = gbm_step(pc, &c, dt, e1);
        pl = gbm_step(pl, &l, dt, spec.rho * e1 + side * e2);
        collateral.push(pc);
        loan.push(pl);
    }
    PricePath { collateral, loan }
}
