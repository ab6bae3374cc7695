use thiserror::Error;

/// Rejection reasons for lending-pool transitions and queries.
///
/// A failed transition never produces a partial state.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("undefined result on {token}: {detail}")]
    UndefinedResult { token: String, detail: String },
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("amount must be positive, got {0}")]
    NonPositiveAmount(f64),
    #[error("{agent} holds {held} {token}, needs {needed}")]
    InsufficientBalance {
        agent: String,
        token: String,
        held: f64,
        needed: f64,
    },
    #[error("pool holds {held} {token}, needs {needed}")]
    InsufficientPoolFunds {
        token: String,
        held: f64,
        needed: f64,
    },
    #[error("{agent} would end with collateralization {post} below {c_min}")]
    Undercollateralized { agent: String, post: f64, c_min: f64 },
    #[error("{agent} owes {owed} {token}, cannot repay {amount}")]
    ExceedsLoan {
        agent: String,
        token: String,
        owed: f64,
        amount: f64,
    },
    #[error("{0} is not a minted token")]
    NotMinted(String),
    #[error("{0} is not a free token")]
    NotFree(String),
    #[error("repaying {amount} exceeds max_liq share {cap} of the loan")]
    ExceedsMaxLiq { amount: f64, cap: f64 },
    #[error("borrower holds {held} {token}, liquidation seizes {needed}")]
    InsufficientCollateralHeld {
        token: String,
        held: f64,
        needed: f64,
    },
    #[error("borrower {agent} is not below c_min (collateralization {c})")]
    BorrowerSafe { agent: String, c: f64 },
    #[error("liquidation would lift {agent} to collateralization {post} above c_min {c_min}")]
    OverLiquidation { agent: String, post: f64, c_min: f64 },
    #[error("an agent cannot liquidate itself ({0})")]
    SelfLiquidation(String),
    #[error("price update domain does not match current prices")]
    DomainMismatch,
    #[error("price of {token} must be positive, got {price}")]
    NonPositivePrice { token: String, price: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}
