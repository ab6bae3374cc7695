//! The rational liquidator: pick the liquidation that seizes the most collateral value.

use thiserror::Error;

use crate::lp::{Action, AgentId, LpError, LpState, TokenId};
use crate::num;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("restoring amount is ill-posed: r_liq * ER = {product} is not below c_min = {c_min}")]
    IllPosed { product: f64, c_min: f64 },
    #[error("no repayable amount for {borrower} in {repay_token}/{seize_token}")]
    NoRepayableLoan {
        borrower: String,
        repay_token: String,
        seize_token: String,
    },
    #[error("liquidator {liquidator} could not execute its own plan: {source}")]
    InternalInconsistency { liquidator: String, source: LpError },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Parameters of one `liquidate` call chosen by the strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct LiquidationPlan {
    pub borrower: AgentId,
    pub repay_amount: f64,
    pub repay_token: TokenId,
    pub seize_token: TokenId,
    /// USD value of the seized minted tokens.
    pub expected_seize_value: f64,
}

impl LiquidationPlan {
    pub fn action(&self, liquidator: &AgentId) -> Action {
        Action::Liquidate {
            liquidator: liquidator.clone(),
            borrower: self.borrower.clone(),
            amount: self.repay_amount,
            repay_token: self.repay_token.clone(),
            seize_token: self.seize_token.clone(),
        }
    }
}

/// Repay amount after which the borrower sits exactly at `c_min`.
///
/// Zero when the borrower is already at or above `c_min`.
pub fn restoring_repay_amount(
    s: &LpState,
    borrower: &AgentId,
    repay_token: &TokenId,
    seize_token: &TokenId,
) -> Result<f64, StrategyError> {
    let p = s.params();
    let er = s.exchange_rate(seize_token)?;
    let product = p.r_liq * er;
    if product >= p.c_min {
        return Err(StrategyError::IllPosed {
            product,
            c_min: p.c_min,
        });
    }
    let lent = s.value_lent(borrower)?;
    let minted = s.value_minted(borrower)?;
    let v = (p.c_min * lent - minted) / (s.price(repay_token)? * (p.c_min - product));
    Ok(v.max(0.0))
}

/// Largest repay amount allowed by the liquidator's funds, the `max_liq`
/// share, the borrower's collateral, and (when well-posed) the restoring amount.
pub fn max_seizable_repay_amount(
    s: &LpState,
    liquidator: &AgentId,
    borrower: &AgentId,
    repay_token: &TokenId,
    seize_token: &TokenId,
) -> Result<f64, StrategyError> {
    let seized_free = seize_token
        .underlying()
        .ok_or_else(|| LpError::NotMinted(seize_token.to_string()))?;
    let p_hat = s.price(repay_token)?;
    let p_seized = s.price(&seized_free)?;
    let params = s.params();

    let mut cap = s.pool().loan(borrower, repay_token) * params.max_liq;
    let collateral = s.wallet(borrower)?.balance(seize_token);
    cap = cap.min(collateral * p_seized / (p_hat * params.r_liq));
    let liq = s.wallet(liquidator)?;
    if !liq.has_unbounded_funds() {
        cap = cap.min(liq.balance(repay_token));
    }
    match restoring_repay_amount(s, borrower, repay_token, seize_token) {
        Ok(v) => cap = cap.min(v),
        Err(StrategyError::IllPosed { .. }) => {}
        Err(e) => return Err(e),
    }
    if !(cap > 0.0) {
        return Err(StrategyError::NoRepayableLoan {
            borrower: borrower.to_string(),
            repay_token: repay_token.to_string(),
            seize_token: seize_token.to_string(),
        });
    }
    Ok(cap)
}

fn candidates(s: &LpState, liquidator: &AgentId) -> Result<Vec<LiquidationPlan>, StrategyError> {
    let c_min = s.params().c_min;
    let r_liq = s.params().r_liq;
    let mut out = Vec::new();
    for borrower in s.agents() {
        if borrower == liquidator || !s.collateralization(borrower)?.is_below(c_min) {
            continue;
        }
        let Some(loans) = s.pool().loans_of(borrower) else {
            continue;
        };
        let wallet = s.wallet(borrower)?;
        for (repay_token, owed) in loans.iter() {
            if owed <= 0.0 {
                continue;
            }
            let p_hat = s.price(repay_token)?;
            for (seize_token, held) in wallet.balances().iter() {
                if !seize_token.is_minted() || held <= 0.0 {
                    continue;
                }
                let v = match max_seizable_repay_amount(s, liquidator, borrower, repay_token, seize_token) {
                    Ok(v) => v,
                    Err(StrategyError::NoRepayableLoan { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let value = v * p_hat * r_liq * s.exchange_rate(seize_token)?;
                out.push(LiquidationPlan {
                    borrower: borrower.clone(),
                    repay_amount: v,
                    repay_token: repay_token.clone(),
                    seize_token: seize_token.clone(),
                    expected_seize_value: value,
                });
            }
        }
    }
    Ok(out)
}

/// Best executable plan together with the state it produces.
fn select_and_apply(
    s: &LpState,
    liquidator: &AgentId,
) -> Result<Option<(LiquidationPlan, LpState)>, StrategyError> {
    let mut pending = candidates(s, liquidator)?;
    while !pending.is_empty() {
        // first strictly better candidate wins, so id order breaks ties
        let mut best = 0;
        for (i, c) in pending.iter().enumerate().skip(1) {
            let top = pending[best].expected_seize_value;
            if c.expected_seize_value > top && !num::approx_eq(c.expected_seize_value, top) {
                best = i;
            }
        }
        let plan = pending.remove(best);
        if let Ok(next) = s.apply(&plan.action(liquidator)) {
            return Ok(Some((plan, next)));
        }
    }
    Ok(None)
}

/// The liquidation maximising seized collateral value, if any borrower can be liquidated.
pub fn select_plan(s: &LpState, liquidator: &AgentId) -> Result<Option<LiquidationPlan>, StrategyError> {
    Ok(select_and_apply(s, liquidator)?.map(|(plan, _)| plan))
}

/// Every liquidator, in order, executes at most one plan against the current state.
pub fn liquidation_round(
    s: &LpState,
    liquidators: &[AgentId],
) -> Result<(LpState, Vec<Action>), StrategyError> {
    let mut state = s.clone();
    let mut log = Vec::new();
    for l in liquidators {
        match select_and_apply(&state, l) {
            Ok(Some((plan, next))) => {
                log.push(plan.action(l));
                state = next;
            }
            Ok(None) => {}
            Err(StrategyError::Lp(source)) => {
                return Err(StrategyError::InternalInconsistency {
                    liquidator: l.to_string(),
                    source,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((state, log))
}
