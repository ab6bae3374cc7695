//! The seven transition rules. Each takes `&LpState` and returns a new state or
//! the first violated precondition; the input is never modified.

use std::collections::BTreeMap;

use crate::lp::error::LpError;
use crate::lp::state::{LpState, MintedEntry};
use crate::lp::token::{AgentId, MapOp, TokenId, TokenMap};
use crate::num;

/// A labelled transition with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Deposit {
        agent: AgentId,
        amount: f64,
        token: TokenId,
    },
    Redeem {
        agent: AgentId,
        amount: f64,
        token: TokenId,
    },
    Borrow {
        agent: AgentId,
        amount: f64,
        token: TokenId,
    },
    Repay {
        agent: AgentId,
        amount: f64,
        token: TokenId,
    },
    Liquidate {
        liquidator: AgentId,
        borrower: AgentId,
        amount: f64,
        repay_token: TokenId,
        seize_token: TokenId,
    },
    AccrueInterest,
    UpdatePrices {
        prices: BTreeMap<TokenId, f64>,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Deposit { .. } => "Dep",
            Action::Redeem { .. } => "Rdm",
            Action::Borrow { .. } => "Bor",
            Action::Repay { .. } => "Rep",
            Action::Liquidate { .. } => "Liq",
            Action::AccrueInterest => "Int",
            Action::UpdatePrices { .. } => "Price",
        }
    }
}

/// A run of the transition system: the initial state and each action with the
/// state it produced.
#[derive(Clone, Debug)]
pub struct Trace {
    initial: LpState,
    steps: Vec<(Action, LpState)>,
}

impl Trace {
    pub fn new(initial: LpState) -> Self {
        Trace {
            initial,
            steps: Vec::new(),
        }
    }

    pub fn initial(&self) -> &LpState {
        &self.initial
    }

    pub fn current(&self) -> &LpState {
        self.steps.last().map_or(&self.initial, |(_, s)| s)
    }

    pub fn steps(&self) -> &[(Action, LpState)] {
        &self.steps
    }

    /// Applies `action` to the current state and records it.
    pub fn push(&mut self, action: Action) -> Result<&LpState, LpError> {
        let next = self.current().apply(&action)?;
        self.steps.push((action, next));
        Ok(self.current())
    }

    pub fn replay<'a>(
        initial: LpState,
        actions: impl IntoIterator<Item = &'a Action>,
    ) -> Result<Trace, LpError> {
        let mut trace = Trace::new(initial);
        for a in actions {
            trace.push(a.clone())?;
        }
        Ok(trace)
    }
}

fn positive(amount: f64) -> Result<(), LpError> {
    if amount > 0.0 && amount.is_finite() {
        Ok(())
    } else {
        Err(LpError::NonPositiveAmount(amount))
    }
}

impl LpState {
    pub fn apply(&self, action: &Action) -> Result<LpState, LpError> {
        match action {
            Action::Deposit {
                agent,
                amount,
                token,
            } => self.deposit(agent, *amount, token),
            Action::Redeem {
                agent,
                amount,
                token,
            } => self.redeem(agent, *amount, token),
            Action::Borrow {
                agent,
                amount,
                token,
            } => self.borrow(agent, *amount, token),
            Action::Repay {
                agent,
                amount,
                token,
            } => self.repay(agent, *amount, token),
            Action::Liquidate {
                liquidator,
                borrower,
                amount,
                repay_token,
                seize_token,
            } => self.liquidate(liquidator, borrower, *amount, repay_token, seize_token),
            Action::AccrueInterest => Ok(self.accrue_interest()),
            Action::UpdatePrices { prices } => self.update_prices(prices),
        }
    }

    fn priced_free(&self, token: &TokenId) -> Result<(), LpError> {
        if !token.is_free() {
            return Err(LpError::NotFree(token.to_string()));
        }
        self.price(token).map(|_| ())
    }

    fn registered_minted(&self, token: &TokenId) -> Result<TokenId, LpError> {
        let free = token
            .underlying()
            .ok_or_else(|| LpError::NotMinted(token.to_string()))?;
        if !self.pool.minted.contains_key(&free) {
            return Err(LpError::UnknownToken(token.to_string()));
        }
        Ok(free)
    }

    fn wallet_mut(&mut self, agent: &AgentId) -> &mut crate::lp::state::Wallet {
        self.wallets.get_mut(agent).expect("agent checked")
    }

    fn require_safe_after(&self, agent: &AgentId) -> Result<(), LpError> {
        let c = self.collateralization(agent)?;
        if c.is_at_least(self.params.c_min) {
            Ok(())
        } else {
            Err(LpError::Undercollateralized {
                agent: agent.to_string(),
                post: c.as_f64(),
                c_min: self.params.c_min,
            })
        }
    }

    /// `Dep_a(v : τ)`: moves `v` of `τ` into the pool and mints `v / ER` of `τ'`.
    pub fn deposit(&self, agent: &AgentId, amount: f64, token: &TokenId) -> Result<LpState, LpError> {
        positive(amount)?;
        let wallet = self.wallet(agent)?;
        self.priced_free(token)?;
        if !wallet.can_pay(token, amount) {
            return Err(LpError::InsufficientBalance {
                agent: agent.to_string(),
                token: token.to_string(),
                held: wallet.balance(token),
                needed: amount,
            });
        }
        let minted = TokenId::minted_of(token);
        let mut next = self.clone();
        next.pool
            .minted
            .entry(token.clone())
            .or_insert_with(|| MintedEntry {
                token: minted.clone(),
                supply: 0.0,
            });
        let rate = next.exchange_rate(&minted)?;
        if !(rate > 0.0) {
            return Err(LpError::InvalidState(format!(
                "exchange rate of {minted} is {rate}"
            )));
        }
        let coined = amount / rate;
        next.wallet_mut(agent).debit(token, amount)?;
        next.pool.funds.apply_in_place(MapOp::Add, amount, token)?;
        next.wallet_mut(agent).credit(&minted, coined)?;
        next.pool.minted.get_mut(token).expect("registered").supply += coined;
        Ok(next)
    }

    /// `Rdm_a(v : τ')`: burns `v` of `τ'` and pays out `v · ER` of `τ`.
    pub fn redeem(&self, agent: &AgentId, amount: f64, minted: &TokenId) -> Result<LpState, LpError> {
        positive(amount)?;
        let wallet = self.wallet(agent)?;
        let free = self.registered_minted(minted)?;
        if !wallet.can_pay(minted, amount) {
            return Err(LpError::InsufficientBalance {
                agent: agent.to_string(),
                token: minted.to_string(),
                held: wallet.balance(minted),
                needed: amount,
            });
        }
        let payout = amount * self.exchange_rate(minted)?;
        let held = self.pool.funds.get(&free);
        if !num::approx_ge(held, payout) {
            return Err(LpError::InsufficientPoolFunds {
                token: free.to_string(),
                held,
                needed: payout,
            });
        }
        let mut next = self.clone();
        next.wallet_mut(agent).debit(minted, amount)?;
        let entry = next.pool.minted.get_mut(&free).expect("registered");
        // supply covers every wallet, so only rounding can push this below zero
        entry.supply = (entry.supply - amount).max(0.0);
        next.wallet_mut(agent).credit(&free, payout)?;
        next.pool.funds.apply_in_place(MapOp::Sub, payout, &free)?;
        next.require_safe_after(agent)?;
        Ok(next)
    }

    /// `Bor_a(v : τ)`: lends `v` of `τ` from the pool.
    pub fn borrow(&self, agent: &AgentId, amount: f64, token: &TokenId) -> Result<LpState, LpError> {
        positive(amount)?;
        self.wallet(agent)?;
        self.priced_free(token)?;
        let held = self.pool.funds.get(token);
        if !self.pool.funds.contains(token) || !num::approx_ge(held, amount) {
            return Err(LpError::InsufficientPoolFunds {
                token: token.to_string(),
                held,
                needed: amount,
            });
        }
        let mut next = self.clone();
        next.pool.funds.apply_in_place(MapOp::Sub, amount, token)?;
        next.wallet_mut(agent).credit(token, amount)?;
        next.pool
            .loans
            .entry(agent.clone())
            .or_default()
            .apply_in_place(MapOp::Add, amount, token)?;
        next.require_safe_after(agent)?;
        Ok(next)
    }

    /// `Rep_a(v : τ)`: returns `v` of `τ` to the pool against the agent's loan.
    pub fn repay(&self, agent: &AgentId, amount: f64, token: &TokenId) -> Result<LpState, LpError> {
        positive(amount)?;
        let wallet = self.wallet(agent)?;
        self.priced_free(token)?;
        if !wallet.can_pay(token, amount) {
            return Err(LpError::InsufficientBalance {
                agent: agent.to_string(),
                token: token.to_string(),
                held: wallet.balance(token),
                needed: amount,
            });
        }
        let owed = self.pool.loan(agent, token);
        if !num::approx_ge(owed, amount) || owed <= 0.0 {
            return Err(LpError::ExceedsLoan {
                agent: agent.to_string(),
                token: token.to_string(),
                owed,
                amount,
            });
        }
        let mut next = self.clone();
        next.wallet_mut(agent).debit(token, amount)?;
        next.pool.funds.apply_in_place(MapOp::Add, amount, token)?;
        next.pool
            .loans
            .get_mut(agent)
            .expect("loan exists")
            .apply_in_place(MapOp::Sub, amount, token)?;
        Ok(next)
    }

    /// `Liq_l(b, v : τ̂, τ')`: the liquidator repays `v` of the borrower's `τ̂`
    /// loan and seizes `v · p(τ̂)/p(τ) · r_liq` units of the borrower's `τ'`.
    ///
    /// Preconditions are checked in rule order: minted seize token, liquidator
    /// funds, the `max_liq` share, borrower holdings, pre-state below `c_min`,
    /// post-state at most `c_min`.
    pub fn liquidate(
        &self,
        liquidator: &AgentId,
        borrower: &AgentId,
        amount: f64,
        repay_token: &TokenId,
        seize_token: &TokenId,
    ) -> Result<LpState, LpError> {
        positive(amount)?;
        let liq_wallet = self.wallet(liquidator)?;
        let bor_wallet = self.wallet(borrower)?;
        if liquidator == borrower {
            return Err(LpError::SelfLiquidation(liquidator.to_string()));
        }
        self.priced_free(repay_token)?;
        let seized_free = self.registered_minted(seize_token)?;

        if !liq_wallet.can_pay(repay_token, amount) {
            return Err(LpError::InsufficientBalance {
                agent: liquidator.to_string(),
                token: repay_token.to_string(),
                held: liq_wallet.balance(repay_token),
                needed: amount,
            });
        }

        let cap = self.pool.loan(borrower, repay_token) * self.params.max_liq;
        if !num::approx_ge(cap, amount) {
            return Err(LpError::ExceedsMaxLiq { amount, cap });
        }

        let seized = amount * (self.price(repay_token)? / self.price(&seized_free)?) * self.params.r_liq;
        let collateral = bor_wallet.balance(seize_token);
        if !num::approx_ge(collateral, seized) || !bor_wallet.balances().contains(seize_token) {
            return Err(LpError::InsufficientCollateralHeld {
                token: seize_token.to_string(),
                held: collateral,
                needed: seized,
            });
        }

        let pre = self.collateralization(borrower)?;
        if !pre.is_below(self.params.c_min) {
            return Err(LpError::BorrowerSafe {
                agent: borrower.to_string(),
                c: pre.as_f64(),
            });
        }

        let mut next = self.clone();
        next.pool.funds.apply_in_place(MapOp::Add, amount, repay_token)?;
        next.pool
            .loans
            .get_mut(borrower)
            .expect("positive loan exists")
            .apply_in_place(MapOp::Sub, amount, repay_token)?;
        next.wallet_mut(liquidator).debit(repay_token, amount)?;
        next.wallet_mut(liquidator).credit(seize_token, seized)?;
        next.wallet_mut(borrower).debit(seize_token, seized)?;

        let post = next.collateralization(borrower)?;
        if !post.is_at_most(self.params.c_min) {
            return Err(LpError::OverLiquidation {
                agent: borrower.to_string(),
                post: post.as_f64(),
                c_min: self.params.c_min,
            });
        }
        Ok(next)
    }

    /// `Int`: every loan grows by `1 + interest_rate`.
    pub fn accrue_interest(&self) -> LpState {
        let mut next = self.clone();
        let factor = 1.0 + self.params.interest_rate;
        if factor != 1.0 {
            for loans in next.pool.loans.values_mut() {
                loans.scale_all(factor);
            }
        }
        next
    }

    /// `Price`: replaces the price function. The domain must stay the same.
    pub fn update_prices(&self, prices: &BTreeMap<TokenId, f64>) -> Result<LpState, LpError> {
        if prices.len() != self.prices.len() || !prices.keys().all(|k| self.prices.contains_key(k)) {
            return Err(LpError::DomainMismatch);
        }
        if let Some((token, price)) = prices.iter().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
            return Err(LpError::NonPositivePrice {
                token: token.to_string(),
                price: *price,
            });
        }
        let mut next = self.clone();
        next.prices = prices.clone();
        Ok(next)
    }
}

/// Point-wise `f ∘ v : τ`.
pub fn map_apply(f: &TokenMap, op: MapOp, v: f64, token: &TokenId) -> Result<TokenMap, LpError> {
    f.apply(op, v, token)
}
