use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lp::error::LpError;
use crate::lp::token::{AgentId, MapOp, TokenId, TokenMap};
use crate::num;

/// An agent's token holdings.
///
/// With `unbounded_funds` set, free-token debits always succeed and leave the
/// balance untouched; such wallets stand outside free-token conservation.
#[derive(Clone, Debug, PartialEq)]
pub struct Wallet {
    owner: AgentId,
    balances: TokenMap,
    unbounded_funds: bool,
}

impl Wallet {
    pub fn new(owner: AgentId) -> Self {
        Wallet {
            owner,
            balances: TokenMap::new(),
            unbounded_funds: false,
        }
    }

    pub fn unbounded(owner: AgentId) -> Self {
        Wallet {
            unbounded_funds: true,
            ..Wallet::new(owner)
        }
    }

    pub fn owner(&self) -> &AgentId {
        &self.owner
    }

    pub fn balances(&self) -> &TokenMap {
        &self.balances
    }

    pub fn balance(&self, token: &TokenId) -> f64 {
        self.balances.get(token)
    }

    pub fn has_unbounded_funds(&self) -> bool {
        self.unbounded_funds
    }

    /// Whether `amount` of `token` can be debited.
    pub fn can_pay(&self, token: &TokenId, amount: f64) -> bool {
        (self.unbounded_funds && token.is_free()) || num::approx_ge(self.balance(token), amount)
    }

    pub(crate) fn credit(&mut self, token: &TokenId, amount: f64) -> Result<(), LpError> {
        self.balances.apply_in_place(MapOp::Add, amount, token)
    }

    pub(crate) fn debit(&mut self, token: &TokenId, amount: f64) -> Result<(), LpError> {
        if self.unbounded_funds && token.is_free() {
            return Ok(());
        }
        if !self.balances.contains(token) || !self.can_pay(token, amount) {
            return Err(LpError::InsufficientBalance {
                agent: self.owner.to_string(),
                token: token.to_string(),
                held: self.balance(token),
                needed: amount,
            });
        }
        self.balances.apply_in_place(MapOp::Sub, amount, token)
    }

    pub(crate) fn set_balance(&mut self, token: TokenId, amount: f64) {
        self.balances.set(token, amount);
    }
}

/// Minted-token bookkeeping for one free token.
#[derive(Clone, Debug, PartialEq)]
pub struct MintedEntry {
    pub token: TokenId,
    pub supply: f64,
}

/// The pool component: free funds, the loan book, and minted supplies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Pool {
    pub(crate) funds: TokenMap,
    pub(crate) loans: BTreeMap<AgentId, TokenMap>,
    pub(crate) minted: BTreeMap<TokenId, MintedEntry>,
}

impl Pool {
    pub fn funds(&self) -> &TokenMap {
        &self.funds
    }

    pub fn loans(&self) -> &BTreeMap<AgentId, TokenMap> {
        &self.loans
    }

    pub fn loans_of(&self, agent: &AgentId) -> Option<&TokenMap> {
        self.loans.get(agent)
    }

    pub fn loan(&self, agent: &AgentId, token: &TokenId) -> f64 {
        self.loans.get(agent).map_or(0.0, |m| m.get(token))
    }

    pub fn minted(&self) -> &BTreeMap<TokenId, MintedEntry> {
        &self.minted
    }

    /// Supply of a minted token, if registered.
    pub fn supply(&self, minted: &TokenId) -> Option<f64> {
        let free = minted.underlying()?;
        self.minted.get(&free).map(|e| e.supply)
    }

    pub fn total_loans(&self, token: &TokenId) -> f64 {
        self.loans.values().map(|m| m.get(token)).sum()
    }
}

/// Protocol parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpParams {
    pub c_min: f64,
    pub r_liq: f64,
    pub max_liq: f64,
    pub interest_rate: f64,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams {
            c_min: 1.5,
            r_liq: 1.1,
            max_liq: 0.5,
            interest_rate: 0.0,
        }
    }
}

impl LpParams {
    pub fn new(c_min: f64, r_liq: f64, max_liq: f64, interest_rate: f64) -> Result<Self, LpError> {
        let p = LpParams {
            c_min,
            r_liq,
            max_liq,
            interest_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let all_finite = [self.c_min, self.r_liq, self.max_liq, self.interest_rate]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(LpError::InvalidParams("parameters must be finite".into()));
        }
        if self.c_min <= 1.0 {
            return Err(LpError::InvalidParams(format!("c_min {} must exceed 1", self.c_min)));
        }
        if self.r_liq < 1.0 {
            return Err(LpError::InvalidParams(format!("r_liq {} must be at least 1", self.r_liq)));
        }
        if self.r_liq >= self.c_min {
            return Err(LpError::InvalidParams(format!(
                "r_liq {} must be below c_min {}",
                self.r_liq, self.c_min
            )));
        }
        if !(self.max_liq > 0.0 && self.max_liq <= 1.0) {
            return Err(LpError::InvalidParams(format!(
                "max_liq {} must lie in (0, 1]",
                self.max_liq
            )));
        }
        if self.interest_rate < 0.0 {
            return Err(LpError::InvalidParams(format!(
                "interest_rate {} must be non-negative",
                self.interest_rate
            )));
        }
        Ok(())
    }
}

/// Collateralization of an agent; `Infinite` when nothing is owed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Collateralization {
    Finite(f64),
    Infinite,
}

impl Collateralization {
    pub fn finite(self) -> Option<f64> {
        match self {
            Collateralization::Finite(c) => Some(c),
            Collateralization::Infinite => None,
        }
    }

    /// Strictly below `threshold` (beyond tolerance).
    pub fn is_below(self, threshold: f64) -> bool {
        match self {
            Collateralization::Finite(c) => num::definitely_lt(c, threshold),
            Collateralization::Infinite => false,
        }
    }

    /// At most `threshold` (within tolerance).
    pub fn is_at_most(self, threshold: f64) -> bool {
        match self {
            Collateralization::Finite(c) => num::approx_le(c, threshold),
            Collateralization::Infinite => false,
        }
    }

    /// At least `threshold` (within tolerance).
    pub fn is_at_least(self, threshold: f64) -> bool {
        match self {
            Collateralization::Finite(c) => num::approx_ge(c, threshold),
            Collateralization::Infinite => true,
        }
    }

    pub fn capped(self, cap: f64) -> f64 {
        match self {
            Collateralization::Finite(c) => c.min(cap),
            Collateralization::Infinite => cap,
        }
    }

    pub(crate) fn as_f64(self) -> f64 {
        match self {
            Collateralization::Finite(c) => c,
            Collateralization::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Collateralization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Collateralization::Finite(c) => write!(f, "{c}"),
            Collateralization::Infinite => f.write_str("inf"),
        }
    }
}

/// A full lending-pool configuration: wallets, pool, prices and parameters.
///
/// Values are immutable in practice: every transition returns a fresh state.
#[derive(Clone, Debug, PartialEq)]
pub struct LpState {
    pub(crate) wallets: BTreeMap<AgentId, Wallet>,
    pub(crate) pool: Pool,
    pub(crate) prices: BTreeMap<TokenId, f64>,
    pub(crate) params: LpParams,
}

impl LpState {
    pub fn builder(params: LpParams) -> StateBuilder {
        StateBuilder::new(params)
    }

    pub fn wallets(&self) -> &BTreeMap<AgentId, Wallet> {
        &self.wallets
    }

    pub fn wallet(&self, agent: &AgentId) -> Result<&Wallet, LpError> {
        self.wallets
            .get(agent)
            .ok_or_else(|| LpError::UnknownAgent(agent.to_string()))
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn prices(&self) -> &BTreeMap<TokenId, f64> {
        &self.prices
    }

    pub fn price(&self, token: &TokenId) -> Result<f64, LpError> {
        self.prices
            .get(token)
            .copied()
            .ok_or_else(|| LpError::UnknownToken(token.to_string()))
    }

    pub fn params(&self) -> &LpParams {
        &self.params
    }

    pub fn with_params(&self, params: LpParams) -> Result<LpState, LpError> {
        params.validate()?;
        Ok(LpState {
            params,
            ..self.clone()
        })
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentId> {
        self.wallets.keys()
    }

    /// Free tokens with a price.
    pub fn free_tokens(&self) -> impl Iterator<Item = &TokenId> {
        self.prices.keys()
    }

    /// Underlying-token value of one unit of `minted`.
    pub fn exchange_rate(&self, minted: &TokenId) -> Result<f64, LpError> {
        let free = minted
            .underlying()
            .ok_or_else(|| LpError::NotMinted(minted.to_string()))?;
        let entry = self
            .pool
            .minted
            .get(&free)
            .ok_or_else(|| LpError::UnknownToken(minted.to_string()))?;
        if entry.supply <= 0.0 {
            return Ok(1.0);
        }
        let backing = self.pool.funds.get(&free) + self.pool.total_loans(&free);
        Ok(backing / entry.supply)
    }

    pub fn value_lent(&self, agent: &AgentId) -> Result<f64, LpError> {
        self.wallet(agent)?;
        let Some(loans) = self.pool.loans.get(agent) else {
            return Ok(0.0);
        };
        loans
            .iter()
            .map(|(token, amount)| Ok(amount * self.price(token)?))
            .sum()
    }

    pub fn value_minted(&self, agent: &AgentId) -> Result<f64, LpError> {
        let wallet = self.wallet(agent)?;
        wallet
            .balances
            .iter()
            .filter(|(token, _)| token.is_minted())
            .map(|(token, amount)| {
                let free = token.underlying().expect("minted token has an underlying");
                Ok(amount * self.exchange_rate(token)? * self.price(&free)?)
            })
            .sum()
    }

    pub fn collateralization(&self, agent: &AgentId) -> Result<Collateralization, LpError> {
        let lent = self.value_lent(agent)?;
        let minted = self.value_minted(agent)?;
        if lent <= 0.0 {
            Ok(Collateralization::Infinite)
        } else {
            Ok(Collateralization::Finite(minted / lent))
        }
    }

    /// Pool funds plus finite-wallet balances of a free token.
    pub fn free_token_total(&self, token: &TokenId) -> f64 {
        self.pool.funds.get(token)
            + self
                .wallets
                .values()
                .filter(|w| !w.unbounded_funds)
                .map(|w| w.balance(token))
                .sum::<f64>()
    }

    /// Sum of every wallet's balance of a minted token.
    pub fn minted_held(&self, minted: &TokenId) -> f64 {
        self.wallets.values().map(|w| w.balance(minted)).sum()
    }

    /// Checks every structural invariant of a configuration.
    pub fn check_invariants(&self) -> Result<(), LpError> {
        let bad = |msg: String| Err(LpError::InvalidState(msg));
        self.params.validate()?;
        for (token, price) in &self.prices {
            if !token.is_free() {
                return bad(format!("price registered for minted token {token}"));
            }
            if !(*price > 0.0 && price.is_finite()) {
                return bad(format!("price of {token} is {price}"));
            }
        }
        for (token, amount) in self.pool.funds.iter() {
            if !token.is_free() {
                return bad(format!("pool funds hold minted token {token}"));
            }
            if !self.prices.contains_key(token) {
                return bad(format!("pool funds hold unpriced token {token}"));
            }
            if !(amount >= 0.0 && amount.is_finite()) {
                return bad(format!("pool funds of {token} are {amount}"));
            }
        }
        for (agent, loans) in &self.pool.loans {
            if !self.wallets.contains_key(agent) {
                return bad(format!("loan book lists unknown agent {agent}"));
            }
            for (token, amount) in loans.iter() {
                if !token.is_free() || !self.prices.contains_key(token) {
                    return bad(format!("{agent} owes unregistered token {token}"));
                }
                if !(amount >= 0.0 && amount.is_finite()) {
                    return bad(format!("loan of {agent} in {token} is {amount}"));
                }
            }
        }
        for (agent, wallet) in &self.wallets {
            if wallet.owner != *agent {
                return bad(format!("wallet keyed {agent} is owned by {}", wallet.owner));
            }
            for (token, amount) in wallet.balances.iter() {
                if !(amount >= 0.0 && amount.is_finite()) {
                    return bad(format!("{agent} holds {amount} {token}"));
                }
                let known = match token.underlying() {
                    Some(free) => self.pool.minted.contains_key(&free),
                    None => self.prices.contains_key(token),
                };
                if !known {
                    return bad(format!("{agent} holds unregistered token {token}"));
                }
            }
        }
        for (free, entry) in &self.pool.minted {
            if entry.token != TokenId::minted_of(free) || !free.is_free() {
                return bad(format!("minted entry {free} -> {}", entry.token));
            }
            if !(entry.supply >= 0.0 && entry.supply.is_finite()) {
                return bad(format!("supply of {} is {}", entry.token, entry.supply));
            }
            let held = self.minted_held(&entry.token);
            if !num::approx_eq(held, entry.supply) && (held - entry.supply).abs() > 1e-12 {
                return bad(format!(
                    "supply of {} is {} but wallets hold {}",
                    entry.token, entry.supply, held
                ));
            }
        }
        Ok(())
    }
}

/// Assembles a configuration directly, without replaying transitions.
///
/// Minted supplies are derived from wallet holdings so that supply
/// conservation holds by construction.
#[derive(Debug, Clone)]
pub struct StateBuilder {
    state: LpState,
}

impl StateBuilder {
    pub fn new(params: LpParams) -> Self {
        StateBuilder {
            state: LpState {
                wallets: BTreeMap::new(),
                pool: Pool::default(),
                prices: BTreeMap::new(),
                params,
            },
        }
    }

    /// Registers a free token with its price and its minted counterpart.
    pub fn token(mut self, free: &TokenId, price: f64) -> Self {
        self.state.prices.insert(free.clone(), price);
        self.state
            .pool
            .minted
            .entry(free.clone())
            .or_insert_with(|| MintedEntry {
                token: TokenId::minted_of(free),
                supply: 0.0,
            });
        self
    }

    pub fn agent(mut self, agent: &AgentId) -> Self {
        self.state
            .wallets
            .entry(agent.clone())
            .or_insert_with(|| Wallet::new(agent.clone()));
        self
    }

    pub fn unbounded_agent(mut self, agent: &AgentId) -> Self {
        self.state
            .wallets
            .insert(agent.clone(), Wallet::unbounded(agent.clone()));
        self
    }

    pub fn balance(mut self, agent: &AgentId, token: &TokenId, amount: f64) -> Self {
        self = self.agent(agent);
        self.state
            .wallets
            .get_mut(agent)
            .expect("agent just inserted")
            .set_balance(token.clone(), amount);
        self
    }

    pub fn pool_funds(mut self, token: &TokenId, amount: f64) -> Self {
        self.state.pool.funds.set(token.clone(), amount);
        self
    }

    pub fn loan(mut self, agent: &AgentId, token: &TokenId, amount: f64) -> Self {
        self = self.agent(agent);
        self.state
            .pool
            .loans
            .entry(agent.clone())
            .or_default()
            .set(token.clone(), amount);
        self
    }

    pub fn build(mut self) -> Result<LpState, LpError> {
        let supplies: Vec<(TokenId, f64)> = self
            .state
            .pool
            .minted
            .values()
            .map(|e| (e.token.clone(), self.state.minted_held(&e.token)))
            .collect();
        for (minted, supply) in supplies {
            let free = minted.underlying().expect("minted entry");
            if let Some(entry) = self.state.pool.minted.get_mut(&free) {
                entry.supply = supply;
            }
        }
        self.state.check_invariants()?;
        Ok(self.state)
    }
}
