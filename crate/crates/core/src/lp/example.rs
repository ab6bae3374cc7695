//! The three-borrower running example: borrowers A, B, C owe `t1` against `t0'`
//! collateral, and liquidator D holds `t1` and `t1'`. Prices are 1, `c_min = 1.5`,
//! `r_liq = 1.1`, `max_liq = 1`.
//!
//! The reference table omits `π_f(t0)` and the minted supplies; they are seeded
//! here (`π_f(t0) = 300`) so that both exchange rates equal 1.

use crate::lp::error::LpError;
use crate::lp::rules::Action;
use crate::lp::state::{LpParams, LpState};
use crate::lp::token::{AgentId, TokenId};

pub fn t0() -> TokenId {
    TokenId::free("t0")
}

pub fn t1() -> TokenId {
    TokenId::free("t1")
}

pub fn agent(name: &str) -> AgentId {
    AgentId::new(name)
}

pub fn params() -> LpParams {
    LpParams::new(1.5, 1.1, 1.0, 0.0).expect("valid example parameters")
}

/// Γ0.
pub fn initial_state() -> LpState {
    let (t0, t1) = (t0(), t1());
    let (t0m, t1m) = (TokenId::minted_of(&t0), TokenId::minted_of(&t1));
    let (a, b, c, d) = (agent("A"), agent("B"), agent("C"), agent("D"));
    LpState::builder(params())
        .token(&t0, 1.0)
        .token(&t1, 1.0)
        .pool_funds(&t0, 300.0)
        .pool_funds(&t1, 195.0)
        .loan(&a, &t1, 80.0)
        .loan(&b, &t1, 100.0)
        .loan(&c, &t1, 125.0)
        .balance(&a, &t1, 80.0)
        .balance(&a, &t0m, 100.0)
        .balance(&b, &t1, 100.0)
        .balance(&b, &t0m, 100.0)
        .balance(&c, &t1, 125.0)
        .balance(&c, &t0m, 100.0)
        .balance(&d, &t1, 500.0)
        .balance(&d, &t0m, 0.0)
        .balance(&d, &t1m, 500.0)
        .build()
        .expect("running example is a valid configuration")
}

/// Repay amount of each of the three liquidations by D, keyed by borrower.
pub fn repay_amount(borrower: &str) -> f64 {
    match borrower {
        "A" => 50.0,
        "B" | "C" => 1000.0 / 11.0,
        other => panic!("no liquidation of {other} in the running example"),
    }
}

pub fn liquidation_of(borrower: &str) -> Action {
    Action::Liquidate {
        liquidator: agent("D"),
        borrower: agent(borrower),
        amount: repay_amount(borrower),
        repay_token: t1(),
        seize_token: TokenId::minted_of(&t0()),
    }
}

/// One row of the reference state table, integer-rounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRow {
    pub name: &'static str,
    /// Borrowers liquidated to reach this state.
    pub liquidated: &'static [&'static str],
    pub pool_funds_t1: f64,
    /// Loans of A, B, C in `t1`.
    pub loans: [f64; 3],
    /// `σ(t1)` and `σ(t0')` of A, B, C.
    pub borrower_wallets: [[f64; 2]; 3],
    /// `σ_D(t1)`, `σ_D(t0')`, `σ_D(t1')`.
    pub liquidator_wallet: [f64; 3],
    /// Collateralization of A, B, C.
    pub collateralization: [f64; 3],
}

/// The reference table, column by column, with one corrected cell.
pub const TABLE: [TableRow; 8] = [
    TableRow {
        name: "Γ0",
        liquidated: &[],
        pool_funds_t1: 195.0,
        loans: [80.0, 100.0, 125.0],
        borrower_wallets: [[80.0, 100.0], [100.0, 100.0], [125.0, 100.0]],
        liquidator_wallet: [500.0, 0.0, 500.0],
        collateralization: [1.25, 1.0, 0.8],
    },
    TableRow {
        name: "Γ1,1",
        liquidated: &["A"],
        pool_funds_t1: 245.0,
        loans: [30.0, 100.0, 125.0],
        borrower_wallets: [[80.0, 45.0], [100.0, 100.0], [125.0, 100.0]],
        liquidator_wallet: [450.0, 55.0, 500.0],
        collateralization: [1.5, 1.0, 0.8],
    },
    TableRow {
        name: "Γ1,2",
        liquidated: &["B"],
        pool_funds_t1: 286.0,
        loans: [80.0, 9.0, 125.0],
        borrower_wallets: [[80.0, 100.0], [100.0, 0.0], [125.0, 100.0]],
        // Printed as 410, which contradicts 500 - 1000/11 and the 286 in `pool_funds_t1`.
        liquidator_wallet: [409.0, 100.0, 500.0],
        collateralization: [1.25, 0.0, 0.8],
    },
    TableRow {
        name: "Γ1,3",
        liquidated: &["C"],
        pool_funds_t1: 286.0,
        loans: [80.0, 100.0, 34.0],
        borrower_wallets: [[80.0, 100.0], [100.0, 100.0], [125.0, 0.0]],
        // Printed as 410, which contradicts 500 - 1000/11 and the 286 in `pool_funds_t1`.
        liquidator_wallet: [409.0, 100.0, 500.0],
        collateralization: [1.25, 1.0, 0.0],
    },
    TableRow {
        name: "Γ2,1",
        liquidated: &["A", "B"],
        pool_funds_t1: 336.0,
        loans: [30.0, 9.0, 125.0],
        borrower_wallets: [[80.0, 45.0], [100.0, 0.0], [125.0, 100.0]],
        liquidator_wallet: [359.0, 155.0, 500.0],
        collateralization: [1.5, 0.0, 0.8],
    },
    TableRow {
        name: "Γ2,2",
        liquidated: &["A", "C"],
        pool_funds_t1: 336.0,
        loans: [30.0, 100.0, 34.0],
        borrower_wallets: [[80.0, 45.0], [100.0, 100.0], [125.0, 0.0]],
        liquidator_wallet: [359.0, 155.0, 500.0],
        collateralization: [1.5, 1.0, 0.0],
    },
    TableRow {
        name: "Γ2,3",
        liquidated: &["B", "C"],
        pool_funds_t1: 377.0,
        loans: [80.0, 9.0, 34.0],
        borrower_wallets: [[80.0, 100.0], [100.0, 0.0], [125.0, 0.0]],
        liquidator_wallet: [318.0, 200.0, 500.0],
        collateralization: [1.25, 0.0, 0.0],
    },
    TableRow {
        name: "Γ3,1",
        liquidated: &["A", "B", "C"],
        pool_funds_t1: 427.0,
        loans: [30.0, 9.0, 34.0],
        borrower_wallets: [[80.0, 45.0], [100.0, 0.0], [125.0, 0.0]],
        liquidator_wallet: [268.0, 255.0, 500.0],
        collateralization: [1.5, 0.0, 0.0],
    },
];

/// Table row reached after liquidating exactly the given set of borrowers.
pub fn row_for(liquidated: &[&str]) -> &'static TableRow {
    let mut key: Vec<&str> = liquidated.to_vec();
    key.sort_unstable();
    TABLE
        .iter()
        .find(|r| r.liquidated == key.as_slice())
        .expect("every subset of {A, B, C} has a row")
}

/// Largest absolute deviation between a state and a table row, plus the
/// name of the offending cell.
pub fn max_deviation(state: &LpState, row: &TableRow) -> Result<(f64, String), LpError> {
    let (t0m, t1m) = (TokenId::minted_of(&t0()), TokenId::minted_of(&t1()));
    let mut cells: Vec<(String, f64, f64)> = vec![(
        "π_f(t1)".into(),
        state.pool().funds().get(&t1()),
        row.pool_funds_t1,
    )];
    for (i, name) in ["A", "B", "C"].iter().enumerate() {
        let id = agent(name);
        let w = state.wallet(&id)?;
        cells.push((format!("π_l({name})"), state.pool().loan(&id, &t1()), row.loans[i]));
        cells.push((format!("σ_{name}(t1)"), w.balance(&t1()), row.borrower_wallets[i][0]));
        cells.push((format!("σ_{name}(t0')"), w.balance(&t0m), row.borrower_wallets[i][1]));
        let c = state
            .collateralization(&id)?
            .finite()
            .unwrap_or(f64::INFINITY);
        cells.push((format!("C({name})"), c, row.collateralization[i]));
    }
    let d = state.wallet(&agent("D"))?;
    cells.push(("σ_D(t1)".into(), d.balance(&t1()), row.liquidator_wallet[0]));
    cells.push(("σ_D(t0')".into(), d.balance(&t0m), row.liquidator_wallet[1]));
    cells.push(("σ_D(t1')".into(), d.balance(&t1m), row.liquidator_wallet[2]));
    Ok(cells
        .into_iter()
        .map(|(name, got, want)| ((got - want).abs(), name))
        .fold((0.0, String::new()), |acc, x| if x.0 > acc.0 { x } else { acc }))
}

/// All orderings of the three liquidations.
pub fn orderings() -> Vec<[&'static str; 3]> {
    vec![
        ["A", "B", "C"],
        ["A", "C", "B"],
        ["B", "A", "C"],
        ["B", "C", "A"],
        ["C", "A", "B"],
        ["C", "B", "A"],
    ]
}
