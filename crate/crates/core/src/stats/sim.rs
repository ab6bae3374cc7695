use std::collections::BTreeMap;

use thiserror::Error;

use crate::lp::{Action, AgentId, LpError, LpState};
use crate::price::{generate_path, ScenarioSpec};
use crate::strategy::{liquidation_round, StrategyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationFault {
    #[error("round {round}: {source}")]
    Lp { round: usize, source: LpError },
    #[error("round {round}: {source}")]
    Strategy { round: usize, source: StrategyError },
    #[error("initial state does not price exactly {collateral} and {loan}")]
    TokenMismatch { collateral: String, loan: String },
}

/// Everything a simulation needs besides the price path.
#[derive(Clone, Debug)]
pub struct SimSetup {
    pub init: LpState,
    pub borrowers: Vec<AgentId>,
    pub liquidators: Vec<AgentId>,
    /// Stand-in for infinite collateralization.
    pub c_cap: f64,
}

impl SimSetup {
    pub fn observe(&self, s: &LpState) -> Result<Vec<f64>, LpError> {
        self.borrowers
            .iter()
            .map(|b| Ok(s.collateralization(b)?.capped(self.c_cap)))
            .collect()
    }
}

/// Runs one seeded simulation, handing each round's state and liquidations to `on_round`.
///
/// Round 0 is the initial state. Every later round updates prices from the
/// path, accrues interest and lets each liquidator act once; every produced
/// state is checked against the pool invariants.
pub fn simulate_rounds<F>(
    spec: &ScenarioSpec,
    setup: &SimSetup,
    seed: u64,
    mut on_round: F,
) -> Result<(), SimulationFault>
where
    F: FnMut(usize, &LpState, &[Action]),
{
    let (ct, lt) = (&spec.collateral.0, &spec.loan.0);
    let priced: Vec<_> = setup.init.prices().keys().collect();
    if priced != [ct.min(lt), ct.max(lt)] {
        return Err(SimulationFault::TokenMismatch {
            collateral: ct.to_string(),
            loan: lt.to_string(),
        });
    }
    let lp = |round| move |source| SimulationFault::Lp { round, source };
    setup.init.check_invariants().map_err(lp(0))?;
    on_round(0, &setup.init, &[]);

    let path = generate_path(spec, seed);
    let mut state = setup.init.clone();
    for round in 1..=spec.horizon {
        let (pc, pl) = path.at(round);
        let prices: BTreeMap<_, _> = [(ct.clone(), pc), (lt.clone(), pl)].into_iter().collect();
        state = state.update_prices(&prices).map_err(lp(round))?.accrue_interest();
        let (next, actions) = liquidation_round(&state, &setup.liquidators)
            .map_err(|source| SimulationFault::Strategy { round, source })?;
        next.check_invariants().map_err(lp(round))?;
        state = next;
        on_round(round, &state, &actions);
    }
    Ok(())
}

/// Capped collateralization of every borrower at rounds `0..=horizon`,
/// indexed `[borrower][round]`.
pub fn run_simulation(spec: &ScenarioSpec, setup: &SimSetup, seed: u64) -> Result<Vec<Vec<f64>>, SimulationFault> {
    let mut out = vec![Vec::with_capacity(spec.horizon + 1); setup.borrowers.len()];
    let mut fault = None;
    simulate_rounds(spec, setup, seed, |round, s, _| {
        if fault.is_some() {
            return;
        }
        match setup.observe(s) {
            Ok(row) => row.into_iter().zip(out.iter_mut()).for_each(|(c, col)| col.push(c)),
            Err(source) => fault = Some(SimulationFault::Lp { round, source }),
        }
    })?;
    match fault {
        Some(f) => Err(f),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::example::{self, agent, t0, t1};
    use crate::lp::{LpParams, TokenId};
    use crate::price::{GbmParams, StepConvention};

    fn flat_spec(horizon: usize) -> ScenarioSpec {
        let p = GbmParams::new(0.0, 0.0, 1.0).unwrap();
        ScenarioSpec {
            name: "T0-T1".into(),
            collateral: (t0(), p),
            loan: (t1(), p),
            rho: -1.0,
            horizon,
            convention: StepConvention::Daily,
        }
    }

    fn running_example() -> SimSetup {
        SimSetup {
            init: example::initial_state(),
            borrowers: vec![agent("A"), agent("B"), agent("C")],
            liquidators: vec![agent("D")],
            c_cap: 10.0,
        }
    }

    #[test]
    fn replays_running_example() {
        let obs = run_simulation(&flat_spec(4), &running_example(), 1).unwrap();
        let round = |r: usize| [obs[0][r], obs[1][r], obs[2][r]];
        assert_eq!(round(0), [1.25, 1.0, 0.8]);
        // B first (tie with C), then C, then A
        for (r, want) in [(1, [1.25, 0.0, 0.8]), (2, [1.25, 0.0, 0.0]), (3, [1.5, 0.0, 0.0]), (4, [1.5, 0.0, 0.0])] {
            for (got, w) in round(r).iter().zip(want) {
                assert!((got - w).abs() < 1e-9, "round {r}: {:?}", round(r));
            }
        }
    }

    #[test]
    fn nothing_moves_without_enabled_transitions() {
        let safe = LpState::builder(LpParams::default())
            .token(&t0(), 1.0)
            .token(&t1(), 1.0)
            .pool_funds(&t0(), 200.0)
            .pool_funds(&t1(), 100.0)
            .loan(&agent("b"), &t1(), 100.0)
            .balance(&agent("b"), &TokenId::minted_of(&t0()), 200.0)
            .balance(&agent("lender"), &TokenId::minted_of(&t1()), 200.0)
            .unbounded_agent(&agent("l"))
            .build()
            .unwrap();
        let setup = SimSetup {
            init: safe,
            borrowers: vec![agent("b"), agent("lender")],
            liquidators: vec![agent("l")],
            c_cap: 10.0,
        };
        let obs = run_simulation(&flat_spec(20), &setup, 5).unwrap();
        assert!(obs[0].iter().all(|c| *c == 2.0));
        assert!(obs[1].iter().all(|c| *c == 10.0));
        assert_eq!(obs[0].len(), 21);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut spec = flat_spec(30);
        spec.collateral.1 = GbmParams::new(-0.01, 0.2, 1.0).unwrap();
        let setup = running_example();
        assert_eq!(run_simulation(&spec, &setup, 11).unwrap(), run_simulation(&spec, &setup, 11).unwrap());
    }

    #[test]
    fn rejects_foreign_tokens() {
        let mut spec = flat_spec(3);
        spec.loan.0 = TokenId::free("zz");
        assert!(matches!(
            run_simulation(&spec, &running_example(), 0),
            Err(SimulationFault::TokenMismatch { .. })
        ));
    }
}
