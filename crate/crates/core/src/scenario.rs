//! Experiment configuration, initial pool states and result files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{Action, AgentId, LpError, LpParams, LpState, TokenId};
use crate::price::{estimate_params, read_closes, GbmParams, PriceError, ScenarioSpec, StepConvention};
use crate::stats::{sig9, validate_pairs, GridRule, SimSetup, StatsParams, SweepError};

/// Environment variable naming the fixture directory.
pub const FIXTURES_ENV: &str = "LENDPOOL_FIXTURES";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("invalid config: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Price(#[from] PriceError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub c_min_lo: f64,
    pub c_min_hi: f64,
    pub r_liq_lo: f64,
    pub step: f64,
    pub gap: f64,
    /// Explicit `[c_min, r_liq]` pairs; replaces the range rule when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[f64; 2]>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let r = GridRule::default();
        GridConfig {
            c_min_lo: r.c_min_lo,
            c_min_hi: r.c_min_hi,
            r_liq_lo: r.r_liq_lo,
            step: r.step,
            gap: r.gap,
            pairs: None,
        }
    }
}

impl GridConfig {
    pub fn rule(&self) -> GridRule {
        GridRule {
            c_min_lo: self.c_min_lo,
            c_min_hi: self.c_min_hi,
            r_liq_lo: self.r_liq_lo,
            step: self.step,
            gap: self.gap,
        }
    }

    pub fn pairs(&self) -> Result<Vec<(f64, f64)>, SweepError> {
        match &self.pairs {
            Some(p) => {
                let pairs: Vec<(f64, f64)> = p.iter().map(|[c, r]| (*c, *r)).collect();
                validate_pairs(&pairs, self.r_liq_lo, self.gap)?;
                Ok(pairs)
            }
            None => self.rule().pairs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpConfig {
    pub max_liq: f64,
    pub interest_rate: f64,
    /// Value recorded for a borrower without debt.
    pub c_cap: f64,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            max_liq: 0.5,
            interest_rate: 0.0,
            c_cap: 10.0,
        }
    }
}

/// Collateralization ladder `start, start + step, ...` of `count` borrowers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BorrowerConfig {
    pub start: f64,
    pub step: f64,
    pub count: usize,
    /// USD value of each borrower's loan.
    pub loan_value: f64,
}

impl Default for BorrowerConfig {
    fn default() -> Self {
        BorrowerConfig {
            start: 1.0,
            step: 0.1,
            count: 10,
            loan_value: 10_000.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiquidatorConfig {
    pub count: usize,
}

impl Default for LiquidatorConfig {
    fn default() -> Self {
        LiquidatorConfig { count: 3 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceConfig {
    pub convention: StepConvention,
    /// Asset symbol to `date,close` CSV. Listed assets take `mu` and `sigma`
    /// from the file instead of the built-in table; relative paths resolve
    /// against the fixture directory.
    pub assets: BTreeMap<String, PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<String>,
    pub horizon: usize,
    pub base_seed: u64,
    pub output: PathBuf,
    pub grid: GridConfig,
    pub stats: StatsParams,
    pub lp: LpConfig,
    pub borrowers: BorrowerConfig,
    pub liquidators: LiquidatorConfig,
    pub prices: PriceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenarios: ScenarioSpec::NAMES.iter().map(|s| s.to_string()).collect(),
            horizon: 91,
            base_seed: 42,
            output: PathBuf::from("results.csv"),
            grid: GridConfig::default(),
            stats: StatsParams::default(),
            lp: LpConfig::default(),
            borrowers: BorrowerConfig::default(),
            liquidators: LiquidatorConfig::default(),
            prices: PriceConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scenarios.is_empty() {
            return Err(invalid("scenarios", "at least one scenario is required"));
        }
        for s in &self.scenarios {
            ScenarioSpec::builtin(s).map_err(|e| invalid("scenarios", e.to_string()))?;
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        self.grid.pairs().map_err(|e| invalid("grid", e.to_string()))?;
        self.stats.validate().map_err(|m| invalid("stats", m))?;
        let lp = &self.lp;
        LpParams::new(1.5, 1.1, lp.max_liq, lp.interest_rate).map_err(|e| invalid("lp", e.to_string()))?;
        if !(lp.c_cap > 0.0 && lp.c_cap.is_finite()) {
            return Err(invalid("lp.c_cap", format!("{} must be positive", lp.c_cap)));
        }
        let b = &self.borrowers;
        if !(b.start >= 1.0 && b.start.is_finite()) {
            return Err(invalid("borrowers.start", format!("{} must be at least 1.0", b.start)));
        }
        if !(b.step >= 0.0 && b.step.is_finite()) {
            return Err(invalid("borrowers.step", format!("{} must be non-negative", b.step)));
        }
        if b.count == 0 {
            return Err(invalid("borrowers.count", "must be positive"));
        }
        if !(b.loan_value > 0.0 && b.loan_value.is_finite()) {
            return Err(invalid("borrowers.loan_value", format!("{} must be positive", b.loan_value)));
        }
        if self.liquidators.count == 0 {
            return Err(invalid("liquidators.count", "must be positive"));
        }
        let probe = ScenarioSpec {
            convention: self.prices.convention,
            ..ScenarioSpec::builtin("ETH-WBTC")?
        };
        probe.validate().map_err(|e| invalid("prices.convention", e.to_string()))?;
        Ok(())
    }

    /// Scenario with this config's horizon, step convention and asset overrides.
    pub fn scenario(&self, name: &str, fixtures: &Path) -> Result<ScenarioSpec, ConfigError> {
        let mut spec = ScenarioSpec::builtin(name)?;
        spec.horizon = self.horizon;
        spec.convention = self.prices.convention;
        for side in [&mut spec.collateral, &mut spec.loan] {
            if let Some(path) = self.prices.assets.get(side.0.symbol()) {
                side.1 = estimate_from_csv(&fixtures.join(path), side.1.p0)?;
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::parse(&text, &path.display().to_string())
}

/// `$LENDPOOL_FIXTURES` if set, otherwise `./fixtures`.
pub fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURES_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures"))
}

pub fn estimate_from_csv(path: &Path, p0: f64) -> Result<GbmParams, PriceError> {
    let closes: Vec<f64> = read_closes(path)?.into_iter().map(|c| c.close).collect();
    estimate_params(&closes, p0)
}

pub fn borrower_id(i: usize, count: usize) -> AgentId {
    let width = count.to_string().len().max(2);
    AgentId::new(&format!("b{i:0width$}"))
}

pub fn liquidator_id(i: usize) -> AgentId {
    AgentId::new(&format!("l{i}"))
}

pub const LENDER: &str = "lender";

/// Borrowers `b01..` on the collateralization ladder, unbounded liquidators
/// `l1..`, and a lender whose minted loan tokens back the pool's liquidity.
///
/// Each borrower owes `loan_value` USD of the loan token, still holds the
/// borrowed units, and owns minted collateral worth `C · loan_value`. Pool
/// funds are seeded so both exchange rates start at 1.
pub fn build_initial_state(cfg: &ExperimentConfig, spec: &ScenarioSpec) -> Result<SimSetup, ConfigError> {
    cfg.validate()?;
    spec.validate()?;
    let (ct, cp) = (&spec.collateral.0, spec.collateral.1.p0);
    let (lt, lp) = (&spec.loan.0, spec.loan.1.p0);
    let (ctm, ltm) = (TokenId::minted_of(ct), TokenId::minted_of(lt));
    let params = LpParams::new(1.5, 1.1, cfg.lp.max_liq, cfg.lp.interest_rate)?;
    let b = &cfg.borrowers;
    let loan_units = b.loan_value / lp;

    let mut builder = LpState::builder(params).token(ct, cp).token(lt, lp);
    let mut borrowers = Vec::with_capacity(b.count);
    let mut collateral_total = 0.0;
    for i in 1..=b.count {
        let id = borrower_id(i, b.count);
        let c = b.start + b.step * (i - 1) as f64;
        let units = c * b.loan_value / cp;
        collateral_total += units;
        builder = builder
            .loan(&id, lt, loan_units)
            .balance(&id, lt, loan_units)
            .balance(&id, &ctm, units);
        borrowers.push(id);
    }
    let lent = loan_units * b.count as f64;
    let liquidators: Vec<AgentId> = (1..=cfg.liquidators.count).map(liquidator_id).collect();
    for l in &liquidators {
        builder = builder.unbounded_agent(l);
    }
    let init = builder
        .pool_funds(ct, collateral_total)
        .pool_funds(lt, lent)
        .balance(&AgentId::new(LENDER), &ltm, 2.0 * lent)
        .build()?;
    Ok(SimSetup {
        init,
        borrowers,
        liquidators,
        c_cap: cfg.lp.c_cap,
    })
}

pub const ROUNDS_HEADER: &str =
    "round,borrower,collateral_price,loan_price,collateralization,loan_units,collateral_units,liquidations";

/// One row per (round, borrower) of a single simulation; `liquidations`
/// counts the liquidations the borrower suffered in that round.
pub fn write_round<W: Write>(
    out: &mut W,
    spec: &ScenarioSpec,
    setup: &SimSetup,
    round: usize,
    state: &LpState,
    actions: &[Action],
) -> Result<(), ConfigError> {
    let (ct, lt) = (&spec.collateral.0, &spec.loan.0);
    let ctm = TokenId::minted_of(ct);
    let io = |source| ConfigError::Io {
        path: "simulation output".into(),
        source,
    };
    for b in &setup.borrowers {
        let hits = actions
            .iter()
            .filter(|a| matches!(a, Action::Liquidate { borrower, .. } if borrower == b))
            .count();
        let c = state.collateralization(b)?;
        writeln!(
            out,
            "{round},{b},{},{},{},{},{},{hits}",
            sig9(state.price(ct)?),
            sig9(state.price(lt)?),
            sig9(c.capped(setup.c_cap)),
            sig9(state.pool().loan(b, lt)),
            sig9(state.wallet(b)?.balance(&ctm)),
        )
        .map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::lp::Collateralization;

    #[test]
    fn empty_config_is_the_default_experiment() {
        let cfg = ExperimentConfig::parse("", "<empty>").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.scenarios, ["ETH-WBTC", "ETH-USDC", "USDC-WBTC"]);
        assert_eq!(cfg.stats.alpha, 0.05);
        assert_eq!(cfg.grid.pairs().unwrap().len(), 10);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.pairs = Some(vec![[1.5, 1.1], [1.4, 1.2]]);
        cfg.prices.assets.insert("ETH".into(), "eth.csv".into());
        cfg.prices.convention = StepConvention::Calendar { dt: 1.0 / 365.0 };
        let again = ExperimentConfig::parse(&cfg.to_toml(), "<mem>").unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn validation_errors() {
        for (text, field) in [
            ("[grid]\nr_liq_lo = 1.6\n", "grid"),
            ("[borrowers]\nstart = 0.9\n", "borrowers.start"),
            ("[borrowers]\ncount = 0\n", "borrowers.count"),
            ("[liquidators]\ncount = 0\n", "liquidators.count"),
            ("scenarios = [\"ETH-DAI\"]\n", "scenarios"),
            ("[stats]\nn_min = 1\n", "stats"),
            ("[lp]\nmax_liq = 1.5\n", "lp"),
        ] {
            match ExperimentConfig::parse(text, "<t>") {
                Err(ConfigError::Invalid { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            ExperimentConfig::parse("horizonn = 3\n", "<t>"),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("[stats]\ndelt = 3\n", "<t>"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn default_initial_state() {
        let cfg = ExperimentConfig::default();
        for name in ScenarioSpec::NAMES {
            let spec = cfg.scenario(name, Path::new("fixtures")).unwrap();
            let setup = build_initial_state(&cfg, &spec).unwrap();
            let s = &setup.init;
            s.check_invariants().unwrap();
            assert_eq!(setup.borrowers.len(), 10);
            assert_eq!(setup.borrowers[0].as_str(), "b01");
            assert_eq!(setup.liquidators.len(), 3);
            for t in [&spec.collateral.0, &spec.loan.0] {
                assert_relative_eq!(
                    s.exchange_rate(&TokenId::minted_of(t)).unwrap(),
                    1.0,
                    max_relative = 1e-12
                );
            }
            let cs: Vec<f64> = setup
                .borrowers
                .iter()
                .map(|b| s.collateralization(b).unwrap().finite().unwrap())
                .collect();
            for (i, c) in cs.iter().enumerate() {
                assert_relative_eq!(*c, 1.0 + 0.1 * i as f64, max_relative = 1e-12);
            }
            assert!(cs.windows(2).all(|w| w[0] < w[1]));
            assert_relative_eq!(s.value_lent(&setup.borrowers[3]).unwrap(), 10_000.0, max_relative = 1e-12);
            for l in &setup.liquidators {
                assert!(s.wallet(l).unwrap().has_unbounded_funds());
                assert_eq!(s.collateralization(l).unwrap(), Collateralization::Infinite);
            }
        }
    }

    #[test]
    fn flat_ladder_at_c_min_is_not_liquidatable() {
        let mut cfg = ExperimentConfig::default();
        cfg.borrowers.start = 1.5;
        cfg.borrowers.step = 0.0;
        let spec = cfg.scenario("ETH-USDC", Path::new(".")).unwrap();
        let setup = build_initial_state(&cfg, &spec).unwrap();
        for l in &setup.liquidators {
            assert_eq!(crate::strategy::select_plan(&setup.init, l).unwrap(), None);
        }
    }

    #[test]
    fn results_scale_free_in_loan_value() {
        let mut cfg = ExperimentConfig {
            horizon: 15,
            ..ExperimentConfig::default()
        };
        let spec = cfg.scenario("ETH-WBTC", Path::new(".")).unwrap();
        let a = build_initial_state(&cfg, &spec).unwrap();
        cfg.borrowers.loan_value = 37.5;
        let b = build_initial_state(&cfg, &spec).unwrap();
        let ra = crate::stats::run_simulation(&spec, &a, 9).unwrap();
        let rb = crate::stats::run_simulation(&spec, &b, 9).unwrap();
        for (x, y) in ra.iter().flatten().zip(rb.iter().flatten()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn borrower_ids_sort_numerically() {
        assert_eq!(borrower_id(3, 10).as_str(), "b03");
        assert_eq!(borrower_id(7, 150).as_str(), "b007");
        assert!(borrower_id(9, 10) < borrower_id(10, 10));
    }
}
