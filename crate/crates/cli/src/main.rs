use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lendpool::lp::example;
use lendpool::price::{GbmParams, ScenarioSpec};
use lendpool::scenario::{self, ExperimentConfig, ROUNDS_HEADER};
use lendpool::stats::{self, simulate_rounds, write_results};

#[derive(Parser)]
#[command(name = "lendpool", version, about = "Lending-pool liquidation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment configuration; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario name (eth-wbtc, eth-usdc, usdc-wbtc); repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<String>,
    /// Grid pairs `cmin:rliq[,cmin:rliq...]`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_sims: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded simulation and write a per-round state CSV.
    Simulate(Common),
    /// Estimate GBM drift and volatility from a `date,close` CSV.
    EstimateParams {
        /// CSV path, or an asset name looked up as `<fixtures>/<name>.csv`.
        asset: String,
        /// Initial price; defaults to the built-in value for known assets, else the last close.
        #[arg(long)]
        p0: Option<f64>,
    },
    /// Run the (c_min, r_liq) sweep and write the results CSV.
    Sweep(Common),
    /// Replay the six orderings of the three-borrower example.
    ReplayExample,
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, e: impl std::fmt::Display) -> Self {
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::new("io", format!("{}: {e}", path.display()))
}

fn parse_grid(text: &str) -> Result<Vec<[f64; 2]>, Failure> {
    text.split(',')
        .map(|pair| {
            let (c, r) = pair
                .split_once(':')
                .ok_or_else(|| Failure::new("usage", format!("grid entry {pair:?} is not cmin:rliq")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Failure::new("usage", format!("grid entry {pair:?}: {e}")))
            };
            Ok([num(c)?, num(r)?])
        })
        .collect()
}

fn config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => scenario::load_config(p).map_err(|e| Failure::new("config", e))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.base_seed = s;
    }
    if !common.scenario.is_empty() {
        cfg.scenarios = common.scenario.clone();
    }
    if let Some(g) = &common.grid {
        cfg.grid.pairs = Some(parse_grid(g)?);
    }
    if let Some(o) = &common.out {
        cfg.output = o.clone();
    }
    if let Some(d) = common.delta {
        cfg.stats.delta = d;
    }
    if let Some(a) = common.alpha {
        cfg.stats.alpha = a;
    }
    if let Some(n) = common.max_sims {
        cfg.stats.n_max = n;
        cfg.stats.n_min = cfg.stats.n_min.min(n);
    }
    cfg.validate().map_err(|e| Failure::new("config", e))?;
    Ok(cfg)
}

fn scenarios(cfg: &ExperimentConfig) -> Result<Vec<(ScenarioSpec, stats::SimSetup)>, Failure> {
    let fixtures = scenario::fixture_dir();
    cfg.scenarios
        .iter()
        .map(|name| {
            let spec = cfg.scenario(name, &fixtures).map_err(|e| Failure::new("config", e))?;
            let setup = scenario::build_initial_state(cfg, &spec).map_err(|e| Failure::new("config", e))?;
            Ok((spec, setup))
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn simulate(common: &Common) -> Result<(), Failure> {
    let cfg = config(common)?;
    let (c_min, r_liq) = *cfg
        .grid
        .pairs()
        .map_err(|e| Failure::new("config", e))?
        .first()
        .expect("validated grid is non-empty");
    let (spec, setup) = scenarios(&cfg)?.into_iter().next().expect("validated config has a scenario");
    let params = lendpool::lp::LpParams {
        c_min,
        r_liq,
        ..*setup.init.params()
    };
    let setup = stats::SimSetup {
        init: setup.init.with_params(params).map_err(|e| Failure::new("config", e))?,
        ..setup
    };
    let mut out = create(&cfg.output)?;
    writeln!(out, "{ROUNDS_HEADER}").map_err(io_err(&cfg.output))?;
    let mut write_err = None;
    simulate_rounds(&spec, &setup, cfg.base_seed, |round, state, actions| {
        if write_err.is_none() {
            write_err = scenario::write_round(&mut out, &spec, &setup, round, state, actions).err();
        }
    })
    .map_err(|e| Failure::new("simulation", e))?;
    if let Some(e) = write_err {
        return Err(Failure::new("io", e));
    }
    out.flush().map_err(io_err(&cfg.output))?;
    println!(
        "simulated {} ({c_min}, {r_liq}) seed {} -> {}",
        spec.name,
        cfg.base_seed,
        cfg.output.display()
    );
    Ok(())
}

fn builtin_p0(symbol: &str) -> Option<f64> {
    ScenarioSpec::NAMES.iter().find_map(|n| {
        let s = ScenarioSpec::builtin(n).ok()?;
        [s.collateral, s.loan]
            .into_iter()
            .find(|(t, _)| t.symbol().eq_ignore_ascii_case(symbol))
            .map(|(_, p)| p.p0)
    })
}

fn estimate(asset: &str, p0: Option<f64>) -> Result<(), Failure> {
    let direct = PathBuf::from(asset);
    let (path, symbol) = if direct.extension().is_some() || direct.exists() {
        let stem = direct
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        (direct, stem)
    } else {
        (scenario::fixture_dir().join(format!("{}.csv", asset.to_ascii_lowercase())), asset.to_string())
    };
    let closes = lendpool::price::read_closes(&path).map_err(|e| Failure::new("input", e))?;
    let p0 = p0
        .or_else(|| builtin_p0(&symbol))
        .or_else(|| closes.last().map(|c| c.close))
        .ok_or_else(|| Failure::new("input", format!("{}: no closes", path.display())))?;
    let values: Vec<f64> = closes.iter().map(|c| c.close).collect();
    let GbmParams { mu, sigma, p0 } =
        lendpool::price::estimate_params(&values, p0).map_err(|e| Failure::new("input", e))?;
    println!(
        "{}",
        serde_json::json!({
            "asset": symbol,
            "closes": values.len(),
            "mu": mu,
            "sigma": sigma,
            "p0": p0,
        })
    );
    Ok(())
}

fn sweep(common: &Common) -> Result<(), Failure> {
    let cfg = config(common)?;
    let pairs = cfg.grid.pairs().map_err(|e| Failure::new("config", e))?;
    let inputs = scenarios(&cfg)?;
    let started = Instant::now();
    let cells = stats::sweep(&inputs, &pairs, &cfg.stats, cfg.base_seed).map_err(|e| Failure::new("simulation", e))?;
    let mut out = create(&cfg.output)?;
    write_results(&cells, &mut out).map_err(io_err(&cfg.output))?;
    let unconverged = cells
        .iter()
        .flat_map(|c| c.estimates.iter().flatten())
        .filter(|e| !e.converged)
        .count();
    eprintln!(
        "{} cells, {} unconverged estimates, {:.1}s -> {}",
        cells.len(),
        unconverged,
        started.elapsed().as_secs_f64(),
        cfg.output.display()
    );
    Ok(())
}

fn replay() -> Result<(), Failure> {
    let mut converged = 0;
    let orders = example::orderings();
    for order in &orders {
        let mut state = example::initial_state();
        let mut done: Vec<&str> = Vec::new();
        let mut worst = (0.0f64, String::new(), "");
        for b in order {
            state = state
                .apply(&example::liquidation_of(b))
                .map_err(|e| Failure::new("replay", format!("{}: {e}", order.join(""))))?;
            done.push(b);
            let row = example::row_for(&done);
            let (dev, cell) = example::max_deviation(&state, row).map_err(|e| Failure::new("replay", e))?;
            if dev > worst.0 {
                worst = (dev, cell, row.name);
            }
        }
        let ok = worst.0 <= 0.5;
        if ok {
            converged += 1;
        }
        println!(
            "{} {}: max deviation {:.4} ({} in {})",
            if ok { "PASS" } else { "FAIL" },
            order.join(" -> "),
            worst.0,
            if worst.1.is_empty() { "-" } else { &worst.1 },
            if worst.2.is_empty() { "-" } else { worst.2 },
        );
    }
    println!("{converged}/{} traces converge to Γ3,1", orders.len());
    if converged == orders.len() {
        Ok(())
    } else {
        Err(Failure::new("replay", format!("{} traces diverge", orders.len() - converged)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::EstimateParams { asset, p0 } => estimate(asset, *p0),
        Command::Sweep(c) => sweep(c),
        Command::ReplayExample => replay(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", serde_json::json!({"error": f.kind, "message": f.message}));
            ExitCode::FAILURE
        }
    }
}
