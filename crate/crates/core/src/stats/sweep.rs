use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ci::{estimate_means, CiEstimate, StatsParams};
use super::sim::{run_simulation, SimSetup, SimulationFault};
use crate::lp::{AgentId, LpParams};
use crate::price::ScenarioSpec;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid statistics parameters: {0}")]
    InvalidStats(String),
    #[error("{scenario} ({c_min}, {r_liq}) simulation {sim}: {source}")]
    Simulation {
        scenario: String,
        c_min: f64,
        r_liq: f64,
        sim: u64,
        source: Box<SimulationFault>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// `c_min` from `c_min_lo` to `c_min_hi` and `r_liq` from `r_liq_lo` to
/// `c_min − gap`, both in increments of `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridRule {
    pub c_min_lo: f64,
    pub c_min_hi: f64,
    pub r_liq_lo: f64,
    pub step: f64,
    pub gap: f64,
}

impl Default for GridRule {
    fn default() -> Self {
        GridRule {
            c_min_lo: 1.2,
            c_min_hi: 1.5,
            r_liq_lo: 1.1,
            step: 0.1,
            gap: 0.1,
        }
    }
}

impl GridRule {
    pub fn pairs(&self) -> Result<Vec<(f64, f64)>, SweepError> {
        let bad = |m: String| Err(SweepError::InvalidGrid(m));
        let all = [self.c_min_lo, self.c_min_hi, self.r_liq_lo, self.step, self.gap];
        if !all.iter().all(|x| x.is_finite()) || self.step <= 0.0 || self.gap < 0.0 {
            return bad(format!("non-finite or non-positive bounds in {self:?}"));
        }
        if self.c_min_hi < self.c_min_lo {
            return bad(format!("c_min range {}..{} is empty", self.c_min_lo, self.c_min_hi));
        }
        if self.r_liq_lo > round9(self.c_min_hi - self.gap) {
            return bad(format!(
                "r_liq lower bound {} exceeds c_min upper bound {} minus gap {}",
                self.r_liq_lo, self.c_min_hi, self.gap
            ));
        }
        let steps = ((self.c_min_hi - self.c_min_lo) / self.step + 1e-9).floor() as usize;
        let mut out = Vec::new();
        for i in 0..=steps {
            let c = round9(self.c_min_lo + i as f64 * self.step);
            let top = round9(c - self.gap);
            let mut j = 0;
            loop {
                let r = round9(self.r_liq_lo + j as f64 * self.step);
                if r > top {
                    break;
                }
                out.push((c, r));
                j += 1;
            }
        }
        validate_pairs(&out, self.r_liq_lo, self.gap)?;
        Ok(out)
    }
}

/// Every pair must satisfy `r_liq_lo ≤ r_liq ≤ c_min − gap` and form valid pool parameters.
pub fn validate_pairs(pairs: &[(f64, f64)], r_liq_lo: f64, gap: f64) -> Result<(), SweepError> {
    if pairs.is_empty() {
        return Err(SweepError::InvalidGrid("no (c_min, r_liq) pairs".into()));
    }
    for &(c, r) in pairs {
        if r < round9(r_liq_lo) || r > round9(c - gap) {
            return Err(SweepError::InvalidGrid(format!(
                "pair ({c}, {r}) violates {r_liq_lo} <= r_liq <= c_min - {gap}"
            )));
        }
        LpParams::new(c, r, 0.5, 0.0).map_err(|e| SweepError::InvalidGrid(format!("pair ({c}, {r}): {e}")))?;
    }
    Ok(())
}

/// Estimates for one (scenario, c_min, r_liq) combination.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub scenario: String,
    pub c_min: f64,
    pub r_liq: f64,
    pub borrowers: Vec<AgentId>,
    /// `[borrower][round]`.
    pub estimates: Vec<Vec<CiEstimate>>,
    pub n_sims: u64,
}

impl SweepCell {
    pub fn mean_path(&self, borrower: usize) -> Vec<f64> {
        self.estimates[borrower].iter().map(|e| e.mean).collect()
    }
}

/// Seed of simulation `sim` in cell `cell`; distinct for every `sim < 2³²`.
pub fn sim_seed(base: u64, cell: usize, sim: u64) -> u64 {
    base.wrapping_add(((cell as u64) << 32) | sim)
}

/// Runs every (scenario, pair) cell. Cells are numbered scenario-major and get
/// disjoint seed ranges; each cell shares one simulation stream across all of
/// its observables.
pub fn sweep(
    scenarios: &[(ScenarioSpec, SimSetup)],
    pairs: &[(f64, f64)],
    stats: &StatsParams,
    base_seed: u64,
) -> Result<Vec<SweepCell>, SweepError> {
    stats.validate().map_err(SweepError::InvalidStats)?;
    if pairs.is_empty() {
        return Err(SweepError::InvalidGrid("no (c_min, r_liq) pairs".into()));
    }
    if stats.n_max >= 1 << 32 {
        return Err(SweepError::InvalidStats("n_max must stay below 2^32".into()));
    }
    let jobs: Vec<(usize, &ScenarioSpec, &SimSetup, f64, f64)> = scenarios
        .iter()
        .flat_map(|(spec, setup)| pairs.iter().map(move |&(c, r)| (spec, setup, c, r)))
        .enumerate()
        .map(|(i, (spec, setup, c, r))| (i, spec, setup, c, r))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, spec, setup, c_min, r_liq)| {
            let params = LpParams {
                c_min,
                r_liq,
                ..*setup.init.params()
            };
            let init = setup
                .init
                .with_params(params)
                .map_err(|e| SweepError::InvalidGrid(format!("({c_min}, {r_liq}): {e}")))?;
            let setup = SimSetup { init, ..setup.clone() };
            let rounds = spec.horizon + 1;
            let dim = setup.borrowers.len() * rounds;
            let flat = estimate_means(
                |sim| {
                    run_simulation(spec, &setup, sim_seed(base_seed, cell, sim))
                        .map(|m| m.into_iter().flatten().collect())
                        .map_err(|source| SweepError::Simulation {
                            scenario: spec.name.clone(),
                            c_min,
                            r_liq,
                            sim,
                            source: Box::new(source),
                        })
                },
                dim,
                stats,
            )?;
            let n_sims = flat.first().map_or(0, |e| e.n);
            Ok(SweepCell {
                scenario: spec.slug(),
                c_min,
                r_liq,
                borrowers: setup.borrowers.clone(),
                estimates: flat.chunks(rounds).map(<[CiEstimate]>::to_vec).collect(),
                n_sims,
            })
        })
        .collect()
}

/// Decimal rendering with nine significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0.00000000".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can roll over into an extra digit (9.999999999 -> 10.00000000)
    let rolled = s.parse::<f64>().is_ok_and(|v| v.abs() >= 10f64.powi(mag + 1));
    if rolled && decimals > 0 {
        let d = decimals - 1;
        format!("{x:.d$}")
    } else {
        s
    }
}

pub const RESULTS_HEADER: &str = "scenario,c_min,r_liq,borrower,round,mean_c,ci_half_width,n_sims,converged";

pub fn write_results<W: Write>(cells: &[SweepCell], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for cell in cells {
        for (b, rows) in cell.borrowers.iter().zip(&cell.estimates) {
            for (round, e) in rows.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    cell.scenario,
                    sig9(cell.c_min),
                    sig9(cell.r_liq),
                    b,
                    round,
                    sig9(e.mean),
                    sig9(e.half_width),
                    cell.n_sims,
                    e.converged
                )?;
            }
        }
    }
    out.flush()
}
