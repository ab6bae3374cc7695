//! Monte-Carlo simulation of pools under price paths, sequential confidence
//! intervals, and (c_min, r_liq) sweeps.

mod ci;
mod sim;
mod sweep;

pub use ci::{estimate_mean, estimate_means, CiEstimate, StatsParams, Welford};
pub use sim::{run_simulation, simulate_rounds, SimSetup, SimulationFault};
pub use sweep::{
    sig9, sim_seed, sweep, validate_pairs, write_results, GridRule, SweepCell, SweepError, RESULTS_HEADER,
};
