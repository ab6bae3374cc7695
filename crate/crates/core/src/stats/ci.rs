use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sequential sampling controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsParams {
    pub alpha: f64,
    /// Maximum full width of the confidence interval.
    pub delta: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub block: u64,
}

impl Default for StatsParams {
    fn default() -> Self {
        StatsParams {
            alpha: 0.05,
            delta: 0.1,
            n_min: 30,
            n_max: 5010,
            block: 30,
        }
    }
}

impl StatsParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("alpha {} must lie in (0, 1)", self.alpha));
        }
        if !(self.delta > 0.0) {
            return Err(format!("delta {} must be positive", self.delta));
        }
        if self.n_min < 2 || self.n_min > self.n_max {
            return Err(format!(
                "need 2 <= n_min <= n_max, got n_min {} n_max {}",
                self.n_min, self.n_max
            ));
        }
        if self.block == 0 {
            return Err("block must be positive".into());
        }
        Ok(())
    }

    /// Two-sided Student-t quantile for `n` samples.
    pub fn t_quantile(&self, n: u64) -> f64 {
        StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("n >= 2 gives a valid t distribution")
            .inverse_cdf(1.0 - self.alpha / 2.0)
    }
}

/// Mean with its confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CiEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: u64,
    pub alpha: f64,
    pub converged: bool,
}

/// Running mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self, params: &StatsParams, t: f64) -> CiEstimate {
        let half_width = t * (self.sample_variance() / self.n as f64).sqrt();
        CiEstimate {
            mean: self.mean,
            half_width,
            n: self.n,
            alpha: params.alpha,
            converged: 2.0 * half_width <= params.delta,
        }
    }
}

/// Estimates several means from one stream of simulations.
///
/// `sampler(i)` returns the `dim` observables of simulation `i`. Samples are
/// drawn `n_min` first and then `block` at a time, evaluated in parallel but
/// accumulated in index order, until every interval is narrow enough or
/// `n_max` simulations have run.
pub fn estimate_means<F, E>(sampler: F, dim: usize, params: &StatsParams) -> Result<Vec<CiEstimate>, E>
where
    F: Fn(u64) -> Result<Vec<f64>, E> + Sync,
    E: Send,
{
    let mut acc = vec![Welford::default(); dim];
    let mut n = 0u64;
    let mut batch = params.n_min;
    loop {
        let rows: Vec<Vec<f64>> = (n..n + batch).into_par_iter().map(&sampler).collect::<Result<_, E>>()?;
        for row in &rows {
            debug_assert_eq!(row.len(), dim);
            for (w, x) in acc.iter_mut().zip(row) {
                w.push(*x);
            }
        }
        n += batch;
        let t = params.t_quantile(n);
        let out: Vec<CiEstimate> = acc.iter().map(|w| w.estimate(params, t)).collect();
        if n >= params.n_max || out.iter().all(|e| e.converged) {
            return Ok(out);
        }
        batch = params.block.min(params.n_max - n);
    }
}

/// Single-observable form of [`estimate_means`].
pub fn estimate_mean<F>(sampler: F, params: &StatsParams) -> CiEstimate
where
    F: Fn(u64) -> f64 + Sync,
{
    let out: Result<Vec<CiEstimate>, std::convert::Infallible> =
        estimate_means(|i| Ok(vec![sampler(i)]), 1, params);
    match out {
        Ok(v) => v[0],
        Err(e) => match e {},
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;

    fn normal(seed: u64) -> f64 {
        ChaCha8Rng::seed_from_u64(seed).sample(StandardNormal)
    }

    #[test]
    fn constant_sampler_converges_immediately() {
        let e = estimate_mean(|_| 1.0, &StatsParams::default());
        assert_eq!((e.mean, e.half_width, e.n, e.converged), (1.0, 0.0, 30, true));
    }

    #[test]
    fn standard_normal_stops_near_closed_form() {
        let params = StatsParams::default();
        let e = estimate_mean(normal, &params);
        let expected = (2.0 * 1.96 / 0.1f64).powi(2);
        assert!(e.converged);
        assert!((e.n as f64 - expected).abs() <= 2.0 * params.block as f64 + 0.05 * expected, "n = {}", e.n);
        assert!(2.0 * e.half_width <= params.delta);
    }

    #[test]
    fn budget_caps_sampling() {
        let params = StatsParams {
            delta: 1e-6,
            n_max: 100,
            ..StatsParams::default()
        };
        let e = estimate_mean(normal, &params);
        assert_eq!(e.n, 100);
        assert!(!e.converged);
    }

    #[test]
    fn t_quantile_matches_tables() {
        let p = StatsParams::default();
        assert_relative_eq!(p.t_quantile(2), 12.7062047, max_relative = 1e-6);
        assert_relative_eq!(p.t_quantile(31), 2.04227246, max_relative = 1e-6);
        assert_relative_eq!(p.t_quantile(100_000), 1.95998, max_relative = 1e-4);
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        let mut w = Welford::default();
        xs.iter().for_each(|x| w.push(*x));
        assert_eq!(w.mean(), 5.0);
        assert_relative_eq!(w.sample_variance(), 32.0 / 7.0, max_relative = 1e-14);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Vec<CiEstimate>, String> =
            estimate_means(|i| if i == 5 { Err("boom".into()) } else { Ok(vec![0.0]) }, 1, &StatsParams::default());
        assert_eq!(r.unwrap_err(), "boom");
    }

    #[test]
    fn invalid_params() {
        let bad = [
            StatsParams { alpha: 0.0, ..Default::default() },
            StatsParams { delta: 0.0, ..Default::default() },
            StatsParams { n_min: 1, ..Default::default() },
            StatsParams { n_min: 50, n_max: 40, ..Default::default() },
            StatsParams { block: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }
}
