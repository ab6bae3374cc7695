//! Writes the synthetic trimester CSVs in `fixtures/`.
//!
//! Log returns are standard normals rescaled to an exact sample mean `mu` and
//! sample standard deviation `sigma * sqrt(91/365)`, so the estimator returns
//! the built-in parameters up to rounding of the printed closes.
//!
//! Usage: cargo run -p lendpool-core --example make_fixtures [-- <dir>]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use chrono::{Days, NaiveDate};
use lendpool::price::TRIMESTER;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Asset {
    file: &'static str,
    start: (i32, u32, u32),
    first_close: f64,
    mu: f64,
    sigma: f64,
    seed: u64,
}

const ASSETS: [Asset; 3] = [
    Asset { file: "eth.csv", start: (2018, 1, 13), first_close: 1270.0, mu: -0.012, sigma: 0.12, seed: 1 },
    Asset { file: "usdc.csv", start: (2020, 1, 1), first_close: 1.0, mu: -7.84e-5, sigma: 0.005, seed: 2 },
    Asset { file: "wbtc.csv", start: (2020, 11, 24), first_close: 19100.0, mu: 0.012, sigma: 0.094, seed: 3 },
];

const DAYS: usize = 91;

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("fixtures"));
    std::fs::create_dir_all(&dir)?;
    for a in &ASSETS {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let z: Vec<f64> = (0..DAYS).map(|_| rng.sample(StandardNormal)).collect();
        let m = z.iter().sum::<f64>() / DAYS as f64;
        let s = (z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (DAYS - 1) as f64).sqrt();
        let sd = a.sigma * TRIMESTER.sqrt();

        let (y, mo, d) = a.start;
        let start = NaiveDate::from_ymd_opt(y, mo, d).expect("valid date");
        let mut out = BufWriter::new(File::create(dir.join(a.file))?);
        writeln!(out, "date,close")?;
        let mut log_p = a.first_close.ln();
        writeln!(out, "{start},{:.10}", log_p.exp())?;
        for (i, zi) in z.iter().enumerate() {
            log_p += a.mu + sd * (zi - m) / s;
            let date = start.checked_add_days(Days::new(i as u64 + 1)).expect("date in range");
            writeln!(out, "{date},{:.10}", log_p.exp())?;
        }
        out.flush()?;
        println!("wrote {}", dir.join(a.file).display());
    }
    Ok(())
}
