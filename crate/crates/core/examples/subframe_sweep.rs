//! Sweeps linear MAP-X and S-BLUE over subframe budgets and seeds, writing
//! the per-run CSV and printing the medians.

use std::path::{Path, PathBuf};

use mapx::harness::{rows_to_csv, run_sweep, seed_range, summarize, ExperimentResult, Method, SweepOptions};
use mapx::ScenarioConfig;

pub fn run(out: &Path, seeds: usize) -> mapx::Result<Vec<ExperimentResult>> {
    let cfg = ScenarioConfig::desk();
    let opts = SweepOptions {
        methods: vec![Method::Linear, Method::Sblue],
        budgets: vec![2, 4, 8],
        seeds: seed_range(100, seeds),
        dnn: Default::default(),
        timing: false,
    };
    let rows = run_sweep(&cfg, &opts)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("sweep.csv"), rows_to_csv(&rows))?;
    Ok(summarize(&rows))
}

fn main() -> mapx::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "out/sweep".into());
    for e in run(&out, seeds)? {
        println!("{:>6} budget {}: median {:6.2} dB", e.method, e.budget, e.median_snr_db());
    }
    Ok(())
}
