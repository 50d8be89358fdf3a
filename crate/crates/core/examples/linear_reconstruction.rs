//! Linear MAP-X reconstruction from 1, 2 and 4 subframe pairs of one
//! realization, with a heatmap per pair count.

use std::path::{Path, PathBuf};

use mapx::harness::Realization;
use mapx::io::export_heatmap;
use mapx::linear::reconstruct_linear;
use mapx::metrics::score;
use mapx::ScenarioConfig;

pub fn run(out: &Path) -> mapx::Result<Vec<(usize, f64)>> {
    let cfg = ScenarioConfig::desk();
    let r = Realization::new(&cfg, 11)?;
    let pairs = r.pairs(4)?;
    std::fs::create_dir_all(out)?;
    let mut results = Vec::new();
    for n in [1, 2, 4] {
        let est = reconstruct_linear(&pairs[..n], &r.geom, &cfg)?;
        export_heatmap(&out.join(format!("linear_{n}pair.png")), &est, 8)?;
        results.push((n, score(&est, &r.truth)?.snr_db));
    }
    Ok(results)
}

fn main() -> mapx::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/linear".into());
    for (n, snr) in run(&out)? {
        println!("{n} pair(s): {snr:6.2} dB");
    }
    Ok(())
}
