//! Orthogonal WSN collection followed by S-BLUE interpolation, for growing
//! subframe budgets.

use std::path::{Path, PathBuf};

use mapx::harness::Realization;
use mapx::io::export_heatmap;
use mapx::metrics::score;
use mapx::wsn::sblue_estimate;
use mapx::ScenarioConfig;

/// `(subframes, observations, snr_db)` per budget.
pub fn run(out: &Path) -> mapx::Result<Vec<(usize, usize, f64)>> {
    let cfg = ScenarioConfig::desk();
    let r = Realization::new(&cfg, 11)?;
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for budget in [2, 4, 8] {
        let obs = r.collect(budget)?;
        let est = sblue_estimate(&obs, r.field.kernel(), &cfg)?;
        export_heatmap(&out.join(format!("sblue_{budget}sf.png")), &est, 8)?;
        rows.push((budget, obs.len(), score(&est, &r.truth)?.snr_db));
    }
    Ok(rows)
}

fn main() -> mapx::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/wsn".into());
    for (budget, n, snr) in run(&out)? {
        println!("{budget} subframes, {n:4} observations: {snr:6.2} dB");
    }
    Ok(())
}
