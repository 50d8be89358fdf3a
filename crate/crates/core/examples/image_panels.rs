//! Side-by-side panels of the truth, S-BLUE and linear MAP-X maps.

use std::path::{Path, PathBuf};

use mapx::harness::Realization;
use mapx::io::export_comparison;
use mapx::linear::reconstruct_linear;
use mapx::wsn::sblue_estimate;
use mapx::{GroundEstimate, ScenarioConfig};

pub fn run(out: &Path) -> mapx::Result<PathBuf> {
    let cfg = ScenarioConfig::desk();
    let r = Realization::new(&cfg, 21)?;
    let truth = GroundEstimate::all_valid(r.truth.clone());
    let sblue = sblue_estimate(&r.collect(8)?, r.field.kernel(), &cfg)?;
    let linear = reconstruct_linear(&r.pairs(4)?, &r.geom, &cfg)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("panels.png");
    export_comparison(&path, &[&truth, &sblue, &linear], 4)?;
    Ok(path)
}

fn main() -> mapx::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/panels".into());
    println!("panels -> {}", run(&out)?.display());
    Ok(())
}
