//! Draws a desk-scale ground field, prints its moments and saves a heatmap.
//!
//! ```text
//! cargo run --release --example field_generation -- out/field
//! ```

use std::path::{Path, PathBuf};

use mapx::field::generate_field;
use mapx::io::export_heatmap;
use mapx::rng::{substream, Stream};
use mapx::{GroundEstimate, ScenarioConfig};

pub struct FieldStats {
    pub mean: f64,
    pub variance: f64,
    pub heatmap: PathBuf,
}

pub fn run(out: &Path) -> mapx::Result<FieldStats> {
    let cfg = ScenarioConfig::desk();
    let field = generate_field(&cfg, &mut substream(cfg.seed, Stream::Field, 0))?;
    let n = field.grid.len() as f64;
    let mean = field.grid.sum() / n;
    let variance = field.grid.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;

    let truth = field.on_eval_grid(&cfg.eval_grid());
    std::fs::create_dir_all(out)?;
    let heatmap = out.join("field.png");
    export_heatmap(&heatmap, &GroundEstimate::all_valid(truth), 8)?;
    Ok(FieldStats { mean, variance, heatmap })
}

fn main() -> mapx::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/field".into());
    let s = run(&out)?;
    println!("grid mean {:+.4}, variance {:.4}", s.mean, s.variance);
    println!("heatmap -> {}", s.heatmap.display());
    Ok(())
}
