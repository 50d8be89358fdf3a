//! Exports a small training set for an external image model, then feeds one
//! stored estimate back through the scorer the way an external model's
//! output would be.

use std::path::{Path, PathBuf};

use mapx::dataset::{export_dataset, DatasetOptions};
use mapx::io::{read_array2, read_estimate};
use mapx::metrics::score;
use mapx::ScenarioConfig;

pub struct ExportReport {
    pub examples: usize,
    pub first_linear_db: f64,
}

pub fn run(out: &Path) -> mapx::Result<ExportReport> {
    let cfg = ScenarioConfig::desk();
    let opts = DatasetOptions {
        n_train: 4,
        n_val: 2,
        ..DatasetOptions::default()
    };
    let bundle = export_dataset(&cfg, &opts, out)?;
    let first = bundle.example_dir(&bundle.manifest.examples[0].id);
    let (_, est) = read_estimate(&first.join("linear.bin"))?;
    let (_, truth) = read_array2(&first.join("truth.bin"))?;
    Ok(ExportReport {
        examples: bundle.manifest.examples.len(),
        first_linear_db: score(&est, &truth)?.snr_db,
    })
}

fn main() -> mapx::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/dataset".into());
    let r = run(&out)?;
    println!("{} examples under {}", r.examples, out.display());
    println!("first example, stored linear map: {:.2} dB", r.first_linear_db);
    Ok(())
}
