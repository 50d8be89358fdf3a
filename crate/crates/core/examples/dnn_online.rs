//! Online training of the pointwise DNN estimator on relayed measurements,
//! compared against the linear map on the same pairs.
//!
//! The step count is the first argument (default 2000); the output directory
//! is the second.

use std::path::{Path, PathBuf};

use mapx::dnn::{dnn_map, prepare_pairs, TrainConfig};
use mapx::harness::{train_dnn, DnnSettings, Realization};
use mapx::linear::reconstruct_linear;
use mapx::metrics::score;
use mapx::ScenarioConfig;

pub struct DnnReport {
    pub linear_db: f64,
    pub dnn_db: f64,
    pub first_loss: f64,
    pub last_loss: f64,
    pub best_step: usize,
}

pub fn run(out: &Path, steps: usize) -> mapx::Result<DnnReport> {
    let cfg = ScenarioConfig::desk();
    let r = Realization::new(&cfg, 5)?;
    let pairs = r.pairs(4)?;
    let settings = DnnSettings {
        train: TrainConfig {
            steps,
            ..TrainConfig::default()
        },
        ..DnnSettings::default()
    };
    let (model, trace) = train_dnn(&r, &pairs, &settings)?;
    std::fs::create_dir_all(out)?;
    model.save(out.join("model.mapx"))?;

    let linear = reconstruct_linear(&pairs, &r.geom, &cfg)?;
    let dnn = dnn_map(&model, &prepare_pairs(&pairs, &r.geom)?, &r.geom, &cfg)?;
    let (first_loss, last_loss) = trace.endpoints(10.min(steps.max(1)));
    Ok(DnnReport {
        linear_db: score(&linear, &r.truth)?.snr_db,
        dnn_db: score(&dnn, &r.truth)?.snr_db,
        first_loss,
        last_loss,
        best_step: trace.best_step,
    })
}

fn main() -> mapx::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "out/dnn".into());
    let r = run(&out, steps)?;
    println!("loss {:.4} -> {:.4}, checkpoint from step {}", r.first_loss, r.last_loss, r.best_step);
    println!("linear {:6.2} dB, dnn {:6.2} dB", r.linear_db, r.dnn_db);
    Ok(())
}
