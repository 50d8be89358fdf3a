//! Experiment plumbing: seeded realizations, the three reconstruction
//! methods behind one interface, and subframe-budget sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use crate::dnn::{dnn_map, prepare_pairs, relay_training_set, train_online, LossTrace, PointwiseModel, TrainConfig};
use crate::error::{Error, Result};
use crate::estimate::GroundEstimate;
use crate::field::{generate_field, GroundField};
use crate::linear::reconstruct_linear;
use crate::metrics::{median, score, Score};
use crate::phy::{receive_pair, ChannelRealization, ReceivedPair};
use crate::rng::{substream, Stream};
use crate::scenario::{place_devices, DeviceSet, HapsGeometry, ScenarioConfig};
use crate::wsn::{orthogonal_collect, sblue_estimate, ObservationSet};

/// Sub-indices of the collection stream, one per consumer.
pub mod collection {
    pub const WSN: u64 = 0;
    pub const RELAY: u64 = 1;
    pub const DATASET_TARGET: u64 = 2;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Linear,
    Dnn,
    Sblue,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Linear, Method::Dnn, Method::Sblue];

    pub fn name(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::Dnn => "dnn",
            Method::Sblue => "sblue",
        }
    }

    /// Whether the method consumes subframes in reference/information pairs.
    pub fn uses_pairs(self) -> bool {
        matches!(self, Method::Linear | Method::Dnn)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::invalid("method", format!("unknown method '{s}' (linear, dnn, sblue)")))
    }
}

/// Checks that `budget` subframes make sense for `method`.
pub fn check_budget(method: Method, budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(Error::invalid("budgets", "a subframe budget must be positive"));
    }
    if method.uses_pairs() && budget % 2 != 0 {
        return Err(Error::invalid(
            "budgets",
            format!("{method} needs subframe pairs, budget {budget} is odd"),
        ));
    }
    Ok(())
}

/// Everything that is fixed for one seed: devices, field and ground truth.
/// Subframe pairs are drawn on demand and pair `p` is the same whichever
/// budget asks for it.
#[derive(Debug, Clone)]
pub struct Realization {
    pub cfg: ScenarioConfig,
    pub seed: u64,
    pub geom: HapsGeometry,
    pub devices: DeviceSet,
    pub field: GroundField,
    pub measurements: Vec<f64>,
    /// Field on the evaluation grid.
    pub truth: Array2<f64>,
}

impl Realization {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let geom = cfg.geometry();
        let devices = place_devices(cfg, &mut substream(seed, Stream::Placement, 0))?;
        let field = generate_field(cfg, &mut substream(seed, Stream::Field, 0))?;
        let measurements = field.sample(&devices.positions)?;
        let truth = field.on_eval_grid(&cfg.eval_grid());
        Ok(Self {
            cfg: cfg.clone(),
            seed,
            geom,
            devices,
            field,
            measurements,
            truth,
        })
    }

    /// Channel from the fading stream and noise from the noise stream, both at sub-index `index`.
    pub fn pair(&self, index: u64) -> Result<ReceivedPair> {
        let channel = ChannelRealization::draw(
            &self.devices,
            &self.geom,
            &self.cfg,
            &mut substream(self.seed, Stream::Fading, index),
        );
        receive_pair(
            &self.devices,
            &self.measurements,
            &channel,
            &self.geom,
            &self.cfg,
            &mut substream(self.seed, Stream::Noise, index),
        )
    }

    pub fn pairs(&self, count: usize) -> Result<Vec<ReceivedPair>> {
        (0..count as u64).map(|p| self.pair(p)).collect()
    }

    pub fn collect(&self, n_subframes: usize) -> Result<ObservationSet> {
        orthogonal_collect(
            &self.devices.positions,
            &self.measurements,
            n_subframes,
            &self.cfg,
            &mut substream(self.seed, Stream::Collection, collection::WSN),
        )
    }
}

/// Online-training knobs for the DNN method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnnSettings {
    /// Measurements relayed terrestrially for training.
    pub relayed: usize,
    pub train: TrainConfig,
}

impl Default for DnnSettings {
    fn default() -> Self {
        Self {
            relayed: 512,
            train: TrainConfig::default(),
        }
    }
}

/// Trains a reference-initialized model on `pairs` for realization `r`.
pub fn train_dnn(
    r: &Realization,
    pairs: &[ReceivedPair],
    settings: &DnnSettings,
) -> Result<(PointwiseModel, LossTrace)> {
    let prepared = prepare_pairs(pairs, &r.geom)?;
    let samples = relay_training_set(
        &r.devices.positions,
        &r.measurements,
        settings.relayed.min(r.devices.count()),
        &r.cfg,
        &mut substream(r.seed, Stream::Collection, collection::RELAY),
    )?;
    let mut model = PointwiseModel::reference(&r.geom, &r.cfg, r.seed)?;
    let train = TrainConfig {
        seed: r.seed,
        ..settings.train
    };
    let trace = train_online(&mut model, &prepared, &samples, &r.geom, &r.cfg, &train)?;
    Ok((model, trace))
}

/// Reconstructs `r` with `method` under a budget of `budget` subframes.
pub fn reconstruct(method: Method, r: &Realization, budget: usize, dnn: &DnnSettings) -> Result<GroundEstimate> {
    check_budget(method, budget)?;
    match method {
        Method::Linear => reconstruct_linear(&r.pairs(budget / 2)?, &r.geom, &r.cfg),
        Method::Dnn => {
            let pairs = r.pairs(budget / 2)?;
            let (model, _) = train_dnn(r, &pairs, dnn)?;
            dnn_map(&model, &prepare_pairs(&pairs, &r.geom)?, &r.geom, &r.cfg)
        }
        Method::Sblue => sblue_estimate(&r.collect(budget)?, r.field.kernel(), &r.cfg),
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub budget: usize,
    pub seed: u64,
    pub score: Score,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    pub dnn: DnnSettings,
    /// Record wall-clock time; otherwise `wall_ms` is 0 and output is byte-stable.
    pub timing: bool,
}

/// Seeds `base, base + 1, ...`.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}

/// Every method x budget x seed cell, ordered by method, then budget, then seed.
pub fn run_sweep(cfg: &ScenarioConfig, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    for &m in &opts.methods {
        for &b in &opts.budgets {
            check_budget(m, b)?;
        }
    }
    let realizations = opts
        .seeds
        .par_iter()
        .map(|&s| Realization::new(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(Method, usize, usize)> = opts
        .methods
        .iter()
        .flat_map(|&m| {
            opts.budgets
                .iter()
                .flat_map(move |&b| (0..opts.seeds.len()).map(move |k| (m, b, k)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(method, budget, k)| {
            let r = &realizations[k];
            let start = Instant::now();
            let est = reconstruct(method, r, budget, &opts.dnn)?;
            let wall_ms = if opts.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            Ok(SweepRow {
                method,
                budget,
                seed: r.seed,
                score: score(&est, &r.truth)?,
                wall_ms,
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "method,budget,seed,snr_db,nmse,valid_frac,wall_ms";

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6e},{:.6},{:.3}\n",
            r.method, r.budget, r.seed, r.score.snr_db, r.score.nmse, r.score.valid_fraction, r.wall_ms
        ));
    }
    out
}

/// All seeds of one method at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub method: Method,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub snr_db: Vec<f64>,
    pub nmse: Vec<f64>,
    pub wall_ms: Vec<f64>,
}

impl ExperimentResult {
    pub fn median_snr_db(&self) -> f64 {
        median(&self.snr_db)
    }
}

/// Groups sweep rows by method and budget, keeping first-seen order.
pub fn summarize(rows: &[SweepRow]) -> Vec<ExperimentResult> {
    let mut out: Vec<ExperimentResult> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|e| e.method == r.method && e.budget == r.budget) {
            Some(i) => i,
            None => {
                out.push(ExperimentResult {
                    method: r.method,
                    budget: r.budget,
                    seeds: Vec::new(),
                    snr_db: Vec::new(),
                    nmse: Vec::new(),
                    wall_ms: Vec::new(),
                });
                out.len() - 1
            }
        };
        let e = &mut out[idx];
        e.seeds.push(r.seed);
        e.snr_db.push(r.score.snr_db);
        e.nmse.push(r.score.nmse);
        e.wall_ms.push(r.wall_ms);
    }
    out
}
