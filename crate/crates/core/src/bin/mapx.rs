//! Command-line front end. Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use mapx::dataset::{export_dataset, DatasetOptions};
use mapx::dnn::{dnn_map, prepare_pairs, PointwiseModel, TrainConfig};
use mapx::harness::{
    check_budget, reconstruct, rows_to_csv, run_sweep, seed_range, summarize, train_dnn, DnnSettings, Method,
    Realization, SweepOptions,
};
use mapx::io::{export_comparison, export_heatmap, read_estimate, write_array2, write_complex, write_estimate};
use mapx::metrics::{score, Score};
use mapx::{Error, GroundEstimate, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mapx", version, about = "Massive non-orthogonal device-to-HAPS data imaging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (`key = value` lines); defaults to the desk scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Clone)]
struct DnnArgs {
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    /// Terrestrially relayed training measurements.
    #[arg(long, default_value_t = 512)]
    relayed: usize,
}

impl DnnArgs {
    fn settings(&self) -> DnnSettings {
        DnnSettings {
            relayed: self.relayed,
            train: TrainConfig {
                steps: self.steps,
                learning_rate: self.lr,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Writes the field, its evaluation-grid truth and the device list.
    GenField {
        #[command(flatten)]
        common: Common,
    },
    /// Writes received reference/information tensors for a number of pairs.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        pairs: usize,
    },
    /// Reconstructs the ground map with one method and scores it.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: String,
        /// Subframes spent (pairs of two for linear and dnn).
        #[arg(long, default_value_t = 8)]
        budget: usize,
        /// Pretrained model for `--method dnn`; trains online when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        dnn: DnnArgs,
    },
    /// Trains the pointwise model online and saves it with its loss curve.
    TrainDnn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[command(flatten)]
        dnn: DnnArgs,
    },
    /// Evaluates a saved pointwise model on the evaluation grid.
    EvalDnn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 8)]
        budget: usize,
    },
    /// Writes training examples for offline image reconstruction.
    ExportDataset {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        train: usize,
        #[arg(long, default_value_t = 40)]
        val: usize,
        #[arg(long, default_value_t = 4)]
        pairs: usize,
    },
    /// Scores an estimate tensor against a truth tensor.
    Score {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Sweeps methods x subframe budgets x seeds and writes `sweep.csv`.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "linear,sblue")]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        budgets: Vec<usize>,
        /// Number of seeds, counting up from the scenario seed.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// Fill the wall_ms column (makes the CSV run-dependent).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        dnn: DnnArgs,
    },
    /// Renders truth, S-BLUE, DNN and a fourth map side by side.
    Panels {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        /// Fourth panel from an estimate tensor; the linear map when absent.
        #[arg(long)]
        fourth: Option<PathBuf>,
        #[command(flatten)]
        dnn: DnnArgs,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::desk(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_score(label: &str, s: &Score) {
    println!(
        "{label}: snr_db={:.3} nmse={:.4e} valid_frac={:.4} p99_abs_err={:.4}",
        s.snr_db, s.nmse, s.valid_fraction, s.p99_abs_error
    );
}

fn write_truth(r: &Realization, out: &Path) -> Result<()> {
    let hash = r.cfg.scenario_hash();
    write_array2(out, "truth", &r.truth, &hash)?;
    export_heatmap(&out.join("truth.png"), &GroundEstimate::all_valid(r.truth.clone()), 4)
}

fn save_estimate(r: &Realization, out: &Path, name: &str, est: &GroundEstimate) -> Result<()> {
    write_estimate(out, name, est, &r.cfg.scenario_hash())?;
    export_heatmap(&out.join(format!("{name}.png")), est, 4)?;
    write_truth(r, out)?;
    print_score(name, &score(est, &r.truth)?);
    Ok(())
}

fn dnn_with_model(r: &Realization, model: &Path, budget: usize) -> Result<GroundEstimate> {
    check_budget(Method::Dnn, budget)?;
    let model = PointwiseModel::load(model)?;
    if model.filter_net.output_dim() != r.geom.virtual_kx {
        return Err(Error::InvalidInput(format!(
            "model window has {} taps, scenario needs {}",
            model.filter_net.output_dim(),
            r.geom.virtual_kx
        )));
    }
    let pairs = prepare_pairs(&r.pairs(budget / 2)?, &r.geom)?;
    dnn_map(&model, &pairs, &r.geom, &r.cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenField { common } => {
            let cfg = load_config(&common)?;
            let r = Realization::new(&cfg, cfg.seed)?;
            let out = &common.out_dir;
            let hash = cfg.scenario_hash();
            write_array2(out, "field", &r.field.grid, &hash)?;
            let devices = Array2::from_shape_fn((r.devices.count(), 3), |(i, c)| match c {
                0 => r.devices.positions[i][0],
                1 => r.devices.positions[i][1],
                _ => r.measurements[i],
            });
            write_array2(out, "devices", &devices, &hash)?;
            write_truth(&r, out)?;
            println!("{} devices, field {}x{}", r.devices.count(), r.field.side(), r.field.side());
        }
        Command::Simulate { common, pairs } => {
            let cfg = load_config(&common)?;
            let r = Realization::new(&cfg, cfg.seed)?;
            let hash = cfg.scenario_hash();
            for (p, pair) in r.pairs(pairs)?.iter().enumerate() {
                write_complex(&common.out_dir, &format!("pair{p}_reference"), &pair.reference, &hash)?;
                write_complex(&common.out_dir, &format!("pair{p}_information"), &pair.information, &hash)?;
            }
            write_truth(&r, &common.out_dir)?;
            println!("{pairs} pairs of [P, Q, M, N] tensors written");
        }
        Command::Reconstruct {
            common,
            method,
            budget,
            model,
            dnn,
        } => {
            let method: Method = method.parse()?;
            let cfg = load_config(&common)?;
            let r = Realization::new(&cfg, cfg.seed)?;
            let est = match (method, &model) {
                (Method::Dnn, Some(path)) => dnn_with_model(&r, path, budget)?,
                _ => reconstruct(method, &r, budget, &dnn.settings())?,
            };
            save_estimate(&r, &common.out_dir, &format!("estimate_{method}"), &est)?;
        }
        Command::TrainDnn { common, budget, dnn } => {
            check_budget(Method::Dnn, budget)?;
            let cfg = load_config(&common)?;
            let r = Realization::new(&cfg, cfg.seed)?;
            let pairs = r.pairs(budget / 2)?;
            let settings = dnn.settings();
            let (model, trace) = train_dnn(&r, &pairs, &settings)?;
            std::fs::create_dir_all(&common.out_dir)?;
            model.save(common.out_dir.join("model.mapx"))?;
            let mut csv = String::from("step,loss,heldout_loss\n");
            let mut held = trace.validation.iter().peekable();
            for (i, l) in trace.losses.iter().enumerate() {
                let step = i + 1;
                let h = match held.peek() {
                    Some(&&(s, v)) if s == step => {
                        held.next();
                        format!("{v:.6e}")
                    }
                    _ => String::new(),
                };
                csv.push_str(&format!("{step},{l:.6e},{h}\n"));
            }
            std::fs::write(common.out_dir.join("loss.csv"), csv)?;
            let est = dnn_map(&model, &prepare_pairs(&pairs, &r.geom)?, &r.geom, &r.cfg)?;
            println!("kept parameters after step {}", trace.best_step);
            save_estimate(&r, &common.out_dir, "estimate_dnn", &est)?;
        }
        Command::EvalDnn { common, model, budget } => {
            let cfg = load_config(&common)?;
            let r = Realization::new(&cfg, cfg.seed)?;
            let est = dnn_with_model(&r, &model, budget)?;
            save_estimate(&r, &common.out_dir, "estimate_dnn", &est)?;
        }
        Command::ExportDataset {
            common,
            train,
            val,
            pairs,
        } => {
            let cfg = load_config(&common)?;
            let opts = DatasetOptions {
                n_train: train,
                n_val: val,
                pairs,
                ..DatasetOptions::default()
            };
            let bundle = export_dataset(&cfg, &opts, &common.out_dir)?;
            println!(
                "{} examples in {}",
                bundle.manifest.examples.len(),
                bundle.root.display()
            );
        }
        Command::Score { estimate, truth } => {
            let (est_meta, est) = read_estimate(&estimate)?;
            let (truth_meta, truth) = mapx::io::read_array2(&truth)?;
            if !est_meta.scenario_hash.is_empty() && est_meta.scenario_hash != truth_meta.scenario_hash {
                return Err(Error::Format {
                    path: estimate.display().to_string(),
                    msg: format!(
                        "scenario hash {} does not match truth {}",
                        est_meta.scenario_hash, truth_meta.scenario_hash
                    ),
                });
            }
            print_score(&est_meta.name, &score(&est, &truth)?);
        }
        Command::Sweep {
            common,
            methods,
            budgets,
            seeds,
            timing,
            dnn,
        } => {
            let cfg = load_config(&common)?;
            let opts = SweepOptions {
                methods: methods.iter().map(|m| m.parse()).collect::<Result<_>>()?,
                budgets,
                seeds: seed_range(cfg.seed, seeds),
                dnn: dnn.settings(),
                timing,
            };
            let rows = run_sweep(&cfg, &opts)?;
            std::fs::create_dir_all(&common.out_dir)?;
            std::fs::write(common.out_dir.join("sweep.csv"), rows_to_csv(&rows))?;
            for e in summarize(&rows) {
                println!("{:>6} budget {:>2}: median snr {:.2} dB over {} seeds", e.method, e.budget, e.median_snr_db(), e.seeds.len());
            }
        }
        Command::Panels {
            common,
            budget,
            fourth,
            dnn,
        } => {
            let cfg = load_config(&common)?;
            let r = Realization::new(&cfg, cfg.seed)?;
            let truth = GroundEstimate::all_valid(r.truth.clone());
            let wsn = reconstruct(Method::Sblue, &r, budget, &dnn.settings())?;
            let dnn_est = reconstruct(Method::Dnn, &r, budget, &dnn.settings())?;
            let last = match fourth {
                Some(p) => read_estimate(&p)?.1,
                None => reconstruct(Method::Linear, &r, budget, &dnn.settings())?,
            };
            let panels = [&truth, &wsn, &dnn_est, &last];
            export_comparison(&common.out_dir.join("panels.png"), &panels, 4)?;
            for (name, est) in ["truth", "sblue", "dnn", "fourth"].iter().zip(panels) {
                print_score(name, &score(est, &r.truth)?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
