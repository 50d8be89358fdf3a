//! Training data for offline image-to-image reconstruction models.
//!
//! Each example directory holds `input` (`[pairs, K, K]` clipped AoA-domain
//! ratio maps, centred so index `K / 2` is nadir), `target` (`[G, G]` S-BLUE
//! map from a dense noiseless observation set), `truth` (`[G, G]` field) and
//! `linear` (`[G, G]` linear estimate, `NaN` where invalid). `manifest.json`
//! at the top lists shapes, seeds and the train/validation split.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{collection, Realization};
use crate::io::{write_array2, write_arrayd, write_estimate};
use crate::linear::{divided_map, reconstruct_linear};
use crate::rng::{substream, Stream};
use crate::scenario::ScenarioConfig;
use crate::wsn::{orthogonal_collect, sblue_estimate};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetOptions {
    pub n_train: usize,
    pub n_val: usize,
    /// Subframe pairs per example, one input channel each.
    pub pairs: usize,
    /// Share of devices observed noiselessly for the target map.
    pub target_fraction: f64,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            n_train: 200,
            n_val: 40,
            pairs: 4,
            target_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleEntry {
    pub id: String,
    pub split: Split,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub scenario_hash: String,
    pub config: String,
    pub input_shape: Vec<usize>,
    pub target_shape: Vec<usize>,
    pub tensors: Vec<String>,
    pub encode_min: f64,
    pub encode_max: f64,
    pub examples: Vec<ExampleEntry>,
}

/// The written dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl DatasetBundle {
    pub fn example_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join("manifest.json");
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&path)?).map_err(|e| Error::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }
}

/// Writes the four tensors of one example into `dir`.
fn write_example(cfg: &ScenarioConfig, seed: u64, opts: &DatasetOptions, dir: &Path) -> Result<()> {
    let hash = cfg.scenario_hash();
    let r = Realization::new(cfg, seed)?;
    let pairs = r.pairs(opts.pairs)?;
    let k = (r.geom.virtual_kx, r.geom.virtual_ky);
    let mut input = Array3::<f64>::zeros((opts.pairs, k.0, k.1));
    for (c, pair) in pairs.iter().enumerate() {
        input
            .index_axis_mut(ndarray::Axis(0), c)
            .assign(&divided_map(pair, &r.geom, cfg)?.values);
    }
    let target_cfg = ScenarioConfig {
        obs_snr_db: f64::INFINITY,
        ..cfg.clone()
    };
    let observed = ((opts.target_fraction * r.devices.count() as f64).round() as usize).max(1);
    let per_subframe = cfg.symbols_m * cfg.subcarriers_n;
    let dense = orthogonal_collect(
        &r.devices.positions,
        &r.measurements,
        observed.div_ceil(per_subframe),
        &target_cfg,
        &mut substream(seed, Stream::Collection, collection::DATASET_TARGET),
    )?
    .prefix(observed);
    let target = sblue_estimate(&dense, r.field.kernel(), cfg)?;
    let linear = reconstruct_linear(&pairs, &r.geom, cfg)?;

    write_arrayd(dir, "input", &input.into_dyn(), &hash)?;
    write_array2(dir, "target", &target.values, &hash)?;
    write_array2(dir, "truth", &r.truth, &hash)?;
    write_estimate(dir, "linear", &linear, &hash)?;
    Ok(())
}

/// Exports `n_train + n_val` examples under `root`. Example seeds come from
/// the dataset stream of `cfg.seed`, so a re-export is byte-identical.
pub fn export_dataset(cfg: &ScenarioConfig, opts: &DatasetOptions, root: &Path) -> Result<DatasetBundle> {
    cfg.validate()?;
    let total = opts.n_train + opts.n_val;
    if total == 0 || opts.pairs == 0 {
        return Err(Error::InvalidInput("dataset needs at least one example and one pair".into()));
    }
    if !(opts.target_fraction > 0.0 && opts.target_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("target fraction {} outside (0, 1]", opts.target_fraction)));
    }
    fs::create_dir_all(root)?;
    let mut rng = substream(cfg.seed, Stream::Dataset, 0);
    let seeds: Vec<u64> = (0..total).map(|_| rng.random()).collect();

    let mut examples = Vec::with_capacity(total);
    for (i, &seed) in seeds.iter().enumerate() {
        let id = format!("ex_{i:05}");
        write_example(cfg, seed, opts, &root.join(&id))?;
        examples.push(ExampleEntry {
            id,
            split: if i < opts.n_train { Split::Train } else { Split::Val },
            seed,
        });
    }
    let geom = cfg.geometry();
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        scenario_hash: cfg.scenario_hash(),
        config: cfg.to_config_string(),
        input_shape: vec![opts.pairs, geom.virtual_kx, geom.virtual_ky],
        target_shape: vec![cfg.eval_grid_side, cfg.eval_grid_side],
        tensors: ["input", "target", "truth", "linear"].map(String::from).to_vec(),
        encode_min: cfg.encode_min,
        encode_max: cfg.encode_max,
        examples,
    };
    fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(DatasetBundle {
        root: root.to_path_buf(),
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{read_array2, read_tensor};

    fn small() -> DatasetOptions {
        DatasetOptions {
            n_train: 8,
            n_val: 2,
            ..DatasetOptions::default()
        }
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn bookkeeping_targets_and_determinism() {
        let cfg = ScenarioConfig::desk();
        let dir = tempfile::tempdir().unwrap();
        let bundle = export_dataset(&cfg, &small(), dir.path()).unwrap();
        let m = &bundle.manifest;
        assert_eq!(m.examples.len(), 10);
        assert_eq!(m.examples.iter().filter(|e| e.split == Split::Val).count(), 2);
        assert_eq!(m.input_shape, vec![4, 48, 48]);
        assert_eq!(m.target_shape, vec![48, 48]);
        assert_eq!(DatasetBundle::load(dir.path()).unwrap(), bundle);

        for e in &m.examples {
            let ex = bundle.example_dir(&e.id);
            let (meta, input) = read_tensor(&ex.join("input.bin")).unwrap();
            assert_eq!(meta.shape, m.input_shape);
            assert_eq!(meta.scenario_hash, m.scenario_hash);
            assert!(input.iter().all(|x| (0.2..=1.8).contains(x)));
            let (_, target) = read_array2(&ex.join("target.bin")).unwrap();
            let (_, truth) = read_array2(&ex.join("truth.bin")).unwrap();
            let rho = correlation(target.as_slice().unwrap(), truth.as_slice().unwrap());
            assert!(rho > 0.9, "{}: correlation {rho}", e.id);
        }

        let again = tempfile::tempdir().unwrap();
        export_dataset(&cfg, &small(), again.path()).unwrap();
        for e in &m.examples {
            for t in ["input.bin", "target.bin", "linear.bin", "truth.json"] {
                let a = std::fs::read(dir.path().join(&e.id).join(t)).unwrap();
                let b = std::fs::read(again.path().join(&e.id).join(t)).unwrap();
                assert_eq!(a, b, "{}/{t}", e.id);
            }
        }
    }

    #[test]
    fn empty_split_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let opts = DatasetOptions {
            n_train: 0,
            n_val: 0,
            ..DatasetOptions::default()
        };
        assert!(export_dataset(&ScenarioConfig::desk(), &opts, dir.path()).is_err());
    }
}
