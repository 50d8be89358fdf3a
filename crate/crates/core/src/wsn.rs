//! Conventional sensor-network baseline: one device per resource element,
//! then the best linear unbiased spatial estimator under the true field
//! statistics.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::GroundEstimate;
use crate::field::CorrelationKernel;
use crate::scenario::ScenarioConfig;

/// Diagonal loading added to the Gram matrix before factorization.
pub const GRAM_JITTER: f64 = 1e-8;

/// Noisy measurements collected from distinct devices.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub positions: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    /// Index of each observed device in the full device list.
    pub device_indices: Vec<usize>,
    pub noise_variance: f64,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `count` observations.
    pub fn prefix(&self, count: usize) -> ObservationSet {
        let n = count.min(self.len());
        ObservationSet {
            positions: self.positions[..n].to_vec(),
            values: self.values[..n].to_vec(),
            device_indices: self.device_indices[..n].to_vec(),
            noise_variance: self.noise_variance,
        }
    }
}

/// Resource elements available to orthogonal collection over `n_subframes`.
pub fn resource_count(n_subframes: usize, cfg: &ScenarioConfig) -> usize {
    n_subframes * cfg.symbols_m * cfg.subcarriers_n
}

/// Collects one measurement per resource element from a uniformly random set
/// of distinct devices, each perturbed by the observation-link noise.
///
/// The device order is a full shuffle and noise is drawn in that order, so
/// smaller budgets under the same generator observe a prefix of larger ones.
pub fn orthogonal_collect<R: Rng + ?Sized>(
    positions: &[[f64; 2]],
    measurements: &[f64],
    n_subframes: usize,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<ObservationSet> {
    if positions.len() != measurements.len() {
        return Err(Error::InvalidInput("positions and measurements differ in length".into()));
    }
    let count = resource_count(n_subframes, cfg);
    if count == 0 {
        return Err(Error::InvalidInput("collection needs at least one subframe".into()));
    }
    if positions.len() < count {
        return Err(Error::InvalidInput(format!(
            "{count} resource elements but only {} devices",
            positions.len()
        )));
    }
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.shuffle(rng);
    order.truncate(count);
    let noise_variance = cfg.obs_noise_variance();
    let sd = noise_variance.sqrt();
    let values = order
        .iter()
        .map(|&i| {
            let z: f64 = rng.sample(StandardNormal);
            measurements[i] + sd * z
        })
        .collect();
    Ok(ObservationSet {
        positions: order.iter().map(|&i| positions[i]).collect(),
        values,
        device_indices: order,
        noise_variance,
    })
}

/// Fitted estimator `s(x) = c(x)^T (C + sigma^2 I)^-1 y` with zero prior mean.
#[derive(Debug, Clone)]
pub struct SBlue {
    positions: Vec<[f64; 2]>,
    weights: Vec<f64>,
    kernel: CorrelationKernel,
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

impl SBlue {
    pub fn fit(obs: &ObservationSet, kernel: CorrelationKernel) -> Result<Self> {
        let n = obs.len();
        if n == 0 {
            return Err(Error::InvalidInput("S-BLUE needs at least one observation".into()));
        }
        let load = obs.noise_variance + GRAM_JITTER;
        let gram = DMatrix::from_fn(n, n, |i, j| {
            kernel.rho_sq(sq_dist(obs.positions[i], obs.positions[j])) + if i == j { load } else { 0.0 }
        });
        let chol = gram.clone().cholesky().ok_or_else(|| {
            let eig = gram.symmetric_eigenvalues();
            let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
            Error::SingularGram {
                size: n,
                condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
            }
        })?;
        let weights = chol.solve(&DVector::from_column_slice(&obs.values));
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::SingularGram {
                size: n,
                condition: f64::INFINITY,
            });
        }
        Ok(Self {
            positions: obs.positions.clone(),
            weights: weights.iter().copied().collect(),
            kernel,
        })
    }

    pub fn predict(&self, x: [f64; 2]) -> f64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(&p, w)| w * self.kernel.rho_sq(sq_dist(x, p)))
            .sum()
    }
}

/// S-BLUE reconstruction on the evaluation grid; every cell is valid.
pub fn sblue_estimate(
    obs: &ObservationSet,
    kernel: CorrelationKernel,
    cfg: &ScenarioConfig,
) -> Result<GroundEstimate> {
    let fit = SBlue::fit(obs, kernel)?;
    let grid = cfg.eval_grid();
    let side = grid.side;
    let values: Vec<f64> = (0..side * side)
        .into_par_iter()
        .map(|idx| fit.predict(grid.cell_center(idx / side, idx % side)))
        .collect();
    Ok(GroundEstimate::all_valid(
        Array2::from_shape_vec((side, side), values).expect("side * side values"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::generate_field;
    use crate::rng::{substream, Stream};
    use crate::scenario::place_devices;

    fn noiseless() -> ScenarioConfig {
        ScenarioConfig {
            obs_snr_db: f64::INFINITY,
            ..ScenarioConfig::desk()
        }
    }

    /// Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    fn desk_observations(seed: u64, subframes: usize, cfg: &ScenarioConfig) -> (ObservationSet, crate::field::GroundField) {
        let devices = place_devices(cfg, &mut substream(seed, Stream::Placement, 0)).unwrap();
        let field = generate_field(cfg, &mut substream(seed, Stream::Field, 0)).unwrap();
        let m = field.sample(&devices.positions).unwrap();
        let obs = orthogonal_collect(&devices.positions, &m, subframes, cfg, &mut substream(seed, Stream::Collection, 0)).unwrap();
        (obs, field)
    }

    #[test]
    fn collection_counts_and_distinctness() {
        let cfg = ScenarioConfig::desk();
        let (obs, _) = desk_observations(1, 8, &cfg);
        assert_eq!(obs.len(), 288);
        let mut idx = obs.device_indices.clone();
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 288);
        assert_eq!(resource_count(8, &ScenarioConfig::full_scale()), 1152);
        assert_eq!(obs.noise_variance, 0.01);
    }

    #[test]
    fn noiseless_collection_returns_true_values() {
        let cfg = noiseless();
        let devices = place_devices(&cfg, &mut substream(2, Stream::Placement, 0)).unwrap();
        let m: Vec<f64> = (0..devices.count()).map(|i| i as f64).collect();
        let obs = orthogonal_collect(&devices.positions, &m, 2, &cfg, &mut substream(2, Stream::Collection, 0)).unwrap();
        for (&i, &v) in obs.device_indices.iter().zip(&obs.values) {
            assert_eq!(v, m[i]);
            assert_eq!(obs.positions.len(), 72);
        }
    }

    #[test]
    fn collection_is_deterministic_and_nested() {
        let cfg = ScenarioConfig::desk();
        let (a, _) = desk_observations(3, 8, &cfg);
        let (b, _) = desk_observations(3, 8, &cfg);
        let (c, _) = desk_observations(3, 2, &cfg);
        assert_eq!(a, b);
        assert_eq!(a.prefix(72), c);
    }

    #[test]
    fn too_few_devices_is_an_error() {
        let cfg = ScenarioConfig::desk();
        let pos = vec![[0.0, 0.0]; 10];
        assert!(orthogonal_collect(&pos, &[0.0; 10], 1, &cfg, &mut substream(0, Stream::Collection, 0)).is_err());
    }

    #[test]
    fn noiseless_estimate_interpolates() {
        // The jitter shifts the fit at x_i by GRAM_JITTER * alpha_i, so the
        // points are spread out enough to keep the weights below one.
        let obs = ObservationSet {
            positions: vec![[0.0, 0.0], [900.0, 0.0], [0.0, 1100.0], [-1000.0, -800.0]],
            values: vec![0.9, -0.4, 0.3, -0.8],
            device_indices: vec![0, 1, 2, 3],
            noise_variance: 0.0,
        };
        let fit = SBlue::fit(&obs, CorrelationKernel::new(400.0)).unwrap();
        for (p, v) in obs.positions.iter().zip(&obs.values) {
            assert!((fit.predict(*p) - v).abs() < 1e-8);
        }
    }

    #[test]
    fn far_queries_fall_back_to_the_prior_mean() {
        let cfg = ScenarioConfig::desk();
        let (obs, field) = desk_observations(4, 2, &cfg);
        let fit = SBlue::fit(&obs, field.kernel()).unwrap();
        let far = [20_000.0, -15_000.0];
        let min_d = obs.positions.iter().map(|&p| sq_dist(p, far).sqrt()).fold(f64::INFINITY, f64::min);
        assert!(min_d > 6.0 * 400.0);
        assert!(fit.predict(far).abs() < 1e-6);
    }

    #[test]
    fn matches_direct_dense_solve() {
        let cfg = ScenarioConfig::desk();
        let (full, field) = desk_observations(5, 2, &cfg);
        let obs = full.prefix(25);
        let kernel = field.kernel();
        let fit = SBlue::fit(&obs, kernel).unwrap();
        let n = obs.len();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = sq_dist(obs.positions[i], obs.positions[j]).sqrt();
                        (-d * d / (2.0 * 400.0 * 400.0)).exp() + if i == j { obs.noise_variance + GRAM_JITTER } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let alpha = dense_solve(a, obs.values.clone());
        for q in [[0.0, 0.0], [1234.0, -567.0], [-1900.0, 1900.0], obs.positions[3]] {
            let want: f64 = obs
                .positions
                .iter()
                .zip(&alpha)
                .map(|(&p, w)| w * (-sq_dist(p, q) / (2.0 * 400.0 * 400.0)).exp())
                .sum();
            assert!((fit.predict(q) - want).abs() < 1e-8, "{q:?}");
        }
    }

    #[test]
    fn estimate_is_linear_in_observations() {
        let cfg = ScenarioConfig::desk();
        let (obs, field) = desk_observations(6, 2, &cfg);
        let mut rng = substream(6, Stream::Collection, 1);
        let y2: Vec<f64> = obs.values.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
        let with = |values: Vec<f64>| {
            let o = ObservationSet { values, ..obs.clone() };
            sblue_estimate(&o, field.kernel(), &cfg).unwrap().values
        };
        let a = with(obs.values.clone());
        let b = with(y2.clone());
        let sum = with(obs.values.iter().zip(&y2).map(|(x, y)| x + y).collect());
        for ((s, x), y) in sum.iter().zip(a.iter()).zip(b.iter()) {
            assert!((s - x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn more_observations_do_not_increase_error() {
        let cfg = ScenarioConfig::desk();
        let grid = cfg.eval_grid();
        let (mut small, mut large) = (0.0, 0.0);
        for seed in 0..50 {
            let (obs, field) = desk_observations(100 + seed, 8, &cfg);
            let truth = field.on_eval_grid(&grid);
            let mse = |o: &ObservationSet| {
                let est = sblue_estimate(o, field.kernel(), &cfg).unwrap();
                est.values.iter().zip(truth.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / truth.len() as f64
            };
            small += mse(&obs.prefix(72));
            large += mse(&obs);
        }
        assert!(large <= small, "72 obs: {small}, 288 obs: {large}");
    }
}
