//! Reconstruction quality measured over the valid cells of an estimate.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::estimate::GroundEstimate;

/// Reconstruction SNR is reported within `[-SNR_CAP_DB, SNR_CAP_DB]`.
pub const SNR_CAP_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub snr_db: f64,
    /// MSE over the truth's variance, both over valid cells.
    pub nmse: f64,
    pub mse: f64,
    pub truth_variance: f64,
    pub valid_fraction: f64,
    /// 99th percentile (nearest rank) of the absolute cell error.
    pub p99_abs_error: f64,
}

fn valid_pairs(est: &GroundEstimate, truth: &Array2<f64>) -> Result<Vec<(f64, f64)>> {
    if est.values.dim() != truth.dim() || est.valid.dim() != truth.dim() {
        return Err(Error::Shape {
            expected: vec![truth.nrows(), truth.ncols()],
            got: vec![est.values.nrows(), est.values.ncols()],
        });
    }
    let pairs: Vec<(f64, f64)> = est
        .values
        .iter()
        .zip(est.valid.iter())
        .zip(truth.iter())
        .filter(|((_, &ok), _)| ok)
        .map(|((&e, _), &t)| (e, t))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Degenerate("estimate has no valid cells".into()));
    }
    if pairs.iter().any(|(e, t)| !e.is_finite() || !t.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in a valid cell".into()));
    }
    Ok(pairs)
}

fn snr_from(variance: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        return SNR_CAP_DB;
    }
    (10.0 * (variance / mse).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB)
}

pub fn score(est: &GroundEstimate, truth: &Array2<f64>) -> Result<Score> {
    let pairs = valid_pairs(est, truth)?;
    let n = pairs.len() as f64;
    let mse = pairs.iter().map(|(e, t)| (e - t).powi(2)).sum::<f64>() / n;
    let mean = pairs.iter().map(|(_, t)| t).sum::<f64>() / n;
    let truth_variance = pairs.iter().map(|(_, t)| (t - mean).powi(2)).sum::<f64>() / n;
    let mut errors: Vec<f64> = pairs.iter().map(|(e, t)| (e - t).abs()).collect();
    errors.sort_by(f64::total_cmp);
    let rank = ((0.99 * n).ceil() as usize).clamp(1, errors.len());
    Ok(Score {
        snr_db: snr_from(truth_variance, mse),
        nmse: mse / truth_variance,
        mse,
        truth_variance,
        valid_fraction: est.valid_fraction(),
        p99_abs_error: errors[rank - 1],
    })
}

/// `10 log10(Var(truth) / MSE)` over valid cells.
pub fn recon_snr(est: &GroundEstimate, truth: &Array2<f64>) -> Result<f64> {
    Ok(score(est, truth)?.snr_db)
}

pub fn nmse(est: &GroundEstimate, truth: &Array2<f64>) -> Result<f64> {
    Ok(score(est, truth)?.nmse)
}

/// Median of finite values; `NaN` for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
