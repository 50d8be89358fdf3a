//! Reconstructed data map on the evaluation grid, shared by every method.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundEstimate {
    /// Estimated measurement per evaluation cell, row-major `[i, j]`.
    pub values: Array2<f64>,
    /// `false` where the method could not produce an estimate.
    pub valid: Array2<bool>,
}

impl GroundEstimate {
    pub fn all_valid(values: Array2<f64>) -> Self {
        let valid = Array2::from_elem(values.dim(), true);
        Self { values, valid }
    }

    pub fn side(&self) -> usize {
        self.values.nrows()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid_count() as f64 / self.valid.len().max(1) as f64
    }

    /// Values with invalid cells replaced by NaN (the interchange encoding).
    pub fn to_masked(&self) -> Array2<f64> {
        Array2::from_shape_fn(self.values.dim(), |ix| {
            if self.valid[ix] {
                self.values[ix]
            } else {
                f64::NAN
            }
        })
    }

    /// Inverse of [`to_masked`](Self::to_masked): non-finite cells become invalid.
    pub fn from_masked(values: Array2<f64>) -> Self {
        let valid = values.mapv(f64::is_finite);
        let values = values.mapv(|v| if v.is_finite() { v } else { 0.0 });
        Self { values, valid }
    }

    /// Cellwise mean over the estimates that are valid at each cell.
    /// A cell is invalid only if every input is invalid there.
    pub fn mean_of(estimates: &[GroundEstimate]) -> Result<GroundEstimate> {
        let first = estimates
            .first()
            .ok_or_else(|| Error::InvalidInput("nothing to average".into()))?;
        let dim = first.values.dim();
        if let Some(bad) = estimates.iter().find(|e| e.values.dim() != dim) {
            return Err(Error::Shape {
                expected: vec![dim.0, dim.1],
                got: vec![bad.values.nrows(), bad.values.ncols()],
            });
        }
        let mut sum = Array2::<f64>::zeros(dim);
        let mut count = Array2::<u32>::zeros(dim);
        for e in estimates {
            for ((s, c), (&v, &ok)) in sum
                .iter_mut()
                .zip(count.iter_mut())
                .zip(e.values.iter().zip(e.valid.iter()))
            {
                if ok {
                    *s += v;
                    *c += 1;
                }
            }
        }
        let valid = count.mapv(|c| c > 0);
        let values = Array2::from_shape_fn(dim, |ix| {
            if count[ix] > 0 {
                sum[ix] / count[ix] as f64
            } else {
                0.0
            }
        });
        Ok(GroundEstimate { values, valid })
    }
}
