//! Spatially correlated sensing target and the measurement/amplitude codec.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft;
use crate::scenario::{EvalGrid, ScenarioConfig};

/// Measurements are clamped to this many standard deviations before encoding.
pub const CLAMP_SIGMAS: f64 = 3.0;

/// Gaussian-shaped correlation `rho(d) = exp(-d^2 / (2 l^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationKernel {
    pub corr_len_m: f64,
}

impl CorrelationKernel {
    pub fn new(corr_len_m: f64) -> Self {
        Self { corr_len_m }
    }

    #[inline]
    pub fn rho(&self, d: f64) -> f64 {
        self.rho_sq(d * d)
    }

    /// Same as [`rho`](Self::rho) but takes the squared distance.
    #[inline]
    pub fn rho_sq(&self, d2: f64) -> f64 {
        (-d2 / (2.0 * self.corr_len_m * self.corr_len_m)).exp()
    }
}

/// Unit-variance Gaussian random field on a periodic square grid.
///
/// Node `(i, j)` sits at `(-L/2 + i c, -L/2 + j c)` with `c = L / side`; the
/// field wraps around, so the node at `+L/2` is node 0 again.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundField {
    pub grid: Array2<f64>,
    pub area_side_m: f64,
    pub corr_len_m: f64,
}

impl GroundField {
    pub fn side(&self) -> usize {
        self.grid.nrows()
    }

    pub fn cell_size_m(&self) -> f64 {
        self.area_side_m / self.side() as f64
    }

    pub fn kernel(&self) -> CorrelationKernel {
        CorrelationKernel::new(self.corr_len_m)
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        let c = self.cell_size_m();
        [-self.area_side_m / 2.0 + i as f64 * c, -self.area_side_m / 2.0 + j as f64 * c]
    }

    /// Bilinear interpolation of the grid at `pos`.
    pub fn value_at(&self, pos: [f64; 2]) -> Result<f64> {
        let half = self.area_side_m / 2.0;
        let tol = half * 1e-12;
        if !(pos[0].abs() <= half + tol && pos[1].abs() <= half + tol) {
            return Err(Error::InvalidInput(format!(
                "position ({}, {}) outside the {} m area",
                pos[0], pos[1], self.area_side_m
            )));
        }
        let n = self.side();
        let c = self.cell_size_m();
        let gx = (pos[0] + half) / c;
        let gy = (pos[1] + half) / c;
        let (fx, fy) = (gx.floor(), gy.floor());
        let (tx, ty) = (gx - fx, gy - fy);
        let i0 = (fx as i64).rem_euclid(n as i64) as usize;
        let j0 = (fy as i64).rem_euclid(n as i64) as usize;
        let (i1, j1) = ((i0 + 1) % n, (j0 + 1) % n);
        let g = &self.grid;
        Ok(g[[i0, j0]] * (1.0 - tx) * (1.0 - ty)
            + g[[i1, j0]] * tx * (1.0 - ty)
            + g[[i0, j1]] * (1.0 - tx) * ty
            + g[[i1, j1]] * tx * ty)
    }

    pub fn sample(&self, positions: &[[f64; 2]]) -> Result<Vec<f64>> {
        positions.iter().map(|&p| self.value_at(p)).collect()
    }

    /// Field values at the evaluation-grid cell centres (the reference truth).
    pub fn on_eval_grid(&self, grid: &EvalGrid) -> Array2<f64> {
        Array2::from_shape_fn((grid.side, grid.side), |(i, j)| {
            self.value_at(grid.cell_center(i, j))
                .expect("cell centres lie inside the area")
        })
    }
}

/// White Gaussian noise filtered by a Gaussian kernel in the frequency domain.
///
/// Convolving white noise with a Gaussian of std `l / sqrt(2)` yields the
/// correlation `exp(-d^2 / (2 l^2))`. The result is rescaled so that its mean
/// square (about the zero prior mean) is exactly one.
pub fn generate_field<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GroundField> {
    let n = cfg.field_grid_side;
    let ell = cfg.field_corr_len_m;
    let cell = cfg.area_side_m / n as f64;
    if !(ell > 0.0) {
        return Err(Error::invalid("field_corr_len_m", "must be positive"));
    }
    if cell > ell / 4.0 {
        return Err(Error::invalid(
            "field_grid_side",
            format!("cell size {cell} m does not resolve correlation length {ell} m (need <= l/4)"),
        ));
    }

    let mut spectrum = Array2::from_shape_simple_fn((n, n), || {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0)
    });
    fft::fft2(&mut spectrum);

    let sigma = ell / std::f64::consts::SQRT_2;
    let df = 1.0 / (n as f64 * cell);
    let two_pi2_s2 = 2.0 * std::f64::consts::PI.powi(2) * sigma * sigma;
    for ((i, j), x) in spectrum.indexed_iter_mut() {
        let fx = fft::signed_index(i, n) as f64 * df;
        let fy = fft::signed_index(j, n) as f64 * df;
        *x *= (-two_pi2_s2 * (fx * fx + fy * fy)).exp();
    }
    fft::ifft2_unnormalized(&mut spectrum);

    let mut grid = spectrum.mapv(|z| z.re);
    let rms = (grid.iter().map(|v| v * v).sum::<f64>() / grid.len() as f64).sqrt();
    if !(rms > 0.0) {
        return Err(Error::Degenerate("generated field has zero energy".into()));
    }
    grid.mapv_inplace(|v| v / rms);

    Ok(GroundField {
        grid,
        area_side_m: cfg.area_side_m,
        corr_len_m: ell,
    })
}

/// Affine map between measurements in `[-3, 3]` and transmit amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeCodec {
    pub min: f64,
    pub max: f64,
}

impl AmplitudeCodec {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self::new(cfg.encode_min, cfg.encode_max)
    }

    pub fn encode(&self, s: f64) -> f64 {
        let s = s.clamp(-CLAMP_SIGMAS, CLAMP_SIGMAS);
        self.min + (self.max - self.min) * (s + CLAMP_SIGMAS) / (2.0 * CLAMP_SIGMAS)
    }

    /// Clamps `a` into the amplitude range, then inverts [`encode`](Self::encode).
    pub fn decode(&self, a: f64) -> Result<f64> {
        if !a.is_finite() {
            return Err(Error::InvalidInput(format!("cannot decode amplitude {a}")));
        }
        Ok(self.decode_unclamped(a.clamp(self.min, self.max)))
    }

    /// The affine inverse without clamping; used for training losses.
    pub fn decode_unclamped(&self, a: f64) -> f64 {
        (a - self.min) * self.decode_slope() - CLAMP_SIGMAS
    }

    /// `d decode / d a` inside the amplitude range.
    pub fn decode_slope(&self) -> f64 {
        2.0 * CLAMP_SIGMAS / (self.max - self.min)
    }
}

/// [`AmplitudeCodec::encode`] with the configured range.
pub fn encode_amplitude(s: f64, cfg: &ScenarioConfig) -> f64 {
    AmplitudeCodec::from_config(cfg).encode(s)
}

/// [`AmplitudeCodec::decode`] with the configured range.
pub fn decode_amplitude(a: f64, cfg: &ScenarioConfig) -> Result<f64> {
    AmplitudeCodec::from_config(cfg).decode(a)
}
