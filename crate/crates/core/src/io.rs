//! On-disk formats: tensor interchange files, heatmap images and CSV tables.
//!
//! A tensor `name` lives in two files inside one directory: `name.bin` holds
//! little-endian `f32` values in row-major order and `name.json` holds
//! `{"name", "shape", "dtype": "f32", "scenario_hash"}`. Invalid cells of a
//! ground estimate are stored as `NaN`.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::GroundEstimate;

pub const TENSOR_DTYPE: &str = "f32";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub scenario_hash: String,
}

impl TensorMeta {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        return Err(Error::InvalidInput(format!("bad tensor name '{name}'")));
    }
    Ok(())
}

/// Writes `data` (already row-major for `shape`) and returns the `.bin` path.
pub fn write_tensor(dir: &Path, name: &str, shape: &[usize], data: &[f32], scenario_hash: &str) -> Result<PathBuf> {
    check_name(name)?;
    let want: usize = shape.iter().product();
    if want != data.len() {
        return Err(Error::Shape {
            expected: shape.to_vec(),
            got: vec![data.len()],
        });
    }
    fs::create_dir_all(dir)?;
    let meta = TensorMeta {
        name: name.to_string(),
        shape: shape.to_vec(),
        dtype: TENSOR_DTYPE.to_string(),
        scenario_hash: scenario_hash.to_string(),
    };
    let mut bytes = Vec::with_capacity(4 * data.len());
    for x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    let bin = dir.join(format!("{name}.bin"));
    fs::write(&bin, bytes)?;
    fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(bin)
}

/// Accepts the `.bin` file, the `.json` file or the shared stem.
fn tensor_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn read_tensor(path: &Path) -> Result<(TensorMeta, Vec<f32>)> {
    let (bin, json) = tensor_paths(path);
    let text = fs::read_to_string(&json).map_err(|e| format_err(&json, e.to_string()))?;
    let meta: TensorMeta = serde_json::from_str(&text)
        .map_err(|e| format_err(&json, format!("bad manifest: {e}")))?;
    if meta.dtype != TENSOR_DTYPE {
        return Err(format_err(&json, format!("dtype '{}' is not {TENSOR_DTYPE}", meta.dtype)));
    }
    let stem = bin.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    if meta.name != stem {
        return Err(format_err(&json, format!("manifest names '{}' but file is '{stem}'", meta.name)));
    }
    let bytes = fs::read(&bin).map_err(|e| format_err(&bin, e.to_string()))?;
    if bytes.len() != 4 * meta.len() {
        return Err(format_err(
            &bin,
            format!("shape {:?} needs {} bytes, found {}", meta.shape, 4 * meta.len(), bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    Ok((meta, data))
}

pub fn write_array2(dir: &Path, name: &str, values: &Array2<f64>, scenario_hash: &str) -> Result<PathBuf> {
    let data: Vec<f32> = values.iter().map(|&x| x as f32).collect();
    write_tensor(dir, name, &[values.nrows(), values.ncols()], &data, scenario_hash)
}

pub fn read_array2(path: &Path) -> Result<(TensorMeta, Array2<f64>)> {
    let (meta, data) = read_tensor(path)?;
    if meta.shape.len() != 2 {
        return Err(format_err(path, format!("expected a 2-D tensor, shape is {:?}", meta.shape)));
    }
    let arr = Array2::from_shape_vec((meta.shape[0], meta.shape[1]), data.into_iter().map(f64::from).collect())
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok((meta, arr))
}

/// Any-rank real tensor.
pub fn write_arrayd(dir: &Path, name: &str, values: &ArrayD<f64>, scenario_hash: &str) -> Result<PathBuf> {
    let data: Vec<f32> = values.iter().map(|&x| x as f32).collect();
    write_tensor(dir, name, values.shape(), &data, scenario_hash)
}

pub fn read_arrayd(path: &Path) -> Result<(TensorMeta, ArrayD<f64>)> {
    let (meta, data) = read_tensor(path)?;
    let arr = ArrayD::from_shape_vec(IxDyn(&meta.shape), data.into_iter().map(f64::from).collect())
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok((meta, arr))
}

/// Complex tensors gain a trailing axis of length 2 holding `(re, im)`.
pub fn write_complex<D: ndarray::Dimension>(
    dir: &Path,
    name: &str,
    values: &ndarray::Array<Complex64, D>,
    scenario_hash: &str,
) -> Result<PathBuf> {
    let mut shape = values.shape().to_vec();
    shape.push(2);
    let data: Vec<f32> = values.iter().flat_map(|z| [z.re as f32, z.im as f32]).collect();
    write_tensor(dir, name, &shape, &data, scenario_hash)
}

/// Estimate as a `[G, G]` tensor with `NaN` in invalid cells.
pub fn write_estimate(dir: &Path, name: &str, est: &GroundEstimate, scenario_hash: &str) -> Result<PathBuf> {
    write_array2(dir, name, &est.to_masked(), scenario_hash)
}

pub fn read_estimate(path: &Path) -> Result<(TensorMeta, GroundEstimate)> {
    let (meta, values) = read_array2(path)?;
    Ok((meta, GroundEstimate::from_masked(values)))
}

/// Value range mapped linearly onto black..white.
pub const HEATMAP_RANGE: (f64, f64) = (-3.0, 3.0);
/// Colour of invalid cells.
pub const INVALID_RGB: [u8; 3] = [255, 0, 0];

/// Gray level of one value: `-3` is black, `0` mid-gray (128) and `3` white.
pub fn gray_level(v: f64) -> u8 {
    let (lo, hi) = HEATMAP_RANGE;
    (255.0 * (v.clamp(lo, hi) - lo) / (hi - lo)).round() as u8
}

/// Renders `values[i, j]` at pixel column `i`, row `side - 1 - j`, so that
/// north is up, each cell blown up to `scale x scale` pixels.
pub fn heatmap_image(values: &Array2<f64>, valid: Option<&Array2<bool>>, scale: u32) -> Result<RgbImage> {
    let (nx, ny) = values.dim();
    if let Some(v) = valid {
        if v.dim() != (nx, ny) {
            return Err(Error::Shape {
                expected: vec![nx, ny],
                got: vec![v.nrows(), v.ncols()],
            });
        }
    }
    let scale = scale.max(1);
    let mut img = RgbImage::new(nx as u32 * scale, ny as u32 * scale);
    for ((i, j), &x) in values.indexed_iter() {
        let ok = valid.is_none_or(|v| v[[i, j]]);
        let px = if ok {
            if !x.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite value at cell ({i}, {j})")));
            }
            let g = gray_level(x);
            Rgb([g, g, g])
        } else {
            Rgb(INVALID_RGB)
        };
        let (x0, y0) = (i as u32 * scale, (ny - 1 - j) as u32 * scale);
        for dx in 0..scale {
            for dy in 0..scale {
                img.put_pixel(x0 + dx, y0 + dy, px);
            }
        }
    }
    Ok(img)
}

pub fn export_heatmap(path: &Path, est: &GroundEstimate, scale: u32) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    heatmap_image(&est.values, Some(&est.valid), scale)?.save(path)?;
    Ok(())
}

/// Panels side by side, left to right, separated by white gutters.
pub fn comparison_image(panels: &[&GroundEstimate], scale: u32) -> Result<RgbImage> {
    const GUTTER: u32 = 6;
    let images = panels
        .iter()
        .map(|e| heatmap_image(&e.values, Some(&e.valid), scale))
        .collect::<Result<Vec<_>>>()?;
    let height = images.iter().map(|i| i.height()).max().unwrap_or(0);
    let width = images.iter().map(|i| i.width()).sum::<u32>() + GUTTER * images.len().saturating_sub(1) as u32;
    let mut out = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let mut x = 0;
    for img in &images {
        image::imageops::replace(&mut out, img, x as i64, 0);
        x += img.width() + GUTTER;
    }
    Ok(out)
}

pub fn export_comparison(path: &Path, panels: &[&GroundEstimate], scale: u32) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    comparison_image(panels, scale)?.save(path)?;
    Ok(())
}
