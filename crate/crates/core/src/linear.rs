//! HAPS-standalone linear reconstruction: AoA transform of the virtual
//! array, per-bin division and clipping, nearest-bin ground mapping and
//! averaging over subframe pairs.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::GroundEstimate;
use crate::fft;
use crate::field::AmplitudeCodec;
use crate::phy::{ReceivedPair, VirtualArray};
use crate::scenario::{HapsGeometry, RatioStatistic, ScenarioConfig};

/// Direction cosine of centred bin `index` on an axis of `len` bins.
///
/// Index `i` holds signed bin `r = i - len / 2`, which looks toward `u = 2 r / len`.
pub fn bin_direction(index: usize, len: usize) -> f64 {
    2.0 * (index as f64 - (len / 2) as f64) / len as f64
}

/// Centred index of the bin nearest to `u`; ties go to the smaller index.
/// `None` when the nearest bin wraps around `u = +-1`.
pub fn nearest_bin(u: f64, len: usize) -> Option<usize> {
    let r = (u * len as f64 / 2.0 - 0.5).ceil();
    let lo = -((len / 2) as f64);
    let hi = (len - len / 2) as f64;
    if r < lo || r >= hi {
        return None;
    }
    Some((r - lo) as usize)
}

/// Beamformed array in the AoA domain, centred so that index `len / 2` looks at nadir.
#[derive(Debug, Clone, PartialEq)]
pub struct AoAMap {
    pub bins: Array2<Complex64>,
}

impl AoAMap {
    pub fn shape(&self) -> (usize, usize) {
        self.bins.dim()
    }

    pub fn direction(&self, i: usize, j: usize) -> (f64, f64) {
        let (kx, ky) = self.shape();
        (bin_direction(i, kx), bin_direction(j, ky))
    }
}

/// `b[r, t] = sum_{k,l} v[k, l] exp(-j pi (k u_r + l v_t))` via a 2-D FFT.
pub fn aoa_transform(v: &VirtualArray, geom: &HapsGeometry) -> Result<AoAMap> {
    let (kx, ky) = v.shape();
    if (kx, ky) != (geom.virtual_kx, geom.virtual_ky) {
        return Err(Error::Shape {
            expected: vec![geom.virtual_kx, geom.virtual_ky],
            got: vec![kx, ky],
        });
    }
    Ok(aoa_transform_unchecked(&v.data))
}

pub(crate) fn aoa_transform_unchecked(v: &Array2<Complex64>) -> AoAMap {
    let (kx, ky) = v.dim();
    let mut spec = v.clone();
    fft::fft2(&mut spec);
    let (ox, oy) = (kx / 2, ky / 2);
    let bins = Array2::from_shape_fn((kx, ky), |(i, j)| {
        spec[[(i + kx - ox) % kx, (j + ky - oy) % ky]]
    });
    AoAMap { bins }
}

/// Per-bin amplitude estimates in encoded units with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMap {
    pub values: Array2<f64>,
    pub valid: Array2<bool>,
}

/// The raw per-bin quotient statistic.
pub fn bin_ratio(info: Complex64, reference: Complex64, statistic: RatioStatistic) -> f64 {
    match statistic {
        RatioStatistic::Real => (info / reference).re,
        RatioStatistic::Magnitude => info.norm() / reference.norm(),
    }
}

/// Divides information by reference per bin and hard-clips to the amplitude range.
///
/// Bins with `|b_ref| < clip_epsilon * max |b_ref|` are invalid. Their value is
/// still the clipped ratio when finite, or the reference amplitude otherwise.
pub fn divide_and_clip(
    b_ref: &AoAMap,
    b_info: &AoAMap,
    cfg: &ScenarioConfig,
) -> Result<AmplitudeMap> {
    if b_ref.shape() != b_info.shape() {
        return Err(Error::Shape {
            expected: vec![b_ref.shape().0, b_ref.shape().1],
            got: vec![b_info.shape().0, b_info.shape().1],
        });
    }
    let peak = b_ref.bins.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = cfg.clip_epsilon * peak;
    let mut values = Array2::zeros(b_ref.shape());
    let mut valid = Array2::from_elem(b_ref.shape(), false);
    for ((ix, &r), &i) in b_ref.bins.indexed_iter().zip(b_info.bins.iter()) {
        let ratio = bin_ratio(i, r, cfg.ratio_statistic);
        if ratio.is_finite() {
            values[ix] = ratio.clamp(cfg.encode_min, cfg.encode_max);
            valid[ix] = peak > 0.0 && r.norm() >= floor;
        } else {
            values[ix] = crate::phy::REFERENCE_AMPLITUDE;
        }
    }
    Ok(AmplitudeMap { values, valid })
}

/// Centred bin indices for every evaluation cell, `None` where the cell's
/// nearest bin is aliased.
pub fn ground_bin_lookup(geom: &HapsGeometry, cfg: &ScenarioConfig) -> Array2<Option<(usize, usize)>> {
    let grid = cfg.eval_grid();
    Array2::from_shape_fn((grid.side, grid.side), |(i, j)| {
        let (u, v) = geom.direction_cosines(grid.cell_center(i, j));
        Some((nearest_bin(u, geom.virtual_kx)?, nearest_bin(v, geom.virtual_ky)?))
    })
}

/// Maps each evaluation cell to its nearest AoA bin and decodes the amplitude.
pub fn aoa_to_ground(
    amplitudes: &AmplitudeMap,
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
) -> Result<GroundEstimate> {
    let codec = AmplitudeCodec::from_config(cfg);
    let lookup = ground_bin_lookup(geom, cfg);
    let mut values = Array2::zeros(lookup.dim());
    let mut valid = Array2::from_elem(lookup.dim(), false);
    for (ix, bin) in lookup.indexed_iter() {
        if let Some(b) = *bin {
            values[ix] = codec.decode(amplitudes.values[b])?;
            valid[ix] = amplitudes.valid[b];
        }
    }
    Ok(GroundEstimate { values, valid })
}

/// Clipped per-bin amplitude map of one pair (the dataset input channel).
pub fn divided_map(pair: &ReceivedPair, geom: &HapsGeometry, cfg: &ScenarioConfig) -> Result<AmplitudeMap> {
    let (v_ref, v_info) = pair.unfold(geom)?;
    let b_ref = aoa_transform(&v_ref, geom)?;
    let b_info = aoa_transform(&v_info, geom)?;
    divide_and_clip(&b_ref, &b_info, cfg)
}

/// Full linear pipeline for a single pair.
pub fn reconstruct_pair(
    pair: &ReceivedPair,
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
) -> Result<GroundEstimate> {
    aoa_to_ground(&divided_map(pair, geom, cfg)?, geom, cfg)
}

/// Per-pair reconstructions averaged cellwise over the pairs valid at each cell.
pub fn reconstruct_linear(
    pairs: &[ReceivedPair],
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
) -> Result<GroundEstimate> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("linear reconstruction needs at least one pair".into()));
    }
    let per_pair = pairs
        .par_iter()
        .map(|p| reconstruct_pair(p, geom, cfg))
        .collect::<Result<Vec<_>>>()?;
    GroundEstimate::mean_of(&per_pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{simulate_reception, ChannelRealization, receive_pair};
    use crate::rng::{substream, Stream};
    use crate::scenario::{place_devices, DeviceSet};
    use std::f64::consts::PI;

    fn brute_force(v: &Array2<Complex64>) -> Array2<Complex64> {
        let (kx, ky) = v.dim();
        Array2::from_shape_fn((kx, ky), |(i, j)| {
            let (u, w) = (bin_direction(i, kx), bin_direction(j, ky));
            let mut acc = Complex64::new(0.0, 0.0);
            for ((k, l), x) in v.indexed_iter() {
                acc += x * Complex64::cis(-PI * (k as f64 * u + l as f64 * w));
            }
            acc
        })
    }

    fn random_array(kx: usize, ky: usize, seed: u64) -> Array2<Complex64> {
        use rand::Rng;
        let mut rng = substream(seed, Stream::Noise, 0);
        Array2::from_shape_simple_fn((kx, ky), || {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn bin_directions_and_nearest_bins() {
        assert_eq!(bin_direction(24, 48), 0.0);
        assert_eq!(bin_direction(0, 48), -1.0);
        assert_eq!(nearest_bin(0.0, 48), Some(24));
        assert_eq!(nearest_bin(2.0 / 48.0, 48), Some(25));
        // Halfway between bins 24 and 25 goes to 24.
        assert_eq!(nearest_bin(1.0 / 48.0, 48), Some(24));
        assert_eq!(nearest_bin(-1.0 / 48.0, 48), Some(23));
        assert_eq!(nearest_bin(-1.0, 48), Some(0));
        assert_eq!(nearest_bin(0.999, 48), None);
        assert_eq!(nearest_bin(0.0, 9), Some(4));
        assert_eq!(bin_direction(4, 9), 0.0);
    }

    #[test]
    fn fast_transform_matches_brute_force() {
        for (kx, ky, seed) in [(48, 48, 0), (12, 20, 1), (9, 6, 2)] {
            let v = random_array(kx, ky, seed);
            let fast = aoa_transform_unchecked(&v).bins;
            let slow = brute_force(&v);
            let scale = slow.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = fast.iter().zip(slow.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err / scale < 1e-9, "{kx}x{ky}: {err}");
        }
    }

    #[test]
    fn parseval() {
        let v = random_array(48, 48, 3);
        let b = aoa_transform_unchecked(&v);
        let eb: f64 = b.bins.iter().map(|z| z.norm_sqr()).sum();
        let ev: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((eb / (48.0 * 48.0 * ev) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_lands_in_nadir_bin() {
        let v = Array2::from_elem((48, 48), Complex64::new(0.5, -0.25));
        let b = aoa_transform_unchecked(&v);
        let peak = b.bins[[24, 24]].norm();
        assert!((peak - 48.0 * 48.0 * v[[0, 0]].norm()).abs() < 1e-9);
        for ((i, j), z) in b.bins.indexed_iter() {
            if (i, j) != (24, 24) {
                assert!(z.norm() < 1e-9 * peak);
            }
        }
    }

    #[test]
    fn on_bin_device_has_full_coherent_gain() {
        let cfg = ScenarioConfig {
            rician_k_db: f64::INFINITY,
            thermal_noise: false,
            ..ScenarioConfig::desk()
        };
        let geom = cfg.geometry();
        // A ground point whose u lands exactly on bin r = 5 (u = 10/48), v = 0.
        let u = 10.0 / 48.0;
        let pos = geom.ground_position(u, 0.0).unwrap();
        let devices = DeviceSet::from_positions(vec![pos], &geom);
        let mut rng = substream(0, Stream::Fading, 0);
        let pair = simulate_reception(&devices, &[0.0], &geom, &cfg, &mut rng).unwrap();
        let (v_ref, _) = pair.unfold(&geom).unwrap();
        let b = aoa_transform(&v_ref, &geom).unwrap();
        let g = v_ref.data[[0, 0]].norm();
        assert!((b.bins[[29, 24]].norm() / (g * 48.0 * 48.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn division_examples() {
        let cfg = ScenarioConfig::desk();
        let v = random_array(6, 6, 4);
        let b = aoa_transform_unchecked(&v);
        let same = divide_and_clip(&b, &b, &cfg).unwrap();
        assert!(same.values.iter().all(|&x| (x - 1.0).abs() < 1e-12));

        let one = AoAMap { bins: Array2::from_elem((1, 2), Complex64::new(1.0, 0.0)) };
        let info = AoAMap {
            bins: Array2::from_shape_vec((1, 2), vec![Complex64::new(2.5, 0.0), Complex64::new(-0.3, 0.0)]).unwrap(),
        };
        let m = divide_and_clip(&one, &info, &cfg).unwrap();
        assert_eq!(m.values[[0, 0]], 1.8);
        assert_eq!(m.values[[0, 1]], 0.2);
        assert!(m.valid.iter().all(|&x| x));
    }

    #[test]
    fn weak_reference_bins_are_invalid() {
        let cfg = ScenarioConfig::desk();
        let r = AoAMap {
            bins: Array2::from_shape_vec(
                (1, 3),
                vec![Complex64::new(1.0, 0.0), Complex64::new(1e-4, 0.0), Complex64::new(0.0, 0.0)],
            )
            .unwrap(),
        };
        let m = divide_and_clip(&r, &r, &cfg).unwrap();
        assert_eq!(m.valid.as_slice().unwrap(), &[true, false, false]);
        assert!(m.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn nadir_cell_maps_to_nadir_bin() {
        let cfg = ScenarioConfig {
            eval_grid_side: 49,
            ..ScenarioConfig::desk()
        };
        let lookup = ground_bin_lookup(&cfg.geometry(), &cfg);
        assert_eq!(lookup[[24, 24]], Some((24, 24)));
    }

    fn uniform_field_recovery(s0: f64, seed: u64) -> GroundEstimate {
        let cfg = ScenarioConfig {
            rician_k_db: f64::INFINITY,
            thermal_noise: false,
            ..ScenarioConfig::desk()
        };
        let geom = cfg.geometry();
        let devices = place_devices(&cfg, &mut substream(seed, Stream::Placement, 0)).unwrap();
        let s = vec![s0; devices.count()];
        let mut rng = substream(seed, Stream::Fading, 0);
        let pair = simulate_reception(&devices, &s, &geom, &cfg, &mut rng).unwrap();
        reconstruct_linear(&[pair], &geom, &cfg).unwrap()
    }

    #[test]
    fn uniform_field_is_recovered_exactly() {
        for s0 in [-2.0, 0.0, 1.5] {
            let est = uniform_field_recovery(s0, 3);
            assert!(est.valid_fraction() > 0.9);
            for (v, ok) in est.values.iter().zip(est.valid.iter()) {
                if *ok {
                    assert!((v - s0).abs() < 1e-6, "{v} vs {s0}");
                }
            }
        }
    }

    #[test]
    fn channel_scale_leaves_estimate_unchanged() {
        let cfg = ScenarioConfig {
            thermal_noise: false,
            ..ScenarioConfig::desk()
        };
        let geom = cfg.geometry();
        let devices = place_devices(&cfg, &mut substream(8, Stream::Placement, 0)).unwrap();
        let s: Vec<f64> = devices.positions.iter().map(|p| (p[0] / 700.0).sin() + (p[1] / 900.0).cos()).collect();
        let ch = ChannelRealization::draw(&devices, &geom, &cfg, &mut substream(8, Stream::Fading, 0));
        let mut rng = substream(8, Stream::Noise, 0);
        let a = receive_pair(&devices, &s, &ch, &geom, &cfg, &mut rng).unwrap();
        let b = receive_pair(&devices, &s, &ch.scaled(Complex64::new(3e4, -7e3)), &geom, &cfg, &mut rng).unwrap();
        let ea = reconstruct_linear(&[a], &geom, &cfg).unwrap();
        let eb = reconstruct_linear(&[b], &geom, &cfg).unwrap();
        assert_eq!(ea.valid, eb.valid);
        for (x, y) in ea.values.iter().zip(eb.values.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_pairs_average_to_single_estimate() {
        let cfg = ScenarioConfig::desk();
        let geom = cfg.geometry();
        let devices = place_devices(&cfg, &mut substream(1, Stream::Placement, 0)).unwrap();
        let s = vec![0.3; devices.count()];
        let pair = simulate_reception(&devices, &s, &geom, &cfg, &mut substream(1, Stream::Fading, 0)).unwrap();
        let one = reconstruct_linear(std::slice::from_ref(&pair), &geom, &cfg).unwrap();
        let four = reconstruct_linear(&vec![pair; 4], &geom, &cfg).unwrap();
        assert_eq!(one.valid, four.valid);
        for (a, b) in one.values.iter().zip(four.values.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(reconstruct_linear(&[], &geom, &cfg).is_err());
    }

    #[test]
    fn valid_values_stay_in_clip_image() {
        let est = uniform_field_recovery(2.9, 5);
        assert!(est.values.iter().all(|v| (-3.0..=3.0).contains(v)));
    }
}
