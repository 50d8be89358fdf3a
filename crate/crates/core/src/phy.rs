//! Reference/information waveform, device-to-HAPS channel and superposed
//! reception on the HAPS array.
//!
//! A device at direction cosines `(u, v)` rotates the symbol on resource
//! `(m, n)` by `pi (m P u + n Q v)`. Antenna `(p, q)` of the half-wavelength
//! array adds `pi (p u + q v)`, so the received sample lands exactly where
//! antenna `(p + m P, q + n Q)` of a `PM x QN` array would have seen it.

use std::f64::consts::PI;

use ndarray::{Array2, Array4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::AmplitudeCodec;
use crate::scenario::{DeviceSet, HapsGeometry, ScenarioConfig};

/// Received symbols indexed `[p, q, m, n]` (antenna x, antenna y, symbol, subcarrier).
pub type SymbolTensor = Array4<Complex64>;

/// Amplitude every device sends during the reference phase.
pub const REFERENCE_AMPLITUDE: f64 = 1.0;

/// Per-device phase of resource `(m, n)`: `pi (m P u + n Q v)`.
pub fn waveform_phase(u: f64, v: f64, m: usize, n: usize, geom: &HapsGeometry) -> f64 {
    PI * ((m * geom.array_p) as f64 * u + (n * geom.array_q) as f64 * v)
}

/// Free-space path gain `(lambda / (4 pi d))^2` (linear, <= 1 for d >> lambda).
pub fn free_space_gain(distance_m: f64, wavelength_m: f64) -> f64 {
    (wavelength_m / (4.0 * PI * distance_m)).powi(2)
}

/// Linear K-factor from dB; `+inf` stays infinite.
pub fn k_factor_linear(k_db: f64) -> f64 {
    10f64.powf(k_db / 10.0)
}

/// Unit-mean-power Rician fading coefficient.
pub fn rician_fading<R: Rng + ?Sized>(k_linear: f64, rng: &mut R) -> Complex64 {
    if k_linear.is_infinite() {
        return Complex64::new(1.0, 0.0);
    }
    let los = (k_linear / (k_linear + 1.0)).sqrt();
    let scatter = (1.0 / (k_linear + 1.0)).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(los + scatter * re, scatter * im)
}

/// Complex gain of one device: transmit amplitude, path loss, LoS phase and fading.
///
/// `g = sqrt(P_tx PL(d)) exp(-j 2 pi d / lambda) (sqrt(K/(K+1)) + sqrt(1/(K+1)) CN(0,1))`.
pub fn channel_gain<R: Rng + ?Sized>(
    pos: [f64; 2],
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Complex64 {
    let d = geom.distance(pos);
    let power = cfg.tx_power_mw()
        * free_space_gain(d, geom.wavelength_m)
        * 10f64.powf(-cfg.nlos_penalty_db / 10.0);
    let los_phase = Complex64::cis(-2.0 * PI * d / geom.wavelength_m);
    power.sqrt() * los_phase * rician_fading(k_factor_linear(cfg.rician_k_db), rng)
}

/// Channel state shared by the reference and information phases of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    /// Residual timing error per device; produces a phase ramp across subcarriers.
    pub timing_offsets_s: Vec<f64>,
    /// Noise power per resource element per antenna (mW).
    pub noise_variance: f64,
}

impl ChannelRealization {
    pub fn draw<R: Rng + ?Sized>(
        devices: &DeviceSet,
        geom: &HapsGeometry,
        cfg: &ScenarioConfig,
        rng: &mut R,
    ) -> Self {
        let gains = devices
            .positions
            .iter()
            .map(|&p| channel_gain(p, geom, cfg, rng))
            .collect();
        let timing_offsets_s = if cfg.clock_offset_std_s > 0.0 {
            let normal = Normal::new(0.0, cfg.clock_offset_std_s).expect("validated std");
            (0..devices.count()).map(|_| normal.sample(rng)).collect()
        } else {
            vec![0.0; devices.count()]
        };
        Self {
            gains,
            timing_offsets_s,
            noise_variance: cfg.noise_variance_mw(),
        }
    }

    /// Multiplies every gain by one complex constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            gains: self.gains.iter().map(|g| g * c).collect(),
            ..self.clone()
        }
    }
}

/// The two received tensors of one reference/information subframe pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedPair {
    pub reference: SymbolTensor,
    pub information: SymbolTensor,
}

impl ReceivedPair {
    pub fn unfold(&self, geom: &HapsGeometry) -> Result<(VirtualArray, VirtualArray)> {
        Ok((
            unfold_virtual(&self.reference, geom)?,
            unfold_virtual(&self.information, geom)?,
        ))
    }
}

/// The `(P M) x (Q N)` virtually extended array.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualArray {
    pub data: Array2<Complex64>,
}

impl VirtualArray {
    pub fn new(data: Array2<Complex64>) -> Self {
        Self { data }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn expected_shape(geom: &HapsGeometry) -> [usize; 4] {
    [geom.array_p, geom.array_q, geom.symbols_m, geom.subcarriers_n]
}

/// `v[p + m P, q + n Q] = y[p, q, m, n]`.
pub fn unfold_virtual(y: &SymbolTensor, geom: &HapsGeometry) -> Result<VirtualArray> {
    let want = expected_shape(geom);
    if y.shape() != want {
        return Err(Error::Shape {
            expected: want.to_vec(),
            got: y.shape().to_vec(),
        });
    }
    let (pp, qq) = (geom.array_p, geom.array_q);
    let data = Array2::from_shape_fn((geom.virtual_kx, geom.virtual_ky), |(k, l)| {
        y[[k % pp, l % qq, k / pp, l / qq]]
    });
    Ok(VirtualArray::new(data))
}

/// Inverse of [`unfold_virtual`].
pub fn fold_virtual(v: &VirtualArray, geom: &HapsGeometry) -> Result<SymbolTensor> {
    let want = (geom.virtual_kx, geom.virtual_ky);
    if v.shape() != want {
        return Err(Error::Shape {
            expected: vec![want.0, want.1],
            got: vec![v.shape().0, v.shape().1],
        });
    }
    let (pp, qq) = (geom.array_p, geom.array_q);
    Ok(Array4::from_shape_fn(expected_shape(geom), |(p, q, m, n)| {
        v.data[[p + m * pp, q + n * qq]]
    }))
}

/// Noiseless superposition in virtual-array coordinates, precomputed per
/// channel so that both phases of a pair share the column steering terms.
struct Superposer<'a> {
    devices: &'a DeviceSet,
    channel: &'a ChannelRealization,
    kx: usize,
    ky: usize,
    /// `col_terms[l * count + i] = exp(j pi l v_i) * timing ramp_i(n(l))`.
    col_terms: Vec<Complex64>,
}

impl<'a> Superposer<'a> {
    fn new(
        devices: &'a DeviceSet,
        channel: &'a ChannelRealization,
        geom: &HapsGeometry,
        subcarrier_spacing_hz: f64,
    ) -> Self {
        let count = devices.count();
        let ky = geom.virtual_ky;
        let mut col_terms = Vec::with_capacity(ky * count);
        for l in 0..ky {
            let n = (l / geom.array_q) as f64;
            for (i, &(_, v)) in devices.direction_cosines.iter().enumerate() {
                let ramp = -2.0 * PI * n * subcarrier_spacing_hz * channel.timing_offsets_s[i];
                col_terms.push(Complex64::cis(PI * l as f64 * v + ramp));
            }
        }
        Self {
            devices,
            channel,
            kx: geom.virtual_kx,
            ky,
            col_terms,
        }
    }

    /// Rows are independent and each element sums devices in index order, so
    /// the result does not depend on how rayon schedules the rows.
    fn virtual_response(&self, amplitudes: &[f64]) -> Array2<Complex64> {
        let count = self.devices.count();
        let rows: Vec<Vec<Complex64>> = (0..self.kx)
            .into_par_iter()
            .map(|k| {
                let coeff: Vec<Complex64> = (0..count)
                    .map(|i| {
                        let u = self.devices.direction_cosines[i].0;
                        self.channel.gains[i] * amplitudes[i] * Complex64::cis(PI * k as f64 * u)
                    })
                    .collect();
                (0..self.ky)
                    .map(|l| {
                        let col = &self.col_terms[l * count..(l + 1) * count];
                        let (mut re, mut im) = (0.0, 0.0);
                        for (c, t) in coeff.iter().zip(col) {
                            re += c.re * t.re - c.im * t.im;
                            im += c.re * t.im + c.im * t.re;
                        }
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        Array2::from_shape_fn((self.kx, self.ky), |(k, l)| rows[k][l])
    }
}

fn add_noise<R: Rng + ?Sized>(y: &mut SymbolTensor, variance: f64, rng: &mut R) {
    if variance <= 0.0 {
        return;
    }
    let sd = (variance / 2.0).sqrt();
    for z in y.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += Complex64::new(sd * re, sd * im);
    }
}

/// One received tensor for arbitrary per-device amplitudes under a given
/// channel. An empty device set gives a noise-only tensor.
pub fn superpose<R: Rng + ?Sized>(
    devices: &DeviceSet,
    amplitudes: &[f64],
    channel: &ChannelRealization,
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
    noise_rng: &mut R,
) -> Result<SymbolTensor> {
    check_lengths(devices, amplitudes, channel)?;
    let sp = Superposer::new(devices, channel, geom, cfg.subcarrier_spacing_hz);
    let mut y = fold_virtual(&VirtualArray::new(sp.virtual_response(amplitudes)), geom)?;
    add_noise(&mut y, channel.noise_variance, noise_rng);
    Ok(y)
}

fn check_lengths(
    devices: &DeviceSet,
    amplitudes: &[f64],
    channel: &ChannelRealization,
) -> Result<()> {
    let n = devices.count();
    if amplitudes.len() != n || channel.gains.len() != n || channel.timing_offsets_s.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} devices but {} amplitudes and {} channel gains",
            amplitudes.len(),
            channel.gains.len()
        )));
    }
    Ok(())
}

/// Reference and information tensors under one shared channel realization.
///
/// Reference amplitudes are all [`REFERENCE_AMPLITUDE`]; information amplitudes
/// are the encoded measurements. Noise is independent per tensor and element.
pub fn receive_pair<R: Rng + ?Sized>(
    devices: &DeviceSet,
    measurements: &[f64],
    channel: &ChannelRealization,
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
    noise_rng: &mut R,
) -> Result<ReceivedPair> {
    if devices.is_empty() {
        return Err(Error::InvalidInput("no devices to receive from".into()));
    }
    let codec = AmplitudeCodec::from_config(cfg);
    let info_amp: Vec<f64> = measurements.iter().map(|&s| codec.encode(s)).collect();
    let ref_amp = vec![REFERENCE_AMPLITUDE; devices.count()];
    check_lengths(devices, &info_amp, channel)?;

    let sp = Superposer::new(devices, channel, geom, cfg.subcarrier_spacing_hz);
    let mut reference = fold_virtual(&VirtualArray::new(sp.virtual_response(&ref_amp)), geom)?;
    let mut information = fold_virtual(&VirtualArray::new(sp.virtual_response(&info_amp)), geom)?;
    add_noise(&mut reference, channel.noise_variance, noise_rng);
    add_noise(&mut information, channel.noise_variance, noise_rng);
    Ok(ReceivedPair {
        reference,
        information,
    })
}

/// Draws a channel from `rng`, then receives one pair with noise from the same `rng`.
pub fn simulate_reception<R: Rng + ?Sized>(
    devices: &DeviceSet,
    measurements: &[f64],
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<ReceivedPair> {
    if devices.is_empty() {
        return Err(Error::InvalidInput("no devices to receive from".into()));
    }
    let channel = ChannelRealization::draw(devices, geom, cfg, rng);
    receive_pair(devices, measurements, &channel, geom, cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng::{substream, Stream};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn los_noiseless() -> ScenarioConfig {
        ScenarioConfig {
            rician_k_db: f64::INFINITY,
            thermal_noise: false,
            ..ScenarioConfig::desk()
        }
    }

    fn max_rel_err(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn waveform_phase_examples() {
        let g = ScenarioConfig::desk().geometry();
        assert_eq!(waveform_phase(0.3, -0.2, 0, 0, &g), 0.0);
        assert_eq!(waveform_phase(0.0, 0.0, 3, 5, &g), 0.0);
        let phi = waveform_phase(0.25, 0.9, 1, 0, &g);
        assert_abs_diff_eq!(phi, 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(Complex64::cis(phi).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn free_space_loss_matches_standard_formula() {
        // FSPL(dB) = 20 log10(d_km) + 20 log10(f_MHz) + 20 log10(4 pi 1e9 / c).
        let d = 20_000.0;
        let f = 2.5e9;
        let oracle = 20.0 * (d / 1e3f64).log10()
            + 20.0 * (f / 1e6f64).log10()
            + 20.0 * (4.0 * PI * 1e9 / crate::scenario::SPEED_OF_LIGHT).log10();
        let ours = -10.0 * free_space_gain(d, crate::scenario::SPEED_OF_LIGHT / f).log10();
        assert_abs_diff_eq!(ours, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(ours, 126.43, epsilon = 0.01);
    }

    #[test]
    fn pure_los_gain_magnitude() {
        let cfg = los_noiseless();
        let g = cfg.geometry();
        let pos = [1234.0, -567.0];
        let gain = channel_gain(pos, &g, &cfg, &mut substream(0, Stream::Fading, 0));
        let expected = free_space_gain(g.distance(pos), g.wavelength_m).sqrt();
        assert_abs_diff_eq!(gain.norm(), expected, epsilon = expected * 1e-14);
    }

    #[test]
    fn rician_fading_has_unit_power() {
        let mut rng = substream(42, Stream::Fading, 0);
        let k = k_factor_linear(10.0);
        let n = 100_000;
        let p = (0..n).map(|_| rician_fading(k, &mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 0.02, "mean power {p}");
    }

    #[test]
    fn nlos_penalty_scales_power() {
        let base = los_noiseless();
        let pen = ScenarioConfig {
            nlos_penalty_db: 10.0,
            ..base.clone()
        };
        let g = base.geometry();
        let a = channel_gain([10.0, 20.0], &g, &base, &mut substream(0, Stream::Fading, 0));
        let b = channel_gain([10.0, 20.0], &g, &pen, &mut substream(0, Stream::Fading, 0));
        assert_abs_diff_eq!(b.norm_sqr() / a.norm_sqr(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn single_device_matches_extended_array_response() {
        let cfg = los_noiseless();
        let geom = cfg.geometry();
        let devices = DeviceSet::from_positions(vec![[731.0, -412.0]], &geom);
        let (u, v) = devices.direction_cosines[0];
        let s = 0.7;
        let mut rng = substream(1, Stream::Fading, 0);
        let pair = simulate_reception(&devices, &[s], &geom, &cfg, &mut rng).unwrap();
        let channel = ChannelRealization::draw(&devices, &geom, &cfg, &mut substream(1, Stream::Fading, 0));
        let g = channel.gains[0];
        let a = AmplitudeCodec::from_config(&cfg).encode(s);

        // Per-element closed form through the 4-D indexing.
        for ((p, q, m, n), y) in pair.information.indexed_iter() {
            let phase = waveform_phase(u, v, m, n, &geom) + PI * (p as f64 * u + q as f64 * v);
            let want = g * a * Complex64::cis(phase);
            assert!((y - want).norm() <= 1e-12 * want.norm(), "({p},{q},{m},{n})");
        }
        let (_, info) = pair.unfold(&geom).unwrap();
        let ideal = Array2::from_shape_fn(info.shape(), |(k, l)| {
            g * a * Complex64::cis(PI * (k as f64 * u + l as f64 * v))
        });
        assert!(max_rel_err(&info.data, &ideal) < 1e-12);
    }

    #[test]
    fn noise_only_variance() {
        let cfg = ScenarioConfig::desk();
        let geom = cfg.geometry();
        let none = DeviceSet::from_positions(vec![], &geom);
        let channel = ChannelRealization::draw(&none, &geom, &cfg, &mut substream(0, Stream::Fading, 0));
        let mut rng = substream(0, Stream::Noise, 0);
        let a = superpose(&none, &[], &channel, &geom, &cfg, &mut rng).unwrap();
        let b = superpose(&none, &[], &channel, &geom, &cfg, &mut rng).unwrap();
        let n = (a.len() + b.len()) as f64;
        let var = a.iter().chain(b.iter()).map(|z| z.norm_sqr()).sum::<f64>() / n;
        let sigma2 = cfg.noise_variance_mw();
        assert!((var / sigma2 - 1.0).abs() < 0.05, "{var} vs {sigma2}");
        assert!(simulate_reception(&none, &[], &geom, &cfg, &mut rng).is_err());
    }

    #[test]
    fn co_located_devices_superpose_linearly() {
        let cfg = ScenarioConfig {
            thermal_noise: false,
            ..ScenarioConfig::desk()
        };
        let geom = cfg.geometry();
        let pos = [-300.0, 950.0];
        let two = DeviceSet::from_positions(vec![pos, pos], &geom);
        let one = DeviceSet::from_positions(vec![pos], &geom);
        let ch2 = ChannelRealization::draw(&two, &geom, &cfg, &mut substream(9, Stream::Fading, 0));
        let (a1, a2) = (0.4, 1.3);
        let y2 = superpose(&two, &[a1, a2], &ch2, &geom, &cfg, &mut substream(0, Stream::Noise, 0)).unwrap();
        let combined = ChannelRealization {
            gains: vec![a1 * ch2.gains[0] + a2 * ch2.gains[1]],
            timing_offsets_s: vec![0.0],
            noise_variance: 0.0,
        };
        let y1 = superpose(&one, &[1.0], &combined, &geom, &cfg, &mut substream(0, Stream::Noise, 0)).unwrap();
        for (a, b) in y2.iter().zip(y1.iter()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn coherent_power_quadruples_for_doubled_devices() {
        let cfg = los_noiseless();
        let geom = cfg.geometry();
        let pos = [250.0, 125.0];
        let one = DeviceSet::from_positions(vec![pos], &geom);
        let two = DeviceSet::from_positions(vec![pos, pos], &geom);
        let mut rng = substream(0, Stream::Fading, 0);
        let p1 = simulate_reception(&one, &[0.0], &geom, &cfg, &mut rng).unwrap();
        let p2 = simulate_reception(&two, &[0.0, 0.0], &geom, &cfg, &mut rng).unwrap();
        let e = |t: &SymbolTensor| t.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert_abs_diff_eq!(e(&p2.reference) / e(&p1.reference), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn channel_scale_propagates_to_both_tensors() {
        let cfg = ScenarioConfig {
            thermal_noise: false,
            ..ScenarioConfig::desk()
        };
        let geom = cfg.geometry();
        let devices = crate::scenario::place_devices(&cfg, &mut substream(2, Stream::Placement, 0)).unwrap();
        let s: Vec<f64> = (0..devices.count()).map(|i| ((i as f64) * 0.37).sin()).collect();
        let ch = ChannelRealization::draw(&devices, &geom, &cfg, &mut substream(2, Stream::Fading, 0));
        let c = Complex64::new(-0.3, 2.1);
        let mut rng = substream(0, Stream::Noise, 0);
        let a = receive_pair(&devices, &s, &ch, &geom, &cfg, &mut rng).unwrap();
        let b = receive_pair(&devices, &s, &ch.scaled(c), &geom, &cfg, &mut rng).unwrap();
        for (x, y) in a.reference.iter().zip(b.reference.iter()) {
            assert!((x * c - y).norm() <= 1e-12 * y.norm().max(1e-300) + 1e-24);
        }
        for (x, y) in a.information.iter().zip(b.information.iter()) {
            assert!((x * c - y).norm() <= 1e-12 * y.norm().max(1e-300) + 1e-24);
        }
    }

    #[test]
    fn unfold_index_arithmetic() {
        let geom = ScenarioConfig::desk().geometry();
        let mut y = SymbolTensor::zeros((8, 8, 6, 6));
        y[[3, 2, 1, 0]] = Complex64::new(5.0, -1.0);
        let v = unfold_virtual(&y, &geom).unwrap();
        assert_eq!(v.data[[11, 2]], Complex64::new(5.0, -1.0));
        assert_eq!(v.energy(), 26.0);
        assert!(unfold_virtual(&SymbolTensor::zeros((8, 8, 6, 5)), &geom).is_err());
    }

    #[test]
    fn boresight_device_gives_constant_virtual_array() {
        let cfg = los_noiseless();
        let geom = cfg.geometry();
        let devices = DeviceSet::from_positions(vec![[0.0, 0.0]], &geom);
        let pair = simulate_reception(&devices, &[1.0], &geom, &cfg, &mut substream(0, Stream::Fading, 0)).unwrap();
        let (r, _) = pair.unfold(&geom).unwrap();
        let first = r.data[[0, 0]];
        assert!(r.data.iter().all(|z| (z - first).norm() <= 1e-15 * first.norm()));
    }

    #[test]
    fn clock_offset_ramps_phase_across_subcarriers() {
        let cfg = ScenarioConfig {
            clock_offset_std_s: 1e-6,
            ..los_noiseless()
        };
        let geom = cfg.geometry();
        let devices = DeviceSet::from_positions(vec![[0.0, 0.0]], &geom);
        let ch = ChannelRealization::draw(&devices, &geom, &cfg, &mut substream(0, Stream::Fading, 0));
        let tau = ch.timing_offsets_s[0];
        assert!(tau != 0.0);
        let y = superpose(&devices, &[1.0], &ch, &geom, &cfg, &mut substream(0, Stream::Noise, 0)).unwrap();
        let step = y[[0, 0, 0, 1]] / y[[0, 0, 0, 0]];
        let want = Complex64::cis(-2.0 * PI * cfg.subcarrier_spacing_hz * tau);
        assert!((step - want).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn fold_unfold_is_a_bijection(seed in 0u64..1000) {
            let geom = ScenarioConfig::desk().geometry();
            let mut rng = substream(seed, Stream::Noise, 0);
            let y = SymbolTensor::from_shape_simple_fn((8, 8, 6, 6), || {
                Complex64::new(rng.random::<f64>(), rng.random::<f64>())
            });
            let v = unfold_virtual(&y, &geom).unwrap();
            prop_assert_eq!(&fold_virtual(&v, &geom).unwrap(), &y);
            let e: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((v.energy() - e).abs() <= 1e-12 * e);
        }
    }
}
