//! Scenario configuration, HAPS/array geometry and device placement.
//!
//! The config file is a flat `key = value` text format, one key per line,
//! `#` starting a comment. Keys are the [`ScenarioConfig`] field names;
//! keys that are absent keep their desk-scale default. See
//! `configs/desk.cfg` and `configs/full.cfg` for complete files.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Statistic taken from the per-bin quotient of information over reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioStatistic {
    /// `Re(b_info / b_ref)`
    Real,
    /// `|b_info| / |b_ref|`
    Magnitude,
}

impl FromStr for RatioStatistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "real" => Ok(Self::Real),
            "magnitude" => Ok(Self::Magnitude),
            other => Err(format!("expected `real` or `magnitude`, got `{other}`")),
        }
    }
}

impl RatioStatistic {
    fn as_str(self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Magnitude => "magnitude",
        }
    }
}

/// All physical and protocol parameters of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area_side_m: f64,
    pub device_density_per_km2: f64,
    pub haps_altitude_m: f64,
    pub array_p: usize,
    pub array_q: usize,
    pub symbols_m: usize,
    pub subcarriers_n: usize,
    pub carrier_hz: f64,
    pub tx_power_dbm: f64,
    pub subcarrier_spacing_hz: f64,
    pub noise_figure_db: f64,
    /// Rician K-factor in dB; `inf` gives a pure line-of-sight channel.
    pub rician_k_db: f64,
    pub field_corr_len_m: f64,
    pub encode_min: f64,
    pub encode_max: f64,
    /// Reference bins below `clip_epsilon * max|b_ref|` are invalid.
    pub clip_epsilon: f64,
    pub eval_grid_side: usize,
    pub seed: u64,
    pub nlos_penalty_db: f64,
    /// Side of the dense grid the ground field is generated on.
    pub field_grid_side: usize,
    /// Std of the residual per-device timing error after triggering.
    pub clock_offset_std_s: f64,
    /// Per-observation SNR of the terrestrial collection link (baseline).
    pub obs_snr_db: f64,
    pub ratio_statistic: RatioStatistic,
    pub thermal_noise: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ScenarioConfig {
    /// 4 km x 4 km, 2 km altitude, 8x8 array with 6x6 resources (48x48 virtual array).
    pub fn desk() -> Self {
        Self {
            area_side_m: 4000.0,
            device_density_per_km2: 50.0,
            haps_altitude_m: 2000.0,
            array_p: 8,
            array_q: 8,
            symbols_m: 6,
            subcarriers_n: 6,
            carrier_hz: 2.5e9,
            tx_power_dbm: 0.0,
            subcarrier_spacing_hz: 15e3,
            noise_figure_db: 5.0,
            rician_k_db: 10.0,
            field_corr_len_m: 400.0,
            encode_min: 0.2,
            encode_max: 1.8,
            clip_epsilon: 1e-3,
            eval_grid_side: 48,
            seed: 1,
            nlos_penalty_db: 0.0,
            field_grid_side: 128,
            clock_offset_std_s: 0.0,
            obs_snr_db: 20.0,
            ratio_statistic: RatioStatistic::Real,
            thermal_noise: true,
        }
    }

    /// 40 km x 40 km with 50,000 devices, 16x16 array and 12x12 resources.
    pub fn full_scale() -> Self {
        Self {
            area_side_m: 40_000.0,
            device_density_per_km2: 31.25,
            haps_altitude_m: 20_000.0,
            array_p: 16,
            array_q: 16,
            symbols_m: 12,
            subcarriers_n: 12,
            field_corr_len_m: 2000.0,
            eval_grid_side: 192,
            field_grid_side: 256,
            ..Self::desk()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
            }
        }
        fn finite(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite, got {v}")))
            }
        }
        positive("area_side_m", self.area_side_m)?;
        positive("haps_altitude_m", self.haps_altitude_m)?;
        positive("carrier_hz", self.carrier_hz)?;
        positive("subcarrier_spacing_hz", self.subcarrier_spacing_hz)?;
        positive("field_corr_len_m", self.field_corr_len_m)?;
        positive("clip_epsilon", self.clip_epsilon)?;
        finite("tx_power_dbm", self.tx_power_dbm)?;
        finite("noise_figure_db", self.noise_figure_db)?;
        finite("nlos_penalty_db", self.nlos_penalty_db)?;
        finite("obs_snr_db", self.obs_snr_db)?;
        if !(self.device_density_per_km2.is_finite() && self.device_density_per_km2 >= 0.0) {
            return Err(Error::invalid("device_density_per_km2", "must be finite and non-negative"));
        }
        if self.rician_k_db.is_nan() || self.rician_k_db == f64::NEG_INFINITY {
            return Err(Error::invalid("rician_k_db", "must be a number or `inf`"));
        }
        if !(self.clock_offset_std_s.is_finite() && self.clock_offset_std_s >= 0.0) {
            return Err(Error::invalid("clock_offset_std_s", "must be finite and non-negative"));
        }
        for (field, v) in [("array_p", self.array_p), ("array_q", self.array_q)] {
            if v < 2 {
                return Err(Error::invalid(field, format!("need at least 2 antennas, got {v}")));
            }
        }
        for (field, v) in [
            ("symbols_m", self.symbols_m),
            ("subcarriers_n", self.subcarriers_n),
            ("eval_grid_side", self.eval_grid_side),
        ] {
            if v < 1 {
                return Err(Error::invalid(field, "must be at least 1"));
            }
        }
        if self.field_grid_side < 2 {
            return Err(Error::invalid("field_grid_side", "must be at least 2"));
        }
        positive("encode_min", self.encode_min)?;
        finite("encode_max", self.encode_max)?;
        if self.encode_max <= self.encode_min {
            return Err(Error::invalid(
                "encode_max",
                format!("must exceed encode_min ({} <= {})", self.encode_max, self.encode_min),
            ));
        }
        Ok(())
    }

    pub fn area_km2(&self) -> f64 {
        (self.area_side_m / 1000.0).powi(2)
    }

    /// `round(density * area)`.
    pub fn expected_device_count(&self) -> usize {
        (self.device_density_per_km2 * self.area_km2()).round() as usize
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn tx_power_mw(&self) -> f64 {
        10f64.powf(self.tx_power_dbm / 10.0)
    }

    /// Thermal noise per resource element per antenna, in mW:
    /// -174 dBm/Hz + 10 log10(subcarrier spacing) + noise figure.
    pub fn noise_variance_mw(&self) -> f64 {
        if !self.thermal_noise {
            return 0.0;
        }
        let dbm = -174.0 + 10.0 * self.subcarrier_spacing_hz.log10() + self.noise_figure_db;
        10f64.powf(dbm / 10.0)
    }

    /// Observation noise variance of the terrestrial link, relative to the
    /// unit field variance.
    pub fn obs_noise_variance(&self) -> f64 {
        10f64.powf(-self.obs_snr_db / 10.0)
    }

    pub fn geometry(&self) -> HapsGeometry {
        HapsGeometry::new(self)
    }

    pub fn eval_grid(&self) -> EvalGrid {
        EvalGrid {
            side: self.eval_grid_side,
            area_side_m: self.area_side_m,
        }
    }

    /// Canonical text form; parses back to an identical config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("area_side_m", self.area_side_m.to_string());
        kv("device_density_per_km2", self.device_density_per_km2.to_string());
        kv("haps_altitude_m", self.haps_altitude_m.to_string());
        kv("array_p", self.array_p.to_string());
        kv("array_q", self.array_q.to_string());
        kv("symbols_m", self.symbols_m.to_string());
        kv("subcarriers_n", self.subcarriers_n.to_string());
        kv("carrier_hz", self.carrier_hz.to_string());
        kv("tx_power_dbm", self.tx_power_dbm.to_string());
        kv("subcarrier_spacing_hz", self.subcarrier_spacing_hz.to_string());
        kv("noise_figure_db", self.noise_figure_db.to_string());
        kv("rician_k_db", self.rician_k_db.to_string());
        kv("field_corr_len_m", self.field_corr_len_m.to_string());
        kv("encode_min", self.encode_min.to_string());
        kv("encode_max", self.encode_max.to_string());
        kv("clip_epsilon", self.clip_epsilon.to_string());
        kv("eval_grid_side", self.eval_grid_side.to_string());
        kv("seed", self.seed.to_string());
        kv("nlos_penalty_db", self.nlos_penalty_db.to_string());
        kv("field_grid_side", self.field_grid_side.to_string());
        kv("clock_offset_std_s", self.clock_offset_std_s.to_string());
        kv("obs_snr_db", self.obs_snr_db.to_string());
        kv("ratio_statistic", self.ratio_statistic.as_str().to_string());
        kv("thermal_noise", self.thermal_noise.to_string());
        s
    }

    /// Hex digest of the canonical config text (first 16 bytes of SHA-256).
    pub fn scenario_hash(&self) -> String {
        let digest = Sha256::digest(self.to_config_string().as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        fn num<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
            value.parse().map_err(|_| Error::ConfigParse {
                line,
                msg: format!("`{key}`: cannot parse `{value}`"),
            })
        }
        match key {
            "area_side_m" => self.area_side_m = num(value, line, key)?,
            "device_density_per_km2" => self.device_density_per_km2 = num(value, line, key)?,
            "haps_altitude_m" => self.haps_altitude_m = num(value, line, key)?,
            "array_p" => self.array_p = num(value, line, key)?,
            "array_q" => self.array_q = num(value, line, key)?,
            "symbols_m" => self.symbols_m = num(value, line, key)?,
            "subcarriers_n" => self.subcarriers_n = num(value, line, key)?,
            "carrier_hz" => self.carrier_hz = num(value, line, key)?,
            "tx_power_dbm" => self.tx_power_dbm = num(value, line, key)?,
            "subcarrier_spacing_hz" => self.subcarrier_spacing_hz = num(value, line, key)?,
            "noise_figure_db" => self.noise_figure_db = num(value, line, key)?,
            "rician_k_db" => self.rician_k_db = num(value, line, key)?,
            "field_corr_len_m" => self.field_corr_len_m = num(value, line, key)?,
            "encode_min" => self.encode_min = num(value, line, key)?,
            "encode_max" => self.encode_max = num(value, line, key)?,
            "clip_epsilon" => self.clip_epsilon = num(value, line, key)?,
            "eval_grid_side" => self.eval_grid_side = num(value, line, key)?,
            "seed" => self.seed = num(value, line, key)?,
            "nlos_penalty_db" => self.nlos_penalty_db = num(value, line, key)?,
            "field_grid_side" => self.field_grid_side = num(value, line, key)?,
            "clock_offset_std_s" => self.clock_offset_std_s = num(value, line, key)?,
            "obs_snr_db" => self.obs_snr_db = num(value, line, key)?,
            "thermal_noise" => self.thermal_noise = num(value, line, key)?,
            "ratio_statistic" => {
                self.ratio_statistic = value
                    .parse()
                    .map_err(|msg| Error::ConfigParse { line, msg })?
            }
            other => {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::desk();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            cfg.set(key.trim(), value.trim(), line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// HAPS position and (virtual) array dimensions.
///
/// Coordinates: the square area is centred on the origin of the ground plane
/// and the HAPS hovers at `(0, 0, altitude)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HapsGeometry {
    pub haps_position: [f64; 3],
    pub wavelength_m: f64,
    pub element_spacing_m: f64,
    pub array_p: usize,
    pub array_q: usize,
    pub symbols_m: usize,
    pub subcarriers_n: usize,
    pub virtual_kx: usize,
    pub virtual_ky: usize,
    pub area_side_m: f64,
}

impl HapsGeometry {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let wavelength_m = cfg.wavelength_m();
        Self {
            haps_position: [0.0, 0.0, cfg.haps_altitude_m],
            wavelength_m,
            element_spacing_m: wavelength_m / 2.0,
            array_p: cfg.array_p,
            array_q: cfg.array_q,
            symbols_m: cfg.symbols_m,
            subcarriers_n: cfg.subcarriers_n,
            virtual_kx: cfg.array_p * cfg.symbols_m,
            virtual_ky: cfg.array_q * cfg.subcarriers_n,
            area_side_m: cfg.area_side_m,
        }
    }

    pub fn altitude(&self) -> f64 {
        self.haps_position[2]
    }

    /// Slant range from a ground point to the array.
    pub fn distance(&self, pos: [f64; 2]) -> f64 {
        let h = self.altitude();
        (pos[0] * pos[0] + pos[1] * pos[1] + h * h).sqrt()
    }

    pub fn direction_cosines(&self, pos: [f64; 2]) -> (f64, f64) {
        ground_to_direction_cosines(pos, self)
    }

    /// Inverse of [`ground_to_direction_cosines`]; `None` at or beyond the horizon.
    pub fn ground_position(&self, u: f64, v: f64) -> Option<[f64; 2]> {
        let w2 = 1.0 - u * u - v * v;
        if !(w2 > 0.0) {
            return None;
        }
        let scale = self.altitude() / w2.sqrt();
        Some([u * scale, v * scale])
    }

    pub fn contains(&self, pos: [f64; 2]) -> bool {
        let half = self.area_side_m / 2.0;
        pos[0].abs() <= half && pos[1].abs() <= half
    }
}

/// Direction cosines of a ground point seen from the HAPS:
/// `u = x / r`, `v = y / r` with `r` the slant range.
pub fn ground_to_direction_cosines(pos: [f64; 2], geom: &HapsGeometry) -> (f64, f64) {
    let r = geom.distance(pos);
    (pos[0] / r, pos[1] / r)
}

/// Cell-centred square evaluation grid shared by every reconstruction method.
///
/// Cell `(i, j)` is stored at row-major index `i * side + j`; `i` runs along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGrid {
    pub side: usize,
    pub area_side_m: f64,
}

impl EvalGrid {
    pub fn cell_size(&self) -> f64 {
        self.area_side_m / self.side as f64
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        let c = self.cell_size();
        let origin = -self.area_side_m / 2.0;
        [origin + (i as f64 + 0.5) * c, origin + (j as f64 + 0.5) * c]
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Cell centres in storage order.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.side)
            .flat_map(|i| (0..self.side).map(move |j| (i, j)))
            .map(|(i, j)| self.cell_center(i, j))
            .collect()
    }
}

/// Sensing devices scattered over the area.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSet {
    pub positions: Vec<[f64; 2]>,
    /// `(u, v)` per device, as seen from the HAPS.
    pub direction_cosines: Vec<(f64, f64)>,
}

impl DeviceSet {
    pub fn from_positions(positions: Vec<[f64; 2]>, geom: &HapsGeometry) -> Self {
        let direction_cosines = positions.iter().map(|&p| geom.direction_cosines(p)).collect();
        Self {
            positions,
            direction_cosines,
        }
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> DeviceSet {
        DeviceSet {
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            direction_cosines: indices.iter().map(|&i| self.direction_cosines[i]).collect(),
        }
    }
}

/// Places `round(density * area)` devices i.i.d. uniformly over the square.
pub fn place_devices<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<DeviceSet> {
    let count = cfg.expected_device_count();
    if count == 0 {
        return Err(Error::invalid(
            "device_density_per_km2",
            format!(
                "density {} over {} km^2 yields no devices",
                cfg.device_density_per_km2,
                cfg.area_km2()
            ),
        ));
    }
    let half = cfg.area_side_m / 2.0;
    let positions = (0..count)
        .map(|_| [rng.random_range(-half..half), rng.random_range(-half..half)])
        .collect();
    Ok(DeviceSet::from_positions(positions, &cfg.geometry()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn geom_with_altitude(h: f64) -> HapsGeometry {
        ScenarioConfig {
            haps_altitude_m: h,
            ..ScenarioConfig::desk()
        }
        .geometry()
    }

    #[test]
    fn full_scale_defaults() {
        let cfg = ScenarioConfig::full_scale();
        cfg.validate().unwrap();
        assert_eq!(cfg.expected_device_count(), 50_000);
        let g = cfg.geometry();
        assert_eq!((g.virtual_kx, g.virtual_ky), (192, 192));
        assert_abs_diff_eq!(g.element_spacing_m, g.wavelength_m / 2.0);
    }

    #[test]
    fn parses_desk_text_and_round_trips() {
        let text = "area_side_m = 4000\nhaps_altitude_m = 2000 # km-scale\narray_p=8\narray_q = 8\nsymbols_m = 6\nsubcarriers_n = 6\n";
        let cfg: ScenarioConfig = text.parse().unwrap();
        assert_eq!(cfg.geometry().virtual_kx, 48);
        let again: ScenarioConfig = cfg.to_config_string().parse().unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_equal_encode_bounds_by_name() {
        let err = "encode_min = 1.0\nencode_max = 1.0\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("encode_max"), "{err}");
    }

    #[test]
    fn rejects_unknown_key_and_garbage() {
        let err = "wibble = 3\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
        let err = "array_p\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(matches!(err, Error::ConfigParse { .. }));
        let err = "array_p = 1\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(err.to_string().contains("array_p"));
    }

    #[test]
    fn pure_los_k_factor_parses() {
        let cfg: ScenarioConfig = "rician_k_db = inf\n".parse().unwrap();
        assert!(cfg.rician_k_db.is_infinite());
    }

    #[test]
    fn shipped_config_files_are_valid() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
        let desk = ScenarioConfig::load(format!("{dir}/desk.cfg")).unwrap();
        assert_eq!(desk, ScenarioConfig::desk());
        let full = ScenarioConfig::load(format!("{dir}/full.cfg")).unwrap();
        assert_eq!(full, ScenarioConfig::full_scale());
        assert_eq!(full.expected_device_count(), 50_000);
    }

    #[test]
    fn direction_cosine_examples() {
        let g = geom_with_altitude(12.0);
        assert_eq!(ground_to_direction_cosines([0.0, 0.0], &g), (0.0, 0.0));
        let (u, v) = ground_to_direction_cosines([3.0, 4.0], &g);
        assert_abs_diff_eq!(u, 3.0 / 13.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 4.0 / 13.0, epsilon = 1e-15);
        let g = geom_with_altitude(2000.0);
        let (u, v) = ground_to_direction_cosines([2000.0, 0.0], &g);
        assert_abs_diff_eq!(u, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn placement_is_deterministic() {
        let cfg = ScenarioConfig::desk();
        let a = place_devices(&cfg, &mut substream(3, Stream::Placement, 0)).unwrap();
        let b = place_devices(&cfg, &mut substream(3, Stream::Placement, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count(), 800);
        assert!(a.positions.iter().all(|&p| cfg.geometry().contains(p)));
    }

    #[test]
    fn zero_density_is_an_error() {
        let cfg = ScenarioConfig {
            device_density_per_km2: 0.0,
            ..ScenarioConfig::desk()
        };
        assert!(place_devices(&cfg, &mut substream(0, Stream::Placement, 0)).is_err());
    }

    #[test]
    fn quadrant_counts_match_binomial() {
        // Pooled over 100 seeds each quadrant holds Binomial(80000, 1/4).
        let cfg = ScenarioConfig::desk();
        let trials = 100.0 * 800.0;
        let (mean, sigma) = (trials * 0.25, (trials * 0.25 * 0.75f64).sqrt());
        let mut quads = [0usize; 4];
        for seed in 0..100 {
            let devices = place_devices(&cfg, &mut substream(seed, Stream::Placement, 0)).unwrap();
            assert_eq!(devices.count(), 800);
            for p in &devices.positions {
                quads[(p[0] >= 0.0) as usize * 2 + (p[1] >= 0.0) as usize] += 1;
            }
        }
        for q in quads {
            assert!((q as f64 - mean).abs() <= 3.0 * sigma, "{quads:?}");
        }
    }

    #[test]
    fn eval_grid_centres() {
        let g = ScenarioConfig::desk().eval_grid();
        let c = g.cell_center(0, 47);
        assert_abs_diff_eq!(c[0], -2000.0 + 4000.0 / 96.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c[1], 2000.0 - 4000.0 / 96.0, epsilon = 1e-9);
        assert_eq!(g.centers().len(), 48 * 48);
    }

    proptest! {
        #[test]
        fn direction_cosines_inside_unit_disc_and_invertible(
            x in -20_000.0f64..20_000.0, y in -20_000.0f64..20_000.0, h in 100.0f64..30_000.0
        ) {
            let g = geom_with_altitude(h);
            let (u, v) = g.direction_cosines([x, y]);
            prop_assert!(u * u + v * v < 1.0);
            let back = g.ground_position(u, v).unwrap();
            let scale = (x * x + y * y).sqrt().max(1.0);
            prop_assert!(((back[0] - x).powi(2) + (back[1] - y).powi(2)).sqrt() / scale < 1e-9);
        }
    }
}
