//! One noiseless device: the unfolded `[p, q, m, n]` tensor is the response
//! of a `PM x QN` antenna array, and its AoA map peaks at the device.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use mapx::linear::{aoa_transform, nearest_bin};
use mapx::phy::{simulate_reception, ChannelRealization};
use mapx::rng::{substream, Stream};
use mapx::scenario::DeviceSet;
use mapx::ScenarioConfig;

pub struct VirtualArrayReport {
    pub max_rel_error: f64,
    pub peak_bin: (usize, usize),
    pub expected_bin: (usize, usize),
}

pub fn run(_out: &Path) -> mapx::Result<VirtualArrayReport> {
    let cfg = ScenarioConfig {
        rician_k_db: f64::INFINITY,
        thermal_noise: false,
        ..ScenarioConfig::desk()
    };
    let geom = cfg.geometry();
    let devices = DeviceSet::from_positions(vec![[900.0, -600.0]], &geom);
    let (u, v) = devices.direction_cosines[0];
    let pair = simulate_reception(&devices, &[0.0], &geom, &cfg, &mut substream(3, Stream::Fading, 0))?;
    let gain = ChannelRealization::draw(&devices, &geom, &cfg, &mut substream(3, Stream::Fading, 0)).gains[0];

    let (reference, _) = pair.unfold(&geom)?;
    let mut worst: f64 = 0.0;
    for ((k, l), z) in reference.data.indexed_iter() {
        let ideal = gain * Complex64::cis(PI * (k as f64 * u + l as f64 * v));
        worst = worst.max((z - ideal).norm() / ideal.norm());
    }

    let map = aoa_transform(&reference, &geom)?;
    let peak_bin = map
        .bins
        .indexed_iter()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(ij, _)| ij)
        .expect("non-empty map");
    let expected_bin = (
        nearest_bin(u, geom.virtual_kx).expect("in view"),
        nearest_bin(v, geom.virtual_ky).expect("in view"),
    );
    Ok(VirtualArrayReport {
        max_rel_error: worst,
        peak_bin,
        expected_bin,
    })
}

fn main() -> mapx::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out".into());
    let r = run(&out)?;
    println!("unfolded vs ideal array: max relative error {:.2e}", r.max_rel_error);
    println!("AoA peak at bin {:?}, device sits in bin {:?}", r.peak_bin, r.expected_bin);
    Ok(())
}
