//! Simulation and reconstruction toolkit for massive non-orthogonal
//! device-to-HAPS data imaging.
//!
//! Devices spread over a square area encode a spatially correlated
//! measurement as a transmit amplitude and all transmit at once on shared
//! OFDM resources. A per-resource phase rule turns the HAPS array's
//! `P x Q` antennas and `M x N` resources into a virtual `PM x QN` array; a
//! reference/information subframe pair then lets the receiver cancel the
//! aggregate channel per angle-of-arrival bin.
//!
//! Modules, bottom-up:
//!
//! - [`scenario`]: config, geometry, device placement
//! - [`field`]: Gaussian random field and the amplitude codec
//! - [`phy`]: channel, superposed reception, virtual-array unfolding
//! - [`linear`]: AoA transform, division and clipping, ground mapping
//! - [`mlp`] and [`dnn`]: MLP engine and the pointwise estimator trained online
//! - [`wsn`]: orthogonal collection and the S-BLUE baseline
//! - [`metrics`], [`harness`], [`dataset`], [`io`]: scoring, sweeps, exports

pub mod dataset;
pub mod dnn;
pub mod error;
pub mod estimate;
pub mod fft;
pub mod field;
pub mod harness;
pub mod io;
pub mod linear;
pub mod metrics;
pub mod mlp;
pub mod phy;
pub mod rng;
pub mod scenario;
pub mod wsn;

pub use error::{Error, Result};
pub use estimate::GroundEstimate;
pub use scenario::{HapsGeometry, ScenarioConfig};
