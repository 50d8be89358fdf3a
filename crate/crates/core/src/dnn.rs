//! Pointwise DNN estimator wrapped around the linear pipeline.
//!
//! A filter network maps the query's direction cosines to a real window that
//! is applied separably to both virtual-array axes before beamforming toward
//! the query's AoA bin. A soft-clip network replaces the hard clip of the
//! per-pair ratio. Both are trained jointly on measurements relayed from a
//! subset of devices.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::GroundEstimate;
use crate::field::AmplitudeCodec;
use crate::linear::{aoa_transform_unchecked, bin_direction, nearest_bin};
use crate::mlp::{Activation, Adam, Gradients, Layer, Mlp};
use crate::phy::ReceivedPair;
use crate::scenario::{HapsGeometry, RatioStatistic, ScenarioConfig};

/// Hidden widths of the filter network.
pub const FILTER_HIDDEN: [usize; 2] = [96, 192];
/// Widths of the soft-clip network.
pub const CLIP_WIDTHS: [usize; 4] = [1, 3, 3, 1];
/// Standard deviation of the filter output weights at reference initialization.
///
/// Zero makes the initial window exactly all-ones. Weak reference bins
/// amplify any ripple in the window, so even 1e-5 moves some cells by more
/// than 1e-3 away from the linear map. The output weights still receive
/// gradients from the first step on.
pub const FILTER_OUTPUT_STD: f64 = 0.0;
/// Input slope of the clip network's near-linear path.
const CLIP_INPUT_GAIN: f64 = 0.01;
/// Weight of the unused clip units on the output.
const CLIP_SPARE_GAIN: f64 = 1e-5;

const MODEL_MAGIC: &str = "MAPX-POINTWISE v1";

/// Virtual arrays of one subframe pair plus the peak of its unwindowed
/// reference AoA map, which anchors the degeneracy guard.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub reference: Array2<Complex64>,
    pub information: Array2<Complex64>,
    pub reference_peak: f64,
}

impl PreparedPair {
    pub fn new(pair: &ReceivedPair, geom: &HapsGeometry) -> Result<Self> {
        if geom.virtual_kx != geom.virtual_ky {
            return Err(Error::InvalidInput(format!(
                "pointwise model needs a square virtual array, got {}x{}",
                geom.virtual_kx, geom.virtual_ky
            )));
        }
        let (v_ref, v_info) = pair.unfold(geom)?;
        let reference_peak = aoa_transform_unchecked(&v_ref.data)
            .bins
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        Ok(Self {
            reference: v_ref.data,
            information: v_info.data,
            reference_peak,
        })
    }

    pub fn side(&self) -> usize {
        self.reference.nrows()
    }
}

pub fn prepare_pairs(pairs: &[ReceivedPair], geom: &HapsGeometry) -> Result<Vec<PreparedPair>> {
    pairs.par_iter().map(|p| PreparedPair::new(p, geom)).collect()
}

/// Result of windowed beamforming of one pair toward one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamRatio {
    pub ratio: f64,
    /// Reference beam too weak relative to the pair's peak, or ratio not finite.
    pub degenerate: bool,
}

fn steering(dir: f64, len: usize) -> Vec<Complex64> {
    (0..len).map(|k| Complex64::cis(-PI * k as f64 * dir)).collect()
}

/// `sum_k e_u[k] w_k sum_l w_l e_v[l] x[k, l]`, plus the partial sums needed
/// for `dB/dw` when `partials` is given: `rows[k] = sum_l w_l e_v[l] x[k, l]`
/// and `cols[l] = sum_k w_k e_u[k] x[k, l]`.
fn windowed_sum(
    x: &Array2<Complex64>,
    wu: &[Complex64],
    wv: &[Complex64],
    partials: Option<(&mut [Complex64], &mut [Complex64])>,
) -> Complex64 {
    let k_len = wu.len();
    let mut total = Complex64::new(0.0, 0.0);
    match partials {
        None => {
            for (k, row) in x.rows().into_iter().enumerate() {
                let t: Complex64 = row.iter().zip(wv).map(|(a, b)| a * b).sum();
                total += wu[k] * t;
            }
        }
        Some((rows, cols)) => {
            cols.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (k, row) in x.rows().into_iter().enumerate() {
                let mut t = Complex64::new(0.0, 0.0);
                for ((a, b), c) in row.iter().zip(wv).zip(cols.iter_mut()) {
                    t += a * b;
                    *c += wu[k] * a;
                }
                rows[k] = t;
                total += wu[k] * t;
            }
            debug_assert_eq!(rows.len(), k_len);
        }
    }
    total
}

struct BeamGrad {
    beam: BeamRatio,
    d_window: Vec<f64>,
}

/// Shared core of [`filtered_beamform`]; `e_u`, `e_v` are the unwindowed steering vectors.
fn beamform_core(
    pair: &PreparedPair,
    e_u: &[Complex64],
    e_v: &[Complex64],
    window: &[f64],
    statistic: RatioStatistic,
    clip_epsilon: f64,
    want_grad: bool,
) -> BeamGrad {
    let k = window.len();
    let wu: Vec<Complex64> = e_u.iter().zip(window).map(|(e, w)| e * w).collect();
    let wv: Vec<Complex64> = e_v.iter().zip(window).map(|(e, w)| e * w).collect();
    let mut bufs = want_grad.then(|| vec![Complex64::new(0.0, 0.0); 4 * k]);
    let (b_ref, b_info, partials) = match bufs.as_mut() {
        None => (
            windowed_sum(&pair.reference, &wu, &wv, None),
            windowed_sum(&pair.information, &wu, &wv, None),
            None,
        ),
        Some(buf) => {
            let (ref_part, info_part) = buf.split_at_mut(2 * k);
            let (rr, rc) = ref_part.split_at_mut(k);
            let (ir, ic) = info_part.split_at_mut(k);
            let br = windowed_sum(&pair.reference, &wu, &wv, Some((&mut *rr, &mut *rc)));
            let bi = windowed_sum(&pair.information, &wu, &wv, Some((&mut *ir, &mut *ic)));
            (br, bi, Some((rr, rc, ir, ic)))
        }
    };

    let gain = window.iter().sum::<f64>() / k as f64;
    let floor = clip_epsilon * pair.reference_peak * gain * gain;
    let q = b_info / b_ref;
    let ratio = match statistic {
        RatioStatistic::Real => q.re,
        RatioStatistic::Magnitude => q.norm(),
    };
    let degenerate =
        !(pair.reference_peak > 0.0 && b_ref.norm() > 0.0 && b_ref.norm() >= floor && ratio.is_finite());
    let beam = BeamRatio { ratio, degenerate };

    let d_window = match partials {
        Some((rr, rc, ir, ic)) if !degenerate => (0..k)
            .map(|m| {
                let d_ref = e_u[m] * rr[m] + e_v[m] * rc[m];
                let d_info = e_u[m] * ir[m] + e_v[m] * ic[m];
                let dq = (d_info - q * d_ref) / b_ref;
                match statistic {
                    RatioStatistic::Real => dq.re,
                    RatioStatistic::Magnitude => (q.conj() * dq).re / q.norm(),
                }
            })
            .collect(),
        _ => Vec::new(),
    };
    BeamGrad { beam, d_window }
}

/// Beamforms both tensors of `pair` toward `(u, v)` through the separable
/// `window` and returns the ratio of information to reference.
///
/// The ratio is invariant to positive rescaling of `window`. The beam is
/// degenerate when `|B_ref| < clip_epsilon * peak * (mean window)^2`, which
/// coincides with the linear guard for the all-ones window.
pub fn filtered_beamform(
    pair: &PreparedPair,
    u: f64,
    v: f64,
    window: &[f64],
    cfg: &ScenarioConfig,
) -> Result<BeamRatio> {
    let k = pair.side();
    if window.len() != k || pair.reference.ncols() != k {
        return Err(Error::Shape {
            expected: vec![k],
            got: vec![window.len()],
        });
    }
    let (e_u, e_v) = (steering(u, k), steering(v, k));
    Ok(beamform_core(pair, &e_u, &e_v, window, cfg.ratio_statistic, cfg.clip_epsilon, false).beam)
}

/// Where a ground point lands: the network input and the AoA bin it beamforms toward.
#[derive(Debug, Clone)]
struct Query {
    input: [f64; 2],
    e_u: Vec<Complex64>,
    e_v: Vec<Complex64>,
}

impl Query {
    fn new(model: &PointwiseModel, pos: [f64; 2], geom: &HapsGeometry) -> Option<Self> {
        let k = geom.virtual_kx;
        let (u, v) = geom.direction_cosines(pos);
        let bu = nearest_bin(u, k)?;
        let bv = nearest_bin(v, geom.virtual_ky)?;
        Some(Self {
            input: [u / model.input_scale[0], v / model.input_scale[1]],
            e_u: steering(bin_direction(bu, k), k),
            e_v: steering(bin_direction(bv, geom.virtual_ky), k),
        })
    }
}

/// The filter and soft-clip networks with their optimizer state.
#[derive(Debug, Clone)]
pub struct PointwiseModel {
    pub filter_net: Mlp,
    pub clip_net: Mlp,
    /// Direction cosines are divided by these to land in `[-1, 1]` over the area.
    pub input_scale: [f64; 2],
    filter_opt: Option<Adam>,
    clip_opt: Option<Adam>,
}

/// Largest direction cosine along each axis over the coverage square.
fn coverage_scale(geom: &HapsGeometry) -> [f64; 2] {
    let half = geom.area_side_m / 2.0;
    let edge = half / half.hypot(geom.altitude());
    [edge, edge]
}

/// Clip network that is the identity to within a few 1e-5 over the amplitude range.
fn reference_clip_net<R: Rng + ?Sized>(codec: &AmplitudeCodec, rng: &mut R) -> Mlp {
    // out = c + tanh(tanh(a (x - c))) / a is linear up to a cubic term of order a^2.
    let c = 0.5 * (codec.min + codec.max);
    let a = CLIP_INPUT_GAIN;
    let spare = Normal::new(0.0, 1.0).expect("unit normal");
    let mut l1 = Layer::zeros(1, 3, Activation::Tanh);
    l1.weights = vec![a, spare.sample(rng), spare.sample(rng)];
    l1.bias = vec![-a * c, 0.5 * spare.sample(rng), 0.5 * spare.sample(rng)];
    let mut l2 = Layer::zeros(3, 3, Activation::Tanh);
    *l2.weight_mut(0, 0) = 1.0;
    for o in 1..3 {
        for i in 0..3 {
            *l2.weight_mut(o, i) = spare.sample(rng);
        }
    }
    let mut l3 = Layer::zeros(3, 1, Activation::Identity);
    l3.weights = vec![1.0 / a, CLIP_SPARE_GAIN, -CLIP_SPARE_GAIN];
    l3.bias = vec![c];
    Mlp::from_layers(vec![l1, l2, l3]).expect("consistent widths")
}

impl PointwiseModel {
    /// Model that reproduces the linear estimator: the filter net emits an
    /// almost exactly all-ones window and the clip net is the identity on the
    /// amplitude range.
    pub fn reference(geom: &HapsGeometry, cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        Self::with_filter_output_std(geom, cfg, seed, FILTER_OUTPUT_STD)
    }

    pub fn with_filter_output_std(
        geom: &HapsGeometry,
        cfg: &ScenarioConfig,
        seed: u64,
        output_std: f64,
    ) -> Result<Self> {
        if geom.virtual_kx != geom.virtual_ky {
            return Err(Error::InvalidInput("pointwise model needs a square virtual array".into()));
        }
        let mut rng = crate::rng::substream(seed, crate::rng::Stream::ModelInit, 0);
        let widths = [2, FILTER_HIDDEN[0], FILTER_HIDDEN[1], geom.virtual_kx];
        let mut filter_net = Mlp::new(&widths, Activation::Relu, &mut rng)?;
        let out = filter_net.layers_mut().last_mut().expect("three layers");
        let normal = Normal::new(0.0, output_std)
            .map_err(|e| Error::InvalidInput(format!("filter output std: {e}")))?;
        out.weights.iter_mut().for_each(|w| *w = normal.sample(&mut rng));
        out.bias.iter_mut().for_each(|b| *b = 1.0);
        let clip_net = reference_clip_net(&AmplitudeCodec::from_config(cfg), &mut rng);
        Ok(Self {
            filter_net,
            clip_net,
            input_scale: coverage_scale(geom),
            filter_opt: None,
            clip_opt: None,
        })
    }

    pub fn window(&self, input: [f64; 2]) -> Result<Vec<f64>> {
        self.filter_net.forward(&input)
    }

    pub fn soft_clip(&self, ratio: f64) -> Result<f64> {
        Ok(self.clip_net.forward(&[ratio])?[0])
    }

    /// Writes a text header describing both networks followed by their
    /// parameters as little-endian `f64`. Optimizer moments are not stored.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{MODEL_MAGIC}")?;
        writeln!(out, "input_scale {:e} {:e}", self.input_scale[0], self.input_scale[1])?;
        for (name, net) in [("filter", &self.filter_net), ("clip", &self.clip_net)] {
            let widths: Vec<String> = net.widths().iter().map(|w| w.to_string()).collect();
            writeln!(out, "net {name} {} {}", net.hidden_activation().name(), widths.join(" "))?;
        }
        writeln!(out, "end")?;
        for net in [&self.filter_net, &self.clip_net] {
            for p in net.params() {
                out.write_all(&p.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |msg: String| Error::Format {
            path: path.display().to_string(),
            msg,
        };
        let mut reader = BufReader::new(std::fs::File::open(path)?);
        let mut line = String::new();
        let mut next_line = |reader: &mut BufReader<std::fs::File>| -> Result<String> {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(bad("truncated header".into()));
            }
            Ok(line.trim_end().to_string())
        };
        if next_line(&mut reader)? != MODEL_MAGIC {
            return Err(bad(format!("expected '{MODEL_MAGIC}'")));
        }
        let scale_line = next_line(&mut reader)?;
        let scale: Vec<f64> = scale_line
            .strip_prefix("input_scale ")
            .ok_or_else(|| bad("missing input_scale".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if scale.len() != 2 {
            return Err(bad("input_scale needs two values".into()));
        }
        let mut nets = Vec::new();
        loop {
            let l = next_line(&mut reader)?;
            if l == "end" {
                break;
            }
            let tokens: Vec<&str> = l.split_whitespace().collect();
            if tokens.len() < 5 || tokens[0] != "net" {
                return Err(bad(format!("unexpected header line '{l}'")));
            }
            let act = Activation::from_name(tokens[2]).ok_or_else(|| bad(format!("unknown activation '{}'", tokens[2])))?;
            let widths: Vec<usize> = tokens[3..]
                .iter()
                .map(|t| t.parse().map_err(|_| bad(format!("bad width '{t}'"))))
                .collect::<Result<_>>()?;
            nets.push((tokens[1].to_string(), Mlp::zeros(&widths, act)?));
        }
        let names: Vec<&str> = nets.iter().map(|(n, _)| n.as_str()).collect();
        if names != ["filter", "clip"] {
            return Err(bad(format!("expected filter and clip nets, found {names:?}")));
        }
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let want: usize = nets.iter().map(|(_, n)| n.num_params()).sum::<usize>() * 8;
        if bytes.len() != want {
            return Err(bad(format!("expected {want} parameter bytes, found {}", bytes.len())));
        }
        let mut values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        for (_, net) in &mut nets {
            let p: Vec<f64> = values.by_ref().take(net.num_params()).collect();
            net.set_params(&p)?;
        }
        let clip_net = nets.pop().expect("two nets").1;
        let filter_net = nets.pop().expect("two nets").1;
        Ok(Self {
            filter_net,
            clip_net,
            input_scale: [scale[0], scale[1]],
            filter_opt: None,
            clip_opt: None,
        })
    }
}

/// Estimate at one query: each non-degenerate pair's ratio is soft-clipped
/// and decoded, then the decoded values are averaged.
fn estimate_at(
    model: &PointwiseModel,
    pairs: &[PreparedPair],
    query: &Query,
    cfg: &ScenarioConfig,
) -> Result<Option<f64>> {
    let codec = AmplitudeCodec::from_config(cfg);
    let window = model.window(query.input)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for pair in pairs {
        let beam = beamform_core(pair, &query.e_u, &query.e_v, &window, cfg.ratio_statistic, cfg.clip_epsilon, false).beam;
        if beam.degenerate {
            continue;
        }
        sum += codec.decode(model.soft_clip(beam.ratio)?)?;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

fn check_pairs(pairs: &[PreparedPair], geom: &HapsGeometry) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("pointwise estimation needs at least one pair".into()));
    }
    if let Some(p) = pairs.iter().find(|p| p.reference.dim() != (geom.virtual_kx, geom.virtual_ky)) {
        return Err(Error::Shape {
            expected: vec![geom.virtual_kx, geom.virtual_ky],
            got: vec![p.reference.nrows(), p.reference.ncols()],
        });
    }
    Ok(())
}

/// Measurement estimate at `pos`.
pub fn dnn_estimate(
    model: &PointwiseModel,
    pairs: &[PreparedPair],
    pos: [f64; 2],
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    check_pairs(pairs, geom)?;
    let query = Query::new(model, pos, geom)
        .ok_or_else(|| Error::Degenerate(format!("{pos:?} falls on an aliased AoA bin")))?;
    estimate_at(model, pairs, &query, cfg)?
        .ok_or_else(|| Error::Degenerate(format!("every pair is degenerate at {pos:?}")))
}

/// [`dnn_estimate`] over the evaluation grid; aliased or degenerate cells are invalid.
pub fn dnn_map(
    model: &PointwiseModel,
    pairs: &[PreparedPair],
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
) -> Result<GroundEstimate> {
    check_pairs(pairs, geom)?;
    let grid = cfg.eval_grid();
    let side = grid.side;
    let cells = (0..side * side)
        .into_par_iter()
        .map(|idx| {
            let pos = grid.cell_center(idx / side, idx % side);
            match Query::new(model, pos, geom) {
                Some(q) => estimate_at(model, pairs, &q, cfg),
                None => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let values = Array2::from_shape_fn((side, side), |(i, j)| cells[i * side + j].unwrap_or(0.0));
    let valid = Array2::from_shape_fn((side, side), |(i, j)| cells[i * side + j].is_some());
    Ok(GroundEstimate { values, valid })
}

/// A measurement relayed terrestrially from a known position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub position: [f64; 2],
    pub measurement: f64,
}

/// Picks `count` distinct devices and relays their measurements with the
/// observation-link noise of `cfg`.
pub fn relay_training_set<R: Rng + ?Sized>(
    positions: &[[f64; 2]],
    measurements: &[f64],
    count: usize,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<TrainingSample>> {
    if positions.len() != measurements.len() {
        return Err(Error::InvalidInput("positions and measurements differ in length".into()));
    }
    if count == 0 || count > positions.len() {
        return Err(Error::InvalidInput(format!(
            "cannot relay {count} of {} devices",
            positions.len()
        )));
    }
    let sd = cfg.obs_noise_variance().sqrt();
    let picks = index::sample(rng, positions.len(), count).into_vec();
    Ok(picks
        .into_iter()
        .map(|i| {
            let noise: f64 = if sd > 0.0 { sd * rng.sample::<f64, _>(rand_distr::StandardNormal) } else { 0.0 };
            TrainingSample {
                position: positions[i],
                measurement: measurements[i] + noise,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Samples withheld from the gradient to pick the returned checkpoint.
    /// Zero keeps the parameters of the last step.
    pub holdout: usize,
    /// Steps between held-out evaluations.
    pub eval_every: usize,
    /// Seeds the held-out split and minibatch sampling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 64,
            learning_rate: 3e-5,
            holdout: 64,
            eval_every: 50,
            seed: 0,
        }
    }
}

/// Per-step minibatch loss and the held-out curve, both as mean squared
/// error in measurement units.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTrace {
    pub losses: Vec<f64>,
    /// `(steps taken, held-out loss)`, starting with the untrained model.
    pub validation: Vec<(usize, f64)>,
    /// Steps taken by the returned parameters.
    pub best_step: usize,
}

impl LossTrace {
    /// Mean loss of the first and last `span` steps.
    pub fn endpoints(&self, span: usize) -> (f64, f64) {
        let span = span.clamp(1, self.losses.len().max(1));
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
        (
            mean(&self.losses[..span.min(self.losses.len())]),
            mean(&self.losses[self.losses.len().saturating_sub(span)..]),
        )
    }
}

/// Accumulates the gradient of one example's squared error; returns the error
/// or `None` when every pair is degenerate.
fn accumulate_example(
    model: &PointwiseModel,
    pairs: &[PreparedPair],
    query: &Query,
    target: f64,
    cfg: &ScenarioConfig,
    filter_grads: &mut Gradients,
    clip_grads: &mut Gradients,
) -> Result<Option<f64>> {
    let codec = AmplitudeCodec::from_config(cfg);
    let ftrace = model.filter_net.forward_trace(&query.input)?;
    let window = ftrace.output();
    let mut valid = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let bg = beamform_core(pair, &query.e_u, &query.e_v, window, cfg.ratio_statistic, cfg.clip_epsilon, true);
        if !bg.beam.degenerate {
            let ctrace = model.clip_net.forward_trace(&[bg.beam.ratio])?;
            valid.push((ctrace, bg.d_window));
        }
    }
    if valid.is_empty() {
        return Ok(None);
    }
    let n = valid.len() as f64;
    let estimate = valid
        .iter()
        .map(|(t, _)| codec.decode_unclamped(t.output()[0]))
        .sum::<f64>()
        / n;
    let err = estimate - target;
    let g_amp = 2.0 * err / n * codec.decode_slope();
    let mut upstream = vec![0.0; window.len()];
    for (ctrace, d_window) in &valid {
        let d_ratio = model.clip_net.backward_into(ctrace, &[g_amp], clip_grads)?[0];
        upstream.iter_mut().zip(d_window).for_each(|(u, d)| *u += d_ratio * d);
    }
    model.filter_net.backward_into(&ftrace, &upstream, filter_grads)?;
    Ok(Some(err))
}

/// Joint minibatch training of both networks on relayed samples.
pub fn train_online(
    model: &mut PointwiseModel,
    pairs: &[PreparedPair],
    samples: &[TrainingSample],
    geom: &HapsGeometry,
    cfg: &ScenarioConfig,
    train: &TrainConfig,
) -> Result<LossTrace> {
    check_pairs(pairs, geom)?;
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if train.batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be positive".into()));
    }
    let queries = samples
        .iter()
        .map(|s| {
            if !geom.contains(s.position) {
                return Err(Error::InvalidInput(format!("training position {:?} outside coverage", s.position)));
            }
            Query::new(model, s.position, geom)
                .ok_or_else(|| Error::InvalidInput(format!("training position {:?} is aliased", s.position)))
        })
        .collect::<Result<Vec<_>>>()?;

    if train.holdout >= samples.len() {
        return Err(Error::InvalidInput(format!(
            "holding out {} of {} samples leaves nothing to train on",
            train.holdout,
            samples.len()
        )));
    }

    let mut filter_opt = model
        .filter_opt
        .take()
        .unwrap_or_else(|| Adam::new(&model.filter_net, train.learning_rate));
    let mut clip_opt = model
        .clip_opt
        .take()
        .unwrap_or_else(|| Adam::new(&model.clip_net, train.learning_rate));
    filter_opt.learning_rate = train.learning_rate;
    clip_opt.learning_rate = train.learning_rate;

    let mut rng = crate::rng::substream(train.seed, crate::rng::Stream::Training, 0);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let (held, fit) = order.split_at(train.holdout);
    let held_loss = |model: &PointwiseModel| -> Result<f64> {
        let mut sq = 0.0;
        let mut n = 0usize;
        for &i in held {
            if let Some(est) = estimate_at(model, pairs, &queries[i], cfg)? {
                sq += (est - samples[i].measurement).powi(2);
                n += 1;
            }
        }
        Ok(if n == 0 { f64::INFINITY } else { sq / n as f64 })
    };

    let mut validation = Vec::new();
    let mut best = None;
    if !held.is_empty() {
        let loss = held_loss(model)?;
        validation.push((0, loss));
        best = Some((loss, 0, model.filter_net.clone(), model.clip_net.clone()));
    }
    let mut losses = Vec::with_capacity(train.steps);
    for step in 0..train.steps {
        let mut fg = Gradients::zeros_like(&model.filter_net);
        let mut cg = Gradients::zeros_like(&model.clip_net);
        let mut sq = 0.0;
        let mut used = 0usize;
        for _ in 0..train.batch_size {
            let i = fit[rng.random_range(0..fit.len())];
            if let Some(err) = accumulate_example(model, pairs, &queries[i], samples[i].measurement, cfg, &mut fg, &mut cg)? {
                sq += err * err;
                used += 1;
            }
        }
        if used == 0 {
            return Err(Error::Degenerate(format!("every example of step {step} is degenerate")));
        }
        fg.scale(1.0 / used as f64);
        cg.scale(1.0 / used as f64);
        filter_opt.step(&mut model.filter_net, &fg);
        clip_opt.step(&mut model.clip_net, &cg);
        losses.push(sq / used as f64);

        let taken = step + 1;
        if let Some(b) = best.as_mut() {
            if taken % train.eval_every.max(1) == 0 || taken == train.steps {
                let loss = held_loss(model)?;
                validation.push((taken, loss));
                if loss < b.0 {
                    *b = (loss, taken, model.filter_net.clone(), model.clip_net.clone());
                }
            }
        }
    }
    let best_step = match best {
        Some((_, step, filter, clip)) => {
            model.filter_net = filter;
            model.clip_net = clip;
            step
        }
        None => train.steps,
    };
    model.filter_opt = Some(filter_opt);
    model.clip_opt = Some(clip_opt);
    Ok(LossTrace {
        losses,
        validation,
        best_step,
    })
}
