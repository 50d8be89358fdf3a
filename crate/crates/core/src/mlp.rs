//! Small dense multi-layer perceptron with exact reverse-mode gradients and
//! an Adam optimizer. Sized for the pointwise estimator's two tiny networks;
//! everything is `f64` and single-sample.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative(self, out: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Activation::Identity),
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Dense layer `y = act(W x + b)` with `W` stored row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.in_dim + inp]
    }

    pub fn weight_mut(&mut self, out: usize, inp: usize) -> &mut f64 {
        &mut self.weights[out * self.in_dim + inp]
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.in_dim).zip(&self.bias).map(|(row, b)| {
            let z = row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi);
            self.activation.apply(z)
        }));
    }
}

/// Feed-forward network; hidden layers share one activation, the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Layer outputs from a forward pass, input first.
#[derive(Debug, Clone)]
pub struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds the input")
    }
}

/// Parameter gradients laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flat_map(|v| v.iter_mut())
            .for_each(|g| *g *= s);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    /// Flattened in [`Mlp::params`] order.
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.flatten().iter().all(|&g| g == 0.0)
    }
}

impl Mlp {
    /// Random initialization: He-normal for ReLU layers, Xavier-normal
    /// otherwise, zero biases.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(widths, hidden)?;
        for layer in &mut net.layers {
            let fan_in = layer.in_dim as f64;
            let std = match layer.activation {
                Activation::Relu => (2.0 / fan_in).sqrt(),
                _ => (2.0 / (fan_in + layer.out_dim as f64)).sqrt(),
            };
            let normal = Normal::new(0.0, std).expect("finite std");
            layer.weights.iter_mut().for_each(|w| *w = normal.sample(rng));
        }
        Ok(net)
    }

    pub fn zeros(widths: &[usize], hidden: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidInput(format!("bad layer widths {widths:?}")));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { Activation::Identity } else { hidden };
                Layer::zeros(w[0], w[1], act)
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::Shape {
                    expected: vec![w[0].out_dim],
                    got: vec![w[1].in_dim],
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].in_dim)
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    pub fn hidden_activation(&self) -> Activation {
        self.layers
            .first()
            .filter(|_| self.layers.len() > 1)
            .map_or(Activation::Identity, |l| l.activation)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: vec![self.input_dim()],
                got: vec![x.len()],
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.activations.pop().expect("non-empty"))
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.out_dim);
            layer.forward_into(activations.last().expect("non-empty"), &mut out);
            activations.push(out);
        }
        Ok(Trace { activations })
    }

    /// Accumulates `d(upstream . output) / d params` into `grads` and returns
    /// the gradient with respect to the input.
    pub fn backward_into(&self, trace: &Trace, upstream: &[f64], grads: &mut Gradients) -> Result<Vec<f64>> {
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: vec![self.output_dim()],
                got: vec![upstream.len()],
            });
        }
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(Error::InvalidInput("trace does not belong to this network".into()));
        }
        let mut delta: Vec<f64> = upstream.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let out = &trace.activations[li + 1];
            let inp = &trace.activations[li];
            delta
                .iter_mut()
                .zip(out)
                .for_each(|(d, &o)| *d *= layer.activation.derivative(o));
            let gw = &mut grads.weights[li];
            let gb = &mut grads.biases[li];
            let mut d_in = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = o * layer.in_dim;
                let w = &layer.weights[row..row + layer.in_dim];
                let g = &mut gw[row..row + layer.in_dim];
                for j in 0..layer.in_dim {
                    g[j] += d * inp[j];
                    d_in[j] += d * w[j];
                }
            }
            delta = d_in;
        }
        Ok(delta)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, per layer weights (row-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Shape {
                expected: vec![self.num_params()],
                got: vec![params.len()],
            });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = it.next().expect("length checked"));
        }
        Ok(())
    }
}

/// Parameter gradients of `upstream . net(x)`.
pub fn mlp_gradients(net: &Mlp, x: &[f64], upstream: &[f64]) -> Result<Gradients> {
    let trace = net.forward_trace(x)?;
    let mut grads = Gradients::zeros_like(net);
    net.backward_into(&trace, upstream, &mut grads)?;
    Ok(grads)
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        let n = net.num_params();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let mut idx = 0;
        for (li, layer) in net.layers.iter_mut().enumerate() {
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let g = grads.weights[li].iter().chain(grads.biases[li].iter());
            for (p, &g) in params.zip(g) {
                let m = &mut self.m[idx];
                let v = &mut self.v[idx];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
                idx += 1;
            }
        }
    }
}
