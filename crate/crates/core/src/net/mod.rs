//! Small feed-forward networks, their passes, and exact scalar pushforwards.

mod format;
mod law;
mod pwl;

pub use format::{parse_network, to_network_text};
pub use law::{
    pushforward, reduce_rank_one, ContinuousPart, MappedPart, OutputLaw, RankOneReduction,
    ScalarLaw,
};
pub(crate) use law::merge_atoms;
pub use pwl::{as_scalar_pwl, Affine, PiecewiseLinear};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Identity,
    Relu,
    LeakyRelu(f64),
    /// Heaviside with H(0) = 1.
    Step,
    Sigmoid,
    Tanh,
    Softplus,
    /// Normalized exponential over the whole layer.
    Softmax,
}

impl ActivationKind {
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(
            self,
            Self::Identity | Self::Relu | Self::LeakyRelu(_) | Self::Step
        )
    }

    /// Smooth and strictly increasing coordinate-wise.
    pub fn is_smooth_monotone(&self) -> bool {
        matches!(self, Self::Sigmoid | Self::Tanh | Self::Softplus)
    }

    /// Scalar activation; softmax is handled per layer by [`ActivationKind::apply`].
    pub fn scalar(&self, z: f64) -> f64 {
        match *self {
            Self::Identity | Self::Softmax => z,
            Self::Relu => z.max(0.0),
            Self::LeakyRelu(a) => {
                if z >= 0.0 {
                    z
                } else {
                    a * z
                }
            }
            Self::Step => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Sigmoid => sigmoid(z),
            Self::Tanh => z.tanh(),
            Self::Softplus => softplus(z),
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Self::Softmax => softmax(z),
            _ => z.iter().map(|&v| self.scalar(v)).collect(),
        }
    }

    /// Derivative of a coordinate-wise activation. The kink of ReLU counts as 0,
    /// the kink of leaky ReLU as the negative-side slope.
    fn derivative(&self, z: f64) -> Result<f64> {
        Ok(match *self {
            Self::Identity | Self::Softmax => 1.0,
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::LeakyRelu(a) => {
                if z > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Self::Step => return Err(Error::NonDifferentiable),
            Self::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Self::Tanh => 1.0 - z.tanh().powi(2),
            Self::Softplus => sigmoid(z),
        })
    }

    /// Preimage of `level` under a smooth increasing activation; outside the
    /// range this is +/- infinity.
    pub fn inverse(&self, level: f64) -> Option<f64> {
        match self {
            Self::Sigmoid => Some(if level <= 0.0 {
                f64::NEG_INFINITY
            } else if level >= 1.0 {
                f64::INFINITY
            } else {
                (level / (1.0 - level)).ln()
            }),
            Self::Tanh => Some(if level <= -1.0 {
                f64::NEG_INFINITY
            } else if level >= 1.0 {
                f64::INFINITY
            } else {
                level.atanh()
            }),
            Self::Softplus => Some(if level <= 0.0 {
                f64::NEG_INFINITY
            } else {
                level.exp_m1().ln()
            }),
            Self::Identity => Some(level),
            _ => None,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::Relu => f.write_str("relu"),
            Self::LeakyRelu(a) => write!(f, "leaky_relu:{a}"),
            Self::Step => f.write_str("step"),
            Self::Sigmoid => f.write_str("sigmoid"),
            Self::Tanh => f.write_str("tanh"),
            Self::Softplus => f.write_str("softplus"),
            Self::Softmax => f.write_str("softmax"),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => Self::Identity,
            "relu" => Self::Relu,
            "step" => Self::Step,
            "sigmoid" => Self::Sigmoid,
            "tanh" => Self::Tanh,
            "softplus" => Self::Softplus,
            "softmax" => Self::Softmax,
            _ => {
                let alpha = s
                    .strip_prefix("leaky_relu:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidNetwork(format!("unknown activation `{s}`")))?;
                Self::LeakyRelu(alpha)
            }
        })
    }
}

/// Additive noise on a layer's post-activation output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Centered uniform on [-width/2, width/2].
    Uniform { width: f64 },
    Gaussian { std: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::Uniform { width: p } | NoiseSpec::Gaussian { std: p } => {
                if p > 0.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("noise parameter {p} must be positive")))
                }
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Uniform { width } => (rng.random::<f64>() - 0.5) * width,
            NoiseSpec::Gaussian { std } => {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            NoiseSpec::None => f64::NAN,
            NoiseSpec::Uniform { width } => {
                if x.abs() <= 0.5 * width {
                    1.0 / width
                } else {
                    0.0
                }
            }
            NoiseSpec::Gaussian { std } => {
                let u = x / std;
                (-0.5 * u * u).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// Differential entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        match *self {
            NoiseSpec::None => f64::NEG_INFINITY,
            NoiseSpec::Uniform { width } => width.log2(),
            NoiseSpec::Gaussian { std } => {
                0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * std * std).log2()
            }
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::None => f.write_str("none 0"),
            NoiseSpec::Uniform { width } => write!(f, "uniform {width}"),
            NoiseSpec::Gaussian { std } => write!(f, "gaussian {std}"),
        }
    }
}

/// One layer: out = act(W^T in + b) + noise, with W of shape in x out.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: ActivationKind,
    pub noise: NoiseSpec,
}

impl LayerParams {
    pub fn new(
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        activation: ActivationKind,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let layer = Self {
            weights,
            biases,
            activation,
            noise,
        };
        layer.validate()?;
        Ok(layer)
    }

    fn validate(&self) -> Result<()> {
        let cols = self.biases.len();
        if self.weights.is_empty() || cols == 0 {
            return Err(Error::InvalidNetwork("empty layer".into()));
        }
        for row in &self.weights {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
        }
        if self
            .weights
            .iter()
            .flatten()
            .chain(&self.biases)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidNetwork("non-finite parameter".into()));
        }
        if let ActivationKind::LeakyRelu(a) = self.activation {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidNetwork(format!("leaky slope {a} outside (0,1)")));
            }
        }
        self.noise.validate()
    }

    pub fn input_width(&self) -> usize {
        self.weights.len()
    }

    pub fn output_width(&self) -> usize {
        self.biases.len()
    }

    pub fn preactivation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.biases.clone();
        for (xi, row) in x.iter().zip(&self.weights) {
            for (zj, w) in z.iter_mut().zip(row) {
                *zj += xi * w;
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<LayerParams>,
}

impl Network {
    pub fn new(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("no layers".into()));
        }
        for l in &layers {
            l.validate()?;
        }
        for w in layers.windows(2) {
            if w[0].output_width() != w[1].input_width() {
                return Err(Error::DimensionMismatch {
                    expected: w[0].output_width(),
                    got: w[1].input_width(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output_width()
    }

    pub fn is_stochastic(&self) -> bool {
        self.layers.iter().any(|l| !l.noise.is_none())
    }

    pub fn has_step(&self) -> bool {
        self.layers
            .iter()
            .any(|l| l.activation == ActivationKind::Step)
    }

    /// Same parameters with every noise source removed.
    pub fn without_noise(&self) -> Network {
        let mut n = self.clone();
        for l in &mut n.layers {
            l.noise = NoiseSpec::None;
        }
        n
    }

    /// The encoder of the representation after `n` layers.
    pub fn truncated(&self, n: usize) -> Result<Network> {
        if n == 0 || n > self.layers.len() {
            return Err(Error::InvalidParameter(format!(
                "layer index {n} out of range 1..={}",
                self.layers.len()
            )));
        }
        Network::new(self.layers[..n].to_vec())
    }

    /// Copy with the final activation replaced.
    pub fn with_final_activation(&self, act: ActivationKind) -> Network {
        let mut n = self.clone();
        n.layers.last_mut().unwrap().activation = act;
        n
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.input_width() * l.output_width() + l.output_width())
            .sum()
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter().flatten());
            out.extend(&l.biases);
        }
        out
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: theta.len(),
            });
        }
        let mut it = theta.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().flatten() {
                *w = *it.next().unwrap();
            }
            for b in &mut l.biases {
                *b = *it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Network> {
        let mut n = self.clone();
        n.set_params(theta)?;
        Ok(n)
    }

    /// Noise-free output.
    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for l in &self.layers {
            h = l.activation.apply(&l.preactivation(&h));
        }
        h
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Forward pass drawing layer noise from `rng`.
    pub fn forward_with_rng<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<LayerTrace> {
        self.check_input(x)?;
        let mut trace = LayerTrace {
            input: x.to_vec(),
            preactivations: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
            noise: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.to_vec();
        for l in &self.layers {
            let z = l.preactivation(&h);
            let mut out = l.activation.apply(&z);
            let eta: Vec<f64> = if l.noise.is_none() {
                Vec::new()
            } else {
                out.iter().map(|_| l.noise.sample(rng)).collect()
            };
            for (o, e) in out.iter_mut().zip(&eta) {
                *o += e;
            }
            trace.preactivations.push(z);
            trace.outputs.push(out.clone());
            trace.noise.push(eta);
            h = out;
        }
        Ok(trace)
    }
}

/// Per-layer values of one forward pass, including realized noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub input: Vec<f64>,
    pub preactivations: Vec<Vec<f64>>,
    /// Post-activation, post-noise outputs L_1 .. L_{m+1}.
    pub outputs: Vec<Vec<f64>>,
    /// Realized noise per layer (empty for noiseless layers).
    pub noise: Vec<Vec<f64>>,
}

impl LayerTrace {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().unwrap()
    }
}

pub fn forward(net: &Network, x: &[f64], seed: Option<u64>) -> Result<LayerTrace> {
    match seed {
        Some(s) => net.forward_with_rng(x, &mut ChaCha8Rng::seed_from_u64(s)),
        None if net.is_stochastic() => Err(Error::MissingSeed),
        // Never sampled: every layer is noiseless.
        None => net.forward_with_rng(x, &mut ChaCha8Rng::seed_from_u64(0)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// Gradients flattened in the order of [`Network::params`].
pub fn flatten_grads(grads: &[LayerGrad]) -> Vec<f64> {
    let mut out = Vec::new();
    for g in grads {
        out.extend(g.weights.iter().flatten());
        out.extend(&g.biases);
    }
    out
}

/// Gradient of <upstream, output> along a recorded trace (noise held fixed).
pub fn backward(net: &Network, trace: &LayerTrace, upstream: &[f64]) -> Result<Vec<LayerGrad>> {
    if upstream.len() != net.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.output_dim(),
            got: upstream.len(),
        });
    }
    if net.has_step() {
        return Err(Error::NonDifferentiable);
    }
    let n = net.layers.len();
    let mut grads: Vec<LayerGrad> = Vec::with_capacity(n);
    let mut delta = upstream.to_vec();
    for i in (0..n).rev() {
        let l = &net.layers[i];
        let z = &trace.preactivations[i];
        let dz: Vec<f64> = if l.activation == ActivationKind::Softmax {
            let s = softmax(z);
            let dot: f64 = s.iter().zip(&delta).map(|(a, b)| a * b).sum();
            s.iter().zip(&delta).map(|(si, di)| si * (di - dot)).collect()
        } else {
            z.iter()
                .zip(&delta)
                .map(|(&zj, &dj)| Ok(dj * l.activation.derivative(zj)?))
                .collect::<Result<_>>()?
        };
        let input = if i == 0 {
            &trace.input
        } else {
            &trace.outputs[i - 1]
        };
        let weights = input
            .iter()
            .map(|&xi| dz.iter().map(|&d| xi * d).collect())
            .collect();
        delta = l
            .weights
            .iter()
            .map(|row| row.iter().zip(&dz).map(|(w, d)| w * d).sum())
            .collect();
        grads.push(LayerGrad {
            weights,
            biases: dz,
        });
    }
    grads.reverse();
    Ok(grads)
}

/// Pathwise gradient of <upstream, output> with respect to every parameter.
pub fn grad_params(
    net: &Network,
    x: &[f64],
    upstream: &[f64],
    seed: Option<u64>,
) -> Result<Vec<LayerGrad>> {
    if net.has_step() {
        return Err(Error::NonDifferentiable);
    }
    let trace = forward(net, x, seed)?;
    backward(net, &trace, upstream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use proptest::prelude::*;

    fn clip_net(a: f64, b: f64) -> Network {
        Network::new(vec![
            LayerParams::new(
                vec![vec![1.0, 1.0]],
                vec![-a, -a - b],
                ActivationKind::Relu,
                NoiseSpec::None,
            )
            .unwrap(),
            LayerParams::new(
                vec![vec![1.0], vec![-1.0]],
                vec![0.0],
                ActivationKind::Identity,
                NoiseSpec::None,
            )
            .unwrap(),
        ])
        .unwrap()
    }

    fn single(w: f64, b: f64, act: ActivationKind) -> Network {
        Network::new(vec![
            LayerParams::new(vec![vec![w]], vec![b], act, NoiseSpec::None).unwrap()
        ])
        .unwrap()
    }

    #[test]
    fn forward_clip_examples() {
        let net = clip_net(1.0, 0.25);
        let out = |x: f64| forward(&net, &[x], None).unwrap().output()[0];
        assert_abs_diff_eq!(out(1.1), 0.1, epsilon = 1e-12);
        assert_eq!(out(0.5), 0.0);
        assert_eq!(out(3.0), 0.25);
        let trace = forward(&net, &[1.1], None).unwrap();
        assert_eq!(trace.outputs.len(), 2);
        assert_eq!(trace.outputs[0].len(), 2);
    }

    #[test]
    fn forward_checks_dimension_and_seed() {
        let net = clip_net(1.0, 0.25);
        assert!(matches!(
            forward(&net, &[1.0, 2.0], None),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut noisy = net.clone();
        noisy.layers[0].noise = NoiseSpec::Uniform { width: 0.1 };
        assert_eq!(forward(&noisy, &[1.0], None), Err(Error::MissingSeed));
        let a = forward(&noisy, &[1.0], Some(3)).unwrap();
        let b = forward(&noisy, &[1.0], Some(3)).unwrap();
        assert_eq!(a, b);
        for e in &a.noise[0] {
            assert!(e.abs() <= 0.05);
        }
        assert!(a.noise[1].is_empty());
    }

    #[test]
    fn seed_does_not_affect_noiseless_net() {
        let net = clip_net(1.0, 0.25);
        assert_eq!(
            forward(&net, &[1.2], Some(1)).unwrap(),
            forward(&net, &[1.2], Some(2)).unwrap()
        );
    }

    #[test]
    fn grad_examples() {
        let g = grad_params(&single(2.0, 0.0, ActivationKind::Identity), &[3.0], &[1.0], None)
            .unwrap();
        assert_eq!(g[0].weights[0][0], 3.0);
        assert_eq!(g[0].biases[0], 1.0);
        let g = grad_params(&single(0.0, 0.0, ActivationKind::Sigmoid), &[1.0], &[1.0], None)
            .unwrap();
        assert_abs_diff_eq!(g[0].weights[0][0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0].biases[0], 0.25, epsilon = 1e-15);
        assert_eq!(
            grad_params(&single(1.0, 0.0, ActivationKind::Step), &[1.0], &[1.0], None),
            Err(Error::NonDifferentiable)
        );
    }

    fn random_net(seed: u64, acts: &[ActivationKind], widths: &[usize]) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = acts
            .iter()
            .enumerate()
            .map(|(i, &act)| {
                let (n_in, n_out) = (widths[i], widths[i + 1]);
                LayerParams::new(
                    (0..n_in)
                        .map(|_| (0..n_out).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect(),
                    (0..n_out).map(|_| rng.random_range(-0.5..0.5)).collect(),
                    act,
                    NoiseSpec::None,
                )
                .unwrap()
            })
            .collect();
        Network::new(layers).unwrap()
    }

    fn fd_check(net: &Network, x: &[f64], upstream: &[f64]) {
        let g = flatten_grads(&grad_params(net, x, upstream, None).unwrap());
        let theta = net.params();
        let eps = 1e-5;
        let f = |t: &[f64]| -> f64 {
            let out = net.with_params(t).unwrap().output(x);
            out.iter().zip(upstream).map(|(a, b)| a * b).sum()
        };
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += eps;
            tm[i] -= eps;
            let fd = (f(&tp) - f(&tm)) / (2.0 * eps);
            let scale = fd.abs().max(g[i].abs()).max(1e-3);
            assert!(
                (fd - g[i]).abs() / scale <= 1e-5,
                "param {i}: analytic {} vs fd {fd}",
                g[i]
            );
        }
    }

    #[test]
    fn tanh_net_matches_finite_differences() {
        let net = random_net(3, &[ActivationKind::Tanh, ActivationKind::Tanh], &[2, 3, 1]);
        fd_check(&net, &[0.4, -0.7], &[1.0]);
    }

    #[test]
    fn softmax_and_softplus_match_finite_differences() {
        let net = random_net(
            5,
            &[ActivationKind::Softplus, ActivationKind::Softmax],
            &[3, 4, 3],
        );
        fd_check(&net, &[0.1, 0.2, -0.3], &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn noise_is_reparameterized() {
        let mut net = random_net(8, &[ActivationKind::Tanh, ActivationKind::Sigmoid], &[1, 2, 1]);
        net.layers[0].noise = NoiseSpec::Gaussian { std: 0.3 };
        let trace = forward(&net, &[0.5], Some(4)).unwrap();
        let g = flatten_grads(&backward(&net, &trace, &[1.0]).unwrap());
        // Re-run with the realized noise held fixed as a bias shift in the next layer.
        let eps = 1e-6;
        let theta = net.params();
        let eval = |t: &[f64]| {
            let n = net.with_params(t).unwrap();
            let mut h = trace.input.clone();
            for (i, l) in n.layers().iter().enumerate() {
                h = l.activation.apply(&l.preactivation(&h));
                for (v, e) in h.iter_mut().zip(&trace.noise[i]) {
                    *v += e;
                }
            }
            h[0]
        };
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += eps;
            tm[i] -= eps;
            let fd = (eval(&tp) - eval(&tm)) / (2.0 * eps);
            assert_abs_diff_eq!(fd, g[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn params_round_trip() {
        let mut net = clip_net(0.5, 0.25);
        let mut theta = net.params();
        assert_eq!(theta.len(), net.num_params());
        theta[2] = -7.0;
        net.set_params(&theta).unwrap();
        assert_eq!(net.layers()[0].biases[0], -7.0);
        assert!(net.set_params(&[1.0]).is_err());
    }

    #[test]
    fn activation_tokens_round_trip() {
        for a in [
            ActivationKind::Identity,
            ActivationKind::Relu,
            ActivationKind::LeakyRelu(0.1),
            ActivationKind::Step,
            ActivationKind::Sigmoid,
            ActivationKind::Tanh,
            ActivationKind::Softplus,
            ActivationKind::Softmax,
        ] {
            assert_eq!(a.to_string().parse::<ActivationKind>().unwrap(), a);
        }
        assert!("gelu".parse::<ActivationKind>().is_err());
    }

    #[test]
    fn inverse_of_smooth_activations() {
        for act in [ActivationKind::Sigmoid, ActivationKind::Tanh, ActivationKind::Softplus] {
            for z in [-2.0, -0.3, 0.0, 0.7, 3.0] {
                let y = act.scalar(z);
                assert_abs_diff_eq!(act.inverse(y).unwrap(), z, epsilon = 1e-9);
            }
        }
        assert_eq!(ActivationKind::Sigmoid.inverse(1.0), Some(f64::INFINITY));
    }

    proptest! {
        #[test]
        fn clip_identity(a in -3.0f64..3.0, b in 0.01f64..2.0, x in -10.0f64..10.0) {
            let net = clip_net(a, b);
            let got = net.output(&[x])[0];
            let want = (x - a).max(0.0).min(b);
            prop_assert!((got - want).abs() <= 1e-12);
        }
    }
}
