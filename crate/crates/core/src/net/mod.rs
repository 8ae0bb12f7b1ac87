//! Dense feed-forward binary classifier trained with Adam on binary
//! cross-entropy.
//!
//! Dropout is inverted: in training mode kept units are scaled by
//! `1 / (1 - rate)`, so inference needs no rescaling.

mod adam;
mod io;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use adam::AdamState;
pub use io::{load_network, save_network};
pub use train::{predict_proba, train, train_matrix, EpochStats, TrainConfig, TrainReport};

/// Probabilities are clipped to `[EPSILON, 1 - EPSILON]` inside the loss.
pub const EPSILON: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("expected input of width {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("training partition is empty")]
    EmptyTraining,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            _ => Err(format!("unknown activation {s:?}")),
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

/// One dense layer. `dropout_rate` is applied to the layer's input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub l2_lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    /// Hidden layers followed by the single-unit sigmoid output layer.
    pub layers: Vec<LayerSpec>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self::simple(16, 0.3, 1e-4)
    }
}

impl NetConfig {
    /// Input, dropout, one ReLU hidden layer, dropout, sigmoid output.
    pub fn simple(hidden_units: usize, dropout: f64, l2: f64) -> Self {
        Self {
            layers: vec![
                LayerSpec {
                    units: hidden_units,
                    activation: Activation::Relu,
                    dropout_rate: dropout,
                    l2_lambda: l2,
                },
                LayerSpec {
                    units: 1,
                    activation: Activation::Sigmoid,
                    dropout_rate: dropout,
                    l2_lambda: l2,
                },
            ],
        }
    }

    /// Ten 64-unit ReLU hidden layers; an approximation of a "much larger"
    /// comparison net whose exact sizes are unknown.
    pub fn deep(dropout: f64, l2: f64) -> Self {
        let hidden = LayerSpec {
            units: 64,
            activation: Activation::Relu,
            dropout_rate: dropout,
            l2_lambda: l2,
        };
        let mut layers = vec![hidden; 10];
        layers.push(LayerSpec {
            units: 1,
            activation: Activation::Sigmoid,
            ..hidden
        });
        Self { layers }
    }

    /// Logistic regression: a single sigmoid unit.
    pub fn linear() -> Self {
        Self {
            layers: vec![LayerSpec {
                units: 1,
                activation: Activation::Sigmoid,
                dropout_rate: 0.0,
                l2_lambda: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let invalid = |m: &str| Err(NetError::InvalidConfig(m.to_string()));
        let Some(last) = self.layers.last() else {
            return invalid("network needs at least the output layer");
        };
        if last.units != 1 || last.activation != Activation::Sigmoid {
            return invalid("output layer must be a single sigmoid unit");
        }
        for l in &self.layers {
            if l.units == 0 {
                return invalid("layers need at least one unit");
            }
            if !(0.0..1.0).contains(&l.dropout_rate) {
                return invalid("dropout rate must lie in [0, 1)");
            }
            if !(l.l2_lambda >= 0.0 && l.l2_lambda.is_finite()) {
                return invalid("l2 lambda must be non-negative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub spec: LayerSpec,
    pub inputs: usize,
    /// Row-major `units x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Activations recorded by a forward pass, consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    /// Each layer's input after dropout.
    inputs: Vec<Vec<f64>>,
    /// Dropout scale per input unit (0 or `1/(1-rate)`; 1 in inference).
    masks: Vec<Vec<f64>>,
    /// Pre-activations.
    pre: Vec<Vec<f64>>,
    pub output: f64,
}

pub enum Mode<'a> {
    Infer,
    Train(&'a mut ChaCha8Rng),
}

/// Parameter gradients, flattened in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Dense>,
}

impl Network {
    /// Weights drawn uniformly from `±1/sqrt(fan_in)`, biases zero.
    pub fn new(input_dim: usize, cfg: &NetConfig, seed: u64) -> Result<Self, NetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(input_dim, cfg, |fan_in| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            rng.random_range(-bound..=bound)
        })
    }

    pub fn zeros(input_dim: usize, cfg: &NetConfig) -> Result<Self, NetError> {
        Self::build(input_dim, cfg, |_| 0.0)
    }

    fn build(input_dim: usize, cfg: &NetConfig, mut init: impl FnMut(usize) -> f64) -> Result<Self, NetError> {
        cfg.validate()?;
        if input_dim == 0 {
            return Err(NetError::InvalidConfig("input width must be positive".into()));
        }
        let mut inputs = input_dim;
        let mut layers = Vec::with_capacity(cfg.layers.len());
        for spec in &cfg.layers {
            let weights = (0..spec.units * inputs).map(|_| init(inputs)).collect();
            layers.push(Dense {
                spec: *spec,
                inputs,
                weights,
                bias: vec![0.0; spec.units],
            });
            inputs = spec.units;
        }
        Ok(Self { input_dim, layers })
    }

    pub(crate) fn from_layers(input_dim: usize, layers: Vec<Dense>) -> Result<Self, NetError> {
        let cfg = NetConfig {
            layers: layers.iter().map(|l| l.spec).collect(),
        };
        cfg.validate()?;
        let mut expected = input_dim;
        for l in &layers {
            if l.inputs != expected || l.weights.len() != l.spec.units * l.inputs || l.bias.len() != l.spec.units {
                return Err(NetError::InvalidConfig("layer dimensions do not conform".into()));
            }
            expected = l.spec.units;
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn config(&self) -> NetConfig {
        NetConfig {
            layers: self.layers.iter().map(|l| l.spec).collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// Every layer's weights then bias, in layer order.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn set_params(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.param_count(), "parameter count mismatch");
        for (p, v) in self.params_mut().zip(values) {
            *p = *v;
        }
    }

    /// `sum_l lambda_l * ||W_l||^2` over weight matrices (biases excluded).
    pub fn l2_penalty(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.spec.l2_lambda * l.weights.iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    pub fn forward(&self, x: &[f64], mut mode: Mode<'_>) -> Result<Cache, NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        let n = self.layers.len();
        let mut cache = Cache {
            inputs: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            output: 0.0,
        };
        let mut a = x.to_vec();
        for layer in &self.layers {
            let rate = layer.spec.dropout_rate;
            let mask: Vec<f64> = match &mut mode {
                Mode::Train(rng) if rate > 0.0 => {
                    let keep = 1.0 / (1.0 - rate);
                    (0..a.len())
                        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
                        .collect()
                }
                _ => vec![1.0; a.len()],
            };
            let input: Vec<f64> = a.iter().zip(&mask).map(|(v, m)| v * m).collect();
            let z: Vec<f64> = layer
                .weights
                .chunks_exact(layer.inputs)
                .zip(&layer.bias)
                .map(|(row, b)| row.iter().zip(&input).map(|(w, u)| w * u).sum::<f64>() + b)
                .collect();
            a = z.iter().map(|&v| layer.spec.activation.apply(v)).collect();
            cache.inputs.push(input);
            cache.masks.push(mask);
            cache.pre.push(z);
        }
        cache.output = a[0];
        Ok(cache)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, NetError> {
        Ok(self.forward(x, Mode::Infer)?.output)
    }

    /// Gradient of `bce(p, y) + l2_penalty()` for one example.
    pub fn backward(&self, cache: &Cache, y: f64) -> Gradients {
        let mut grads = vec![0.0; self.param_count()];
        let mut offset = self.param_count();
        // Sigmoid output with cross-entropy: dL/dz = p - y.
        let mut dz = vec![cache.output - y];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            offset -= layer.param_count();
            let input = &cache.inputs[l];
            let (gw, gb) = grads[offset..offset + layer.param_count()].split_at_mut(layer.weights.len());
            for (j, d) in dz.iter().enumerate() {
                let row = &mut gw[j * layer.inputs..(j + 1) * layer.inputs];
                for ((g, u), w) in row.iter_mut().zip(input).zip(&layer.weights[j * layer.inputs..]) {
                    *g = d * u + 2.0 * layer.spec.l2_lambda * w;
                }
                gb[j] = *d;
            }
            if l == 0 {
                break;
            }
            let below = &self.layers[l - 1];
            dz = (0..layer.inputs)
                .map(|i| {
                    let du: f64 = dz
                        .iter()
                        .enumerate()
                        .map(|(j, d)| d * layer.weights[j * layer.inputs + i])
                        .sum();
                    du * cache.masks[l][i] * below.spec.activation.derivative(cache.pre[l - 1][i])
                })
                .collect();
        }
        Gradients(grads)
    }
}

/// `-[y ln p + (1-y) ln(1-p)] + penalty` with `p` clipped to `[1e-7, 1-1e-7]`.
pub fn binary_cross_entropy(p: f64, y: f64, penalty: f64) -> f64 {
    let p = p.clamp(EPSILON, 1.0 - EPSILON);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln()) + penalty
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss(net: &Network, x: &[f64], y: f64) -> f64 {
        binary_cross_entropy(net.predict(x).unwrap(), y, net.l2_penalty())
    }

    #[test]
    fn zero_network_outputs_half() {
        let net = Network::zeros(3, &NetConfig::default()).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 0.5]).unwrap(), 0.5);
    }

    #[test]
    fn single_sigmoid_unit_inverse() {
        let mut net = Network::zeros(1, &NetConfig::linear()).unwrap();
        net.set_params(&[1.0, 0.0]);
        let x = (0.7f64 / 0.3).ln();
        assert!((net.predict(&[x]).unwrap() - 0.7).abs() < 1e-12);
        // The rounded preimage 0.8464 sits just below 0.7.
        assert!((net.predict(&[0.8464]).unwrap() - 0.7).abs() < 2e-4);
    }

    #[test]
    fn zero_dropout_train_equals_infer() {
        let net = Network::new(2, &NetConfig::simple(4, 0.0, 0.0), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train = net.forward(&[0.3, -1.2], Mode::Train(&mut rng)).unwrap().output;
        assert_eq!(train, net.predict(&[0.3, -1.2]).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let net = Network::zeros(2, &NetConfig::default()).unwrap();
        assert!(matches!(
            net.predict(&[1.0]),
            Err(NetError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn cross_entropy_values() {
        assert!(binary_cross_entropy(1.0, 1.0, 0.0) < 1e-6);
        assert!((binary_cross_entropy(0.5, 1.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((binary_cross_entropy(0.5, 0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(binary_cross_entropy(0.0, 1.0, 0.0).is_finite());
    }

    #[test]
    fn output_gradient_is_p_minus_y() {
        let net = Network::new(2, &NetConfig::linear(), 5).unwrap();
        let x = [0.4, -0.9];
        let cache = net.forward(&x, Mode::Infer).unwrap();
        let g = net.backward(&cache, 1.0);
        assert!((g.0[2] - (cache.output - 1.0)).abs() < 1e-15);
        // dL/db by central differences
        let h = 1e-5;
        let mut plus = net.clone();
        plus.layers[0].bias[0] += h;
        let mut minus = net.clone();
        minus.layers[0].bias[0] -= h;
        let fd = (loss(&plus, &x, 1.0) - loss(&minus, &x, 1.0)) / (2.0 * h);
        assert!((fd - g.0[2]).abs() < 1e-8);
    }

    #[test]
    fn zero_input_gives_zero_first_layer_weight_gradients() {
        let net = Network::new(3, &NetConfig::simple(4, 0.0, 0.0), 11).unwrap();
        let mut net = net;
        for b in &mut net.layers[0].bias {
            *b = 0.5;
        }
        let cache = net.forward(&[0.0; 3], Mode::Infer).unwrap();
        let g = net.backward(&cache, 0.0);
        let first = &net.layers[0];
        assert!(g.0[..first.weights.len()].iter().all(|&v| v == 0.0));
        let bias_grads = &g.0[first.weights.len()..first.param_count()];
        assert!(bias_grads.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn gradients_match_finite_differences_on_2_4_1() {
        let cfg = NetConfig::simple(4, 0.0, 0.01);
        let net = Network::new(2, &cfg, 99).unwrap();
        let x = [0.7, -0.3];
        let g = net.backward(&net.forward(&x, Mode::Infer).unwrap(), 1.0);
        let base = net.params();
        let h = 1e-5;
        for i in 0..base.len() {
            let mut probe = net.clone();
            let mut p = base.clone();
            p[i] += h;
            probe.set_params(&p);
            let up = loss(&probe, &x, 1.0);
            p[i] -= 2.0 * h;
            probe.set_params(&p);
            let down = loss(&probe, &x, 1.0);
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(g.0[i].abs()).max(1e-8);
            assert!((fd - g.0[i]).abs() / denom < 1e-4 || (fd - g.0[i]).abs() < 1e-9, "param {i}: {fd} vs {}", g.0[i]);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = NetConfig::default();
        cfg.layers.pop();
        assert!(cfg.validate().is_err());
        let cfg = NetConfig::simple(4, 1.0, 0.0);
        assert!(cfg.validate().is_err());
        assert_eq!(NetConfig::deep(0.3, 0.0).layers.len(), 11);
    }
}
