//! Fractional-order deep network: a ResNet-like architecture whose hidden
//! update discretizes a Caputo fractional ODE, so every layer sees a
//! weighted history of all earlier layers.
//!
//! Layer states for depth `L`: `phi_0` is the input lifted to the hidden
//! width, `phi_1 = sigma(W_0 phi_0 + b_0)`, the middle layers follow the
//! fractional update, and `phi_L = W_{L-1} phi_{L-1}` is a bias-free
//! linear read-out.

mod activation;
mod adjoint;
mod caputo;
mod checkpoint;
mod forward;
mod train;

pub use activation::{nu_decay_check, smooth_relu, smooth_relu_deriv, smooth_relu_second};
pub use adjoint::{adjoint, gradient, loss, loss_and_gradient};
pub use caputo::{gamma_fn, l1_coefficients, tau};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use forward::{closed_form_output, forward, output, resnet_forward};
pub use train::{train, train_from, training_batch, TrainResult};

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Architecture and regularization parameters shared by every network
/// operation.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    /// Number of layers `L` (>= 2); the network has `L - 1` hidden states.
    pub depth: usize,
    /// Hidden width `n`.
    pub width: usize,
    /// Raw input dimension; inputs are zero-padded or truncated to `width`.
    pub input_dim: usize,
    /// Output dimension `k` of the final linear layer.
    pub output_dim: usize,
    /// Fractional order, strictly inside (0, 1).
    pub gamma: f64,
    /// Time horizon `T`; the layer step is `T / (L - 1)`.
    pub horizon: f64,
    /// Activation smoothing half-width.
    pub epsilon: f64,
    /// Ridge penalty weight on all parameters.
    pub ridge: f64,
}

impl Default for NetConfig {
    /// The architecture used throughout the parameter study: four layers
    /// of width 15, order one half, unit horizon, and a light ridge.
    fn default() -> Self {
        NetConfig {
            depth: 4,
            width: 15,
            input_dim: 2,
            output_dim: 1,
            gamma: 0.5,
            horizon: 1.0,
            epsilon: 0.1,
            ridge: 1e-6,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::InvalidArgument("depth must be >= 2".into()));
        }
        if self.width == 0 || self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.horizon > 0.0) || !(self.epsilon > 0.0) || self.ridge < 0.0 {
            return Err(Error::InvalidArgument(
                "horizon and epsilon must be positive, ridge nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Layer step `h = T / (L - 1)`.
    pub fn step(&self) -> f64 {
        self.horizon / (self.depth - 1) as f64
    }

    /// Effective fractional step `h^gamma * Gamma(2 - gamma)`.
    pub fn tau(&self) -> f64 {
        caputo::tau(self.gamma, self.step())
    }

    /// Total parameter count.
    pub fn dof(&self) -> usize {
        let n = self.width;
        (self.depth - 1) * n * n + self.output_dim * n + (self.depth - 1) * n
    }
}

/// Network parameters: `L` weight matrices and `L - 1` bias vectors.
///
/// `weights[0..L-1]` are `n x n`, `weights[L-1]` is `k x n`; the read-out
/// layer has no bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Theta {
    /// Zero biases, weights uniform on `[-s, s)` with
    /// `s = sqrt(6 / (fan_in + fan_out))`, drawn from a ChaCha stream.
    pub fn init(cfg: &NetConfig, seed: u64) -> Result<Theta> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = cfg.width;
        let mut weights = Vec::with_capacity(cfg.depth);
        for layer in 0..cfg.depth {
            let rows = if layer == cfg.depth - 1 { cfg.output_dim } else { n };
            let s = (6.0 / (n + rows) as f64).sqrt();
            let w = Array2::from_shape_fn((rows, n), |_| rng.random_range(-s..s));
            weights.push(w);
        }
        let biases = (0..cfg.depth - 1).map(|_| Array1::zeros(n)).collect();
        Ok(Theta { weights, biases })
    }

    pub fn zeros(cfg: &NetConfig) -> Result<Theta> {
        cfg.validate()?;
        let n = cfg.width;
        let mut weights: Vec<Array2<f64>> =
            (0..cfg.depth - 1).map(|_| Array2::zeros((n, n))).collect();
        weights.push(Array2::zeros((cfg.output_dim, n)));
        let biases = (0..cfg.depth - 1).map(|_| Array1::zeros(n)).collect();
        Ok(Theta { weights, biases })
    }

    pub fn check_dims(&self, cfg: &NetConfig) -> Result<()> {
        let n = cfg.width;
        if self.weights.len() != cfg.depth || self.biases.len() != cfg.depth - 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} weights and {} biases, got {} and {}",
                cfg.depth,
                cfg.depth - 1,
                self.weights.len(),
                self.biases.len()
            )));
        }
        for (j, w) in self.weights.iter().enumerate() {
            let rows = if j == cfg.depth - 1 { cfg.output_dim } else { n };
            if w.dim() != (rows, n) {
                return Err(Error::DimensionMismatch(format!(
                    "weight {j} has shape {:?}, expected ({rows}, {n})",
                    w.dim()
                )));
            }
        }
        for (j, b) in self.biases.iter().enumerate() {
            if b.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "bias {j} has length {}, expected {n}",
                    b.len()
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Flatten as (W_0 .. W_{L-1}, b_0 .. b_{L-2}), each matrix row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in &self.weights {
            out.extend(w.iter().copied());
        }
        for b in &self.biases {
            out.extend(b.iter().copied());
        }
        out
    }

    /// Inverse of [`Theta::to_flat`].
    pub fn from_flat(cfg: &NetConfig, flat: &[f64]) -> Result<Theta> {
        if flat.len() != cfg.dof() {
            return Err(Error::DimensionMismatch(format!(
                "flat parameter vector has length {}, expected {}",
                flat.len(),
                cfg.dof()
            )));
        }
        let n = cfg.width;
        let mut pos = 0;
        let mut weights = Vec::with_capacity(cfg.depth);
        for layer in 0..cfg.depth {
            let rows = if layer == cfg.depth - 1 { cfg.output_dim } else { n };
            let w = Array2::from_shape_vec((rows, n), flat[pos..pos + rows * n].to_vec())
                .expect("shape checked above");
            pos += rows * n;
            weights.push(w);
        }
        let mut biases = Vec::with_capacity(cfg.depth - 1);
        for _ in 0..cfg.depth - 1 {
            biases.push(Array1::from(flat[pos..pos + n].to_vec()));
            pos += n;
        }
        Ok(Theta { weights, biases })
    }

    /// Squared Euclidean norm over all parameters.
    pub fn norm_sq(&self) -> f64 {
        let w: f64 = self.weights.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum();
        let b: f64 = self.biases.iter().map(|b| b.iter().map(|v| v * v).sum::<f64>()).sum();
        w + b
    }
}

/// All intermediate states of one forward evaluation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `phi_0 .. phi_L`.
    pub states: Vec<Array1<f64>>,
    /// Preactivations `z_j = W_j phi_j + b_j` for `j = 0 .. L-2`.
    pub preacts: Vec<Array1<f64>>,
}

/// Training batch; one row per sample.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_dims(&self, cfg: &NetConfig) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidArgument("batch is empty".into()));
        }
        if self.inputs.ncols() != cfg.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "batch inputs have {} columns, expected {}",
                self.inputs.ncols(),
                cfg.input_dim
            )));
        }
        if self.targets.nrows() != self.inputs.nrows() || self.targets.ncols() != cfg.output_dim {
            return Err(Error::DimensionMismatch(format!(
                "batch targets have shape {:?}, expected ({}, {})",
                self.targets.dim(),
                self.inputs.nrows(),
                cfg.output_dim
            )));
        }
        Ok(())
    }
}

/// Zero-pad or truncate a raw input to the hidden width.
pub(crate) fn lift(xi: &[f64], width: usize) -> Array1<f64> {
    let mut out = Array1::zeros(width);
    for (slot, &v) in out.iter_mut().zip(xi.iter()) {
        *slot = v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetConfig {
        NetConfig {
            depth: 4,
            width: 15,
            input_dim: 2,
            output_dim: 7,
            gamma: 0.5,
            horizon: 1.0,
            epsilon: 0.1,
            ridge: 1e-6,
        }
    }

    #[test]
    fn flat_round_trip() {
        let cfg = cfg();
        let theta = Theta::init(&cfg, 42).unwrap();
        let flat = theta.to_flat();
        assert_eq!(flat.len(), cfg.dof());
        let back = Theta::from_flat(&cfg, &flat).unwrap();
        assert_eq!(theta, back);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let cfg = cfg();
        let a = Theta::init(&cfg, 7).unwrap();
        let b = Theta::init(&cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = Theta::init(&cfg, 8).unwrap();
        assert_ne!(a, c);
        let s_hidden = (6.0 / 30.0f64).sqrt();
        for w in &a.weights[..3] {
            assert!(w.iter().all(|v| v.abs() <= s_hidden));
        }
        assert!(a.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rejects_bad_gamma() {
        let mut c = cfg();
        c.gamma = 1.0;
        assert!(c.validate().is_err());
        c.gamma = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn step_matches_horizon_over_layers() {
        let c = cfg();
        assert!((c.step() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn lift_pads_and_truncates() {
        let padded = lift(&[1.0, 2.0], 4);
        assert_eq!(padded.to_vec(), vec![1.0, 2.0, 0.0, 0.0]);
        let cut = lift(&[1.0, 2.0, 3.0], 2);
        assert_eq!(cut.to_vec(), vec![1.0, 2.0]);
    }
}
