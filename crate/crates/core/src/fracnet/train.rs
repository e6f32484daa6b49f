//! Training driver: projects snapshots onto the reduced basis to build
//! the regression targets, then minimises the batch loss over the
//! flattened parameters with BFGS.

use super::{loss_and_gradient, Batch, NetConfig, Theta};
use crate::error::{Error, Result};
use crate::optim::{bfgs_minimize, BfgsConfig, Termination};
use crate::pod::{project, PodBasis, SnapshotSet};
use ndarray::Array2;

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub theta: Theta,
    /// Loss before iteration 1, then after each accepted iteration.
    pub loss_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
}

impl TrainResult {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history is never empty")
    }
}

/// Inputs are the snapshot parameters, targets the reduced coordinates
/// `V^T u` of each snapshot.
pub fn training_batch(set: &SnapshotSet, basis: &PodBasis) -> Result<Batch> {
    set.check()?;
    if basis.n_dof() != set.n_dof() {
        return Err(Error::DimensionMismatch(format!(
            "basis vectors have {} entries, snapshots {}",
            basis.n_dof(),
            set.n_dof()
        )));
    }
    let count = set.count();
    let k = basis.modes();
    let mut targets = Array2::zeros((count, k));
    for j in 0..count {
        let c = project(basis, &set.snapshots.column(j))?;
        targets.row_mut(j).assign(&c);
    }
    Ok(Batch {
        inputs: set.parameters.clone(),
        targets,
    })
}

/// Deterministic end-to-end fit: seeded initialisation, then BFGS on the
/// ridge-regularised batch loss.
pub fn train(
    cfg: &NetConfig,
    batch: &Batch,
    init_seed: u64,
    opt: &BfgsConfig,
) -> Result<TrainResult> {
    let theta0 = Theta::init(cfg, init_seed)?;
    train_from(cfg, batch, theta0, opt)
}

/// BFGS fit from an explicit starting point.
pub fn train_from(
    cfg: &NetConfig,
    batch: &Batch,
    theta0: Theta,
    opt: &BfgsConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    batch.check_dims(cfg)?;
    theta0.check_dims(cfg)?;
    let x0 = theta0.to_flat();

    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let theta = Theta::from_flat(cfg, x)?;
        let (value, grad) = loss_and_gradient(cfg, &theta, batch)?;
        Ok((value, grad.to_flat()))
    };
    let out = bfgs_minimize(objective, &x0, opt)?;
    let theta = Theta::from_flat(cfg, &out.x)?;
    Ok(TrainResult {
        theta,
        loss_history: out.loss_history,
        grad_norm_history: out.grad_norm_history,
        iterations: out.iterations,
        converged: out.converged,
        termination: out.termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracnet::{forward, output};
    use ndarray::Array1;

    fn toy_batch(cfg: &NetConfig, count: usize) -> Batch {
        // Smooth two-parameter map into `output_dim` coefficients.
        let inputs = Array2::from_shape_fn((count, cfg.input_dim), |(i, j)| {
            0.1 + (i as f64 + 1.0) * 0.11 + j as f64 * 0.17
        });
        let targets = Array2::from_shape_fn((count, cfg.output_dim), |(i, j)| {
            let a = inputs[[i, 0]];
            let b = inputs[[i, 1.min(cfg.input_dim - 1)]];
            0.5 * (a * (j as f64 + 1.0)).sin() + 0.1 * b
        });
        Batch { inputs, targets }
    }

    #[test]
    fn loss_drops_by_orders_of_magnitude_on_a_smooth_toy_map() {
        let cfg = NetConfig {
            depth: 3,
            width: 8,
            input_dim: 2,
            output_dim: 2,
            ridge: 0.0,
            ..NetConfig::default()
        };
        let batch = toy_batch(&cfg, 12);
        let opt = BfgsConfig {
            max_iters: 250,
            ..BfgsConfig::default()
        };
        let result = train(&cfg, &batch, 7, &opt).unwrap();
        let first = result.loss_history[0];
        let last = result.final_loss();
        assert!(
            last < first * 1e-3,
            "training stalled: {first:.3e} -> {last:.3e}"
        );
        for w in result.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "loss history not monotone");
        }
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let cfg = NetConfig {
            depth: 4,
            width: 6,
            input_dim: 2,
            output_dim: 3,
            ..NetConfig::default()
        };
        let batch = toy_batch(&cfg, 10);
        let opt = BfgsConfig {
            max_iters: 40,
            ..BfgsConfig::default()
        };
        let a = train(&cfg, &batch, 3, &opt).unwrap();
        let b = train(&cfg, &batch, 3, &opt).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.loss_history, b.loss_history);
        let c = train(&cfg, &batch, 4, &opt).unwrap();
        assert_ne!(a.theta, c.theta, "different seeds should explore differently");
    }

    #[test]
    fn training_batch_rows_are_projected_snapshots() {
        use crate::pod::pod_of_matrix;
        let snaps = Array2::from_shape_fn((9, 7), |(i, j)| {
            (0.3 + i as f64 * 0.7 + j as f64 * 1.3 + (i * j) as f64 * 0.11).sin()
        });
        let basis = pod_of_matrix(&snaps, 3, 3).unwrap();
        let set = SnapshotSet {
            parameters: Array2::from_shape_fn((7, 2), |(i, j)| i as f64 + j as f64 * 0.1),
            snapshots: snaps.clone(),
            grid_interior: 3,
            bounds: vec![(0.0, 10.0), (0.0, 1.0)],
            seed: 0,
        };
        let batch = training_batch(&set, &basis).unwrap();
        assert_eq!(batch.inputs, set.parameters);
        assert_eq!(batch.targets.dim(), (7, 3));
        for j in 0..7 {
            let c = project(&basis, &snaps.column(j)).unwrap();
            let row = batch.targets.row(j);
            for i in 0..3 {
                assert_eq!(row[i].to_bits(), c[i].to_bits());
            }
        }
    }

    #[test]
    fn trained_network_interpolates_the_toy_targets() {
        let cfg = NetConfig {
            depth: 3,
            width: 10,
            input_dim: 2,
            output_dim: 1,
            ridge: 0.0,
            ..NetConfig::default()
        };
        let batch = toy_batch(&cfg, 8);
        let opt = BfgsConfig {
            max_iters: 400,
            ..BfgsConfig::default()
        };
        let result = train(&cfg, &batch, 11, &opt).unwrap();
        let mut worst = 0.0f64;
        for i in 0..8 {
            let xi: Vec<f64> = batch.inputs.row(i).to_vec();
            let trace = forward(&cfg, &result.theta, &xi).unwrap();
            let pred: &Array1<f64> = output(&trace);
            worst = worst.max((pred[0] - batch.targets[[i, 0]]).abs());
        }
        assert!(worst <= 1e-2, "worst pointwise error {worst:.3e}");
    }
}
