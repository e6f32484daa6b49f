//! Loss, adjoint recursion, and parameter gradients.
//!
//! The adjoint is the exact transpose of the forward recursion in
//! `forward.rs`; its indices and signs were fixed by differentiating that
//! recursion directly and validating against central finite differences,
//! so the derivative of the activation is always taken at the forward
//! preactivation `z_j = W_j phi_j + b_j`.

use super::activation::smooth_relu_deriv;
use super::caputo::l1_coefficients;
use super::forward::{forward, output};
use super::{Batch, NetConfig, Theta, Trace};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

/// Mean squared data misfit over the batch plus the ridge term:
/// `1/(2 N) sum_j |out(xi_j) - u_j|^2 + ridge/2 |theta|^2`.
pub fn loss(cfg: &NetConfig, theta: &Theta, batch: &Batch) -> Result<f64> {
    batch.check_dims(cfg)?;
    let n = batch.len() as f64;
    let mut misfit = 0.0;
    for (xi, target) in batch.inputs.rows().into_iter().zip(batch.targets.rows()) {
        let trace = forward(cfg, theta, xi.as_slice().expect("row view is contiguous"))?;
        let out = output(&trace);
        misfit += out
            .iter()
            .zip(target.iter())
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>();
    }
    let value = misfit / (2.0 * n) + 0.5 * cfg.ridge * theta.norm_sq();
    if !value.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    Ok(value)
}

/// Backward sweep for one sample. Returns `psi_0 .. psi_L` with `psi_0`
/// an empty placeholder so states can be indexed by layer number.
///
/// `psi_L` is the seed `dJ/dphi_L`; `psi_{L-1} = -W_{L-1}^T psi_L`; below
/// that the history weights act on differences of consecutive L1
/// coefficients, with the final hidden state also carrying the last
/// coefficient (the read-out state has no fractional history of its own).
pub fn adjoint(
    cfg: &NetConfig,
    theta: &Theta,
    trace: &Trace,
    terminal: &Array1<f64>,
) -> Result<Vec<Array1<f64>>> {
    cfg.validate()?;
    theta.check_dims(cfg)?;
    let l = cfg.depth;
    if trace.states.len() != l + 1 || trace.preacts.len() != l - 1 {
        return Err(Error::DimensionMismatch("trace does not match config depth".into()));
    }
    if terminal.len() != cfg.output_dim {
        return Err(Error::DimensionMismatch(format!(
            "terminal has length {}, expected {}",
            terminal.len(),
            cfg.output_dim
        )));
    }
    let tau = cfg.tau();
    let a = l1_coefficients(cfg.gamma, l - 1);
    let mut psi: Vec<Array1<f64>> = vec![Array1::zeros(0); l + 1];
    psi[l] = terminal.clone();
    psi[l - 1] = -theta.weights[l - 1].t().dot(terminal);
    for j in (1..l - 1).rev() {
        let weighted =
            &psi[j + 1] * &trace.preacts[j].mapv(|z| smooth_relu_deriv(z, cfg.epsilon));
        let mut acc = (1.0 - a[1]) * &psi[j + 1];
        acc.scaled_add(tau, &theta.weights[j].t().dot(&weighted));
        for i in j + 2..l {
            acc.scaled_add(a[i - j - 1] - a[i - j], &psi[i]);
        }
        psi[j] = acc;
    }
    Ok(psi)
}

/// Loss together with its gradient in [`Theta`] layout.
pub fn loss_and_gradient(cfg: &NetConfig, theta: &Theta, batch: &Batch) -> Result<(f64, Theta)> {
    batch.check_dims(cfg)?;
    let l = cfg.depth;
    let n = batch.len() as f64;
    let tau = cfg.tau();
    let mut grad = Theta::zeros(cfg)?;
    let mut misfit = 0.0;

    for (xi, target) in batch.inputs.rows().into_iter().zip(batch.targets.rows()) {
        let trace = forward(cfg, theta, xi.as_slice().expect("row view is contiguous"))?;
        let residual = output(&trace) - &target;
        misfit += residual.iter().map(|r| r * r).sum::<f64>();
        let terminal = residual / n;
        let psi = adjoint(cfg, theta, &trace, &terminal)?;

        add_scaled_outer(&mut grad.weights[l - 1], 1.0, &psi[l], &trace.states[l - 1]);
        let t0 = &psi[1] * &trace.preacts[0].mapv(|z| smooth_relu_deriv(z, cfg.epsilon));
        add_scaled_outer(&mut grad.weights[0], -1.0, &t0, &trace.states[0]);
        grad.biases[0].scaled_add(-1.0, &t0);
        for j in 1..l - 1 {
            let tj = &psi[j + 1] * &trace.preacts[j].mapv(|z| smooth_relu_deriv(z, cfg.epsilon));
            add_scaled_outer(&mut grad.weights[j], -tau, &tj, &trace.states[j]);
            grad.biases[j].scaled_add(-tau, &tj);
        }
    }

    if cfg.ridge != 0.0 {
        for (g, w) in grad.weights.iter_mut().zip(&theta.weights) {
            g.scaled_add(cfg.ridge, w);
        }
        for (g, b) in grad.biases.iter_mut().zip(&theta.biases) {
            g.scaled_add(cfg.ridge, b);
        }
    }

    let value = misfit / (2.0 * n) + 0.5 * cfg.ridge * theta.norm_sq();
    if !value.is_finite() || !grad.is_finite() {
        return Err(Error::NonFinite("loss or gradient".into()));
    }
    Ok((value, grad))
}

/// Flat gradient in [`Theta::to_flat`] order.
pub fn gradient(cfg: &NetConfig, theta: &Theta, batch: &Batch) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(cfg, theta, batch)?.1.to_flat())
}

/// `m += s * u v^T` without allocating the outer product.
fn add_scaled_outer(m: &mut Array2<f64>, s: f64, u: &Array1<f64>, v: &Array1<f64>) {
    for (i, ui) in u.iter().enumerate() {
        m.row_mut(i).scaled_add(s * ui, v);
    }
}
