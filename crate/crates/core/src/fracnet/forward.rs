//! Forward evaluation of the fractional network, its Euler (ResNet)
//! counterpart, and closed-form read-outs for shallow depths.

use super::activation::smooth_relu;
use super::caputo::l1_coefficients;
use super::{lift, NetConfig, Theta, Trace};
use crate::error::{Error, Result};
use ndarray::Array1;

/// Evaluate the fractional network, returning every layer state.
///
/// Middle layers follow
/// `phi_j = phi_{j-1} - sum_{k=0}^{j-2} a_{j-1-k} (phi_{k+1} - phi_k)
///          + tau * sigma(W_{j-1} phi_{j-1} + b_{j-1})`.
pub fn forward(cfg: &NetConfig, theta: &Theta, xi: &[f64]) -> Result<Trace> {
    run_forward(cfg, theta, xi, true)
}

/// Plain residual network with the same parameters: the history sum is
/// dropped and the activation enters with weight `h` instead of `tau`.
/// Output is independent of `gamma`; identical to [`forward`] at depth 2.
pub fn resnet_forward(cfg: &NetConfig, theta: &Theta, xi: &[f64]) -> Result<Trace> {
    run_forward(cfg, theta, xi, false)
}

fn run_forward(cfg: &NetConfig, theta: &Theta, xi: &[f64], fractional: bool) -> Result<Trace> {
    cfg.validate()?;
    theta.check_dims(cfg)?;
    if xi.len() != cfg.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "input has length {}, expected {}",
            xi.len(),
            cfg.input_dim
        )));
    }
    let l = cfg.depth;
    let scale = if fractional { cfg.tau() } else { cfg.step() };
    let a = l1_coefficients(cfg.gamma, l - 1);

    let mut states: Vec<Array1<f64>> = Vec::with_capacity(l + 1);
    let mut preacts: Vec<Array1<f64>> = Vec::with_capacity(l - 1);
    states.push(lift(xi, cfg.width));

    let z0 = theta.weights[0].dot(&states[0]) + &theta.biases[0];
    states.push(z0.mapv(|x| smooth_relu(x, cfg.epsilon)));
    preacts.push(z0);

    for j in 2..l {
        let z = theta.weights[j - 1].dot(&states[j - 1]) + &theta.biases[j - 1];
        let act = z.mapv(|x| smooth_relu(x, cfg.epsilon));
        let mut next = states[j - 1].clone();
        if fractional {
            for k in 0..=j - 2 {
                let w = a[j - 1 - k];
                let diff = &states[k + 1] - &states[k];
                next.scaled_add(-w, &diff);
            }
        }
        next.scaled_add(scale, &act);
        states.push(next);
        preacts.push(z);
    }

    let out = theta.weights[l - 1].dot(&states[l - 1]);
    if !out.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("network output".into()));
    }
    states.push(out);
    Ok(Trace { states, preacts })
}

/// Final network output of a trace.
pub fn output(trace: &Trace) -> &Array1<f64> {
    trace.states.last().expect("trace has at least two states")
}

/// Closed-form read-out for depths 2, 3, and 4, assembled from the
/// unrolled layer recursion rather than the loop in [`forward`].
///
/// Depth 4 uses the input coefficient `a_1 - a_1^2 + a_2`, which is what
/// the recursion yields when expanded symbolically.
pub fn closed_form_output(cfg: &NetConfig, theta: &Theta, xi: &[f64]) -> Result<Array1<f64>> {
    cfg.validate()?;
    theta.check_dims(cfg)?;
    let eps = cfg.epsilon;
    let tau = cfg.tau();
    let a = l1_coefficients(cfg.gamma, 3);
    let (a1, a2) = (a[1], a[2]);
    let phi0 = lift(xi, cfg.width);
    let s0 = (theta.weights[0].dot(&phi0) + &theta.biases[0]).mapv(|x| smooth_relu(x, eps));
    match cfg.depth {
        2 => Ok(theta.weights[1].dot(&s0)),
        3 => {
            let s1 = (theta.weights[1].dot(&s0) + &theta.biases[1]).mapv(|x| smooth_relu(x, eps));
            let inner = (1.0 - a1) * &s0 + tau * &s1 + a1 * &phi0;
            Ok(theta.weights[2].dot(&inner))
        }
        4 => {
            let s1 = (theta.weights[1].dot(&s0) + &theta.biases[1]).mapv(|x| smooth_relu(x, eps));
            let phi2 = (1.0 - a1) * &s0 + a1 * &phi0 + tau * &s1;
            let s2 = (theta.weights[2].dot(&phi2) + &theta.biases[2]).mapv(|x| smooth_relu(x, eps));
            let alpha0 = 1.0 - a1 + a1 * a1 - a2;
            let alpha3 = a1 - a1 * a1 + a2;
            let inner = alpha0 * &s0 + (1.0 - a1) * tau * &s1 + tau * &s2 + alpha3 * &phi0;
            Ok(theta.weights[3].dot(&inner))
        }
        d => Err(Error::InvalidArgument(format!(
            "closed form is only available for depths 2..=4, got {d}"
        ))),
    }
}
