//! Dense BFGS with a strong-Wolfe line search.
//!
//! The inverse Hessian is kept as a full matrix (parameter counts here stay
//! in the low thousands) and every run is sequential, so histories are
//! reproducible bit for bit.

mod line_search;

use line_search::strong_wolfe;

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

#[derive(Debug, Clone)]
pub struct BfgsConfig {
    /// Iteration budget; the loop always stops here.
    pub max_iters: usize,
    /// Early stop once the gradient sup-norm drops to this level.
    pub grad_tol: f64,
    /// Armijo constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Objective-evaluation budget per line search.
    pub max_line_search: usize,
    /// Record the inverse-Hessian approximation after every update
    /// (testing aid; expensive, off by default).
    pub track_hessian: bool,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig {
            max_iters: 100,
            grad_tol: 0.0,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
            track_hessian: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Gradient sup-norm reached `grad_tol`.
    GradientTolerance,
    /// Iteration budget exhausted.
    IterationBudget,
    /// Line search found no decrease; the best iterate so far is returned.
    LineSearchStall,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    /// Objective value before iteration 1, then after each iteration;
    /// monotone non-increasing.
    pub loss_history: Vec<f64>,
    /// Gradient sup-norm on the same grid as `loss_history`.
    pub grad_norm_history: Vec<f64>,
    /// Accepted step length of each iteration.
    pub step_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Populated only when `track_hessian` is set.
    pub hessian_history: Vec<Array2<f64>>,
}

/// Minimize `objective` (value and gradient) from `x0`.
///
/// The inverse-Hessian update is skipped whenever the curvature product
/// `s . y` falls below 1e-12, which keeps the approximation positive
/// definite.
pub fn bfgs_minimize<F>(mut objective: F, x0: &[f64], cfg: &BfgsConfig) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if x0.is_empty() {
        return Err(Error::InvalidArgument("empty starting point".into()));
    }
    let dim = x0.len();
    let mut x = Array1::from(x0.to_vec());
    let (f0, g0) = objective(x0)?;
    check_finite(f0, &g0)?;
    let mut f = f0;
    let mut g = Array1::from(g0);

    let mut h = Array2::<f64>::eye(dim);
    let mut loss_history = vec![f];
    let mut grad_norm_history = vec![sup_norm(&g)];
    let mut step_history = Vec::new();
    let mut hessian_history = Vec::new();
    let mut termination = Termination::IterationBudget;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        if sup_norm(&g) <= cfg.grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        let p = -h.dot(&g);
        let slope0 = g.dot(&p);
        if !(slope0 < 0.0) {
            termination = if sup_norm(&g) <= cfg.grad_tol {
                Termination::GradientTolerance
            } else {
                Termination::LineSearchStall
            };
            break;
        }
        let outcome = strong_wolfe(
            &mut objective,
            &x,
            &p,
            f,
            slope0,
            cfg.c1,
            cfg.c2,
            cfg.max_line_search,
        )?;
        let Some(hit) = outcome else {
            termination = Termination::LineSearchStall;
            break;
        };
        let pt = hit.point;
        check_finite(pt.f, pt.grad.as_slice().expect("contiguous"))?;

        let s = pt.t * &p;
        let y = &pt.grad - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 {
            bfgs_update(&mut h, &s, &y, sy);
        }
        x = &x + &s;
        f = pt.f;
        g = pt.grad;
        iterations += 1;
        loss_history.push(f);
        grad_norm_history.push(sup_norm(&g));
        step_history.push(pt.t);
        if cfg.track_hessian {
            hessian_history.push(h.clone());
        }
    }

    if termination == Termination::IterationBudget && sup_norm(&g) <= cfg.grad_tol {
        termination = Termination::GradientTolerance;
    }
    let converged = termination == Termination::GradientTolerance;
    Ok(OptimResult {
        x: x.to_vec(),
        loss_history,
        grad_norm_history,
        step_history,
        iterations,
        converged,
        termination,
        hessian_history,
    })
}

/// Inverse BFGS update `H <- (I - r s y^T) H (I - r y s^T) + r s s^T`
/// with `r = 1 / (s . y)`, written as rank-two corrections.
fn bfgs_update(h: &mut Array2<f64>, s: &Array1<f64>, y: &Array1<f64>, sy: f64) {
    let rho = 1.0 / sy;
    let hy = h.dot(y);
    let yhy = y.dot(&hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..h.nrows() {
        let si = s[i];
        let hyi = hy[i];
        let mut row = h.row_mut(i);
        row.scaled_add(-rho * si, &hy);
        row.scaled_add(-rho * hyi, s);
        row.scaled_add(coef * si, s);
    }
}

fn sup_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_finite(f: f64, g: &[f64]) -> Result<()> {
    if !f.is_finite() || !g.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("objective value or gradient".into()));
    }
    Ok(())
}
