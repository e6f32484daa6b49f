//! Adaptive random-walk Metropolis sampler.
//!
//! Proposals are Gaussian, `y = x +omega z`, where `omega` is the Cholesky
//! factor of `scale * (C + reg * I)` and `C` is the sample covariance of
//! the whole chain so far (initial state included, normalised by the
//! sample count). `C` starts at the identity and is refreshed every
//! `update_period` steps; a period of zero never adapts, which reduces the
//! sampler to plain random-walk Metropolis.
//!
//! Each step consumes the generator in a fixed order, proposal noise first
//! and then one uniform, regardless of the accept branch taken, so chains
//! with and without adaptation stay comparable draw for draw.

use super::LogDensity;
use crate::error::{Error, Result};
use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

/// Solver breakdowns tolerated back to back before the chain gives up.
const MAX_CONSECUTIVE_FAILURES: usize = 10;

#[derive(Debug, Clone)]
pub struct AmConfig {
    /// Number of Metropolis steps (the chain then has `steps + 1` rows).
    pub steps: usize,
    /// Rows discarded by diagnostics; the sampler itself keeps everything.
    pub burn_in: usize,
    /// Covariance refresh period, `0` freezes the initial proposal.
    pub update_period: usize,
    /// Proposal scale, defaults to `2.4^2 / dim`.
    pub scale: Option<f64>,
    /// Ridge added to the sample covariance before factorisation.
    pub regularisation: f64,
    pub seed: u64,
}

impl Default for AmConfig {
    fn default() -> Self {
        AmConfig {
            steps: 5000,
            burn_in: 2500,
            update_period: 100,
            scale: None,
            regularisation: 1e-8,
            seed: 0,
        }
    }
}

impl AmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("chain needs at least one step".into()));
        }
        if self.burn_in >= self.steps {
            return Err(Error::InvalidArgument(format!(
                "burn-in {} must be below the step count {}",
                self.burn_in, self.steps
            )));
        }
        if !(self.regularisation.is_finite() && self.regularisation > 0.0) {
            return Err(Error::InvalidArgument("regularisation must be positive".into()));
        }
        if let Some(s) = self.scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidArgument("scale must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn effective_scale(&self, dim: usize) -> f64 {
        self.scale.unwrap_or(2.4 * 2.4 / dim as f64)
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    /// `(steps + 1) x dim`, row 0 is the initial state.
    pub states: Array2<f64>,
    /// Log posterior of each row.
    pub log_posts: Vec<f64>,
    /// Per-row accept flag; row 0 (the initial state) is always true, and
    /// a row differs from its predecessor only when its flag is set.
    pub accepted: Vec<bool>,
    /// Burn-in length carried for downstream diagnostics.
    pub burn_in: usize,
    pub seconds: f64,
}

impl ChainResult {
    pub fn steps(&self) -> usize {
        self.states.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted.iter().skip(1).filter(|&&a| a).count()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted_steps() as f64 / self.steps() as f64
    }

    /// Rows after discarding the initial state and the burn-in phase.
    pub fn post_burn_in(&self) -> ArrayView2<'_, f64> {
        let start = (self.burn_in + 1).min(self.states.nrows());
        self.states.slice(s![start.., ..])
    }

    /// One parameter column after burn-in, copied out for diagnostics.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.post_burn_in().column(index).to_vec()
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix. Plain `L L^T = A`, no pivoting.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l: Array2<f64> = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::NotPositiveDefinite(format!("pivot {i} is {s:.3e}")));
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Population covariance from running sums: `outer / n - mean mean^T`.
fn covariance_from_sums(count: f64, sum: &Array1<f64>, outer: &Array2<f64>) -> Array2<f64> {
    let d = sum.len();
    let mut c = outer / count;
    for i in 0..d {
        for j in 0..d {
            c[[i, j]] -= (sum[i] / count) * (sum[j] / count);
        }
    }
    c
}

fn lower_apply(l: &Array2<f64>, z: &Array1<f64>) -> Array1<f64> {
    let d = z.len();
    let mut out = Array1::zeros(d);
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += l[[i, j]] * z[j];
        }
        out[i] = acc;
    }
    out
}

pub fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    initial: &Array1<f64>,
    cfg: &AmConfig,
) -> Result<ChainResult> {
    cfg.validate()?;
    let d = target.dim();
    if initial.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, target has dimension {d}",
            initial.len()
        )));
    }
    let scale = cfg.effective_scale(d);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut x = initial.clone();
    let mut lx = target.log_density(&x)?;
    if !lx.is_finite() {
        return Err(Error::InvalidArgument(
            "initial state carries no posterior mass".into(),
        ));
    }

    let build_factor = |cov: &Array2<f64>| -> Result<Array2<f64>> {
        let mut prop = cov.clone();
        for i in 0..d {
            prop[[i, i]] += cfg.regularisation;
        }
        prop.mapv_inplace(|t| t * scale);
        cholesky(&prop)
    };

    let mut factor = build_factor(&Array2::eye(d))?;

    let mut states = Array2::zeros((cfg.steps + 1, d));
    states.row_mut(0).assign(&x);
    let mut log_posts = Vec::with_capacity(cfg.steps + 1);
    log_posts.push(lx);

    // History sums for the covariance refresh, initial state included.
    let mut count = 1.0f64;
    let mut sum = x.clone();
    let mut outer = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            outer[[i, j]] = x[i] * x[j];
        }
    }

    let mut accepted = vec![true];
    accepted.reserve(cfg.steps);
    let mut consecutive_failures = 0usize;
    let start = Instant::now();

    for step in 1..=cfg.steps {
        // Fixed draw order: d proposal normals, then one uniform in (0, 1].
        let mut z = Array1::zeros(d);
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let u: f64 = 1.0 - rng.random::<f64>();

        let y = &x + &lower_apply(&factor, &z);
        // A solver breakdown at the proposed point counts as zero mass
        // there, so the proposal is rejected. A long run of breakdowns in
        // a row means something is structurally wrong and aborts the chain.
        let ly = match target.log_density(&y) {
            Ok(v) => {
                consecutive_failures = 0;
                v
            }
            Err(Error::SolverFailure { .. }) | Err(Error::ReactionOverflow(_))
                if consecutive_failures < MAX_CONSECUTIVE_FAILURES =>
            {
                consecutive_failures += 1;
                f64::NEG_INFINITY
            }
            Err(Error::SolverFailure { .. }) | Err(Error::ReactionOverflow(_)) => {
                return Err(Error::SolverFailure {
                    context: format!(
                        "forward model failed at {} consecutive proposals by step {step}",
                        MAX_CONSECUTIVE_FAILURES + 1
                    ),
                    residual: f64::NAN,
                    iterations: step,
                });
            }
            Err(other) => return Err(other),
        };
        let delta = ly - lx;
        let take = delta >= 0.0 || u.ln() < delta;
        if take {
            x = y;
            lx = ly;
        }
        accepted.push(take);
        states.row_mut(step).assign(&x);
        log_posts.push(lx);

        count += 1.0;
        sum += &x;
        for i in 0..d {
            for j in 0..d {
                outer[[i, j]] += x[i] * x[j];
            }
        }
        if cfg.update_period != 0 && step % cfg.update_period == 0 {
            let cov = covariance_from_sums(count, &sum, &outer);
            factor = build_factor(&cov)?;
        }
    }

    Ok(ChainResult {
        states,
        log_posts,
        accepted,
        burn_in: cfg.burn_in,
        seconds: start.elapsed().as_secs_f64(),
    })
}
