//! Bayesian inversion of the reaction parameters: posterior definition,
//! the two forward maps (full solver and reduced network surrogate), and
//! the adaptive Metropolis sampler in [`sampler`].

mod io;
mod sampler;

pub use io::{read_chain, write_chain};
pub use sampler::{cholesky, run_chain, AmConfig, ChainResult};

use crate::error::{Error, Result};
use crate::fracnet::{forward, output, NetConfig, Theta};
use crate::pde::{GridConfig, PdeProblem};
use crate::pod::{project, PodBasis};
use ndarray::Array1;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Anything the sampler can draw from: a possibly unnormalised log
/// density, `-inf` marking zero mass.
pub trait LogDensity {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &Array1<f64>) -> Result<f64>;
}

/// Parameter-to-data map used inside the likelihood.
pub trait ForwardMap {
    /// Squared distance between the model response at `xi` and the data.
    fn misfit_sq(&self, xi: &Array1<f64>) -> Result<f64>;
    /// Short identity written into chain files.
    fn name(&self) -> &'static str;
}

/// Uniform prior on an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorBox {
    pub bounds: Vec<(f64, f64)>,
}

impl PriorBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("prior box needs at least one dimension".into()));
        }
        for (lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("bad prior bounds ({lo}, {hi})")));
            }
        }
        Ok(PriorBox { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, x: &Array1<f64>) -> bool {
        x.len() == self.bounds.len()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    pub fn center(&self) -> Array1<f64> {
        self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// Posterior `exp(-misfit / (2 kappa^2))` restricted to the prior box.
pub struct PosteriorSpec<M: ForwardMap> {
    pub prior: PriorBox,
    pub kappa: f64,
    pub forward: M,
}

impl<M: ForwardMap> PosteriorSpec<M> {
    pub fn new(prior: PriorBox, kappa: f64, forward: M) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument("noise level kappa must be positive".into()));
        }
        Ok(PosteriorSpec { prior, kappa, forward })
    }
}

impl<M: ForwardMap> LogDensity for PosteriorSpec<M> {
    fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn log_density(&self, x: &Array1<f64>) -> Result<f64> {
        if !self.prior.contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        let misfit = self.forward.misfit_sq(x)?;
        Ok(-misfit / (2.0 * self.kappa * self.kappa))
    }
}

/// Likelihood through the full nonlinear solver.
pub struct FullModel {
    base: PdeProblem,
    observations: Array1<f64>,
}

impl FullModel {
    pub fn new(grid: GridConfig, observations: Array1<f64>) -> Result<Self> {
        if observations.len() != grid.n_dof() {
            return Err(Error::DimensionMismatch(format!(
                "observations have {} entries, grid has {}",
                observations.len(),
                grid.n_dof()
            )));
        }
        let base = PdeProblem::new(grid, None)?;
        Ok(FullModel { base, observations })
    }
}

impl ForwardMap for FullModel {
    fn misfit_sq(&self, xi: &Array1<f64>) -> Result<f64> {
        if xi.len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "the model has two parameters, got {}",
                xi.len()
            )));
        }
        let problem = self.base.with_reaction([xi[0], xi[1]])?;
        let solution = problem.solve()?.solution;
        let diff = &solution - &self.observations;
        Ok(diff.dot(&diff))
    }

    fn name(&self) -> &'static str {
        "full"
    }
}

/// Likelihood through the trained network in the reduced basis. The
/// misfit decomposes as
///
/// ```text
/// |d - V c|^2 = |V^T d - c|^2 + (|d|^2 - |V^T d|^2)
/// ```
///
/// for any coefficients `c`, so the part of the data outside the basis is
/// a constant, precomputed once.
pub struct SurrogateModel {
    config: NetConfig,
    theta: Theta,
    projected: Array1<f64>,
    offset: f64,
}

impl SurrogateModel {
    pub fn new(
        config: NetConfig,
        theta: Theta,
        basis: &PodBasis,
        observations: &Array1<f64>,
    ) -> Result<Self> {
        config.validate()?;
        theta.check_dims(&config)?;
        if config.output_dim != basis.modes() {
            return Err(Error::DimensionMismatch(format!(
                "network emits {} coefficients, basis has {} modes",
                config.output_dim,
                basis.modes()
            )));
        }
        if observations.len() != basis.n_dof() {
            return Err(Error::DimensionMismatch(format!(
                "observations have {} entries, basis vectors {}",
                observations.len(),
                basis.n_dof()
            )));
        }
        let projected = project(basis, &observations.view())?;
        let offset = (observations.dot(observations) - projected.dot(&projected)).max(0.0);
        Ok(SurrogateModel { config, theta, projected, offset })
    }
}

impl ForwardMap for SurrogateModel {
    fn misfit_sq(&self, xi: &Array1<f64>) -> Result<f64> {
        let input = xi.to_vec();
        let trace = forward(&self.config, &self.theta, &input)?;
        let c = output(&trace);
        let diff = c - &self.projected;
        Ok(diff.dot(&diff) + self.offset)
    }

    fn name(&self) -> &'static str {
        "surrogate"
    }
}

/// Solve the full model at the ground-truth parameters and add iid
/// Gaussian noise of standard deviation `kappa` (zero gives exact data).
/// The noise generator is dedicated to this draw, one value per grid
/// point in index order.
pub fn generate_observations(
    grid: GridConfig,
    xi_true: [f64; 2],
    kappa: f64,
    noise_seed: u64,
) -> Result<Array1<f64>> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::InvalidArgument("noise level must be non-negative".into()));
    }
    let problem = PdeProblem::new(grid, Some(xi_true))?;
    let mut data = problem.solve()?.solution;
    if kappa > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        for v in data.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += kappa * z;
        }
    }
    Ok(data)
}
