//! Full-order model: a nonlinear diffusion-reaction equation on the unit
//! square with homogeneous Dirichlet data,
//!
//! ```text
//! -lap(u) + (xi2/xi1) (exp(xi1 u) - 1) = 100 sin(2 pi x1) sin(2 pi x2)
//! ```
//!
//! discretised with the 5-point stencil on a uniform interior grid and
//! solved by damped Newton with matrix-free restarted GMRES inside.
//!
//! Interior points are indexed `p = iy * m + ix` with `x1 = (ix + 1) h`,
//! `x2 = (iy + 1) h`, `h = 1 / (m + 1)`. Neighbour sums are grouped as
//! `(left + right) + (down + up)` everywhere so that the residual, the
//! Jacobian action and therefore the Newton iterates commute bitwise with
//! the transpose symmetry of the problem.

mod gmres;

pub use gmres::{gmres, GmresStats};

use crate::error::{Error, Result};
use crate::pod::SnapshotSet;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Newton tolerance on the Euclidean residual norm.
pub const NEWTON_TOL: f64 = 1e-6;
/// Newton iteration budget.
pub const NEWTON_MAX_ITERS: usize = 50;
/// Step-halving budget per Newton iteration.
pub const MAX_HALVINGS: usize = 10;
/// GMRES restart length.
pub const GMRES_RESTART: usize = 50;
/// Forcing term: each linear solve targets this relative residual.
pub const GMRES_FORCING: f64 = 1e-4;
/// Restart-cycle budget for a single linear solve.
pub const GMRES_MAX_CYCLES: usize = 400;
/// `exp` argument guard for the reaction term.
pub const EXP_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Interior points per direction.
    pub interior: usize,
}

impl GridConfig {
    pub fn new(interior: usize) -> Result<Self> {
        if interior == 0 {
            return Err(Error::InvalidArgument("grid needs at least one interior point".into()));
        }
        Ok(GridConfig { interior })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.interior as f64 + 1.0)
    }

    pub fn n_dof(&self) -> usize {
        self.interior * self.interior
    }

    /// Coordinates of interior point `p`.
    pub fn coords(&self, p: usize) -> (f64, f64) {
        let h = self.spacing();
        let ix = p % self.interior;
        let iy = p / self.interior;
        ((ix as f64 + 1.0) * h, (iy as f64 + 1.0) * h)
    }

    /// Index of the transposed point (x1 and x2 swapped).
    pub fn transpose_index(&self, p: usize) -> usize {
        let ix = p % self.interior;
        let iy = p / self.interior;
        ix * self.interior + iy
    }
}

#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub grid: GridConfig,
    /// `Some([xi1, xi2])` for the nonlinear model, `None` drops the
    /// reaction term entirely (used for mesh-convergence checks against
    /// the closed-form solution of the linear limit).
    pub reaction: Option<[f64; 2]>,
    source: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Array1<f64>,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub halvings: usize,
    pub gmres_iters: usize,
}

impl PdeProblem {
    pub fn new(grid: GridConfig, reaction: Option<[f64; 2]>) -> Result<Self> {
        if let Some([xi1, xi2]) = reaction {
            if !xi1.is_finite() || !xi2.is_finite() {
                return Err(Error::InvalidArgument("reaction parameters must be finite".into()));
            }
            if xi1 == 0.0 {
                return Err(Error::InvalidArgument(
                    "xi1 = 0 is outside the model family; drop the reaction instead".into(),
                ));
            }
        }
        let source = source_vector(&grid);
        Ok(PdeProblem { grid, reaction, source })
    }

    /// Same grid and cached source, different reaction parameters.
    pub fn with_reaction(&self, xi: [f64; 2]) -> Result<Self> {
        if !xi[0].is_finite() || !xi[1].is_finite() {
            return Err(Error::InvalidArgument("reaction parameters must be finite".into()));
        }
        if xi[0] == 0.0 {
            return Err(Error::InvalidArgument(
                "xi1 = 0 is outside the model family; drop the reaction instead".into(),
            ));
        }
        Ok(PdeProblem {
            grid: self.grid,
            reaction: Some(xi),
            source: self.source.clone(),
        })
    }

    pub fn source(&self) -> &Array1<f64> {
        &self.source
    }

    /// Nonlinear residual `F(u)`.
    pub fn residual(&self, u: &Array1<f64>) -> Result<Array1<f64>> {
        let n = self.grid.n_dof();
        if u.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, grid has {n}",
                u.len()
            )));
        }
        let m = self.grid.interior;
        let h = self.grid.spacing();
        let inv_h2 = 1.0 / (h * h);
        let mut out = Array1::zeros(n);
        for p in 0..n {
            let diffusion = (4.0 * u[p] - neighbour_sum(u, m, p)) * inv_h2;
            let reaction = match self.reaction {
                Some([xi1, xi2]) => reaction_value(xi1, xi2, u[p])?,
                None => 0.0,
            };
            out[p] = diffusion + reaction - self.source[p];
        }
        Ok(out)
    }

    /// Jacobian action `J(u) v`.
    pub fn jacobian_apply(&self, u: &Array1<f64>, v: &Array1<f64>) -> Result<Array1<f64>> {
        let gp = self.reaction_derivative(u)?;
        if v.len() != u.len() {
            return Err(Error::DimensionMismatch(format!(
                "direction has {} entries, state has {}",
                v.len(),
                u.len()
            )));
        }
        Ok(apply_with_derivative(&self.grid, &gp, v))
    }

    /// Pointwise derivative of the reaction term, zero when disabled.
    fn reaction_derivative(&self, u: &Array1<f64>) -> Result<Array1<f64>> {
        let n = self.grid.n_dof();
        if u.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, grid has {n}",
                u.len()
            )));
        }
        let mut gp = Array1::zeros(n);
        if let Some([xi1, xi2]) = self.reaction {
            for p in 0..n {
                gp[p] = reaction_slope(xi1, xi2, u[p])?;
            }
        }
        Ok(gp)
    }

    /// Damped Newton from the zero state.
    pub fn solve(&self) -> Result<SolveReport> {
        let n = self.grid.n_dof();
        let mut u: Array1<f64> = Array1::zeros(n);
        let mut fval = self.residual(&u)?;
        let mut fnorm = norm2(&fval);
        let mut halvings = 0usize;
        let mut gmres_iters = 0usize;

        for iter in 0..NEWTON_MAX_ITERS {
            if fnorm <= NEWTON_TOL {
                return Ok(SolveReport {
                    solution: u,
                    residual_norm: fnorm,
                    newton_iters: iter,
                    halvings,
                    gmres_iters,
                });
            }
            let gp = self.reaction_derivative(&u)?;
            let apply = |v: &Array1<f64>| apply_with_derivative(&self.grid, &gp, v);
            let rhs = -&fval;
            let (delta, stats) =
                gmres(&apply, &rhs, GMRES_RESTART, GMRES_FORCING, GMRES_MAX_CYCLES)?;
            gmres_iters += stats.iterations;

            let mut lambda = 1.0;
            let mut accepted = false;
            for attempt in 0..=MAX_HALVINGS {
                let mut candidate = u.clone();
                candidate.scaled_add(lambda, &delta);
                match self.residual(&candidate) {
                    Ok(cf) => {
                        let cn = norm2(&cf);
                        if cn.is_finite() && cn < fnorm {
                            u = candidate;
                            fval = cf;
                            fnorm = cn;
                            accepted = true;
                            halvings += attempt;
                            break;
                        }
                    }
                    // An overshoot past the exp guard just means the step
                    // was too long; shrink like any other rejection.
                    Err(Error::ReactionOverflow(_)) => {}
                    Err(other) => return Err(other),
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(Error::SolverFailure {
                    context: "newton step rejected after maximum halvings".into(),
                    residual: fnorm,
                    iterations: iter,
                });
            }
        }
        if fnorm <= NEWTON_TOL {
            return Ok(SolveReport {
                solution: u,
                residual_norm: fnorm,
                newton_iters: NEWTON_MAX_ITERS,
                halvings,
                gmres_iters,
            });
        }
        Err(Error::SolverFailure {
            context: "newton iteration budget exhausted".into(),
            residual: fnorm,
            iterations: NEWTON_MAX_ITERS,
        })
    }
}

/// `(left + right) + (down + up)` with zero Dirichlet data outside.
#[inline]
fn neighbour_sum(v: &Array1<f64>, m: usize, p: usize) -> f64 {
    let ix = p % m;
    let iy = p / m;
    let left = if ix > 0 { v[p - 1] } else { 0.0 };
    let right = if ix + 1 < m { v[p + 1] } else { 0.0 };
    let down = if iy > 0 { v[p - m] } else { 0.0 };
    let up = if iy + 1 < m { v[p + m] } else { 0.0 };
    (left + right) + (down + up)
}

fn apply_with_derivative(grid: &GridConfig, gp: &Array1<f64>, v: &Array1<f64>) -> Array1<f64> {
    let m = grid.interior;
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let n = grid.n_dof();
    let mut out = Array1::zeros(n);
    for p in 0..n {
        out[p] = (4.0 * v[p] - neighbour_sum(v, m, p)) * inv_h2 + gp[p] * v[p];
    }
    out
}

fn reaction_value(xi1: f64, xi2: f64, u: f64) -> Result<f64> {
    let arg = xi1 * u;
    if arg.abs() > EXP_GUARD {
        return Err(Error::ReactionOverflow(arg.abs()));
    }
    Ok(xi2 / xi1 * arg.exp_m1())
}

fn reaction_slope(xi1: f64, xi2: f64, u: f64) -> Result<f64> {
    let arg = xi1 * u;
    if arg.abs() > EXP_GUARD {
        return Err(Error::ReactionOverflow(arg.abs()));
    }
    Ok(xi2 * arg.exp())
}

fn source_vector(grid: &GridConfig) -> Array1<f64> {
    let n = grid.n_dof();
    let mut f = Array1::zeros(n);
    for p in 0..n {
        let (x1, x2) = grid.coords(p);
        f[p] = 100.0 * ((2.0 * PI * x1).sin() * (2.0 * PI * x2).sin());
    }
    f
}

/// Exact solution of the linear limit (reaction dropped):
/// `u = 100 / (8 pi^2) sin(2 pi x1) sin(2 pi x2)`.
pub fn linear_reference(grid: &GridConfig) -> Array1<f64> {
    let amp = 100.0 / (8.0 * PI * PI);
    let n = grid.n_dof();
    let mut u = Array1::zeros(n);
    for p in 0..n {
        let (x1, x2) = grid.coords(p);
        u[p] = amp * ((2.0 * PI * x1).sin() * (2.0 * PI * x2).sin());
    }
    u
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Latin hypercube sample: `count` points in the box, one per stratum and
/// dimension. Draw order is fixed (permutation, then offsets, dimension by
/// dimension) so results are reproducible from the generator state alone.
pub fn latin_hypercube(
    bounds: &[(f64, f64)],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    for (lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad bounds ({lo}, {hi})")));
        }
    }
    let dim = bounds.len();
    let mut out = Array2::zeros((count, dim));
    for j in 0..dim {
        let mut perm: Vec<usize> = (0..count).collect();
        for i in (1..count).rev() {
            let k = rng.random_range(0..=i);
            perm.swap(i, k);
        }
        let (lo, hi) = bounds[j];
        let width = hi - lo;
        for i in 0..count {
            let offset: f64 = rng.random();
            let t = (perm[i] as f64 + offset) / count as f64;
            out[[i, j]] = lo + t * width;
        }
    }
    Ok(out)
}

/// Solve the full model at a Latin hypercube design and pack the results.
/// Solves run in parallel; every column is written at its own index, so
/// the output is independent of scheduling.
pub fn generate_snapshots(
    grid: GridConfig,
    bounds: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<SnapshotSet> {
    if bounds.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the model has two parameters, got bounds for {}",
            bounds.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parameters = latin_hypercube(bounds, count, &mut rng)?;
    let base = PdeProblem::new(grid, None)?;

    let solutions: Vec<Result<Array1<f64>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let xi = [parameters[[i, 0]], parameters[[i, 1]]];
            let problem = base.with_reaction(xi)?;
            Ok(problem.solve()?.solution)
        })
        .collect();

    let mut snapshots = Array2::zeros((grid.n_dof(), count));
    for (i, sol) in solutions.into_iter().enumerate() {
        snapshots.column_mut(i).assign(&sol?);
    }
    let set = SnapshotSet {
        parameters,
        snapshots,
        grid_interior: grid.interior,
        bounds: bounds.to_vec(),
        seed,
    };
    set.check()?;
    Ok(set)
}

/// Outcome of one snapshot solve, kept for run manifests.
#[derive(Debug, Clone)]
pub struct SolveLog {
    pub xi: [f64; 2],
    pub newton_iters: usize,
    pub residual_norm: f64,
    pub gmres_iters: usize,
    /// Error text when the solve failed; the column is then dropped.
    pub failure: Option<String>,
}

/// Like [`generate_snapshots`], but records one [`SolveLog`] per draw and
/// tolerates failures up to `max_failure_fraction` of the design (failed
/// columns are dropped from the returned set). The successful columns are
/// identical to a [`generate_snapshots`] run with the same seed.
pub fn generate_snapshots_logged(
    grid: GridConfig,
    bounds: &[(f64, f64)],
    count: usize,
    seed: u64,
    max_failure_fraction: f64,
) -> Result<(SnapshotSet, Vec<SolveLog>)> {
    if bounds.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the model has two parameters, got bounds for {}",
            bounds.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parameters = latin_hypercube(bounds, count, &mut rng)?;
    let base = PdeProblem::new(grid, None)?;

    let outcomes: Vec<(Option<Array1<f64>>, SolveLog)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let xi = [parameters[[i, 0]], parameters[[i, 1]]];
            let report = base.with_reaction(xi).and_then(|p| p.solve());
            match report {
                Ok(r) => {
                    let log = SolveLog {
                        xi,
                        newton_iters: r.newton_iters,
                        residual_norm: r.residual_norm,
                        gmres_iters: r.gmres_iters,
                        failure: None,
                    };
                    (Some(r.solution), log)
                }
                Err(e) => {
                    let log = SolveLog {
                        xi,
                        newton_iters: 0,
                        residual_norm: f64::NAN,
                        gmres_iters: 0,
                        failure: Some(e.to_string()),
                    };
                    (None, log)
                }
            }
        })
        .collect();

    let failed = outcomes.iter().filter(|(s, _)| s.is_none()).count();
    if failed as f64 > max_failure_fraction * count as f64 {
        let first = outcomes
            .iter()
            .find_map(|(_, log)| log.failure.as_deref())
            .unwrap_or("unknown");
        return Err(Error::SolverFailure {
            context: format!("{failed} of {count} snapshot solves failed; first: {first}"),
            residual: f64::NAN,
            iterations: 0,
        });
    }

    let kept = count - failed;
    let mut kept_params = Array2::zeros((kept, 2));
    let mut snapshots = Array2::zeros((grid.n_dof(), kept));
    let mut logs = Vec::with_capacity(count);
    let mut col = 0usize;
    for (i, (sol, log)) in outcomes.into_iter().enumerate() {
        if let Some(sol) = sol {
            kept_params.row_mut(col).assign(&parameters.row(i));
            snapshots.column_mut(col).assign(&sol);
            col += 1;
        }
        logs.push(log);
    }
    let set = SnapshotSet {
        parameters: kept_params,
        snapshots,
        grid_interior: grid.interior,
        bounds: bounds.to_vec(),
        seed,
    };
    set.check()?;
    Ok((set, logs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup_norm(v: &Array1<f64>) -> f64 {
        v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    // Dense 5-point Laplacian, assembled independently of neighbour_sum.
    fn dense_laplacian(m: usize) -> Array2<f64> {
        let n = m * m;
        let h = 1.0 / (m as f64 + 1.0);
        let mut a = Array2::zeros((n, n));
        for p in 0..n {
            let (ix, iy) = (p % m, p / m);
            a[[p, p]] = 4.0 / (h * h);
            if ix > 0 {
                a[[p, p - 1]] = -1.0 / (h * h);
            }
            if ix + 1 < m {
                a[[p, p + 1]] = -1.0 / (h * h);
            }
            if iy > 0 {
                a[[p, p - m]] = -1.0 / (h * h);
            }
            if iy + 1 < m {
                a[[p, p + m]] = -1.0 / (h * h);
            }
        }
        a
    }

    #[test]
    fn residual_matches_dense_assembly() {
        let m = 4;
        let grid = GridConfig::new(m).unwrap();
        let xi = [1.3, 0.4];
        let problem = PdeProblem::new(grid, Some(xi)).unwrap();
        let u = Array1::from_shape_fn(grid.n_dof(), |p| 0.05 * (p as f64 + 1.0).sin());
        let got = problem.residual(&u).unwrap();

        let a = dense_laplacian(m);
        let mut expected = a.dot(&u);
        for p in 0..grid.n_dof() {
            expected[p] += xi[1] / xi[0] * ((xi[0] * u[p]).exp() - 1.0);
            expected[p] -= problem.source()[p];
        }
        let diff = &got - &expected;
        assert!(sup_norm(&diff) <= 1e-10, "residual deviates: {}", sup_norm(&diff));
    }

    #[test]
    fn jacobian_action_matches_dense_and_finite_differences() {
        let grid = GridConfig::new(4).unwrap();
        let xi = [0.8, 2.0];
        let problem = PdeProblem::new(grid, Some(xi)).unwrap();
        let n = grid.n_dof();
        let u = Array1::from_shape_fn(n, |p| 0.1 * ((p * 7 % 11) as f64 - 5.0) / 5.0);
        let v = Array1::from_shape_fn(n, |p| ((p * 3 % 13) as f64 - 6.0) / 6.0);

        let jv = problem.jacobian_apply(&u, &v).unwrap();

        let a = dense_laplacian(4);
        let mut dense = a.dot(&v);
        for p in 0..n {
            dense[p] += xi[1] * (xi[0] * u[p]).exp() * v[p];
        }
        assert!(sup_norm(&(&jv - &dense)) <= 1e-9);

        let eps = 1e-6;
        let mut up = u.clone();
        up.scaled_add(eps, &v);
        let mut um = u.clone();
        um.scaled_add(-eps, &v);
        let fd = (problem.residual(&up).unwrap() - problem.residual(&um).unwrap()) / (2.0 * eps);
        let rel = sup_norm(&(&jv - &fd)) / sup_norm(&jv);
        assert!(rel <= 1e-6, "fd mismatch {rel:.3e}");
    }

    #[test]
    fn linear_limit_converges_at_second_order() {
        let mut errors = Vec::new();
        for m in [8usize, 16] {
            let grid = GridConfig::new(m).unwrap();
            let problem = PdeProblem::new(grid, None).unwrap();
            let report = problem.solve().unwrap();
            assert!(report.residual_norm <= NEWTON_TOL);
            let exact = linear_reference(&grid);
            errors.push(sup_norm(&(&report.solution - &exact)));
        }
        let ratio = errors[0] / errors[1];
        // Spacing ratio is 17/9, so second order predicts about 3.57.
        assert!(
            (3.0..=4.3).contains(&ratio),
            "convergence ratio {ratio:.3} outside second-order window"
        );
    }

    #[test]
    fn nonlinear_solution_is_bitwise_transpose_symmetric() {
        let grid = GridConfig::new(16).unwrap();
        let problem = PdeProblem::new(grid, Some([1.0, 0.1])).unwrap();
        let u = problem.solve().unwrap().solution;
        for p in 0..grid.n_dof() {
            let q = grid.transpose_index(p);
            assert_eq!(u[p].to_bits(), u[q].to_bits(), "asymmetry at {p}");
        }
    }

    #[test]
    fn stiff_reaction_exercises_damping_and_still_converges() {
        let grid = GridConfig::new(16).unwrap();
        let problem = PdeProblem::new(grid, Some([10.0, 10.0])).unwrap();
        let report = problem.solve().unwrap();
        assert!(report.residual_norm <= NEWTON_TOL);
        assert!(report.halvings >= 1, "full steps were always accepted");
    }

    #[test]
    fn reaction_guard_trips_instead_of_overflowing() {
        let grid = GridConfig::new(2).unwrap();
        let problem = PdeProblem::new(grid, Some([10.0, 1.0])).unwrap();
        let u = Array1::from_elem(grid.n_dof(), 100.0);
        match problem.residual(&u) {
            Err(Error::ReactionOverflow(a)) => assert!(a > EXP_GUARD),
            other => panic!("expected overflow guard, got {other:?}"),
        }
    }

    #[test]
    fn zero_xi1_is_rejected() {
        let grid = GridConfig::new(2).unwrap();
        assert!(PdeProblem::new(grid, Some([0.0, 1.0])).is_err());
    }

    #[test]
    fn latin_hypercube_stratifies_each_dimension() {
        let bounds = [(0.0, 1.0), (10.0, 20.0)];
        let count = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = latin_hypercube(&bounds, count, &mut rng).unwrap();
        for j in 0..2 {
            let (lo, hi) = bounds[j];
            let mut seen = vec![false; count];
            for i in 0..count {
                let t = (pts[[i, j]] - lo) / (hi - lo);
                let stratum = (t * count as f64).floor() as usize;
                assert!(stratum < count, "point outside the box");
                assert!(!seen[stratum], "stratum {stratum} hit twice in dim {j}");
                seen[stratum] = true;
            }
        }
    }

    #[test]
    fn latin_hypercube_is_seed_deterministic() {
        let bounds = [(0.01, 10.0), (0.01, 10.0)];
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let a = latin_hypercube(&bounds, 7, &mut r1).unwrap();
        let b = latin_hypercube(&bounds, 7, &mut r2).unwrap();
        assert_eq!(a, b);
        let mut r3 = ChaCha8Rng::seed_from_u64(43);
        let c = latin_hypercube(&bounds, 7, &mut r3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn snapshot_generation_is_deterministic_and_in_bounds() {
        let grid = GridConfig::new(4).unwrap();
        let bounds = [(0.01, 10.0), (0.01, 10.0)];
        let a = generate_snapshots(grid, &bounds, 6, 11).unwrap();
        let b = generate_snapshots(grid, &bounds, 6, 11).unwrap();
        assert_eq!(a, b);
        for i in 0..6 {
            for j in 0..2 {
                let v = a.parameters[[i, j]];
                assert!(v >= bounds[j].0 && v <= bounds[j].1);
            }
        }
        assert!(a.snapshots.iter().all(|v| v.is_finite()));
        // Solutions vary across parameters.
        let c0 = a.snapshots.column(0);
        let c1 = a.snapshots.column(1);
        assert!((&c0 - &c1).iter().any(|d| d.abs() > 1e-8));
    }

    #[test]
    fn logged_snapshot_run_matches_the_plain_one() {
        let grid = GridConfig::new(4).unwrap();
        let bounds = [(0.01, 10.0), (0.01, 10.0)];
        let plain = generate_snapshots(grid, &bounds, 6, 11).unwrap();
        let (logged, logs) = generate_snapshots_logged(grid, &bounds, 6, 11, 0.0).unwrap();
        assert_eq!(plain, logged);
        assert_eq!(logs.len(), 6);
        for log in &logs {
            assert!(log.failure.is_none());
            assert!(log.newton_iters >= 1);
            assert!(log.residual_norm <= NEWTON_TOL);
        }
    }
}
