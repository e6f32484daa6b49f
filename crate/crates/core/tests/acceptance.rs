//! Acceptance gate for the surrogate-accelerated inversion pipeline.
//!
//! Each test covers one release criterion end to end and prints a single
//! verdict line (run with `--nocapture` to see them all):
//!
//! ```text
//! [PASS] gradient check: 21 configs, worst relative error 2.1e-09 (tol 1e-6) [0.4s of 10s]
//! ```
//!
//! The time budgets are informational; only the numerical tolerances are
//! asserted. The heavier fixtures (desk-scale surrogate, its chain) are
//! built once behind `LazyLock` and shared across tests.

use std::sync::LazyLock;
use std::time::Instant;

use fdnn_core::diagnostics::{credible_interval, iact, mean_and_std};
use fdnn_core::fracnet::{
    closed_form_output, forward, gradient, loss, nu_decay_check, output, train, training_batch,
};
use fdnn_core::mcmc::{generate_observations, run_chain, FullModel, LogDensity, SurrogateModel};
use fdnn_core::optim::BfgsConfig;
use fdnn_core::pde::{generate_snapshots, linear_reference, PdeProblem};
use fdnn_core::pod::{pod_of_matrix, projection_error_sq, reconstruct};
use fdnn_core::{
    AmConfig, Batch, ChainResult, GridConfig, NetConfig, PodBasis, PosteriorSpec, PriorBox, Theta,
};
use ndarray::{array, Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const BOUNDS: [(f64, f64); 2] = [(0.01, 10.0), (0.01, 10.0)];
const XI_TRUE: [f64; 2] = [1.0, 0.1];
const KAPPA: f64 = 1e-2;

/// Print the verdict line, then enforce it.
fn verdict(name: &str, start: Instant, budget_s: f64, ok: bool, detail: &str) {
    let elapsed = start.elapsed().as_secs_f64();
    let tag = if ok { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] {name}: {detail} [{elapsed:.1}s of {budget_s:.0}s]");
    println!("{line}");
    assert!(ok, "{line}");
}

// ---------------------------------------------------------------------------
// Shared desk-scale fixtures (32x32 grid, 300 snapshots, 100 modes).
// ---------------------------------------------------------------------------

struct DeskFixture {
    grid: GridConfig,
    basis: PodBasis,
    cfg: NetConfig,
    batch: Batch,
}

static DESK: LazyLock<DeskFixture> = LazyLock::new(|| {
    let grid = GridConfig::new(32).unwrap();
    let set = generate_snapshots(grid, &BOUNDS, 300, 100).unwrap();
    let basis = fdnn_core::pod::compute_pod(&set, 100).unwrap();
    let cfg = NetConfig { output_dim: 100, ..NetConfig::default() };
    let batch = training_batch(&set, &basis).unwrap();
    DeskFixture { grid, basis, cfg, batch }
});

/// Desk-scale chain over the trained surrogate, shared by the posterior
/// and mixing tests.
static DESK_CHAIN: LazyLock<ChainResult> = LazyLock::new(|| {
    let desk = &*DESK;
    let opt = BfgsConfig { max_iters: 4000, ..BfgsConfig::default() };
    let fit = train(&desk.cfg, &desk.batch, 9, &opt).unwrap();
    let observations = generate_observations(desk.grid, XI_TRUE, KAPPA, 5).unwrap();
    let surrogate =
        SurrogateModel::new(desk.cfg.clone(), fit.theta, &desk.basis, &observations).unwrap();
    let prior = PriorBox::new(BOUNDS.to_vec()).unwrap();
    let target = PosteriorSpec::new(prior.clone(), KAPPA, surrogate).unwrap();
    let am = AmConfig {
        steps: 5000,
        burn_in: 2500,
        update_period: 25,
        scale: None,
        regularisation: 1e-8,
        seed: 22,
    };
    run_chain(&target, &prior.center(), &am).unwrap()
});

/// Relative sup-norm error of the reconstructed surrogate response against
/// a fresh full-order solve at `xi`.
fn held_out_error(
    grid: GridConfig,
    cfg: &NetConfig,
    theta: &Theta,
    basis: &PodBasis,
    xi: [f64; 2],
) -> f64 {
    let truth = PdeProblem::new(grid, Some(xi)).unwrap().solve().unwrap().solution;
    let trace = forward(cfg, theta, &xi).unwrap();
    let approx = reconstruct(basis, &output(&trace).view()).unwrap();
    let num = truth
        .iter()
        .zip(approx.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let den = truth.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    num / den
}

// ---------------------------------------------------------------------------
// 1. Adjoint gradient against central finite differences.
// ---------------------------------------------------------------------------

fn fd_gradient(cfg: &NetConfig, theta: &Theta, batch: &Batch, step: f64) -> Vec<f64> {
    let flat = theta.to_flat();
    let mut grad = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let mut up = flat.clone();
        up[i] += step;
        let mut down = flat.clone();
        down[i] -= step;
        let f_up = loss(cfg, &Theta::from_flat(cfg, &up).unwrap(), batch).unwrap();
        let f_down = loss(cfg, &Theta::from_flat(cfg, &down).unwrap(), batch).unwrap();
        grad[i] = (f_up - f_down) / (2.0 * step);
    }
    grad
}

#[test]
fn a01_adjoint_gradient_matches_finite_differences() {
    let t0 = Instant::now();
    let mut specs: Vec<(usize, usize, f64)> = Vec::new();
    for &depth in &[3usize, 4, 5] {
        for &width in &[2usize, 4, 8] {
            for &gamma in &[0.3, 0.7] {
                specs.push((depth, width, gamma));
            }
        }
    }
    specs.push((3, 5, 0.5));
    specs.push((4, 6, 0.5));
    specs.push((5, 7, 0.5));

    let mut worst = 0.0f64;
    for (idx, &(depth, width, gamma)) in specs.iter().enumerate() {
        let cfg = NetConfig {
            depth,
            width,
            input_dim: 2,
            output_dim: 3,
            gamma,
            ridge: 1e-3,
            ..NetConfig::default()
        };
        let theta = Theta::init(&cfg, 40 + idx as u64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(900 + idx as u64);
        let count = 3;
        let inputs = Array2::from_shape_fn((count, cfg.input_dim), |_| rng.random_range(-1.0..1.5));
        let targets =
            Array2::from_shape_fn((count, cfg.output_dim), |_| rng.random_range(-1.0..1.0));
        let batch = Batch { inputs, targets };

        let analytic = gradient(&cfg, &theta, &batch).unwrap();
        let numeric = fd_gradient(&cfg, &theta, &batch, 1e-6);
        let num = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let den = numeric.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        worst = worst.max(num / den);
    }
    let ok = specs.len() >= 20 && worst <= 1e-6;
    verdict(
        "gradient check",
        t0,
        10.0,
        ok,
        &format!("{} configs, worst relative error {worst:.1e} (tol 1e-6)", specs.len()),
    );
}

// ---------------------------------------------------------------------------
// 2. Forward pass against the closed forms for shallow depths.
// ---------------------------------------------------------------------------

#[test]
fn a02_forward_pass_matches_closed_forms() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut draws = 0usize;
    for &depth in &[2usize, 3, 4] {
        let cfg = NetConfig {
            depth,
            width: 4,
            input_dim: 2,
            output_dim: 2,
            ..NetConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + depth as u64);
        for draw in 0..100 {
            let theta = Theta::init(&cfg, 2000 + 100 * depth as u64 + draw).unwrap();
            let xi = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let reference = closed_form_output(&cfg, &theta, &xi).unwrap();
            let trace = forward(&cfg, &theta, &xi).unwrap();
            let got = output(&trace);
            let diff = reference
                .iter()
                .zip(got.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            worst = worst.max(diff);
            draws += 1;
        }
    }
    let ok = worst <= 1e-12;
    verdict(
        "forward closed forms",
        t0,
        1.0,
        ok,
        &format!("{draws} draws over depths 2..4, worst abs diff {worst:.1e} (tol 1e-12)"),
    );
}

// ---------------------------------------------------------------------------
// 3. Activation kernel tail decay.
// ---------------------------------------------------------------------------

#[test]
fn a03_activation_kernel_tail_decay() {
    let t0 = Instant::now();
    let ts: Vec<f64> = (0..=20_000).map(|i| -10.0 + i as f64 * 1e-3).collect();
    let worst = nu_decay_check(0.1, &ts);
    let ok = worst <= 1.0;
    verdict(
        "activation decay",
        t0,
        1.0,
        ok,
        &format!(
            "kernel and two derivatives vs 20 (1 + |t|)^-1.5 on {} points, worst ratio {worst:.3}",
            ts.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. POD energy identity and optimality against random bases.
// ---------------------------------------------------------------------------

/// Orthonormalise the columns of a random matrix (modified Gram-Schmidt).
fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut q = Array2::from_shape_fn((rows, cols), |_| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    });
    for j in 0..cols {
        for i in 0..j {
            let dot = q.column(i).dot(&q.column(j));
            let prev = q.column(i).to_owned();
            q.column_mut(j).scaled_add(-dot, &prev);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    q
}

/// Squared Frobenius projection error of `a` onto the span of `q`.
fn projection_error_of(q: &Array2<f64>, a: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for col in a.columns() {
        let coeff = q.t().dot(&col);
        let back = q.dot(&coeff);
        total += col.iter().zip(back.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    }
    total
}

#[test]
fn a04_pod_energy_identity_and_optimality() {
    let t0 = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut beaten = 0usize;
    let mut contests = 0usize;
    for (matrix_seed, k) in [(11u64, 4usize), (12, 8), (13, 15)] {
        let mut rng = ChaCha8Rng::seed_from_u64(matrix_seed);
        let a = Array2::from_shape_fn((50, 20), |_| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        let basis = pod_of_matrix(&a, k, 0).unwrap();
        let err = projection_error_sq(&basis, &a).unwrap();
        let tail: f64 = basis.singular_values[k..].iter().map(|s| s * s).sum();
        worst_gap = worst_gap.max((err - tail).abs() / tail);

        for _ in 0..100 {
            let q = random_orthonormal(50, k, &mut rng);
            contests += 1;
            if err <= projection_error_of(&q, &a) {
                beaten += 1;
            }
        }
    }
    let ok = worst_gap <= 1e-10 && beaten == contests;
    verdict(
        "pod optimality",
        t0,
        5.0,
        ok,
        &format!(
            "3 matrices: worst energy-identity gap {worst_gap:.1e} (tol 1e-10), \
             beat {beaten}/{contests} random bases"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Solver grid convergence and nonlinear residual.
// ---------------------------------------------------------------------------

#[test]
fn a05_solver_grid_convergence_and_nonlinear_residual() {
    let t0 = Instant::now();
    let mut errors = Vec::new();
    let mut spacings = Vec::new();
    for &m in &[16usize, 32, 64] {
        let grid = GridConfig::new(m).unwrap();
        let solved = PdeProblem::new(grid, None).unwrap().solve().unwrap().solution;
        let exact = linear_reference(&grid);
        let err = solved
            .iter()
            .zip(exact.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        errors.push(err);
        spacings.push(grid.spacing());
    }
    let order_a = (errors[0] / errors[1]).ln() / (spacings[0] / spacings[1]).ln();
    let order_b = (errors[1] / errors[2]).ln() / (spacings[1] / spacings[2]).ln();

    let grid = GridConfig::new(64).unwrap();
    let report = PdeProblem::new(grid, Some(XI_TRUE)).unwrap().solve().unwrap();

    let ok = (1.9..=2.1).contains(&order_a)
        && (1.9..=2.1).contains(&order_b)
        && report.residual_norm <= 1e-6;
    verdict(
        "solver convergence",
        t0,
        60.0,
        ok,
        &format!(
            "observed orders {order_a:.3}, {order_b:.3} (band 1.9..2.1); \
             nonlinear residual {:.1e} (tol 1e-6, {} Newton steps)",
            report.residual_norm, report.newton_iters
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Surrogate held-out error decreases with the training budget.
// ---------------------------------------------------------------------------

#[test]
fn a06_surrogate_error_decreases_with_training() {
    let t0 = Instant::now();
    let desk = &*DESK;
    let mut errors = Vec::new();
    for &budget in &[400usize, 800, 1600] {
        let opt = BfgsConfig { max_iters: budget, ..BfgsConfig::default() };
        let fit = train(&desk.cfg, &desk.batch, 9, &opt).unwrap();
        errors.push(held_out_error(desk.grid, &desk.cfg, &fit.theta, &desk.basis, XI_TRUE));
    }
    let monotone = errors[0] >= errors[1] && errors[1] >= errors[2];
    let ok = monotone && errors[2] <= 2e-2;
    verdict(
        "surrogate training",
        t0,
        600.0,
        ok,
        &format!(
            "held-out errors {:.3e} -> {:.3e} -> {:.3e} over 400/800/1600 iterations \
             (monotone, final tol 2e-2)",
            errors[0], errors[1], errors[2]
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Posterior mean and credible intervals recover the truth.
// ---------------------------------------------------------------------------

#[test]
fn a07_posterior_recovers_true_parameters() {
    let t0 = Instant::now();
    let chain = &*DESK_CHAIN;
    let mut ok = true;
    let mut parts = Vec::new();
    for j in 0..2 {
        let series = chain.component(j);
        let (mean, _) = mean_and_std(&series).unwrap();
        let (lo, hi) = credible_interval(&series, 0.95).unwrap();
        let (band_lo, band_hi, truth) =
            if j == 0 { (0.9, 1.1, XI_TRUE[0]) } else { (0.09, 0.11, XI_TRUE[1]) };
        ok &= (band_lo..=band_hi).contains(&mean) && lo <= truth && truth <= hi;
        parts.push(format!(
            "xi_{}: mean {mean:.4} in [{band_lo}, {band_hi}], 95% CI ({lo:.4}, {hi:.4})",
            j + 1
        ));
    }
    verdict("posterior recovery", t0, 300.0, ok, &parts.join("; "));
}

// ---------------------------------------------------------------------------
// 8. Integrated autocorrelation time of that chain stays short.
// ---------------------------------------------------------------------------

#[test]
fn a08_chain_mixing_time_is_short() {
    let t0 = Instant::now();
    let chain = &*DESK_CHAIN;
    let mut ok = true;
    let mut parts = Vec::new();
    for j in 0..2 {
        let series = chain.component(j);
        let est = iact(&series).unwrap();
        ok &= est.converged && est.tau <= 50.0;
        parts.push(format!("xi_{}: tau {:.1} (window {})", j + 1, est.tau, est.window));
    }
    parts.push(format!("acceptance {:.3}", chain.acceptance_rate()));
    verdict(
        "chain mixing",
        t0,
        300.0,
        ok,
        &format!("{} (tol 50, windows self-consistent)", parts.join("; ")),
    );
}

// ---------------------------------------------------------------------------
// 9. Surrogate chain runs at least ten times faster than the full model.
// ---------------------------------------------------------------------------

#[test]
fn a09_surrogate_chain_runs_ten_times_faster() {
    let t0 = Instant::now();
    let grid = GridConfig::new(64).unwrap();
    let set = generate_snapshots(grid, &BOUNDS, 300, 505).unwrap();
    let basis = fdnn_core::pod::compute_pod(&set, 100).unwrap();
    let cfg = NetConfig { output_dim: 100, ..NetConfig::default() };
    let batch = training_batch(&set, &basis).unwrap();
    let opt = BfgsConfig { max_iters: 1600, ..BfgsConfig::default() };
    let fit = train(&cfg, &batch, 9, &opt).unwrap();

    let observations = generate_observations(grid, XI_TRUE, KAPPA, 202).unwrap();
    let prior = PriorBox::new(BOUNDS.to_vec()).unwrap();
    let am = AmConfig {
        steps: 2000,
        burn_in: 1000,
        update_period: 100,
        scale: None,
        regularisation: 1e-8,
        seed: 606,
    };

    let surrogate = SurrogateModel::new(cfg, fit.theta, &basis, &observations).unwrap();
    let target_s = PosteriorSpec::new(prior.clone(), KAPPA, surrogate).unwrap();
    let chain_s = run_chain(&target_s, &prior.center(), &am).unwrap();

    let full = FullModel::new(grid, observations).unwrap();
    let target_f = PosteriorSpec::new(prior.clone(), KAPPA, full).unwrap();
    let chain_f = run_chain(&target_f, &prior.center(), &am).unwrap();

    let speedup = chain_f.seconds / chain_s.seconds;
    let ok = chain_s.seconds * 10.0 <= chain_f.seconds;
    verdict(
        "surrogate speedup",
        t0,
        1800.0,
        ok,
        &format!(
            "2000 steps on the 64x64 grid: surrogate {:.3}s vs full model {:.1}s, {speedup:.0}x \
             (needs 10x)",
            chain_s.seconds, chain_f.seconds
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. Sampler reproduces a quadrature-normalised toy density.
// ---------------------------------------------------------------------------

/// Double-well log-density restricted to a box.
struct DoubleWell {
    lo: f64,
    hi: f64,
}

impl LogDensity for DoubleWell {
    fn dim(&self) -> usize {
        1
    }
    fn log_density(&self, x: &Array1<f64>) -> fdnn_core::Result<f64> {
        let t = x[0];
        if t < self.lo || t > self.hi {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-t.powi(4) / 4.0 + t * t / 2.0)
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn a10_sampler_matches_quadrature_on_toy_density() {
    let t0 = Instant::now();
    let (lo, hi) = (-4.0f64, 4.0f64);
    let bins = 10usize;
    let width = (hi - lo) / bins as f64;
    let dens = |t: f64| (-t.powi(4) / 4.0 + t * t / 2.0).exp();
    let total = simpson(dens, lo, hi, 20_000);
    let truth: Vec<f64> = (0..bins)
        .map(|i| simpson(dens, lo + i as f64 * width, lo + (i + 1) as f64 * width, 4_000) / total)
        .collect();

    let am = AmConfig {
        steps: 100_000,
        burn_in: 0,
        update_period: 0,
        scale: Some(4.0),
        regularisation: 1e-8,
        seed: 7,
    };
    let chain = run_chain(&DoubleWell { lo, hi }, &array![0.0], &am).unwrap();
    let samples = chain.component(0);
    let mut counts = vec![0usize; bins];
    for &s in &samples {
        counts[(((s - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let n = samples.len() as f64;
    let tv: f64 = truth
        .iter()
        .zip(&counts)
        .map(|(p, &c)| (p - c as f64 / n).abs())
        .sum::<f64>()
        / 2.0;

    // Estimator sanity on analytically understood series: independent draws
    // (tau = 1) and an AR(1) chain with rho = 0.8 (tau = 9).
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let iid: Vec<f64> = (0..100_000)
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    let tau_iid = iact(&iid).unwrap().tau;

    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let rho = 0.8f64;
    let mut state = 0.0f64;
    let ar1: Vec<f64> = (0..100_000)
        .map(|_| {
            let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            state = rho * state + z;
            state
        })
        .collect();
    let tau_ar1 = iact(&ar1).unwrap().tau;
    let tau_theory = (1.0 + rho) / (1.0 - rho);

    let ok = tv <= 0.02
        && (0.9..=1.2).contains(&tau_iid)
        && (tau_ar1 - tau_theory).abs() <= 0.15 * tau_theory;
    verdict(
        "toy stationarity",
        t0,
        60.0,
        ok,
        &format!(
            "TV distance {tv:.4} over {bins} bins (tol 0.02); tau: iid {tau_iid:.2} (band \
             0.9..1.2), AR(1) {tau_ar1:.1} vs theory {tau_theory:.0} (15% band)"
        ),
    );
}
