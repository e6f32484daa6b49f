//! The six pipeline commands. Each one reads artifacts produced by the
//! previous stage, re-checks that file headers and configuration agree,
//! and writes its own outputs plus a resolved-config copy.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;
use fdnn_core::diagnostics::{
    acf, credible_interval, default_max_lag, histogram_auto, iact, mean_and_std,
};
use fdnn_core::fracnet::{
    forward, load_checkpoint, output, save_checkpoint, train, training_batch,
};
use fdnn_core::mcmc::{
    generate_observations, run_chain, write_chain, FullModel, SurrogateModel,
};
use fdnn_core::pde::{generate_snapshots_logged, PdeProblem};
use fdnn_core::pod::{compute_pod, read_basis, read_snapshots, reconstruct, write_basis, write_snapshots};
use fdnn_core::{Checkpoint, NetConfig, PodBasis, PosteriorSpec, Theta};

/// Fraction of snapshot solves allowed to fail before the run aborts.
const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Canonical artifact names inside the output directory.
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: &str) -> Self {
        Artifacts { dir: PathBuf::from(dir) }
    }
    pub fn snapshots(&self) -> PathBuf {
        self.dir.join("snapshots.bin")
    }
    pub fn manifest(&self) -> PathBuf {
        self.dir.join("snapshot_manifest.csv")
    }
    pub fn basis(&self) -> PathBuf {
        self.dir.join("basis.bin")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.dir.join("checkpoint.bin")
    }
    pub fn train_log(&self) -> PathBuf {
        self.dir.join("train_log.csv")
    }
    pub fn chain(&self, full_model: bool) -> PathBuf {
        self.dir.join(if full_model { "chain_full.csv" } else { "chain.csv" })
    }
    pub fn report(&self) -> PathBuf {
        self.dir.join("diagnostics_report.csv")
    }
    pub fn acf_table(&self) -> PathBuf {
        self.dir.join("acf.csv")
    }
    pub fn histogram(&self, coordinate: usize) -> PathBuf {
        self.dir.join(format!("hist_xi{}.csv", coordinate + 1))
    }
    pub fn resolved(&self, command: &str) -> PathBuf {
        self.dir.join(format!("resolved_{command}.toml"))
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::io_stage(path, e))
}

/// Create the output directory and drop the resolved config into it.
pub fn prepare_run(cfg: &ExperimentConfig, command: &str) -> Result<Artifacts, CliError> {
    let arts = Artifacts::new(&cfg.paths.output_dir);
    fs::create_dir_all(&arts.dir).map_err(|e| CliError::io_stage(&arts.dir, e))?;
    write_text(&arts.resolved(command), &cfg.to_toml())?;
    Ok(arts)
}

// ---------------------------------------------------------------------------
// snapshots
// ---------------------------------------------------------------------------

pub fn cmd_snapshots(cfg: &ExperimentConfig, arts: &Artifacts) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let t0 = Instant::now();
    let (set, logs) = generate_snapshots_logged(
        grid,
        &cfg.bounds(),
        cfg.snapshots.count,
        cfg.seeds.snapshots,
        MAX_FAILURE_FRACTION,
    )
    .map_err(CliError::numeric)?;
    let wall = t0.elapsed().as_secs_f64();

    write_snapshots(&arts.snapshots(), &set).map_err(CliError::io)?;

    let mut manifest = String::from("draw,xi1,xi2,status,newton_iters,residual_norm,gmres_iters\n");
    let mut failed = 0usize;
    let mut newton_sum = 0usize;
    let mut newton_max = 0usize;
    for (i, log) in logs.iter().enumerate() {
        let status = match &log.failure {
            None => "ok".to_string(),
            Some(msg) => {
                failed += 1;
                format!("failed: {}", msg.replace(',', ";"))
            }
        };
        newton_sum += log.newton_iters;
        newton_max = newton_max.max(log.newton_iters);
        manifest.push_str(&format!(
            "{i},{:.17e},{:.17e},{status},{},{:.6e},{}\n",
            log.xi[0], log.xi[1], log.newton_iters, log.residual_norm, log.gmres_iters
        ));
    }
    write_text(&arts.manifest(), &manifest)?;

    println!(
        "snapshots: {} solves on the {m}x{m} grid in {wall:.1}s ({failed} failed), \
         Newton iterations mean {:.1} max {newton_max}",
        logs.len(),
        newton_sum as f64 / logs.len() as f64,
        m = grid.interior,
    );
    println!("  wrote {}", arts.snapshots().display());
    println!("  wrote {}", arts.manifest().display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub fn cmd_train(
    cfg: &ExperimentConfig,
    arts: &Artifacts,
    snapshots_path: Option<&Path>,
) -> Result<(), CliError> {
    let path = snapshots_path.map(Path::to_path_buf).unwrap_or_else(|| arts.snapshots());
    let set = read_snapshots(&path).map_err(CliError::io)?;
    if set.grid_interior != cfg.grid.interior {
        return Err(CliError::Config(format!(
            "snapshot file {} holds a {}x{} grid but the config says {}x{}",
            path.display(),
            set.grid_interior,
            set.grid_interior,
            cfg.grid.interior,
            cfg.grid.interior
        )));
    }
    if set.bounds != cfg.bounds() {
        return Err(CliError::Config(format!(
            "snapshot file {} was drawn from {:?}, config box is {:?}",
            path.display(),
            set.bounds,
            cfg.bounds()
        )));
    }
    let available = set.count().min(set.n_dof());
    if cfg.pod.modes > available {
        return Err(CliError::Config(format!(
            "pod.modes = {} exceeds the {available} modes supported by {}",
            cfg.pod.modes,
            path.display()
        )));
    }

    let t0 = Instant::now();
    let basis = compute_pod(&set, cfg.pod.modes).map_err(CliError::numeric)?;
    let energy: f64 = basis.singular_values.iter().map(|s| s * s).sum();
    let tail: f64 = basis.singular_values[cfg.pod.modes..].iter().map(|s| s * s).sum();
    write_basis(&arts.basis(), &basis).map_err(CliError::io)?;
    println!(
        "pod: {} modes over {} snapshots in {:.1}s, discarded energy fraction {:.2e}",
        cfg.pod.modes,
        set.count(),
        t0.elapsed().as_secs_f64(),
        tail / energy
    );

    let net = cfg.net_config();
    let batch = training_batch(&set, &basis).map_err(CliError::numeric)?;
    let t0 = Instant::now();
    let fit = train(&net, &batch, cfg.seeds.init, &cfg.bfgs_config()).map_err(CliError::numeric)?;

    let mut log = String::from("iteration,loss,grad_norm\n");
    for (i, (loss, gnorm)) in fit.loss_history.iter().zip(&fit.grad_norm_history).enumerate() {
        log.push_str(&format!("{i},{loss:.9e},{gnorm:.9e}\n"));
    }
    write_text(&arts.train_log(), &log)?;
    println!(
        "train: {} iterations in {:.1}s, final loss {:.3e} ({:?})",
        fit.iterations,
        t0.elapsed().as_secs_f64(),
        fit.final_loss(),
        fit.termination
    );
    save_checkpoint(
        &arts.checkpoint(),
        &Checkpoint { config: net, seed: cfg.seeds.init, theta: fit.theta },
    )
    .map_err(CliError::io)?;
    println!("  wrote {}", arts.basis().display());
    println!("  wrote {}", arts.checkpoint().display());
    println!("  wrote {}", arts.train_log().display());
    Ok(())
}

// ---------------------------------------------------------------------------
// mcmc
// ---------------------------------------------------------------------------

/// Load checkpoint and basis, re-checking every header against the config.
fn load_surrogate_parts(
    cfg: &ExperimentConfig,
    arts: &Artifacts,
    checkpoint_path: Option<&Path>,
    basis_path: Option<&Path>,
) -> Result<(NetConfig, Theta, PodBasis, String), CliError> {
    let ckpt_path = checkpoint_path.map(Path::to_path_buf).unwrap_or_else(|| arts.checkpoint());
    let basis_path = basis_path.map(Path::to_path_buf).unwrap_or_else(|| arts.basis());
    let ckpt = load_checkpoint(&ckpt_path).map_err(CliError::io)?;
    let basis = read_basis(&basis_path).map_err(CliError::io)?;

    let expected = cfg.net_config();
    if ckpt.config != expected {
        return Err(CliError::Config(format!(
            "checkpoint {} was trained with {:?}, config implies {:?}",
            ckpt_path.display(),
            ckpt.config,
            expected
        )));
    }
    if basis.grid_interior != cfg.grid.interior {
        return Err(CliError::Config(format!(
            "basis {} lives on a {}x{} grid, config says {}x{}",
            basis_path.display(),
            basis.grid_interior,
            basis.grid_interior,
            cfg.grid.interior,
            cfg.grid.interior
        )));
    }
    if basis.modes() != ckpt.config.output_dim {
        return Err(CliError::Config(format!(
            "basis {} holds {} modes, checkpoint emits {}",
            basis_path.display(),
            basis.modes(),
            ckpt.config.output_dim
        )));
    }

    let bytes = fs::read(&ckpt_path).map_err(|e| CliError::io_stage(&ckpt_path, e))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    Ok((ckpt.config, ckpt.theta, basis, digest))
}

pub fn cmd_mcmc(
    cfg: &ExperimentConfig,
    arts: &Artifacts,
    full_model: bool,
    checkpoint_path: Option<&Path>,
    basis_path: Option<&Path>,
) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let prior = cfg.prior()?;
    let am = cfg.am_config();
    let observations =
        generate_observations(grid, cfg.mcmc.xi_true, cfg.mcmc.kappa, cfg.seeds.noise)
            .map_err(CliError::numeric)?;

    let mut meta: Vec<(String, String)> = vec![
        ("model".into(), if full_model { "full" } else { "surrogate" }.into()),
        ("grid_interior".into(), cfg.grid.interior.to_string()),
        ("kappa".into(), format!("{:e}", cfg.mcmc.kappa)),
        ("xi_true".into(), format!("{},{}", cfg.mcmc.xi_true[0], cfg.mcmc.xi_true[1])),
        ("noise_seed".into(), cfg.seeds.noise.to_string()),
        ("chain_seed".into(), cfg.seeds.chain.to_string()),
    ];

    let t0 = Instant::now();
    let chain = if full_model {
        let model = FullModel::new(grid, observations).map_err(CliError::numeric)?;
        let target = PosteriorSpec::new(prior.clone(), cfg.mcmc.kappa, model)
            .map_err(CliError::numeric)?;
        run_chain(&target, &prior.center(), &am).map_err(CliError::numeric)?
    } else {
        let (net, theta, basis, digest) =
            load_surrogate_parts(cfg, arts, checkpoint_path, basis_path)?;
        meta.push(("checkpoint_sha256".into(), digest));
        let model =
            SurrogateModel::new(net, theta, &basis, &observations).map_err(CliError::numeric)?;
        let target = PosteriorSpec::new(prior.clone(), cfg.mcmc.kappa, model)
            .map_err(CliError::numeric)?;
        run_chain(&target, &prior.center(), &am).map_err(CliError::numeric)?
    };

    let path = arts.chain(full_model);
    write_chain(&path, &chain, &meta).map_err(CliError::io)?;
    println!(
        "mcmc: {} steps on the {} posterior in {:.1}s, acceptance {:.3}",
        chain.steps(),
        if full_model { "full-model" } else { "surrogate" },
        t0.elapsed().as_secs_f64(),
        chain.acceptance_rate()
    );
    println!("  wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

pub fn cmd_diagnose(arts: &Artifacts, chain_path: Option<&Path>) -> Result<(), CliError> {
    let path = chain_path.map(Path::to_path_buf).unwrap_or_else(|| arts.chain(false));
    let (chain, meta) = fdnn_core::mcmc::read_chain(&path).map_err(CliError::io)?;
    let acceptance = chain.acceptance_rate();
    let model = meta
        .iter()
        .find(|(k, _)| k == "model")
        .map(|(_, v)| v.as_str())
        .unwrap_or("unknown");

    let mut report = String::from("coordinate,mean,sd,ci_lo,ci_hi,tau_int,acceptance\n");
    let mut columns: Vec<Vec<f64>> = Vec::new();
    println!(
        "diagnose: {} rows ({} model), burn-in {}, acceptance {acceptance:.3}",
        chain.states.nrows(),
        model,
        chain.burn_in
    );
    for j in 0..chain.dim() {
        let series = chain.component(j);
        let (mean, sd) = mean_and_std(&series).map_err(CliError::numeric)?;
        let (lo, hi) = credible_interval(&series, 0.95).map_err(CliError::numeric)?;
        let tau = iact(&series).map_err(CliError::numeric)?;
        report.push_str(&format!(
            "xi_{},{mean:.9e},{sd:.9e},{lo:.9e},{hi:.9e},{:.4},{acceptance:.4}\n",
            j + 1,
            tau.tau
        ));
        println!(
            "  xi_{}: mean {mean:.5}, sd {sd:.3e}, 95% CI ({lo:.5}, {hi:.5}), tau_int {:.1}{}",
            j + 1,
            tau.tau,
            if tau.converged { "" } else { " (window not converged)" }
        );
        columns.push(series);
    }
    write_text(&arts.report(), &report)?;

    let max_lag = default_max_lag(columns[0].len());
    let mut rhos = Vec::new();
    for series in &columns {
        rhos.push(acf(series, max_lag).map_err(CliError::numeric)?);
    }
    let mut table = String::from("lag");
    for j in 0..columns.len() {
        table.push_str(&format!(",rho_xi{}", j + 1));
    }
    table.push('\n');
    for lag in 0..=max_lag {
        table.push_str(&lag.to_string());
        for rho in &rhos {
            table.push_str(&format!(",{:.9e}", rho[lag]));
        }
        table.push('\n');
    }
    write_text(&arts.acf_table(), &table)?;

    for (j, series) in columns.iter().enumerate() {
        let hist = histogram_auto(series, 20).map_err(CliError::numeric)?;
        let edges = hist.edges();
        let mut text = String::from("bin_lo,bin_hi,count\n");
        for (b, count) in hist.counts.iter().enumerate() {
            text.push_str(&format!("{:.9e},{:.9e},{count}\n", edges[b], edges[b + 1]));
        }
        write_text(&arts.histogram(j), &text)?;
    }

    println!("  wrote {}", arts.report().display());
    println!("  wrote {}", arts.acf_table().display());
    Ok(())
}

// ---------------------------------------------------------------------------
// error
// ---------------------------------------------------------------------------

pub fn cmd_error(
    cfg: &ExperimentConfig,
    arts: &Artifacts,
    xi: Option<[f64; 2]>,
    checkpoint_path: Option<&Path>,
    basis_path: Option<&Path>,
) -> Result<f64, CliError> {
    let xi = xi.unwrap_or(cfg.mcmc.xi_true);
    let grid = cfg.grid()?;
    let (net, theta, basis, _) = load_surrogate_parts(cfg, arts, checkpoint_path, basis_path)?;

    let truth = PdeProblem::new(grid, Some(xi))
        .and_then(|p| p.solve())
        .map_err(CliError::numeric)?
        .solution;
    let trace = forward(&net, &theta, &xi).map_err(CliError::numeric)?;
    let approx = reconstruct(&basis, &output(&trace).view()).map_err(CliError::numeric)?;

    let num = truth
        .iter()
        .zip(approx.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let den = truth.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let rel = num / den;
    println!("error: relative sup-norm error at ({}, {}) is {rel:.6e}", xi[0], xi[1]);
    Ok(rel)
}

// ---------------------------------------------------------------------------
// full-run
// ---------------------------------------------------------------------------

pub fn cmd_full_run(cfg: &ExperimentConfig, arts: &Artifacts) -> Result<(), CliError> {
    cmd_snapshots(cfg, arts)?;
    cmd_train(cfg, arts, None)?;
    cmd_mcmc(cfg, arts, false, None, None)?;
    cmd_diagnose(arts, None)?;
    Ok(())
}
