//! Experiment configuration: named presets, the TOML file format, dotted
//! command-line overrides, and the cross-module validation done once at
//! load time.
//!
//! Precedence, lowest to highest: preset defaults, configuration file,
//! `--set key=value` overrides, `--out`. Every run writes the resolved
//! result next to its outputs so an experiment can be replayed from the
//! artifact directory alone.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;
use fdnn_core::optim::BfgsConfig;
use fdnn_core::{AmConfig, GridConfig, NetConfig, PriorBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub snapshots: SnapshotSection,
    pub pod: PodSection,
    pub net: NetSection,
    pub train: TrainSection,
    pub mcmc: McmcSection,
    pub seeds: SeedSection,
    pub paths: PathSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Interior points per direction; the spacing is `1 / (interior + 1)`.
    pub interior: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSection {
    pub count: usize,
    /// Parameter box, one `[lo, hi]` pair per coordinate.
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodSection {
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSection {
    pub depth: usize,
    pub width: usize,
    pub gamma: f64,
    /// Time horizon; the layer step is `horizon / (depth - 1)`.
    pub horizon: f64,
    pub epsilon: f64,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub steps: usize,
    pub burn_in: usize,
    pub kappa: f64,
    /// Ground-truth parameters used to synthesise observations.
    pub xi_true: [f64; 2],
    pub update_period: usize,
    /// Proposal scale; omitted means `2.4^2 / dim`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub snapshots: u64,
    pub init: u64,
    pub noise: u64,
    pub chain: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    pub output_dir: String,
}

impl ExperimentConfig {
    /// Full-scale defaults: 64x64 grid, 900 snapshots, 400 modes, 20000
    /// sampler steps.
    pub fn paper() -> Self {
        ExperimentConfig {
            grid: GridSection { interior: 64 },
            snapshots: SnapshotSection {
                count: 900,
                bounds: vec![[0.01, 10.0], [0.01, 10.0]],
            },
            pod: PodSection { modes: 400 },
            net: NetSection {
                depth: 4,
                width: 15,
                gamma: 0.5,
                horizon: 1.0,
                epsilon: 0.1,
                ridge: 1e-6,
            },
            train: TrainSection { max_iters: 1600 },
            mcmc: McmcSection {
                steps: 20_000,
                burn_in: 10_000,
                kappa: 1e-2,
                xi_true: [1.0, 0.1],
                update_period: 100,
                scale: None,
            },
            seeds: SeedSection { snapshots: 100, init: 9, noise: 5, chain: 22 },
            paths: PathSection { output_dir: "runs/paper".into() },
        }
    }

    /// Desk-scale profile: 32x32 grid, 300 snapshots, 100 modes, 5000
    /// sampler steps. Runs the whole pipeline in minutes.
    pub fn desk() -> Self {
        let mut cfg = Self::paper();
        cfg.grid.interior = 32;
        cfg.snapshots.count = 300;
        cfg.pod.modes = 100;
        cfg.mcmc.steps = 5000;
        cfg.mcmc.burn_in = 2500;
        cfg.paths.output_dir = "runs/desk".into();
        cfg
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(CliError::Config(format!(
                "unknown preset {other:?}; expected \"desk\" or \"paper\""
            ))),
        }
    }

    /// Build the config from all sources in precedence order and validate.
    pub fn load(
        preset: Option<&str>,
        file: Option<&Path>,
        sets: &[String],
        out: Option<&Path>,
    ) -> Result<Self, CliError> {
        let base = match preset {
            Some(name) => Self::preset(name)?,
            None => Self::paper(),
        };
        let mut table = match toml::Value::try_from(&base) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("config serialises to a table"),
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            let user: toml::Table = text.parse().map_err(|e| {
                CliError::Config(format!("cannot parse config {}: {e}", path.display()))
            })?;
            deep_merge(&mut table, user);
        }
        for spec in sets {
            apply_set(&mut table, spec)?;
        }
        let mut cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Config(format!("bad configuration: {e}")))?;
        if let Some(dir) = out {
            cfg.paths.output_dir = dir.display().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-module constraints, checked once here so the commands can
    /// assume a coherent config.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.grid.interior < 2 {
            return fail("grid.interior must be at least 2".into());
        }
        if self.snapshots.count == 0 {
            return fail("snapshots.count must be positive".into());
        }
        if self.snapshots.bounds.len() != 2 {
            return fail(format!(
                "snapshots.bounds needs exactly 2 pairs, got {}",
                self.snapshots.bounds.len()
            ));
        }
        for (j, [lo, hi]) in self.snapshots.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return fail(format!("snapshots.bounds[{j}] = [{lo}, {hi}] is not an interval"));
            }
        }
        let n_dof = self.grid.interior * self.grid.interior;
        if self.pod.modes == 0 || self.pod.modes > self.snapshots.count.min(n_dof) {
            return fail(format!(
                "pod.modes = {} outside 1..={} (min of snapshot count {} and grid dof {})",
                self.pod.modes,
                self.snapshots.count.min(n_dof),
                self.snapshots.count,
                n_dof
            ));
        }
        if self.net.depth < 2 {
            return fail("net.depth must be at least 2".into());
        }
        if self.net.width == 0 {
            return fail("net.width must be positive".into());
        }
        if !(self.net.gamma > 0.0 && self.net.gamma < 1.0) {
            return fail(format!("net.gamma = {} must lie strictly in (0, 1)", self.net.gamma));
        }
        if !(self.net.horizon > 0.0) || !(self.net.epsilon > 0.0) || self.net.ridge < 0.0 {
            return fail("net.horizon and net.epsilon must be positive, net.ridge nonnegative".into());
        }
        if self.train.max_iters == 0 {
            return fail("train.max_iters must be positive".into());
        }
        if self.mcmc.steps == 0 {
            return fail("mcmc.steps must be positive".into());
        }
        if self.mcmc.burn_in >= self.mcmc.steps {
            return fail(format!(
                "mcmc.burn_in = {} must be below mcmc.steps = {}",
                self.mcmc.burn_in, self.mcmc.steps
            ));
        }
        if !(self.mcmc.kappa > 0.0 && self.mcmc.kappa.is_finite()) {
            return fail(format!("mcmc.kappa = {} must be positive", self.mcmc.kappa));
        }
        if self.mcmc.xi_true.iter().any(|v| !v.is_finite()) {
            return fail("mcmc.xi_true must be finite".into());
        }
        if let Some(s) = self.mcmc.scale {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("mcmc.scale = {s} must be positive"));
            }
        }
        if self.paths.output_dir.is_empty() {
            return fail("paths.output_dir must not be empty".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridConfig, CliError> {
        GridConfig::new(self.grid.interior).map_err(CliError::config_from_core)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.snapshots.bounds.iter().map(|[lo, hi]| (*lo, *hi)).collect()
    }

    pub fn prior(&self) -> Result<PriorBox, CliError> {
        PriorBox::new(self.bounds()).map_err(CliError::config_from_core)
    }

    /// Network shape implied by the config: two inputs (the parameter
    /// vector), one output per retained mode.
    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            depth: self.net.depth,
            width: self.net.width,
            input_dim: 2,
            output_dim: self.pod.modes,
            gamma: self.net.gamma,
            horizon: self.net.horizon,
            epsilon: self.net.epsilon,
            ridge: self.net.ridge,
        }
    }

    pub fn bfgs_config(&self) -> BfgsConfig {
        BfgsConfig { max_iters: self.train.max_iters, ..BfgsConfig::default() }
    }

    pub fn am_config(&self) -> AmConfig {
        AmConfig {
            steps: self.mcmc.steps,
            burn_in: self.mcmc.burn_in,
            update_period: self.mcmc.update_period,
            scale: self.mcmc.scale,
            regularisation: 1e-8,
            seed: self.seeds.chain,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

/// Merge `over` into `base`, table by table; scalar keys in `over` win.
fn deep_merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match value {
            toml::Value::Table(src) => match base.get_mut(&key) {
                Some(toml::Value::Table(dst)) => deep_merge(dst, src),
                _ => {
                    base.insert(key, toml::Value::Table(src));
                }
            },
            other => {
                base.insert(key, other);
            }
        }
    }
}

/// Apply one `section.key=value` override. The value is parsed as TOML
/// and falls back to a plain string (so paths need no quoting).
fn apply_set(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {spec:?}: expected KEY=VALUE")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));

    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("--set {spec:?}: empty key segment")));
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::Config(format!("--set {spec:?}: {part} is not a section"))
            })?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_presets_validate() {
        ExperimentConfig::paper().validate().unwrap();
        ExperimentConfig::desk().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_is_identity() {
        for cfg in [ExperimentConfig::paper(), ExperimentConfig::desk()] {
            let text = cfg.to_toml();
            let back: ExperimentConfig = toml::from_str(&text).unwrap();
            assert_eq!(cfg, back);
        }
        // An explicit proposal scale survives the trip as well.
        let mut cfg = ExperimentConfig::desk();
        cfg.mcmc.scale = Some(4.0);
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn overrides_beat_the_preset() {
        let cfg = ExperimentConfig::load(
            Some("desk"),
            None,
            &["mcmc.steps=600".into(), "mcmc.burn_in=100".into(), "paths.output_dir=x".into()],
            None,
        )
        .unwrap();
        assert_eq!(cfg.mcmc.steps, 600);
        assert_eq!(cfg.mcmc.burn_in, 100);
        assert_eq!(cfg.paths.output_dir, "x");
        assert_eq!(cfg.grid.interior, 32);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::load(None, None, &["mcmc.stepz=600".into()], None);
        assert!(matches!(err, Err(CliError::Config(_))));
    }

    #[test]
    fn cross_constraints_are_enforced() {
        // More modes than snapshots.
        let err = ExperimentConfig::load(
            Some("desk"),
            None,
            &["snapshots.count=50".into()],
            None,
        );
        assert!(matches!(err, Err(CliError::Config(_))));
        // Burn-in at the step count.
        let err = ExperimentConfig::load(
            Some("desk"),
            None,
            &["mcmc.burn_in=5000".into()],
            None,
        );
        assert!(matches!(err, Err(CliError::Config(_))));
        // Fractional order on the boundary.
        let err = ExperimentConfig::load(Some("desk"), None, &["net.gamma=1.0".into()], None);
        assert!(matches!(err, Err(CliError::Config(_))));
    }
}
