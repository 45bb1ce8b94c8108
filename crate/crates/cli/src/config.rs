//! Run configuration. Precedence: command-line flags, then the JSON config
//! file, then built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use dnn_approx::{SolverKind, SolverOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solver: String,
    pub instance: Option<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub time_limit_s: Option<f64>,
    pub prox_c: f64,
    pub eps0: Option<f64>,
    pub eps_power: f64,
    pub check_every: usize,
    pub seed: u64,
    pub partition_q: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            solver: SolverKind::Imabcd.name().to_string(),
            instance: None,
            tol: o.tol,
            max_iter: o.max_iter,
            time_limit_s: o.time_limit_s,
            prox_c: o.prox_c,
            eps0: o.eps0,
            eps_power: o.eps_power,
            check_every: o.check_every,
            seed: o.seed,
            partition_q: o.partition_q,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Flags mirroring [`RunConfig`]; anything left unset falls through to the
/// config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON file with RunConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub solver: Option<String>,
    /// Instance file (`.sparse` Biq Mac data or `.json`) or `bqp:<n>:<seed>`.
    #[arg(long)]
    pub instance: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub time_limit_s: Option<f64>,
    #[arg(long)]
    pub prox_c: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub eps_power: Option<f64>,
    #[arg(long)]
    pub check_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub partition_q: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl ConfigFlags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone().into(); })*
            };
        }
        take!(solver, instance, tol, max_iter, time_limit_s, prox_c, eps0, eps_power, check_every, seed, partition_q, output_dir);
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.solver_kind()?;
        if !(self.tol > 0.0) {
            bail!("tol must be positive, got {}", self.tol);
        }
        if self.max_iter == 0 {
            bail!("max_iter must be at least 1");
        }
        self.solver_options().validate()?;
        Ok(())
    }

    pub fn solver_kind(&self) -> Result<SolverKind> {
        Ok(self.solver.parse()?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            time_limit_s: self.time_limit_s,
            prox_c: self.prox_c,
            eps0: self.eps0,
            eps_power: self.eps_power,
            check_every: self.check_every,
            seed: self.seed,
            partition_q: self.partition_q,
            ..Default::default()
        }
    }

    /// The config as echoed into summaries. The output directory is left out
    /// so that reruns elsewhere compare equal.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        v
    }
}
