//! Batches over instances × solvers, the results table, and performance
//! profiles rendered from it.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use dnn_approx::metrics::{performance_profile, PerfProfileCurve};
use dnn_approx::{BestApproxInstance, SolverKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::instance::load_spec;
use crate::run::run_instance;
use crate::svg::{profile_csv, render_profile};

pub const RESULTS_FILE: &str = "results.csv";
pub const PROFILE_CSV: &str = "profile.csv";
pub const PROFILE_SVG: &str = "profile.svg";
pub const THREADS_ENV: &str = "DNN_APPROX_THREADS";

/// One cell of the batch. `status` is a termination reason or `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance: String,
    pub solver: String,
    pub status: String,
    pub iterations: usize,
    pub time_s: f64,
    pub eta: f64,
    pub eta_gap: f64,
    pub error: String,
}

impl ResultRow {
    fn failed(instance: &str, solver: SolverKind, err: &anyhow::Error) -> Self {
        Self {
            instance: instance.to_string(),
            solver: solver.name().to_string(),
            status: "error".into(),
            iterations: 0,
            time_s: f64::NAN,
            eta: f64::NAN,
            eta_gap: f64::NAN,
            error: format!("{err:#}"),
        }
    }

    pub fn solved(&self) -> bool {
        self.status == "converged"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Time,
    Iterations,
}

impl FromStr for Metric {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Metric::Time),
            "iterations" => Ok(Metric::Iterations),
            _ => bail!("metric must be `time` or `iterations`, got `{s}`"),
        }
    }
}

/// Expands glob patterns; `bqp:` specs pass through. A pattern that matches
/// nothing is an error.
pub fn expand_instances(patterns: &[String]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for p in patterns {
        if p.starts_with("bqp:") {
            out.push(p.clone());
            continue;
        }
        let mut hits: Vec<PathBuf> = glob::glob(p)
            .with_context(|| format!("bad glob `{p}`"))?
            .filter_map(|e| e.ok())
            .filter(|path| path.is_file())
            .collect();
        if hits.is_empty() {
            bail!("`{p}` matches no instance files");
        }
        hits.sort();
        out.extend(hits.into_iter().map(|h| h.to_string_lossy().into_owned()));
    }
    if out.is_empty() {
        bail!("no instances given");
    }
    Ok(out)
}

/// Worker count from `DNN_APPROX_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
            if n == 0 {
                bail!("{THREADS_ENV} must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn cell_dir(root: &Path, instance: &str, solver: SolverKind) -> PathBuf {
    let safe: String = instance
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    root.join("runs").join(safe).join(solver.name())
}

/// Runs every instance with every solver on a bounded pool and writes the
/// results table and the profile. Failed cells are recorded, not fatal.
pub fn run_benchmark(
    base: &RunConfig,
    specs: &[String],
    solvers: &[SolverKind],
    metric: Metric,
    canonical: bool,
) -> Result<Vec<ResultRow>> {
    if solvers.is_empty() {
        bail!("no solvers given");
    }
    let out = &base.output_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let loaded: Vec<(String, std::result::Result<BestApproxInstance, anyhow::Error>)> = specs
        .iter()
        .map(|s| {
            let inst = load_spec(s);
            let name = inst.as_ref().map_or_else(|_| s.clone(), |i| i.name.clone());
            (name, inst)
        })
        .collect();
    let cells: Vec<(usize, SolverKind)> = (0..loaded.len())
        .flat_map(|i| solvers.iter().map(move |&k| (i, k)))
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let rows: Vec<ResultRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, kind)| {
                let (name, inst) = &loaded[i];
                let inst = match inst {
                    Ok(inst) => inst,
                    Err(e) => return ResultRow::failed(name, kind, e),
                };
                let cfg = RunConfig {
                    solver: kind.name().to_string(),
                    instance: Some(specs[i].clone()),
                    ..base.clone()
                };
                match run_instance(&cfg, inst, &cell_dir(out, name, kind), canonical) {
                    Ok((r, _)) => ResultRow {
                        instance: name.clone(),
                        solver: kind.name().to_string(),
                        status: r.reason.name().to_string(),
                        iterations: r.iterations,
                        time_s: if canonical { 0.0 } else { r.elapsed_s },
                        eta: r.kkt.eta,
                        eta_gap: r.kkt.eta_gap,
                        error: String::new(),
                    },
                    Err(e) => ResultRow::failed(name, kind, &e),
                }
            })
            .collect()
    });

    write_results(&out.join(RESULTS_FILE), &rows)?;
    if solvers.len() >= 2 {
        write_profile(&rows, metric, out)?;
    }
    Ok(rows)
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} has no rows", path.display());
    }
    Ok(rows)
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for it in items {
        if !out.iter().any(|o| o == it) {
            out.push(it.to_string());
        }
    }
    out
}

/// Profile curves over the rows; a cell counts as solved only if it
/// converged.
pub fn profile_from_rows(rows: &[ResultRow], metric: Metric) -> Result<Vec<PerfProfileCurve>> {
    let solvers = first_seen(rows.iter().map(|r| r.solver.as_str()));
    let instances = first_seen(rows.iter().map(|r| r.instance.as_str()));
    let times: Vec<Vec<Option<f64>>> = solvers
        .iter()
        .map(|s| {
            instances
                .iter()
                .map(|p| {
                    let row = rows.iter().find(|r| &r.solver == s && &r.instance == p)?;
                    row.solved().then_some(match metric {
                        Metric::Time => row.time_s,
                        Metric::Iterations => row.iterations as f64,
                    })
                })
                .collect()
        })
        .collect();
    Ok(performance_profile(&solvers, &times)?)
}

pub fn write_profile(rows: &[ResultRow], metric: Metric, out: &Path) -> Result<Vec<PerfProfileCurve>> {
    let curves = profile_from_rows(rows, metric)?;
    let title = match metric {
        Metric::Time => "Performance profile (time)",
        Metric::Iterations => "Performance profile (iterations)",
    };
    std::fs::write(out.join(PROFILE_CSV), profile_csv(&curves))?;
    std::fs::write(out.join(PROFILE_SVG), render_profile(&curves, title))?;
    Ok(curves)
}
