//! A single solve and its persisted trace and summary.

use std::path::Path;

use anyhow::{Context, Result};
use dnn_approx::metrics::RunSummary;
use dnn_approx::{solve, BestApproxInstance, SolveResult, TerminationReason};

use crate::config::RunConfig;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Process exit status for a finished run.
pub fn exit_code(reason: TerminationReason) -> u8 {
    match reason {
        TerminationReason::Converged => 0,
        TerminationReason::IterationCap | TerminationReason::TimeCap => 2,
    }
}

pub fn summarize(cfg: &RunConfig, inst: &BestApproxInstance, r: &SolveResult, canonical: bool) -> RunSummary {
    RunSummary {
        instance: inst.name.clone(),
        solver: r.solver.name().to_string(),
        seed: cfg.seed,
        tol: cfg.tol,
        iterations: r.iterations,
        reason: r.reason.name().to_string(),
        final_residual: r.kkt,
        time_s: (!canonical).then_some(r.elapsed_s),
        config: cfg.echo(),
    }
}

/// Solves `inst` as configured and writes `trace.csv` and `summary.json`
/// into `out_dir`.
pub fn run_instance(
    cfg: &RunConfig,
    inst: &BestApproxInstance,
    out_dir: &Path,
    canonical: bool,
) -> Result<(SolveResult, RunSummary)> {
    let kind = cfg.solver_kind()?;
    let result = solve(inst, kind, &cfg.solver_options())
        .with_context(|| format!("{kind} on {}", inst.name))?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    result.trace.write_csv(out_dir.join(TRACE_FILE), canonical)?;
    let summary = summarize(cfg, inst, &result, canonical);
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(out_dir.join(SUMMARY_FILE), json + "\n")?;
    Ok((result, summary))
}

pub fn describe(r: &SolveResult, name: &str) -> String {
    format!(
        "{} on {name}: {} after {} iterations, eta = {:.3e}, eta_gap = {:.3e}, {:.2} s",
        r.solver,
        r.reason.name(),
        r.iterations,
        r.kkt.eta,
        r.kkt.eta_gap,
        r.elapsed_s
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::load_spec;

    #[test]
    fn files_are_written_and_canonical_reruns_match() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            solver: "erabcd".into(),
            max_iter: 40,
            seed: 3,
            ..Default::default()
        };
        let inst = load_spec("bqp:5:1").unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let (r, _) = run_instance(&cfg, &inst, &a, true).unwrap();
        run_instance(&cfg, &inst, &b, true).unwrap();
        assert_eq!(r.trace.len(), 40);
        for f in [TRACE_FILE, SUMMARY_FILE] {
            let x = std::fs::read(a.join(f)).unwrap();
            let y = std::fs::read(b.join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
        let summary = std::fs::read_to_string(a.join(SUMMARY_FILE)).unwrap();
        assert!(!summary.contains("time_s"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(TerminationReason::Converged), 0);
        assert_eq!(exit_code(TerminationReason::IterationCap), 2);
        assert_eq!(exit_code(TerminationReason::TimeCap), 2);
    }
}
