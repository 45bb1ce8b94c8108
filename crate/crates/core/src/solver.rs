//! Options, results and dispatch shared by every solver.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::error::{Error, Result};
use crate::imabcd::{solve_imabcd, ToleranceSchedule};
use crate::metrics::{kkt_residual_with, ConvergenceTrace, KktResidual, TraceRecord};
use crate::problem::{dual_residual_matrix, BestApproxInstance, DualPoint, PrimalPoint};
use crate::subsolvers::{ApgSncgOptions, SncgOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Imabcd,
    Abcgd,
    Bcd,
    Mbcd,
    Erabcd,
    Erabcd2,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Imabcd,
        SolverKind::Abcgd,
        SolverKind::Bcd,
        SolverKind::Mbcd,
        SolverKind::Erabcd,
        SolverKind::Erabcd2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Imabcd => "imabcd",
            SolverKind::Abcgd => "abcgd",
            SolverKind::Bcd => "bcd",
            SolverKind::Mbcd => "mbcd",
            SolverKind::Erabcd => "erabcd",
            SolverKind::Erabcd2 => "erabcd2",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown solver `{s}` (expected one of imabcd, abcgd, bcd, mbcd, erabcd, erabcd2)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Converged,
    IterationCap,
    TimeCap,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::Converged => "converged",
            TerminationReason::IterationCap => "iteration_cap",
            TerminationReason::TimeCap => "time_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop once `η < tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub time_limit_s: Option<f64>,
    /// Proximal constant `c` on `z`.
    pub prox_c: f64,
    /// `ε₀` of the inner tolerance schedule; `None` means `10⁻³(1 + ‖G‖)`.
    pub eps0: Option<f64>,
    /// Exponent of `ε_k = ε₀ k^{−p}`.
    pub eps_power: f64,
    /// Floor the inner tolerances at `0.1·tol` times the scale of the block
    /// residual they control.
    pub eps_floor: bool,
    /// Evaluate the KKT residual every this many iterations.
    pub check_every: usize,
    /// Seed for the randomized solvers.
    pub seed: u64,
    /// Number of row groups for the decomposed `(z, Z)` step; 0 disables it.
    pub partition_q: usize,
    pub sncg: SncgOptions,
    pub apg: ApgSncgOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50_000,
            time_limit_s: None,
            prox_c: 0.1,
            eps0: None,
            eps_power: 2.5,
            eps_floor: true,
            check_every: 1,
            seed: 0,
            partition_q: 0,
            sncg: SncgOptions::default(),
            apg: ApgSncgOptions::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Invalid("max_iter must be at least 1".into()));
        }
        if !(self.prox_c > 0.0) {
            return Err(Error::Invalid(format!("prox_c must be positive, got {}", self.prox_c)));
        }
        if !(self.eps_power > 0.0) {
            return Err(Error::Invalid("eps_power must be positive".into()));
        }
        if self.eps0.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::Invalid("eps0 must be positive".into()));
        }
        if self.check_every == 0 {
            return Err(Error::Invalid("check_every must be at least 1".into()));
        }
        self.sncg.validate()?;
        self.apg.validate()
    }

    /// Inner tolerance schedules for the `y`-side and `z`-side subproblems.
    pub fn schedules(&self, inst: &BestApproxInstance) -> (ToleranceSchedule, ToleranceSchedule) {
        let eps0 = self.eps0.unwrap_or(1e-3 * (1.0 + inst.g.norm()));
        let floor = |scale: f64| {
            if self.eps_floor {
                0.1 * self.tol * (1.0 + scale)
            } else {
                0.0
            }
        };
        (
            ToleranceSchedule {
                eps0,
                power: self.eps_power,
                floor: floor(inst.b.norm()),
            },
            ToleranceSchedule {
                eps0,
                power: self.eps_power,
                floor: floor(inst.d.norm()),
            },
        )
    }
}

/// Inner work summed over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerTotals {
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub z_inner_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solver: SolverKind,
    pub dual: DualPoint,
    pub primal: PrimalPoint,
    pub trace: ConvergenceTrace,
    pub reason: TerminationReason,
    pub iterations: usize,
    pub kkt: KktResidual,
    pub elapsed_s: f64,
    pub totals: InnerTotals,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.reason == TerminationReason::Converged
    }
}

pub fn solve(inst: &BestApproxInstance, kind: SolverKind, opts: &SolverOptions) -> Result<SolveResult> {
    match kind {
        SolverKind::Imabcd => solve_imabcd(inst, opts),
        SolverKind::Abcgd => baselines::solve_abcgd(inst, opts),
        SolverKind::Bcd => baselines::solve_bcd(inst, opts),
        SolverKind::Mbcd => baselines::solve_mbcd(inst, opts),
        SolverKind::Erabcd => baselines::solve_erabcd(inst, opts),
        SolverKind::Erabcd2 => baselines::solve_erabcd2(inst, opts),
    }
}

/// Per-iteration inner work reported to the [`Monitor`].
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct IterationWork {
    pub eps_k: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub z_inner_iters: usize,
}

/// Residual checks, trace recording and stopping rules shared by all outer
/// loops.
pub(crate) struct Monitor<'a> {
    inst: &'a BestApproxInstance,
    opts: &'a SolverOptions,
    start: Instant,
    trace: ConvergenceTrace,
    totals: InnerTotals,
    last: Option<(usize, KktResidual)>,
}

impl<'a> Monitor<'a> {
    pub fn new(inst: &'a BestApproxInstance, opts: &'a SolverOptions) -> Self {
        Self {
            inst,
            opts,
            start: Instant::now(),
            trace: ConvergenceTrace::new(),
            totals: InnerTotals::default(),
            last: None,
        }
    }

    fn record(&mut self, k: usize, w: &DualPoint, work: IterationWork) -> Result<KktResidual> {
        let x = dual_residual_matrix(self.inst, w);
        let kkt = kkt_residual_with(self.inst, w, &x)?;
        self.trace.push(TraceRecord {
            iter: k,
            time_s: self.start.elapsed().as_secs_f64(),
            kkt,
            eps_k: work.eps_k,
            newton_iters: work.newton_iters,
            cg_iters: work.cg_iters,
            z_inner_iters: work.z_inner_iters,
        })?;
        self.last = Some((k, kkt));
        Ok(kkt)
    }

    /// Called after iteration `k` produced `w`. Returns the reason to stop,
    /// if any.
    pub fn after_iteration(
        &mut self,
        k: usize,
        w: &DualPoint,
        work: IterationWork,
    ) -> Result<Option<TerminationReason>> {
        if let Some(block) = w.non_finite_block() {
            return Err(Error::NonFinite { block, iteration: k });
        }
        self.totals.newton_iters += work.newton_iters;
        self.totals.cg_iters += work.cg_iters;
        self.totals.z_inner_iters += work.z_inner_iters;
        let at_cap = k >= self.opts.max_iter;
        let over_time = self
            .opts
            .time_limit_s
            .is_some_and(|t| self.start.elapsed().as_secs_f64() >= t);
        if k.is_multiple_of(self.opts.check_every) || at_cap || over_time {
            let kkt = self.record(k, w, work)?;
            if kkt.eta < self.opts.tol {
                return Ok(Some(TerminationReason::Converged));
            }
        }
        if at_cap {
            return Ok(Some(TerminationReason::IterationCap));
        }
        if over_time {
            return Ok(Some(TerminationReason::TimeCap));
        }
        Ok(None)
    }

    pub fn finish(
        self,
        kind: SolverKind,
        k: usize,
        w: DualPoint,
        reason: TerminationReason,
    ) -> Result<SolveResult> {
        let kkt = match self.last {
            Some((it, kkt)) if it == k => kkt,
            _ => kkt_residual_with(self.inst, &w, &dual_residual_matrix(self.inst, &w))?,
        };
        let primal = PrimalPoint {
            x: dual_residual_matrix(self.inst, &w),
        };
        Ok(SolveResult {
            solver: kind,
            dual: w,
            primal,
            elapsed_s: self.start.elapsed().as_secs_f64(),
            trace: self.trace,
            reason,
            iterations: k,
            kkt,
            totals: self.totals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("newton".parse::<SolverKind>().is_err());
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            max_iter: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn options_json_defaults_fill_in() {
        let o: SolverOptions = serde_json::from_str(r#"{"tol": 1e-5}"#).unwrap();
        assert_eq!(o.tol, 1e-5);
        assert_eq!(o.max_iter, 50_000);
    }
}
