use nalgebra::DVector;

use super::Setup;
use crate::error::Result;
use crate::linalg::{project_nonneg, project_nonneg_vec, project_psd, LinearMap, SymMatrix};
use crate::problem::{dual_residual_matrix, BestApproxInstance, DualPoint};
use crate::solver::{IterationWork, Monitor, SolveResult, SolverKind, SolverOptions};
use crate::subsolvers::{apg_sncg_minimize, ApgSncgOptions, ZetaProblem};

#[derive(Clone, Copy, PartialEq)]
enum ZStep {
    /// Exact minimization (with the proximal term `c`) by APG-SNCG.
    Newton,
    /// One projected gradient step of length `1/λmax(ℬℬ*)`.
    Gradient,
}

/// Cyclic four-block coordinate descent, one sweep over `(y, S, z, Z)` per
/// iteration; the `z` block is solved by APG-SNCG.
pub fn solve_bcd(inst: &BestApproxInstance, opts: &SolverOptions) -> Result<SolveResult> {
    run(inst, opts, ZStep::Newton)
}

/// As [`solve_bcd`] with the `z` block replaced by one projected gradient
/// step.
pub fn solve_mbcd(inst: &BestApproxInstance, opts: &SolverOptions) -> Result<SolveResult> {
    run(inst, opts, ZStep::Gradient)
}

fn run(inst: &BestApproxInstance, opts: &SolverOptions, z_step: ZStep) -> Result<SolveResult> {
    opts.validate()?;
    let setup = Setup::new(inst)?;
    let (_, sched_z) = opts.schedules(inst);
    let kind = match z_step {
        ZStep::Newton => SolverKind::Bcd,
        ZStep::Gradient => SolverKind::Mbcd,
    };

    let mut monitor = Monitor::new(inst, opts);
    let mut w = DualPoint::zeros(inst);
    // R = 𝒜*y + ℬ*z + S + Z + G, kept current across block updates.
    let mut r = dual_residual_matrix(inst, &w);
    let mut k = 0;
    loop {
        k += 1;
        let mut work = IterationWork::default();

        // y: 𝒜𝒜*y = b − 𝒜(R − 𝒜*y).
        let dy = setup.gram.solve(&(&inst.b - inst.eq.apply(&r)));
        inst.eq.adjoint_add(&dy, &mut r);
        w.y += dy;

        // S = Π₊(−(R − S)).
        let (s_new, _) = project_psd(&w.s_mat.sub(&r))?;
        r.axpy(1.0, &s_new.sub(&w.s_mat));
        w.s_mat = s_new;

        // z.
        if inst.m_ineq() > 0 {
            let z_new = match z_step {
                ZStep::Newton => {
                    let eps = sched_z.epsilon(k);
                    work.eps_k = eps;
                    let mut g2 = r.clone();
                    inst.ineq.adjoint_add(&(-&w.z), &mut g2);
                    let zeta = ZetaProblem {
                        b: &inst.ineq,
                        g2: &g2,
                        d: &inst.d,
                        c: opts.prox_c,
                        z0: &w.z,
                        clip: false,
                        lambda_max: setup.lambda_b,
                    };
                    let apg = ApgSncgOptions { tol: eps, ..opts.apg };
                    let out = apg_sncg_minimize(&zeta, &w.z, &apg)?;
                    work.z_inner_iters = out.stats.apg_iters + out.stats.krylov_iters;
                    out.x
                }
                ZStep::Gradient => {
                    let grad = inst.ineq.apply(&r) - &inst.d;
                    project_nonneg_vec(&(&w.z - grad / setup.lambda_b))
                }
            };
            let dz: DVector<f64> = &z_new - &w.z;
            inst.ineq.adjoint_add(&dz, &mut r);
            w.z = z_new;
        }

        // Z = Π≥0(−(R − Z)).
        let zm_new: SymMatrix = project_nonneg(&w.z_mat.sub(&r));
        r.axpy(1.0, &zm_new.sub(&w.z_mat));
        w.z_mat = zm_new;

        if let Some(reason) = monitor.after_iteration(k, &w, work)? {
            return monitor.finish(kind, k, w, reason);
        }
    }
}
