use super::Setup;
use crate::error::Result;
use crate::imabcd::{extrapolate, momentum_next};
use crate::linalg::{project_nonneg, project_nonneg_vec, project_psd, LinearMap};
use crate::problem::{dual_residual_matrix, BestApproxInstance, DualPoint};
use crate::solver::{IterationWork, Monitor, SolveResult, SolverKind, SolverOptions};

/// Two-block accelerated block coordinate gradient descent with blocks
/// `(y, S)` and `(z, Z)`.
pub fn solve_abcgd(inst: &BestApproxInstance, opts: &SolverOptions) -> Result<SolveResult> {
    opts.validate()?;
    let setup = Setup::new(inst)?;
    let z_step = if inst.m_ineq() > 0 {
        0.5 / setup.lambda_b
    } else {
        0.0
    };

    let mut monitor = Monitor::new(inst, opts);
    let mut w = DualPoint::zeros(inst);
    let mut w_tilde_prev = w.clone();
    let mut t = 1.0;
    let mut k = 0;
    loop {
        k += 1;
        // Step 1 at R^{k+½} = 𝒜*yᵏ + ℬ*zᵏ + Sᵏ + Zᵏ + G.
        let r_half = dual_residual_matrix(inst, &w);
        let gy = inst.eq.apply(&r_half) - &inst.b;
        let y = &w.y - setup.gram.solve(&gy) * 0.5;
        let (s_mat, _) = project_psd(&w.s_mat.sub(&r_half.scaled(0.5)))?;

        // Step 2 at Rᵏ with the new (ỹ, S̃).
        let mut r = inst.g.add(&s_mat);
        r.axpy(1.0, &w.z_mat);
        inst.eq.adjoint_add(&y, &mut r);
        inst.ineq.adjoint_add(&w.z, &mut r);
        let z = project_nonneg_vec(&(&w.z - (inst.ineq.apply(&r) - &inst.d) * z_step));
        let z_mat = project_nonneg(&w.z_mat.sub(&r.scaled(0.5)));

        let w_tilde = DualPoint { y, z, s_mat, z_mat };
        if let Some(reason) = monitor.after_iteration(k, &w_tilde, IterationWork::default())? {
            return monitor.finish(SolverKind::Abcgd, k, w_tilde, reason);
        }

        // Step 3.
        let t_next = momentum_next(t);
        w = extrapolate(&w_tilde, &w_tilde_prev, t, t_next);
        w_tilde_prev = w_tilde;
        t = t_next;
    }
}
