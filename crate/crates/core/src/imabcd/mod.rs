//! Inexact majorized accelerated block coordinate descent over two blocks.
//!
//! For the dual problem the blocks are `u = (y, S)` and `v = (z, Z)`. Each
//! iteration minimizes the majorized model over `u` with SNCG, then over `v`
//! with APG-SNCG (or the decomposed step), and extrapolates all four blocks
//! with the FISTA momentum `t_{k+1} = (1 + √(1 + 4t_k²))/2`.

mod generic;

pub use generic::{generic_solve, GenericTrace, MajorizedTwoBlockProblem, QuadraticTwoBlock};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{power_lambda_max, LinearMap};
use crate::problem::{BestApproxInstance, DualPoint};
use crate::solver::{IterationWork, Monitor, SolveResult, SolverKind, SolverOptions};
use crate::subsolvers::{
    apg_sncg_solve, build_partition_majorizer, contiguous_partition, sncg_solve,
    solve_z_decomposed, ApgSncgOptions, SncgOptions,
};

/// `t_{k+1} = ½(1 + √(1 + 4t_k²))`.
pub fn momentum_next(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// `w^{k+1} = w̃ᵏ + (t_k − 1)/t_{k+1} · (w̃ᵏ − w̃^{k−1})`.
pub fn extrapolate(w_k: &DualPoint, w_km1: &DualPoint, t_k: f64, t_kp1: f64) -> DualPoint {
    w_k.extrapolate(w_km1, (t_k - 1.0) / t_kp1)
}

/// `ε_k = max(ε₀ k^{−power}, floor)`; `floor = 0` gives the pure power law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSchedule {
    pub eps0: f64,
    pub power: f64,
    pub floor: f64,
}

impl ToleranceSchedule {
    pub fn power_law(eps0: f64, power: f64) -> Self {
        Self {
            eps0,
            power,
            floor: 0.0,
        }
    }

    pub fn epsilon(&self, k: usize) -> f64 {
        epsilon(k, self)
    }
}

pub fn epsilon(k: usize, schedule: &ToleranceSchedule) -> f64 {
    let k = k.max(1) as f64;
    (schedule.eps0 * k.powf(-schedule.power)).max(schedule.floor)
}

pub fn solve_imabcd(inst: &BestApproxInstance, opts: &SolverOptions) -> Result<SolveResult> {
    opts.validate()?;
    let c = opts.prox_c;
    let (sched_y, sched_z) = opts.schedules(inst);
    let m_i = inst.m_ineq();
    let lambda_b = power_lambda_max(|v| inst.ineq.gram_apply(v), m_i);
    let majorizer = if opts.partition_q > 0 && m_i > 0 {
        Some(build_partition_majorizer(
            &inst.ineq,
            contiguous_partition(m_i, opts.partition_q),
            c,
        )?)
    } else {
        None
    };

    let mut monitor = Monitor::new(inst, opts);
    let mut w = DualPoint::zeros(inst);
    let mut w_tilde_prev = w.clone();
    let mut t = 1.0;
    let mut k = 0;
    loop {
        k += 1;
        let eps_y = sched_y.epsilon(k);
        let eps_z = sched_z.epsilon(k);

        // (y, S) block with G₁ = ℬ*zᵏ + Zᵏ + G.
        let mut g1 = inst.g.add(&w.z_mat);
        inst.ineq.adjoint_add(&w.z, &mut g1);
        let sncg_opts = SncgOptions {
            tol: eps_y,
            ..opts.sncg
        };
        let u = sncg_solve(&g1, &inst.eq, &inst.b, &w.y, &sncg_opts)?;

        // (z, Z) block with G₂ = 𝒜*ỹ + S̃ + G and prox center zᵏ.
        let mut g2 = inst.g.add(&u.s_mat);
        inst.eq.adjoint_add(&u.y, &mut g2);
        let apg_opts = ApgSncgOptions {
            tol: eps_z,
            ..opts.apg
        };
        let (z, z_mat, z_work) = match &majorizer {
            Some(maj) => {
                let out = solve_z_decomposed(&g2, &inst.ineq, &inst.d, &w.z, &w.z_mat, maj, &apg_opts)?;
                let work = out.stats.apg_iters + out.stats.krylov_iters;
                (out.z, out.z_mat, work)
            }
            None => {
                let z_init = w.z.map(|v| v.max(0.0));
                let out = apg_sncg_solve(&g2, &inst.ineq, &inst.d, c, &w.z, &z_init, lambda_b, &apg_opts)?;
                let work = out.stats.apg_iters + out.stats.krylov_iters;
                (out.z, out.z_mat, work)
            }
        };

        let w_tilde = DualPoint {
            y: u.y,
            z,
            s_mat: u.s_mat,
            z_mat,
        };
        let work = IterationWork {
            eps_k: eps_y.max(eps_z),
            newton_iters: u.stats.newton_iters,
            cg_iters: u.stats.cg_iters,
            z_inner_iters: z_work,
        };
        if let Some(reason) = monitor.after_iteration(k, &w_tilde, work)? {
            return monitor.finish(SolverKind::Imabcd, k, w_tilde, reason);
        }

        let t_next = momentum_next(t);
        w = extrapolate(&w_tilde, &w_tilde_prev, t, t_next);
        w_tilde_prev = w_tilde;
        t = t_next;
    }
}

/// `t_1, …, t_len` starting from `t_1 = 1`.
pub fn momentum_sequence(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut t = 1.0;
    for _ in 0..len {
        out.push(t);
        t = momentum_next(t);
    }
    out
}
