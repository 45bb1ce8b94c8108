use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{eig_sym, project_nonneg, project_nonneg_vec, LinearMap, SymMatrix};
use crate::problem::{dual_residual_matrix, BestApproxInstance, DualPoint};

/// Relative KKT residuals and duality gap at a dual point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResidual {
    /// `‖𝒜X − b‖ / (1 + ‖b‖)`.
    pub eta1: f64,
    /// `‖ℬX − d − Π≥0(ℬX − d − z)‖ / (1 + ‖d‖)`.
    pub eta2: f64,
    /// `‖X − Π₊(X − S)‖ / (1 + ‖X‖ + ‖S‖)`.
    pub eta3: f64,
    /// `‖X − Π≥0(X − Z)‖ / (1 + ‖X‖ + ‖Z‖)`.
    pub eta4: f64,
    pub eta: f64,
    pub eta_gap: f64,
    pub obj_p: f64,
    pub obj_d: f64,
}

/// `(obj_p, obj_d, η_gap)` with `X` given.
pub fn duality_gap_with(inst: &BestApproxInstance, w: &DualPoint, x: &SymMatrix) -> (f64, f64, f64) {
    let obj_p = 0.5 * x.sub(&inst.g).norm_squared();
    let obj_d = -0.5 * x.norm_squared() + inst.b.dot(&w.y) + inst.d.dot(&w.z)
        + 0.5 * inst.g.norm_squared();
    let gap = (obj_p - obj_d) / (1.0 + obj_p.abs() + obj_d.abs());
    (obj_p, obj_d, gap)
}

pub fn duality_gap(inst: &BestApproxInstance, w: &DualPoint) -> (f64, f64, f64) {
    duality_gap_with(inst, w, &dual_residual_matrix(inst, w))
}

pub fn kkt_residual(inst: &BestApproxInstance, w: &DualPoint) -> Result<KktResidual> {
    let x = dual_residual_matrix(inst, w);
    kkt_residual_with(inst, w, &x)
}

/// Same as [`kkt_residual`] with the primal point `X` already formed.
pub fn kkt_residual_with(
    inst: &BestApproxInstance,
    w: &DualPoint,
    x: &SymMatrix,
) -> Result<KktResidual> {
    let eta1 = (inst.eq.apply(x) - &inst.b).norm() / (1.0 + inst.b.norm());

    let eta2 = if inst.m_ineq() == 0 {
        0.0
    } else {
        let r = inst.ineq.apply(x) - &inst.d;
        let proj = project_nonneg_vec(&(&r - &w.z));
        (r - proj).norm() / (1.0 + inst.d.norm())
    };

    let xs = x.sub(&w.s_mat);
    let p = eig_sym(&xs)?.positive_part();
    let eta3 = x.sub(&p).norm() / (1.0 + x.norm() + w.s_mat.norm());

    let pz = project_nonneg(&x.sub(&w.z_mat));
    let eta4 = x.sub(&pz).norm() / (1.0 + x.norm() + w.z_mat.norm());

    let (obj_p, obj_d, eta_gap) = duality_gap_with(inst, w, x);
    Ok(KktResidual {
        eta1,
        eta2,
        eta3,
        eta4,
        eta: eta1.max(eta2).max(eta3).max(eta4),
        eta_gap,
        obj_p,
        obj_d,
    })
}
