//! Semismooth Newton-CG for the `(y, S)` block
//!
//! ```text
//! minimize ½‖𝒜*y + S + G₁‖² − ⟨b, y⟩   s.t.  S ⪰ 0
//! ```
//!
//! which reduces to the unconstrained `ξ(y) = ½‖Π₊(G₁ + 𝒜*y)‖² − ⟨b, y⟩`
//! followed by `S = Π₊(−G₁ − 𝒜*y)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::krylov::cg;
use crate::linalg::{eig_sym, psd_jacobian, LinearMap, SpectralDecomposition, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SncgOptions {
    /// Armijo slope `μ ∈ (0, ½)`.
    pub mu: f64,
    /// Cap `η ∈ (0, 1)` on the CG forcing term.
    pub eta: f64,
    /// Forcing exponent `τ ∈ (0, 1]`.
    pub tau: f64,
    /// Backtracking ratio `ρ ∈ (0, 1)`.
    pub rho: f64,
    pub cg_max_iter: usize,
    pub max_newton: usize,
    pub max_backtracks: usize,
    /// Stop once `‖∇ξ(y)‖ ≤ tol`.
    pub tol: f64,
}

impl Default for SncgOptions {
    fn default() -> Self {
        Self {
            mu: 1e-4,
            eta: 0.1,
            tau: 0.5,
            rho: 0.5,
            cg_max_iter: 300,
            max_newton: 200,
            max_backtracks: 50,
            tol: 1e-8,
        }
    }
}

impl SncgOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu > 0.0
            && self.mu < 0.5
            && self.eta > 0.0
            && self.eta < 1.0
            && self.tau > 0.0
            && self.tau <= 1.0
            && self.rho > 0.0
            && self.rho < 1.0
            && self.tol > 0.0
            && self.cg_max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("SNCG options out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SncgStats {
    pub newton_iters: usize,
    pub cg_iters: usize,
    /// Number of `ξ` evaluations inside line searches.
    pub line_search_evals: usize,
    /// Steps taken along `−∇ξ` after the Newton direction failed.
    pub steepest_fallbacks: usize,
    /// Accepted step lengths, one per iteration.
    pub step_sizes: Vec<f64>,
    /// The Newton cap was reached before the tolerance.
    pub hit_cap: bool,
    /// No step (Newton or steepest) satisfied the Armijo test; usually
    /// means the tolerance is below what roundoff allows.
    pub stalled: bool,
}

/// `ξ`, `∇ξ` and the pieces they were built from.
#[derive(Debug, Clone)]
pub struct XiEval {
    pub value: f64,
    pub grad: DVector<f64>,
    /// Eigensystem of `M = G₁ + 𝒜*y`.
    pub decomposition: SpectralDecomposition,
}

pub fn xi_value_grad<A: LinearMap + ?Sized>(
    y: &DVector<f64>,
    g1: &SymMatrix,
    a: &A,
    b: &DVector<f64>,
) -> Result<XiEval> {
    let mut m = g1.clone();
    a.adjoint_add(y, &mut m);
    let decomposition = eig_sym(&m)?;
    let p = decomposition.positive_part();
    let value = 0.5 * decomposition.positive_part_norm_squared() - b.dot(y);
    let grad = a.apply(&p) - b;
    Ok(XiEval {
        value,
        grad,
        decomposition,
    })
}

#[derive(Debug, Clone)]
pub struct SncgOutput {
    pub y: DVector<f64>,
    /// `S = Π₊(−G₁ − 𝒜*y)`.
    pub s_mat: SymMatrix,
    pub grad_norm: f64,
    pub value: f64,
    pub decomposition: SpectralDecomposition,
    pub stats: SncgStats,
}

enum Search {
    Accepted(DVector<f64>, XiEval, f64),
    Failed,
}

fn armijo<A: LinearMap + ?Sized>(
    y: &DVector<f64>,
    cur: &XiEval,
    dir: &DVector<f64>,
    slope: f64,
    ctx: (&SymMatrix, &A, &DVector<f64>),
    opts: &SncgOptions,
    stats: &mut SncgStats,
) -> Result<Search> {
    let (g1, a, b) = ctx;
    // Near the optimum the decrease drops below the rounding error of ξ.
    let slack = 8.0 * f64::EPSILON * (1.0 + cur.value.abs());
    let mut step = 1.0;
    for _ in 0..=opts.max_backtracks {
        let cand = y + dir * step;
        let ev = xi_value_grad(&cand, g1, a, b)?;
        stats.line_search_evals += 1;
        if ev.value <= cur.value + opts.mu * step * slope + slack {
            return Ok(Search::Accepted(cand, ev, step));
        }
        step *= opts.rho;
    }
    Ok(Search::Failed)
}

pub fn sncg_solve<A: LinearMap + ?Sized>(
    g1: &SymMatrix,
    a: &A,
    b: &DVector<f64>,
    y_init: &DVector<f64>,
    opts: &SncgOptions,
) -> Result<SncgOutput> {
    opts.validate()?;
    let mut stats = SncgStats::default();
    let mut y = y_init.clone();
    let mut ev = xi_value_grad(&y, g1, a, b)?;
    loop {
        let gnorm = ev.grad.norm();
        if !gnorm.is_finite() {
            return Err(Error::InnerSolver("SNCG gradient is not finite".into()));
        }
        if gnorm <= opts.tol {
            break;
        }
        if stats.newton_iters >= opts.max_newton {
            stats.hit_cap = true;
            break;
        }
        stats.newton_iters += 1;

        let jac = psd_jacobian(&ev.decomposition);
        let reg = gnorm.min(1e-4);
        let rhs = -&ev.grad;
        let cg_tol = opts.eta.min(gnorm.powf(1.0 + opts.tau));
        let out = cg(
            |d| {
                let vd = jac.apply(&a.adjoint(d));
                a.apply(&vd) + d * reg
            },
            &rhs,
            cg_tol,
            opts.cg_max_iter,
        );
        stats.cg_iters += out.iterations;
        let mut dir = out.x;
        let mut slope = ev.grad.dot(&dir);
        if !(slope < 0.0) {
            dir = rhs.clone();
            slope = -gnorm * gnorm;
        }

        let ctx = (g1, a, b);
        let mut result = armijo(&y, &ev, &dir, slope, ctx, opts, &mut stats)?;
        if matches!(result, Search::Failed) && slope != -gnorm * gnorm {
            stats.steepest_fallbacks += 1;
            result = armijo(&y, &ev, &rhs, -gnorm * gnorm, ctx, opts, &mut stats)?;
        }
        match result {
            Search::Accepted(next, next_ev, step) => {
                y = next;
                ev = next_ev;
                stats.step_sizes.push(step);
            }
            Search::Failed => {
                stats.stalled = true;
                break;
            }
        }
    }
    let s_mat = ev.decomposition.negative_part();
    Ok(SncgOutput {
        grad_norm: ev.grad.norm(),
        value: ev.value,
        y,
        s_mat,
        decomposition: ev.decomposition,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseRowMap;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_map() -> SparseRowMap {
        SparseRowMap::new(1, vec![vec![(0, 0, 1.0)]]).unwrap()
    }

    #[test]
    fn scalar_closed_form() {
        let a = scalar_map();
        let g1 = SymMatrix::from_diagonal(&[-2.0]);
        let b = DVector::from_vec(vec![3.0]);
        let ev = xi_value_grad(&DVector::from_vec(vec![5.0]), &g1, &a, &b).unwrap();
        assert_relative_eq!(ev.value, -10.5);
        assert_relative_eq!(ev.grad[0], 0.0);

        let opts = SncgOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let out = sncg_solve(&g1, &a, &b, &DVector::zeros(1), &opts).unwrap();
        assert_relative_eq!(out.y[0], 5.0, epsilon = 1e-10);
        assert!(out.s_mat.norm() <= 1e-10);
        assert!(out.grad_norm <= 1e-10);
    }

    #[test]
    fn projection_zero_case() {
        let a = SparseRowMap::new(2, vec![vec![(0, 1, 1.0)]]).unwrap();
        let g1 = SymMatrix::from_diagonal(&[-1.0, -2.0]);
        let b = DVector::zeros(1);
        let ev = xi_value_grad(&DVector::zeros(1), &g1, &a, &b).unwrap();
        assert_eq!(ev.value, 0.0);
        assert_eq!(ev.grad.norm(), 0.0);
    }

    #[test]
    fn warm_start_takes_no_newton_step() {
        let a = scalar_map();
        let g1 = SymMatrix::from_diagonal(&[-2.0]);
        let b = DVector::from_vec(vec![3.0]);
        let out = sncg_solve(&g1, &a, &b, &DVector::from_vec(vec![5.0]), &Default::default())
            .unwrap();
        assert_eq!(out.stats.newton_iters, 0);
    }

    pub(crate) fn random_problem(seed: u64, n: usize, m: usize) -> (SymMatrix, SparseRowMap, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = SymMatrix::from_upper_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let rows = (0..m)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        let j = rng.random_range(0..n);
                        (i, j, rng.random_range(-1.0..1.0))
                    })
                    .collect()
            })
            .collect();
        let a = SparseRowMap::new(n, rows).unwrap();
        let b = DVector::from_fn(m, |_, _| rng.random_range(-0.5..0.5));
        (g1, a, b)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (g1, a, b) = random_problem(11, 6, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let y = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let ev = xi_value_grad(&y, &g1, &a, &b).unwrap();
            let h = 1e-6;
            for k in 0..4 {
                let mut yp = y.clone();
                yp[k] += h;
                let mut ym = y.clone();
                ym[k] -= h;
                let fd = (xi_value_grad(&yp, &g1, &a, &b).unwrap().value
                    - xi_value_grad(&ym, &g1, &a, &b).unwrap().value)
                    / (2.0 * h);
                assert!((fd - ev.grad[k]).abs() <= 1e-6 * (1.0 + ev.grad[k].abs()));
            }
        }
    }

    #[test]
    fn iterates_descend_and_converge() {
        let (g1, a, b) = random_problem(3, 8, 5);
        let opts = SncgOptions {
            tol: 1e-11,
            ..Default::default()
        };
        let out = sncg_solve(&g1, &a, &b, &DVector::zeros(5), &opts).unwrap();
        assert!(out.grad_norm <= 1e-11, "{:?}", out.stats);
        assert!(!out.stats.hit_cap);
        let s_eigs = eig_sym(&out.s_mat).unwrap();
        assert!(s_eigs.eigenvalues.iter().all(|&l| l >= -1e-10));
    }
}
