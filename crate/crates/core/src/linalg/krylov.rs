//! Matrix-free Krylov solvers.
//!
//! Both solvers stop on an absolute residual `‖Ax − b‖ ≤ max(tol, 10⁻¹⁶)`,
//! start from zero, and report the last residual norm they observed.

use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// Conjugate gradient for a symmetric positive (semi)definite operator.
pub fn cg(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let tol = tol.max(1e-16);
    let mut x = DVector::zeros(b.len());
    let mut r = b.clone();
    let mut rr = r.norm_squared();
    if rr.sqrt() <= tol {
        return KrylovOutcome {
            x,
            iterations: 0,
            residual_norm: rr.sqrt(),
            converged: true,
        };
    }
    let mut p = r.clone();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 || !pap.is_finite() {
            // Singular direction: return what we have.
            return KrylovOutcome {
                x,
                iterations: it,
                residual_norm: rr.sqrt(),
                converged: false,
            };
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.norm_squared();
        if rr_new.sqrt() <= tol {
            return KrylovOutcome {
                x,
                iterations: it,
                residual_norm: rr_new.sqrt(),
                converged: true,
            };
        }
        let beta = rr_new / rr;
        rr = rr_new;
        p *= beta;
        p += &r;
    }
    KrylovOutcome {
        x,
        iterations: max_iter,
        residual_norm: rr.sqrt(),
        converged: false,
    }
}

/// Why BiCGStab gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Breakdown {
    /// `⟨r̂, v⟩` or `⟨r̂, r⟩` vanished.
    Rho,
    /// `⟨t, t⟩` vanished or `ω = 0`.
    Omega,
    /// Iteration cap reached before the tolerance.
    MaxIterations,
}

/// BiCGStab (van der Vorst) for a general nonsymmetric operator.
pub fn bicgstab(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome, (Breakdown, KrylovOutcome)> {
    let tol = tol.max(1e-16);
    let n = b.len();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut rnorm = r.norm();
    if rnorm <= tol {
        return Ok(KrylovOutcome {
            x,
            iterations: 0,
            residual_norm: rnorm,
            converged: true,
        });
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = DVector::zeros(n);
    let mut p = DVector::zeros(n);
    let tiny = 1e-300;
    let fail = |kind, x: DVector<f64>, it, res| {
        Err((
            kind,
            KrylovOutcome {
                x,
                iterations: it,
                residual_norm: res,
                converged: false,
            },
        ))
    };
    for it in 1..=max_iter {
        let rho_new = r_hat.dot(&r);
        if rho_new.abs() < tiny {
            return fail(Breakdown::Rho, x, it, rnorm);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        // p = r + β (p − ω v)
        p.axpy(-omega, &v, 1.0);
        p *= beta;
        p += &r;
        v = apply(&p);
        let denom = r_hat.dot(&v);
        if denom.abs() < tiny || !denom.is_finite() {
            return fail(Breakdown::Rho, x, it, rnorm);
        }
        alpha = rho / denom;
        let mut s = r.clone();
        s.axpy(-alpha, &v, 1.0);
        let snorm = s.norm();
        if snorm <= tol {
            x.axpy(alpha, &p, 1.0);
            return Ok(KrylovOutcome {
                x,
                iterations: it,
                residual_norm: snorm,
                converged: true,
            });
        }
        let t = apply(&s);
        let tt = t.norm_squared();
        if tt < tiny {
            return fail(Breakdown::Omega, x, it, rnorm);
        }
        omega = t.dot(&s) / tt;
        x.axpy(alpha, &p, 1.0);
        x.axpy(omega, &s, 1.0);
        r = s;
        r.axpy(-omega, &t, 1.0);
        rnorm = r.norm();
        if !rnorm.is_finite() {
            return fail(Breakdown::Omega, x, it, rnorm);
        }
        if rnorm <= tol {
            return Ok(KrylovOutcome {
                x,
                iterations: it,
                residual_norm: rnorm,
                converged: true,
            });
        }
        if omega.abs() < tiny {
            return fail(Breakdown::Omega, x, it, rnorm);
        }
    }
    fail(Breakdown::MaxIterations, x, max_iter, rnorm)
}
