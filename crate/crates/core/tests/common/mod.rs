//! Randomized checks shared by the property tests and the acceptance run.
#![allow(dead_code)]

use dnn_approx::linalg::{
    eig_sym, power_lambda_max, project_nonneg, project_psd, psd_jacobian, LinearMap, SparseRowMap,
    SymMatrix,
};
use dnn_approx::problem::ExBiqPairs;
use dnn_approx::subsolvers::{xi_value_grad, SmoothPart, ZetaProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    SymMatrix::from_upper_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
}

pub fn random_vec(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(m, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Each row has 1 to 3 random upper-triangle entries.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SparseRowMap {
    let rows = (0..m)
        .map(|_| {
            let k = rng.random_range(1..=3);
            (0..k)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    let j = rng.random_range(i..n);
                    (i, j, rng.random_range(-1.0..1.0))
                })
                .collect()
        })
        .collect();
    SparseRowMap::new(n, rows).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Idempotence, Moreau decomposition and nonexpansiveness of `Π₊` and `Π≥0`.
pub fn check_projections(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=9);
    let x = random_sym(&mut r, n, 3.0);
    let y = random_sym(&mut r, n, 3.0);
    let scale = 1.0 + x.norm() + y.norm();
    let tol = 1e-10 * scale;

    let (px, _) = project_psd(&x).map_err(|e| e.to_string())?;
    let (ppx, _) = project_psd(&px).map_err(|e| e.to_string())?;
    ensure(ppx.sub(&px).norm() <= tol, || format!("Π₊ not idempotent, seed {seed}"))?;
    let (pnx, _) = project_psd(&x.scaled(-1.0)).map_err(|e| e.to_string())?;
    ensure(px.sub(&pnx).sub(&x).norm() <= tol, || format!("Moreau sum fails, seed {seed}"))?;
    ensure(px.dot(&pnx).abs() <= tol * scale, || format!("Moreau parts not orthogonal, seed {seed}"))?;
    let min_eig = eig_sym(&px).map_err(|e| e.to_string())?.eigenvalues.min();
    ensure(min_eig >= -tol, || format!("Π₊ output has eigenvalue {min_eig}, seed {seed}"))?;
    let (py, _) = project_psd(&y).map_err(|e| e.to_string())?;
    ensure(px.sub(&py).norm() <= x.sub(&y).norm() + tol, || {
        format!("Π₊ expansive, seed {seed}")
    })?;

    let nx = project_nonneg(&x);
    ensure(project_nonneg(&nx) == nx, || format!("Π≥0 not idempotent, seed {seed}"))?;
    let nnx = project_nonneg(&x.scaled(-1.0));
    ensure(nx.sub(&nnx).sub(&x).norm() <= tol, || format!("Π≥0 Moreau fails, seed {seed}"))?;
    ensure(nx.dot(&nnx).abs() <= tol, || format!("Π≥0 parts not orthogonal, seed {seed}"))?;
    ensure(nx.sub(&project_nonneg(&y)).norm() <= x.sub(&y).norm() + tol, || {
        format!("Π≥0 expansive, seed {seed}")
    })
}

/// The element of `∂Π₊` is self-adjoint, between 0 and I, and matches the
/// central difference of `Π₊` at a random point.
pub fn check_psd_jacobian(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=8);
    let x = random_sym(&mut r, n, 2.0);
    let h1 = random_sym(&mut r, n, 1.0);
    let h2 = random_sym(&mut r, n, 1.0);
    let (_, dec) = project_psd(&x).map_err(|e| e.to_string())?;
    let jac = psd_jacobian(&dec);
    let v1 = jac.apply(&h1);
    let v2 = jac.apply(&h2);
    let tol = 1e-12 * (1.0 + h1.norm() * h2.norm());
    ensure((v1.dot(&h2) - h1.dot(&v2)).abs() <= tol, || format!("Jacobian not self-adjoint, seed {seed}"))?;
    let q = h1.dot(&v1);
    ensure(q >= -1e-12 && q <= h1.norm_squared() * (1.0 + 1e-12), || {
        format!("⟨H, VH⟩ = {q} outside [0, ‖H‖²], seed {seed}")
    })?;

    let t = 1e-6;
    let mut plus = x.clone();
    plus.axpy(t, &h1);
    let mut minus = x.clone();
    minus.axpy(-t, &h1);
    let fd = project_psd(&plus)
        .map_err(|e| e.to_string())?
        .0
        .sub(&project_psd(&minus).map_err(|e| e.to_string())?.0)
        .scaled(0.5 / t);
    let err = fd.sub(&v1).norm();
    ensure(err <= 1e-6 * (1.0 + v1.norm()), || {
        format!("Jacobian vs finite difference off by {err:e}, seed {seed}")
    })
}

/// `⟨𝒜X, y⟩ = ⟨X, 𝒜*y⟩` for random sparse maps and the ex-BIQ pair map.
pub fn check_adjoints(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(2..=8);
    let m = r.random_range(1..=12);
    let a = random_rows(&mut r, n, m);
    let x = random_sym(&mut r, n, 1.0);
    let y = random_vec(&mut r, m, 1.0);
    let lhs = a.apply(&x).dot(&y);
    let rhs = x.dot(&a.adjoint(&y));
    ensure((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), || {
        format!("sparse adjoint mismatch {lhs} vs {rhs}, seed {seed}")
    })?;

    let pairs = ExBiqPairs { n: n - 1 };
    let x = random_sym(&mut r, n, 1.0);
    let z = random_vec(&mut r, pairs.rows(), 1.0);
    let lhs = pairs.apply(&x).dot(&z);
    let rhs = x.dot(&pairs.adjoint(&z));
    ensure((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), || {
        format!("ex-BIQ adjoint mismatch {lhs} vs {rhs}, seed {seed}")
    })
}

/// Central-difference directional derivatives of `ξ` and `ζ` against their
/// gradients at 10⁻⁶ relative accuracy.
pub fn check_gradients(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(2..=7);
    let m = r.random_range(1..=6);
    let a = random_rows(&mut r, n, m);
    let g = random_sym(&mut r, n, 2.0);
    let b = random_vec(&mut r, m, 1.0);
    let y = random_vec(&mut r, m, 1.0);
    let dir = random_vec(&mut r, m, 1.0);
    let h = 1e-5;
    let xi = |p: &DVector<f64>| xi_value_grad(p, &g, &a, &b).map(|e| e.value);
    let f = |s: f64| xi(&(&y + &dir * s)).map_err(|e| e.to_string());
    let fd = (f(h)? - f(-h)?) / (2.0 * h);
    let an = xi_value_grad(&y, &g, &a, &b).map_err(|e| e.to_string())?.grad.dot(&dir);
    ensure((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), || {
        format!("ξ gradient {an} vs finite difference {fd}, seed {seed}")
    })?;

    let bm = random_rows(&mut r, n, m);
    let d = random_vec(&mut r, m, 1.0);
    let z0 = random_vec(&mut r, m, 1.0);
    let lambda_max = power_lambda_max(|v| bm.gram_apply(v), m);
    let zeta = ZetaProblem {
        b: &bm,
        g2: &g,
        d: &d,
        c: 0.3,
        z0: &z0,
        clip: r.random_bool(0.5),
        lambda_max,
    };
    let z = random_vec(&mut r, m, 1.0);
    let f = |s: f64| zeta.value_grad(&(&z + &dir * s)).0;
    let fd = (f(h) - f(-h)) / (2.0 * h);
    let an = zeta.gradient(&z).dot(&dir);
    ensure((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), || {
        format!("ζ gradient {an} vs finite difference {fd}, seed {seed}")
    })
}

/// Power iteration against a dense eigensolver on `ℬℬ*`.
pub fn check_power_iteration(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(2..=6);
    let m = r.random_range(1..=10);
    let a = random_rows(&mut r, n, m);
    let mut dense = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut e = DVector::zeros(m);
        e[j] = 1.0;
        dense.set_column(j, &a.gram_apply(&e));
    }
    let exact = dense.symmetric_eigen().eigenvalues.max();
    let est = power_lambda_max(|v| a.gram_apply(v), m);
    ensure((est - exact).abs() <= 1e-3 * exact.max(1e-12), || {
        format!("power iteration {est} vs dense {exact}, seed {seed}")
    })
}
