//! Hybrid of accelerated proximal gradient and semismooth Newton for
//! `minimize ζ(x) + δ_{≥0}(x)` with `ζ` smooth and strongly convex.
//!
//! Progress is measured by the natural residual `F(x) = x − Π≥0(x − ∇ζ(x))`.
//! Newton steps on `F` are tried first; whenever one does not shrink `‖F‖`
//! by the factor `γ`, an APG run takes over until it does.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::krylov::{cg, KrylovOutcome};
use crate::linalg::{project_nonneg, project_nonneg_vec, LinearMap, SymMatrix};

/// Smooth part `ζ` of the composite problem.
pub trait SmoothPart {
    /// Whatever the generalized Hessian at a point depends on.
    type Curvature;

    fn dim(&self) -> usize;

    fn value_grad(&self, x: &DVector<f64>) -> (f64, DVector<f64>);

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.value_grad(x).1
    }

    fn curvature(&self, x: &DVector<f64>) -> Self::Curvature;

    /// Applies an element of `∂∇ζ(x)`.
    fn hess_apply(&self, curv: &Self::Curvature, v: &DVector<f64>) -> DVector<f64>;

    /// Lipschitz constant of `∇ζ`.
    fn lipschitz(&self) -> f64;

    /// The principal submatrix of the Hessian element on `rows`, when it is
    /// cheap to form explicitly.
    fn hess_submatrix(&self, _curv: &Self::Curvature, _rows: &[usize]) -> Option<DMatrix<f64>> {
        None
    }
}

/// `ζ(z) = ½‖Π≥0(ℬ*z + G₂)‖² − ⟨d, z⟩ + (c/2)‖z − z₀‖²`.
///
/// With `clip = false` the projection is dropped, which is the `z` step of
/// a four-block method where `Z` is a separate block.
pub struct ZetaProblem<'a, B: LinearMap + ?Sized> {
    pub b: &'a B,
    pub g2: &'a SymMatrix,
    pub d: &'a DVector<f64>,
    pub c: f64,
    pub z0: &'a DVector<f64>,
    pub clip: bool,
    /// `λmax(ℬℬ*)`.
    pub lambda_max: f64,
}

impl<B: LinearMap + ?Sized> ZetaProblem<'_, B> {
    fn inner(&self, z: &DVector<f64>) -> SymMatrix {
        let mut m = self.g2.clone();
        self.b.adjoint_add(z, &mut m);
        if self.clip {
            project_nonneg(&m)
        } else {
            m
        }
    }
}

impl<B: LinearMap + ?Sized> SmoothPart for ZetaProblem<'_, B> {
    /// 0/1 pattern of `ℬ*z + G₂ > 0`; `None` when nothing is clipped.
    type Curvature = Option<SymMatrix>;

    fn dim(&self) -> usize {
        self.b.rows()
    }

    fn value_grad(&self, z: &DVector<f64>) -> (f64, DVector<f64>) {
        let p = self.inner(z);
        let dz = z - self.z0;
        let value = 0.5 * p.norm_squared() - self.d.dot(z) + 0.5 * self.c * dz.norm_squared();
        let grad = self.b.apply(&p) - self.d + dz * self.c;
        (value, grad)
    }

    fn curvature(&self, z: &DVector<f64>) -> Option<SymMatrix> {
        if !self.clip {
            return None;
        }
        let mut m = self.g2.clone();
        self.b.adjoint_add(z, &mut m);
        Some(m.map(|v| if v > 0.0 { 1.0 } else { 0.0 }))
    }

    fn hess_apply(&self, curv: &Option<SymMatrix>, v: &DVector<f64>) -> DVector<f64> {
        let bb = match curv {
            Some(mask) => self.b.masked_gram_apply(mask, v),
            None => self.b.gram_apply(v),
        };
        bb + v * self.c
    }

    fn lipschitz(&self) -> f64 {
        self.lambda_max + self.c
    }
}

/// `½ xᵀHx − hᵀx` with dense symmetric positive definite `H`.
pub struct DenseQp<'a> {
    pub h_mat: &'a DMatrix<f64>,
    pub h: &'a DVector<f64>,
    pub lipschitz: f64,
}

impl SmoothPart for DenseQp<'_> {
    type Curvature = ();

    fn dim(&self) -> usize {
        self.h.len()
    }

    fn value_grad(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let hx = self.h_mat * x;
        (0.5 * x.dot(&hx) - self.h.dot(x), hx - self.h)
    }

    fn curvature(&self, _: &DVector<f64>) {}

    fn hess_apply(&self, _: &(), v: &DVector<f64>) -> DVector<f64> {
        self.h_mat * v
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn hess_submatrix(&self, _: &(), rows: &[usize]) -> Option<DMatrix<f64>> {
        Some(self.h_mat.select_columns(rows).select_rows(rows))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApgSncgOptions {
    /// Cap `η ∈ (0, 1)` on the Newton forcing term.
    pub eta: f64,
    /// Required contraction `γ ∈ (0, 1)` of `‖F‖` per outer step.
    pub gamma: f64,
    /// Line-search ratio `ρ ∈ (0, ½)`.
    pub rho: f64,
    /// Line-search cap `m₀`.
    pub m0: u32,
    pub krylov_max_iter: usize,
    pub max_outer: usize,
    /// Total APG iterations allowed across all safeguard runs.
    pub max_apg_iters: usize,
    /// Stop once `‖F(x)‖ ≤ tol`.
    pub tol: f64,
}

impl Default for ApgSncgOptions {
    fn default() -> Self {
        Self {
            eta: 0.1,
            gamma: 0.5,
            rho: 0.45,
            m0: 30,
            krylov_max_iter: 200,
            max_outer: 500,
            max_apg_iters: 100_000,
            tol: 1e-8,
        }
    }
}

impl ApgSncgOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta > 0.0
            && self.eta < 1.0
            && self.gamma > 0.0
            && self.gamma < 1.0
            && self.rho > 0.0
            && self.rho < 0.5
            && self.m0 > 0
            && self.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("APG-SNCG options out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApgSncgStats {
    pub outer_iters: usize,
    pub newton_steps: usize,
    pub safeguard_activations: usize,
    pub apg_iters: usize,
    pub krylov_iters: usize,
    /// `‖F‖` at each accepted outer point, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub hit_cap: bool,
}

#[derive(Debug, Clone)]
pub struct ApgSncgOutput {
    /// Final point, projected onto `x ≥ 0`.
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub value: f64,
    pub stats: ApgSncgStats,
}

/// `F(x) = x − Π≥0(x − ∇ζ(x))`.
pub fn f_residual<P: SmoothPart>(smooth: &P, x: &DVector<f64>) -> DVector<f64> {
    let g = smooth.gradient(x);
    residual_from_grad(x, &g)
}

fn residual_from_grad(x: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
    x - project_nonneg_vec(&(x - g))
}

/// `V d = d − D(d − ∇²ζ d)` with `D` the 0/1 pattern of `x − ∇ζ(x) > 0`.
#[cfg(test)]
fn jacobian_apply<P: SmoothPart>(
    smooth: &P,
    curv: &P::Curvature,
    active: &[bool],
    d: &DVector<f64>,
) -> DVector<f64> {
    if !active.iter().any(|&a| a) {
        return d.clone();
    }
    let hd = smooth.hess_apply(curv, d);
    DVector::from_fn(d.len(), |i, _| if active[i] { hd[i] } else { d[i] })
}

/// Solves `V d = rhs` for `V ∈ ∂F(x)` to the absolute tolerance `tol`.
/// Entries sitting exactly on a kink count as inactive.
///
/// `V` is block triangular: inactive entries give `d_I = rhs_I`, and the
/// active ones solve the symmetric positive definite system
/// `(∇²ζ)_AA d_A = rhs_A − (∇²ζ)_AI d_I` by CG. The residual of the reduced
/// system equals that of the full one.
pub fn f_jacobian_solve<P: SmoothPart>(
    smooth: &P,
    x: &DVector<f64>,
    rhs: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let g = smooth.gradient(x);
    jacobian_solve_at(smooth, x, &g, rhs, tol, max_iter)
}

fn jacobian_solve_at<P: SmoothPart>(
    smooth: &P,
    x: &DVector<f64>,
    g: &DVector<f64>,
    rhs: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let active: Vec<usize> = (0..x.len()).filter(|&i| x[i] - g[i] > 0.0).collect();
    if active.is_empty() {
        return KrylovOutcome {
            x: rhs.clone(),
            iterations: 0,
            residual_norm: 0.0,
            converged: true,
        };
    }
    let curv = smooth.curvature(x);
    let mut d = rhs.clone();
    for &i in &active {
        d[i] = 0.0;
    }
    let coupling = if active.len() == x.len() {
        DVector::zeros(x.len())
    } else {
        smooth.hess_apply(&curv, &d)
    };
    let reduced_rhs = DVector::from_iterator(active.len(), active.iter().map(|&i| rhs[i] - coupling[i]));
    let sub = smooth.hess_submatrix(&curv, &active);
    let out = cg(
        |v| {
            if let Some(h) = &sub {
                return h * v;
            }
            let mut full = DVector::zeros(x.len());
            for (k, &i) in active.iter().enumerate() {
                full[i] = v[k];
            }
            let hv = smooth.hess_apply(&curv, &full);
            DVector::from_iterator(active.len(), active.iter().map(|&i| hv[i]))
        },
        &reduced_rhs,
        tol,
        max_iter,
    );
    for (k, &i) in active.iter().enumerate() {
        d[i] = out.x[k];
    }
    KrylovOutcome { x: d, ..out }
}

pub fn apg_sncg_minimize<P: SmoothPart>(
    smooth: &P,
    x_init: &DVector<f64>,
    opts: &ApgSncgOptions,
) -> Result<ApgSncgOutput> {
    opts.validate()?;
    let mut stats = ApgSncgStats::default();
    let lip = smooth.lipschitz().max(f64::MIN_POSITIVE);
    let mut x = x_init.clone();
    let mut g = smooth.gradient(&x);
    let mut f = residual_from_grad(&x, &g);
    let mut fnorm = f.norm();
    stats.residual_history.push(fnorm);

    while fnorm > opts.tol {
        if !fnorm.is_finite() {
            return Err(Error::InnerSolver("APG-SNCG residual is not finite".into()));
        }
        if stats.outer_iters >= opts.max_outer || stats.apg_iters >= opts.max_apg_iters {
            stats.hit_cap = true;
            break;
        }
        stats.outer_iters += 1;
        let target = opts.gamma * fnorm;

        // Newton step with line search on ‖F‖.
        let forcing = opts.eta.min(fnorm) * fnorm;
        let newton = jacobian_solve_at(smooth, &x, &g, &(-&f), forcing, opts.krylov_max_iter);
        stats.krylov_iters += newton.iterations;
        let mut accepted = None;
        let dir = newton.x.iter().all(|v| v.is_finite()).then_some(newton.x);
        if let Some(dir) = dir {
            let mut step = 1.0;
            for _ in 0..=opts.m0 {
                let cand = &x + &dir * step;
                let cg = smooth.gradient(&cand);
                let cf = residual_from_grad(&cand, &cg);
                let cn = cf.norm();
                if cn <= target {
                    accepted = Some((cand, cg, cf, cn));
                    break;
                }
                step *= opts.rho;
            }
        }
        if accepted.is_some() {
            stats.newton_steps += 1;
        } else {
            // APG safeguard from the current point.
            stats.safeguard_activations += 1;
            let mut xi = x.clone();
            let mut gi = g.clone();
            let mut x_tilde_prev = x.clone();
            let mut beta = 1.0_f64;
            loop {
                if stats.apg_iters >= opts.max_apg_iters {
                    break;
                }
                stats.apg_iters += 1;
                let x_tilde = project_nonneg_vec(&(&xi - &gi / lip));
                let beta_next = 0.5 * (1.0 + (1.0 + 4.0 * beta * beta).sqrt());
                let mom = (beta - 1.0) / beta_next;
                let next = &x_tilde + (&x_tilde - &x_tilde_prev) * mom;
                let ng = smooth.gradient(&next);
                let nf = residual_from_grad(&next, &ng);
                let nn = nf.norm();
                if nn <= target {
                    accepted = Some((next, ng, nf, nn));
                    break;
                }
                x_tilde_prev = x_tilde;
                xi = next;
                gi = ng;
                beta = beta_next;
            }
        }
        match accepted {
            Some((nx, ng, nf, nn)) => {
                x = nx;
                g = ng;
                f = nf;
                fnorm = nn;
                stats.residual_history.push(fnorm);
            }
            None => {
                stats.hit_cap = true;
                break;
            }
        }
    }

    if x.iter().any(|&v| v < 0.0) {
        x = project_nonneg_vec(&x);
        g = smooth.gradient(&x);
        fnorm = residual_from_grad(&x, &g).norm();
    }
    let (value, _) = smooth.value_grad(&x);
    Ok(ApgSncgOutput {
        x,
        residual_norm: fnorm,
        value,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct ZBlockOutput {
    pub z: DVector<f64>,
    /// `Z = Π≥0(−ℬ*z − G₂)`.
    pub z_mat: SymMatrix,
    pub residual_norm: f64,
    pub stats: ApgSncgStats,
}

/// Solves
///
/// ```text
/// minimize ½‖ℬ*z + Z + G₂‖² − ⟨d, z⟩ + (c/2)‖z − z₀‖²   s.t.  z ≥ 0, Z ≥ 0
/// ```
///
/// by eliminating `Z` and running [`apg_sncg_minimize`] on `ζ`.
#[allow(clippy::too_many_arguments)]
pub fn apg_sncg_solve<B: LinearMap + ?Sized>(
    g2: &SymMatrix,
    b: &B,
    d: &DVector<f64>,
    c: f64,
    z0: &DVector<f64>,
    z_init: &DVector<f64>,
    lambda_max: f64,
    opts: &ApgSncgOptions,
) -> Result<ZBlockOutput> {
    if c <= 0.0 {
        return Err(Error::Invalid(format!("proximal constant must be positive, got {c}")));
    }
    let (z, residual_norm, stats) = if b.rows() == 0 {
        (DVector::zeros(0), 0.0, ApgSncgStats::default())
    } else {
        let zeta = ZetaProblem {
            b,
            g2,
            d,
            c,
            z0,
            clip: true,
            lambda_max,
        };
        let out = apg_sncg_minimize(&zeta, z_init, opts)?;
        (out.x, out.residual_norm, out.stats)
    };
    let mut m = g2.clone();
    b.adjoint_add(&z, &mut m);
    let z_mat = project_nonneg(&m.scaled(-1.0));
    Ok(ZBlockOutput {
        z,
        z_mat,
        residual_norm,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{power_lambda_max, SparseRowMap};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar() -> (SparseRowMap, SymMatrix, DVector<f64>, DVector<f64>) {
        (
            SparseRowMap::new(1, vec![vec![(0, 0, 1.0)]]).unwrap(),
            SymMatrix::zeros(1),
            DVector::from_vec(vec![1.0]),
            DVector::zeros(1),
        )
    }

    #[test]
    fn scalar_closed_form() {
        let (b, g2, d, z0) = scalar();
        let zeta = ZetaProblem {
            b: &b,
            g2: &g2,
            d: &d,
            c: 1.0,
            z0: &z0,
            clip: true,
            lambda_max: 1.0,
        };
        let (v, g) = zeta.value_grad(&DVector::from_vec(vec![0.5]));
        assert_relative_eq!(v, -0.25);
        assert_relative_eq!(g[0], 0.0);
        assert_eq!(f_residual(&zeta, &DVector::from_vec(vec![0.5]))[0], 0.0);

        let out = apg_sncg_solve(&g2, &b, &d, 1.0, &z0, &z0, 1.0, &Default::default()).unwrap();
        assert_relative_eq!(out.z[0], 0.5, epsilon = 1e-8);
        assert_eq!(out.z_mat.get(0, 0), 0.0);
    }

    #[test]
    fn empty_inequalities() {
        let b = SparseRowMap::new(2, vec![]).unwrap();
        let g2 = SymMatrix::from_upper_fn(2, |i, j| if i == j { -1.0 } else { 2.0 });
        let e = DVector::zeros(0);
        let out = apg_sncg_solve(&g2, &b, &e, 1e-4, &e, &e, 0.0, &Default::default()).unwrap();
        assert_eq!(out.z.len(), 0);
        assert_eq!(out.z_mat, SymMatrix::from_diagonal(&[1.0, 1.0]));
    }

    #[test]
    fn prox_term_vanishes_at_center() {
        let (b, g2, d, _) = scalar();
        let z = DVector::from_vec(vec![0.7]);
        let base = ZetaProblem {
            b: &b,
            g2: &g2,
            d: &d,
            c: 0.0,
            z0: &z,
            clip: true,
            lambda_max: 1.0,
        };
        let with = ZetaProblem { c: 3.0, ..base };
        let (v0, g0) = ZetaProblem { c: 0.0, ..with }.value_grad(&z);
        let (v1, g1) = with.value_grad(&z);
        assert_eq!(v0, v1);
        assert_eq!(g0, g1);
    }

    #[test]
    fn fully_inactive_jacobian_is_identity() {
        let (b, g2, _, z0) = scalar();
        let d = DVector::from_vec(vec![-10.0]);
        let zeta = ZetaProblem {
            b: &b,
            g2: &g2,
            d: &d,
            c: 1.0,
            z0: &z0,
            clip: true,
            lambda_max: 1.0,
        };
        // x − ∇ζ(x) = −10 < 0 at x = 0: D_prox = 0.
        let rhs = DVector::from_vec(vec![3.0]);
        let out = f_jacobian_solve(&zeta, &DVector::zeros(1), &rhs, 1e-14, 10);
        assert_relative_eq!(out.x[0], 3.0);
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SparseRowMap {
        let rows = (0..m)
            .map(|_| {
                (0..3)
                    .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        SparseRowMap::new(n, rows).unwrap()
    }

    #[test]
    fn f_is_zero_exactly_at_the_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let b = random_rows(&mut rng, 4, 5);
            let g2 = SymMatrix::from_upper_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let d = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let z0 = DVector::zeros(5);
            let lm = power_lambda_max(|v| b.gram_apply(v), 5);
            let zeta = ZetaProblem {
                b: &b,
                g2: &g2,
                d: &d,
                c: 0.5,
                z0: &z0,
                clip: true,
                lambda_max: lm,
            };
            // projected-gradient oracle
            let mut x = DVector::zeros(5);
            for _ in 0..200_000 {
                x = project_nonneg_vec(&(&x - zeta.gradient(&x) / zeta.lipschitz()));
            }
            assert!(f_residual(&zeta, &x).norm() <= 1e-10);
            let out = apg_sncg_minimize(
                &zeta,
                &DVector::zeros(5),
                &ApgSncgOptions {
                    tol: 1e-12,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((out.x - &x).norm() <= 1e-8);
            let off = &x + DVector::from_element(5, 0.1);
            assert!(f_residual(&zeta, &off).norm() > 1e-6);
        }
    }

    #[test]
    fn outer_contraction_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_rows(&mut rng, 6, 12);
        let g2 = SymMatrix::from_upper_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let d = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        let z0 = DVector::zeros(12);
        let lm = power_lambda_max(|v| b.gram_apply(v), 12);
        let zeta = ZetaProblem {
            b: &b,
            g2: &g2,
            d: &d,
            c: 1e-2,
            z0: &z0,
            clip: true,
            lambda_max: lm,
        };
        let opts = ApgSncgOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let out = apg_sncg_minimize(&zeta, &DVector::from_element(12, 1.0), &opts).unwrap();
        let h = &out.stats.residual_history;
        for (j, r) in h.iter().enumerate() {
            assert!(*r <= opts.gamma.powi(j as i32) * h[0] * (1.0 + 1e-12));
        }
        assert!(out.residual_norm <= 1e-10);
    }

    #[test]
    fn jacobian_solve_matches_dense_solve() {
        fn check<P: SmoothPart>(p: &P, x: &DVector<f64>, rhs: &DVector<f64>) {
            let n = x.len();
            let g = p.gradient(x);
            let curv = p.curvature(x);
            let active: Vec<bool> = (0..n).map(|i| x[i] - g[i] > 0.0).collect();
            let mut v = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                v.set_column(j, &jacobian_apply(p, &curv, &active, &e));
            }
            let dense = v.lu().solve(rhs).unwrap();
            let out = f_jacobian_solve(p, x, rhs, 1e-13, 100);
            assert!((out.x - dense).norm() <= 1e-8);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let b = random_rows(&mut rng, 3, 5);
            let g2 = SymMatrix::from_upper_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let d = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let z0 = DVector::zeros(5);
            let zeta = ZetaProblem {
                b: &b,
                g2: &g2,
                d: &d,
                c: 0.1,
                z0: &z0,
                clip: true,
                lambda_max: power_lambda_max(|v| b.gram_apply(v), 5),
            };
            let x = DVector::from_fn(5, |_, _| rng.random_range(-0.5..1.0));
            let rhs = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            check(&zeta, &x, &rhs);

            let l = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            let h_mat = &l * l.transpose() + DMatrix::identity(5, 5) * 0.1;
            let h = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let qp = DenseQp {
                h_mat: &h_mat,
                h: &h,
                lipschitz: h_mat.norm(),
            };
            check(&qp, &x, &rhs);
        }
    }
}
