//! The two-block engine on a plain vector space, decoupled from the dual
//! SDP. Used to check the objective-gap envelopes on problems where the
//! majorization assumptions hold exactly.

use std::cell::RefCell;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{momentum_next, ToleranceSchedule};
use crate::error::Result;

/// `θ(w) = h(w) + p(u) + q(v)` with `w = (u, v)` and a majorization
/// `Q̂ = Q + Diag(D₁, D₂)` of `h`.
pub trait MajorizedTwoBlockProblem {
    fn dim_u(&self) -> usize;
    fn dim_v(&self) -> usize;

    fn theta(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64;

    /// `argmin_u p(u) + ĥ(u, vᵏ; wᵏ)`, solved to accuracy `eps` (0 = exact).
    fn solve_u(&self, u_k: &DVector<f64>, v_k: &DVector<f64>, eps: f64) -> Result<DVector<f64>>;

    /// `argmin_v q(v) + ĥ(ũ, v; wᵏ)`, solved to accuracy `eps`.
    fn solve_v(
        &self,
        u_tilde: &DVector<f64>,
        u_k: &DVector<f64>,
        v_k: &DVector<f64>,
        eps: f64,
    ) -> Result<DVector<f64>>;

    fn d1_apply(&self, u: &DVector<f64>) -> DVector<f64>;
    fn d2_apply(&self, v: &DVector<f64>) -> DVector<f64>;
    fn q22_apply(&self, v: &DVector<f64>) -> DVector<f64>;

    /// `‖(u, v)‖²_H` with `H = Diag(D₁, D₂ + Q₂₂)`.
    fn h_norm_squared(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&self.d1_apply(u)) + v.dot(&(self.d2_apply(v) + self.q22_apply(v)))
    }
}

#[derive(Debug, Clone, Default)]
pub struct GenericTrace {
    /// `θ(w̃ᵏ)` for `k = 1, 2, …`.
    pub theta: Vec<f64>,
    /// `w̃ᵏ`.
    pub tilde: Vec<(DVector<f64>, DVector<f64>)>,
    /// `wᵏ`, the point the `k`-th subproblems were built at.
    pub extrapolated: Vec<(DVector<f64>, DVector<f64>)>,
}

/// Runs `iterations` steps from `w¹ = w̃⁰ = (u0, v0)`. Without a schedule
/// the subproblems are solved exactly.
pub fn generic_solve<P: MajorizedTwoBlockProblem + ?Sized>(
    problem: &P,
    u0: &DVector<f64>,
    v0: &DVector<f64>,
    schedule: Option<&ToleranceSchedule>,
    iterations: usize,
) -> Result<GenericTrace> {
    let mut trace = GenericTrace::default();
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let (mut u_prev, mut v_prev) = (u0.clone(), v0.clone());
    let mut t = 1.0;
    for k in 1..=iterations {
        let eps = schedule.map_or(0.0, |s| s.epsilon(k));
        let ut = problem.solve_u(&u, &v, eps)?;
        let vt = problem.solve_v(&ut, &u, &v, eps)?;
        trace.theta.push(problem.theta(&ut, &vt));
        trace.extrapolated.push((u.clone(), v.clone()));
        let t_next = momentum_next(t);
        let beta = (t - 1.0) / t_next;
        u = &ut + (&ut - &u_prev) * beta;
        v = &vt + (&vt - &v_prev) * beta;
        trace.tilde.push((ut.clone(), vt.clone()));
        u_prev = ut;
        v_prev = vt;
        t = t_next;
    }
    Ok(trace)
}

/// `h(w) = ½ wᵀQw + cᵀw`, `p = q = 0`, with diagonal PSD shifts `D₁, D₂`.
///
/// With `noise_seed` set, the subproblem solutions are perturbed by
/// `Δ = −ε Q̂ᵢᵢ^{−1/2} ξ/‖ξ‖` for random `ξ`, i.e. they solve the model
/// with an error term `δ` of `‖Q̂ᵢᵢ^{−1/2} δ‖ = ε` exactly.
pub struct QuadraticTwoBlock {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub d1: DVector<f64>,
    pub d2: DVector<f64>,
    du: usize,
    qhat11: Cholesky<f64, Dyn>,
    qhat22: Cholesky<f64, Dyn>,
    inv_sqrt11: DMatrix<f64>,
    inv_sqrt22: DMatrix<f64>,
    noise: Option<RefCell<ChaCha8Rng>>,
}

fn inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let s = e.eigenvalues.map(|l| 1.0 / l.sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&s) * e.eigenvectors.transpose()
}

impl QuadraticTwoBlock {
    pub fn new(
        q: DMatrix<f64>,
        c: DVector<f64>,
        du: usize,
        d1: DVector<f64>,
        d2: DVector<f64>,
        noise_seed: Option<u64>,
    ) -> Result<Self> {
        let n = q.nrows();
        let dv = n - du;
        let mut q11 = q.view((0, 0), (du, du)).into_owned();
        let mut q22 = q.view((du, du), (dv, dv)).into_owned();
        for i in 0..du {
            q11[(i, i)] += d1[i];
        }
        for i in 0..dv {
            q22[(i, i)] += d2[i];
        }
        let not_pd = || crate::error::Error::Invalid("Q̂₁₁ or Q̂₂₂ is not positive definite".into());
        let qhat11 = Cholesky::new(q11.clone()).ok_or_else(not_pd)?;
        let qhat22 = Cholesky::new(q22.clone()).ok_or_else(not_pd)?;
        Ok(Self {
            inv_sqrt11: inv_sqrt(&q11),
            inv_sqrt22: inv_sqrt(&q22),
            q,
            c,
            d1,
            d2,
            du,
            qhat11,
            qhat22,
            noise: noise_seed.map(|s| RefCell::new(ChaCha8Rng::seed_from_u64(s))),
        })
    }

    /// Random strongly convex instance: `Q = AAᵀ/N + μI` with `μ ∈ [0.05, 0.5]`,
    /// `D₁, D₂` diagonal with entries in `[0, 1)`.
    pub fn random(seed: u64, du: usize, dv: usize, noise_seed: Option<u64>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = du + dv;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mu = rng.random_range(0.05..0.5);
        let mut q = &a * a.transpose() / n as f64;
        for i in 0..n {
            q[(i, i)] += mu;
        }
        let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let d1 = DVector::from_fn(du, |_, _| rng.random_range(0.0..1.0));
        let d2 = DVector::from_fn(dv, |_, _| rng.random_range(0.0..1.0));
        Self::new(q, c, du, d1, d2, noise_seed)
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Unique minimizer `w* = −Q⁻¹c` split into `(u*, v*)`.
    pub fn minimizer(&self) -> (DVector<f64>, DVector<f64>) {
        let w = Cholesky::new(self.q.clone())
            .expect("Q is positive definite by construction")
            .solve(&(-&self.c));
        self.split(&w)
    }

    fn split(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (w.rows(0, self.du).into_owned(), w.rows(self.du, w.len() - self.du).into_owned())
    }

    fn join(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut w = DVector::zeros(u.len() + v.len());
        w.rows_mut(0, u.len()).copy_from(u);
        w.rows_mut(u.len(), v.len()).copy_from(v);
        w
    }

    fn grad(&self, u: &DVector<f64>, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        self.split(&(&self.q * self.join(u, v) + &self.c))
    }

    fn perturbation(&self, inv_sqrt: &DMatrix<f64>, eps: f64) -> Option<DVector<f64>> {
        let rng = self.noise.as_ref()?;
        if eps == 0.0 {
            return None;
        }
        let mut rng = rng.borrow_mut();
        let xi = DVector::from_fn(inv_sqrt.nrows(), |_, _| rng.random_range(-1.0..1.0));
        let norm = xi.norm();
        if norm == 0.0 {
            return None;
        }
        Some(inv_sqrt * xi * (-eps / norm))
    }
}

impl MajorizedTwoBlockProblem for QuadraticTwoBlock {
    fn dim_u(&self) -> usize {
        self.du
    }

    fn dim_v(&self) -> usize {
        self.dim() - self.du
    }

    fn theta(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let w = self.join(u, v);
        0.5 * w.dot(&(&self.q * &w)) + self.c.dot(&w)
    }

    fn solve_u(&self, u_k: &DVector<f64>, v_k: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
        let (gu, _) = self.grad(u_k, v_k);
        let mut u = u_k - self.qhat11.solve(&gu);
        if let Some(p) = self.perturbation(&self.inv_sqrt11, eps) {
            u += p;
        }
        Ok(u)
    }

    fn solve_v(
        &self,
        u_tilde: &DVector<f64>,
        u_k: &DVector<f64>,
        v_k: &DVector<f64>,
        eps: f64,
    ) -> Result<DVector<f64>> {
        let (_, gv) = self.grad(u_k, v_k);
        let du = self.du;
        let dv = self.dim_v();
        let q12t = self.q.view((du, 0), (dv, du));
        let rhs = gv + q12t * (u_tilde - u_k);
        let mut v = v_k - self.qhat22.solve(&rhs);
        if let Some(p) = self.perturbation(&self.inv_sqrt22, eps) {
            v += p;
        }
        Ok(v)
    }

    fn d1_apply(&self, u: &DVector<f64>) -> DVector<f64> {
        self.d1.component_mul(u)
    }

    fn d2_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.d2.component_mul(v)
    }

    fn q22_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let du = self.du;
        let dv = self.dim_v();
        self.q.view((du, du), (dv, dv)) * v
    }
}
