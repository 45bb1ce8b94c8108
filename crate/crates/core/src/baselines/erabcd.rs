use nalgebra::DVector;

use super::{Block, RandomSchedule, Setup};
use crate::error::Result;
use crate::linalg::{project_nonneg, project_nonneg_vec, project_psd, LinearMap, SymMatrix};
use crate::problem::{dual_residual_matrix, BestApproxInstance, DualPoint};
use crate::solver::{IterationWork, Monitor, SolveResult, SolverKind, SolverOptions};
use crate::subsolvers::{apg_sncg_minimize, ApgSncgOptions, SmoothPart};

/// `α_k = ½(√(α⁴ + 4α²) − α²)` with `α = α_{k−1}`.
pub fn alpha_next(alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    0.5 * ((a2 * a2 + 4.0 * a2).sqrt() - a2)
}

/// Iterate of the randomized method: `W = W^k`, `w_tilde = W̃^k`,
/// `alpha = α_{k−1}`.
#[derive(Debug, Clone)]
pub struct AcceleratedState {
    pub w: DualPoint,
    pub w_tilde: DualPoint,
    pub alpha: f64,
    pub k: usize,
}

impl AcceleratedState {
    pub fn new(inst: &BestApproxInstance) -> Self {
        let w = DualPoint::zeros(inst);
        Self {
            w_tilde: w.clone(),
            w,
            alpha: 0.25,
            k: 1,
        }
    }
}

/// `⟨g, z⟩ + (s/2)(‖ℬ*(z − z̃)‖² + β‖z − z̃‖²)`.
struct ProxQuadratic<'a, B: LinearMap + ?Sized> {
    b: &'a B,
    g: DVector<f64>,
    center: &'a DVector<f64>,
    s: f64,
    beta: f64,
    lambda_b: f64,
}

impl<B: LinearMap + ?Sized> SmoothPart for ProxQuadratic<'_, B> {
    type Curvature = ();

    fn dim(&self) -> usize {
        self.g.len()
    }

    fn value_grad(&self, z: &DVector<f64>) -> (f64, DVector<f64>) {
        let v = z - self.center;
        let bv = self.b.gram_apply(&v);
        let value = self.g.dot(z) + 0.5 * self.s * (v.dot(&bv) + self.beta * v.norm_squared());
        (value, &self.g + (bv + &v * self.beta) * self.s)
    }

    fn curvature(&self, _: &DVector<f64>) {}

    fn hess_apply(&self, _: &(), v: &DVector<f64>) -> DVector<f64> {
        (self.b.gram_apply(v) + v * self.beta) * self.s
    }

    fn lipschitz(&self) -> f64 {
        self.s * (self.lambda_b + self.beta)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ZStep {
    Newton,
    Gradient,
}

/// Randomized accelerated four-block coordinate descent. One iteration
/// updates one randomly chosen block; the `z` block uses the metric
/// `ℬℬ* + ‖ℬ‖I` and is solved by APG-SNCG.
pub fn solve_erabcd(inst: &BestApproxInstance, opts: &SolverOptions) -> Result<SolveResult> {
    run(inst, opts, ZStep::Newton)
}

/// As [`solve_erabcd`] with the `z` update replaced by a projected gradient
/// step of length `1/(4α_k λmax(ℬℬ*))`.
pub fn solve_erabcd2(inst: &BestApproxInstance, opts: &SolverOptions) -> Result<SolveResult> {
    run(inst, opts, ZStep::Gradient)
}

fn run(inst: &BestApproxInstance, opts: &SolverOptions, z_step: ZStep) -> Result<SolveResult> {
    opts.validate()?;
    let setup = Setup::new(inst)?;
    let (_, sched_z) = opts.schedules(inst);
    let norm_b = setup.lambda_b.sqrt();
    let kind = match z_step {
        ZStep::Newton => SolverKind::Erabcd,
        ZStep::Gradient => SolverKind::Erabcd2,
    };

    let mut schedule = RandomSchedule::new(opts.seed);
    let mut monitor = Monitor::new(inst, opts);
    let mut st = AcceleratedState::new(inst);
    loop {
        let k = st.k;
        let mut work = IterationWork::default();
        let alpha = alpha_next(st.alpha);
        let s = 4.0 * alpha;

        // Ŵ = (1 − α)W + αW̃.
        let mut w_hat = st.w_tilde.extrapolate(&st.w, -(1.0 - alpha));
        let r_hat = dual_residual_matrix(inst, &w_hat);

        match schedule.next_block() {
            Block::Y => {
                let dy = setup.gram.solve(&(&inst.b - inst.eq.apply(&r_hat))) / s;
                w_hat.y += &dy * s;
                st.w_tilde.y += dy;
            }
            Block::Z if inst.m_ineq() > 0 => {
                let grad = inst.ineq.apply(&r_hat) - &inst.d;
                let z_new = match z_step {
                    ZStep::Newton => {
                        let eps = sched_z.epsilon(k);
                        work.eps_k = eps;
                        let prox = ProxQuadratic {
                            b: &inst.ineq,
                            g: grad,
                            center: &st.w_tilde.z,
                            s,
                            beta: norm_b,
                            lambda_b: setup.lambda_b,
                        };
                        let apg = ApgSncgOptions { tol: eps, ..opts.apg };
                        let out = apg_sncg_minimize(&prox, &st.w_tilde.z, &apg)?;
                        work.z_inner_iters = out.stats.apg_iters + out.stats.krylov_iters;
                        out.x
                    }
                    ZStep::Gradient => {
                        project_nonneg_vec(&(&st.w_tilde.z - grad / (s * setup.lambda_b)))
                    }
                };
                w_hat.z += (&z_new - &st.w_tilde.z) * s;
                st.w_tilde.z = z_new;
            }
            Block::Z => {}
            Block::ZMat => {
                let zm_new = project_nonneg(&st.w_tilde.z_mat.sub(&r_hat.scaled(1.0 / s)));
                w_hat.z_mat.axpy(s, &zm_new.sub(&st.w_tilde.z_mat));
                st.w_tilde.z_mat = zm_new;
            }
            Block::S => {
                let (s_new, _): (SymMatrix, _) =
                    project_psd(&st.w_tilde.s_mat.sub(&r_hat.scaled(1.0 / s)))?;
                w_hat.s_mat.axpy(s, &s_new.sub(&st.w_tilde.s_mat));
                st.w_tilde.s_mat = s_new;
            }
        }
        st.w = w_hat;
        st.alpha = alpha;
        st.k += 1;

        if let Some(reason) = monitor.after_iteration(k, &st.w, work)? {
            return monitor.finish(kind, k, st.w, reason);
        }
    }
}
