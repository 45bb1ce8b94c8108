//! Best-approximation instances, dual/primal points, and the ex-BIQ
//! relaxation built from Biq Mac data.

mod biq;
mod io;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use biq::{
    build_ex_biq, generate_bqp, load_biq, parse_biq, write_biq, BiqData, ExBiqPairs, RawBiq,
};
pub use io::{load_instance, save_instance};

use crate::error::{Error, Result};
use crate::linalg::{LinearMap, SparseRowMap, SymMatrix};

/// Concrete constraint operators. Enum dispatch keeps instances
/// serializable and the hot loops monomorphic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintMap {
    /// No rows.
    Empty { n: usize },
    Sparse(SparseRowMap),
    /// The three-rows-per-pair inequality block of the ex-BIQ relaxation.
    ExBiqPairs(ExBiqPairs),
}

impl LinearMap for ConstraintMap {
    fn rows(&self) -> usize {
        match self {
            ConstraintMap::Empty { .. } => 0,
            ConstraintMap::Sparse(m) => m.rows(),
            ConstraintMap::ExBiqPairs(m) => m.rows(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            ConstraintMap::Empty { n } => *n,
            ConstraintMap::Sparse(m) => m.dim(),
            ConstraintMap::ExBiqPairs(m) => m.dim(),
        }
    }

    fn apply(&self, x: &SymMatrix) -> DVector<f64> {
        match self {
            ConstraintMap::Empty { .. } => DVector::zeros(0),
            ConstraintMap::Sparse(m) => m.apply(x),
            ConstraintMap::ExBiqPairs(m) => m.apply(x),
        }
    }

    fn adjoint_add(&self, y: &DVector<f64>, out: &mut SymMatrix) {
        match self {
            ConstraintMap::Empty { .. } => {}
            ConstraintMap::Sparse(m) => m.adjoint_add(y, out),
            ConstraintMap::ExBiqPairs(m) => m.adjoint_add(y, out),
        }
    }

    fn masked_gram_apply(&self, mask: &SymMatrix, y: &DVector<f64>) -> DVector<f64> {
        match self {
            ConstraintMap::Empty { .. } => DVector::zeros(0),
            ConstraintMap::Sparse(m) => m.masked_gram_apply(mask, y),
            ConstraintMap::ExBiqPairs(m) => m.masked_gram_apply(mask, y),
        }
    }
}

/// `minimize ½‖X − G‖²  s.t.  𝒜X = b,  ℬX ≥ d,  X ⪰ 0,  X ≥ 0`.
#[derive(Debug, Clone)]
pub struct BestApproxInstance {
    pub name: String,
    pub g: SymMatrix,
    pub eq: ConstraintMap,
    pub b: DVector<f64>,
    pub ineq: ConstraintMap,
    pub d: DVector<f64>,
}

impl BestApproxInstance {
    pub fn new(
        name: impl Into<String>,
        g: SymMatrix,
        eq: ConstraintMap,
        b: DVector<f64>,
        ineq: ConstraintMap,
        d: DVector<f64>,
    ) -> Result<Self> {
        let n = g.n();
        let check = |context, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::Dimension {
                    context,
                    expected,
                    found,
                })
            }
        };
        check("equality map dimension", n, eq.dim())?;
        check("inequality map dimension", n, ineq.dim())?;
        check("length of b", eq.rows(), b.len())?;
        check("length of d", ineq.rows(), d.len())?;
        if !g.is_finite() || !b.iter().chain(d.iter()).all(|v| v.is_finite()) {
            return Err(Error::Invalid("instance data must be finite".into()));
        }
        Ok(Self {
            name: name.into(),
            g,
            eq,
            b,
            ineq,
            d,
        })
    }

    /// Matrix dimension `n_s`.
    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn m_eq(&self) -> usize {
        self.eq.rows()
    }

    pub fn m_ineq(&self) -> usize {
        self.ineq.rows()
    }
}

/// Builds an instance from constraint rows, each a sparse symmetric
/// coefficient matrix given by its upper-triangle triplets `(i, j, v)`.
pub fn make_custom_instance(
    g: SymMatrix,
    eq_rows: Vec<Vec<(usize, usize, f64)>>,
    b: Vec<f64>,
    ineq_rows: Vec<Vec<(usize, usize, f64)>>,
    d: Vec<f64>,
) -> Result<BestApproxInstance> {
    let n = g.n();
    let to_map = |rows: Vec<Vec<(usize, usize, f64)>>| -> Result<ConstraintMap> {
        if rows.is_empty() {
            Ok(ConstraintMap::Empty { n })
        } else {
            Ok(ConstraintMap::Sparse(SparseRowMap::new(n, rows)?))
        }
    };
    let eq = to_map(eq_rows)?;
    let ineq = to_map(ineq_rows)?;
    BestApproxInstance::new(
        "custom",
        g,
        eq,
        DVector::from_vec(b),
        ineq,
        DVector::from_vec(d),
    )
}

/// Dual iterate `(y, S, z, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s_mat: SymMatrix,
    pub z_mat: SymMatrix,
}

impl DualPoint {
    pub fn zeros(inst: &BestApproxInstance) -> Self {
        Self {
            y: DVector::zeros(inst.m_eq()),
            z: DVector::zeros(inst.m_ineq()),
            s_mat: SymMatrix::zeros(inst.n()),
            z_mat: SymMatrix::zeros(inst.n()),
        }
    }

    /// `self + beta (self − prev)` on all four blocks.
    pub fn extrapolate(&self, prev: &DualPoint, beta: f64) -> DualPoint {
        if beta == 0.0 {
            return self.clone();
        }
        let ext_v = |a: &DVector<f64>, b: &DVector<f64>| a + (a - b) * beta;
        let ext_m = |a: &SymMatrix, b: &SymMatrix| {
            let mut out = a.clone();
            out.axpy(beta, &a.sub(b));
            out
        };
        DualPoint {
            y: ext_v(&self.y, &prev.y),
            z: ext_v(&self.z, &prev.z),
            s_mat: ext_m(&self.s_mat, &prev.s_mat),
            z_mat: ext_m(&self.z_mat, &prev.z_mat),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.y.iter().chain(self.z.iter()).all(|v| v.is_finite())
            && self.s_mat.is_finite()
            && self.z_mat.is_finite()
    }

    /// Name of the first block holding a non-finite value, if any.
    pub fn non_finite_block(&self) -> Option<&'static str> {
        if !self.y.iter().all(|v| v.is_finite()) {
            Some("y")
        } else if !self.s_mat.is_finite() {
            Some("S")
        } else if !self.z.iter().all(|v| v.is_finite()) {
            Some("z")
        } else if !self.z_mat.is_finite() {
            Some("Z")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalPoint {
    pub x: SymMatrix,
}

/// `𝒜*y + ℬ*z + S + Z + G`, the matrix that both the primal point and the
/// dual objective are built from.
pub fn dual_residual_matrix(inst: &BestApproxInstance, w: &DualPoint) -> SymMatrix {
    let mut x = inst.g.add(&w.s_mat);
    x.axpy(1.0, &w.z_mat);
    inst.eq.adjoint_add(&w.y, &mut x);
    inst.ineq.adjoint_add(&w.z, &mut x);
    x
}

/// `X = G + 𝒜*y + ℬ*z + S + Z`.
pub fn primal_from_dual(inst: &BestApproxInstance, w: &DualPoint) -> PrimalPoint {
    PrimalPoint {
        x: dual_residual_matrix(inst, w),
    }
}
