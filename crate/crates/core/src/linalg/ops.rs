use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::error::{Error, Result};

/// A linear map `𝕊ⁿ → ℝᵐ` together with its adjoint `ℝᵐ → 𝕊ⁿ`, under the
/// Frobenius inner product on `𝕊ⁿ`.
pub trait LinearMap {
    /// Number of rows `m`.
    fn rows(&self) -> usize;

    /// Matrix dimension `n` of the domain `𝕊ⁿ`.
    fn dim(&self) -> usize;

    fn apply(&self, x: &SymMatrix) -> DVector<f64>;

    /// `out += 𝒜*y`.
    fn adjoint_add(&self, y: &DVector<f64>, out: &mut SymMatrix);

    fn adjoint(&self, y: &DVector<f64>) -> SymMatrix {
        let mut out = SymMatrix::zeros(self.dim());
        self.adjoint_add(y, &mut out);
        out
    }

    /// `𝒜𝒜*y`.
    fn gram_apply(&self, y: &DVector<f64>) -> DVector<f64> {
        self.apply(&self.adjoint(y))
    }

    /// `𝒜(mask ∘ 𝒜*y)` for a 0/1 mask.
    fn masked_gram_apply(&self, mask: &SymMatrix, y: &DVector<f64>) -> DVector<f64> {
        let mut a = self.adjoint(y);
        a.data_mut().component_mul_assign(mask.as_matrix());
        self.apply(&a)
    }
}

/// Constraint rows given as sparse symmetric coefficient matrices `A_r`, so
/// that `(𝒜X)_r = ⟨A_r, X⟩`. Each entry `(i, j, v)` with `i <= j` stands for
/// both `A_r[i][j]` and `A_r[j][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRowMap {
    n: usize,
    row_ptr: Vec<usize>,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseRowMap {
    pub fn new(n: usize, rows: Vec<Vec<(usize, usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut entries = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (i, j, v) in row {
                let (i, j) = if i <= j { (i, j) } else { (j, i) };
                if j >= n {
                    return Err(Error::Dimension {
                        context: "SparseRowMap entry index",
                        expected: n,
                        found: j + 1,
                    });
                }
                if !v.is_finite() {
                    return Err(Error::Invalid("non-finite constraint coefficient".into()));
                }
                entries.push((i, j, v));
            }
            row_ptr.push(entries.len());
        }
        Ok(Self {
            n,
            row_ptr,
            entries,
        })
    }

    pub fn row(&self, r: usize) -> &[(usize, usize, f64)] {
        &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]]
    }
}

impl LinearMap for SparseRowMap {
    fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &SymMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.rows(),
            (0..self.rows()).map(|r| {
                self.row(r)
                    .iter()
                    .map(|&(i, j, v)| if i == j { v * x.get(i, i) } else { 2.0 * v * x.get(i, j) })
                    .sum::<f64>()
            }),
        )
    }

    fn adjoint_add(&self, y: &DVector<f64>, out: &mut SymMatrix) {
        for r in 0..self.rows() {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for &(i, j, v) in self.row(r) {
                out.add_at(i, j, yr * v);
            }
        }
    }
}

/// Largest eigenvalue of a self-adjoint positive semidefinite map on `ℝ^dim`
/// by power iteration (relative change 10⁻⁶, at most 1000 steps). Returns 0
/// for the zero map.
pub fn power_lambda_max(apply: impl Fn(&DVector<f64>) -> DVector<f64>, dim: usize) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_1A3B);
    let mut v = DVector::from_fn(dim, |_, _| 0.5 + rng.random::<f64>());
    v.normalize_mut();
    let mut lambda = 0.0;
    for _ in 0..1000 {
        let w = apply(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= 1e-6 * next.abs() {
            return next.max(norm).max(0.0);
        }
        lambda = next;
    }
    lambda.max(0.0)
}

/// Dense `𝒜𝒜*` with a Cholesky factor for solves.
#[derive(Debug, Clone)]
pub struct DenseGram {
    pub matrix: DMatrix<f64>,
    /// Ridge added before factorization; zero when `𝒜𝒜*` was numerically
    /// positive definite.
    pub ridge: f64,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl DenseGram {
    pub fn rank_deficient(&self) -> bool {
        self.ridge > 0.0
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Solves `(𝒜𝒜* + ridge·I) x = r`.
    pub fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        match &self.chol {
            Some(c) => c.solve(r),
            None => DVector::zeros(0),
        }
    }
}

pub fn build_gram(a: &dyn LinearMap) -> Result<DenseGram> {
    let m = a.rows();
    let mut matrix = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut e = DVector::zeros(m);
        e[j] = 1.0;
        let col = a.gram_apply(&e);
        matrix.set_column(j, &col);
    }
    let matrix = SymMatrix::symmetrize(matrix)?.into_matrix();
    if m == 0 {
        return Ok(DenseGram {
            matrix,
            ridge: 0.0,
            chol: None,
        });
    }
    let max_diag = matrix.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b));
    let chol = Cholesky::new(matrix.clone()).filter(|c| {
        let l = c.l_dirty();
        (0..m).all(|i| l[(i, i)] * l[(i, i)] > 1e-13 * max_diag)
    });
    if let Some(chol) = chol {
        return Ok(DenseGram {
            matrix,
            ridge: 0.0,
            chol: Some(chol),
        });
    }
    let ridge = (1e-12 * matrix.trace() / m as f64).max(f64::MIN_POSITIVE);
    let mut shifted = matrix.clone();
    for i in 0..m {
        shifted[(i, i)] += ridge;
    }
    let chol = Cholesky::new(shifted)
        .ok_or_else(|| Error::Invalid("constraint Gram matrix is not positive semidefinite".into()))?;
    Ok(DenseGram {
        matrix,
        ridge,
        chol: Some(chol),
    })
}
