use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symmetric matrix. Symmetry is enforced on construction and kept by
/// every mutating method, so `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = DMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            data[(i, i)] = v;
        }
        Self { data }
    }

    /// Builds from a closure evaluated on the upper triangle (`i <= j`).
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self { data }
    }

    /// Wraps a square matrix, replacing it by `(M + Mᵀ)/2`.
    pub fn symmetrize(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension {
                context: "SymMatrix::symmetrize",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let mut data = m;
        let n = data.nrows();
        for j in 0..n {
            for i in 0..j {
                let v = 0.5 * (data[(i, j)] + data[(j, i)]);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self::check_finite(&data)?;
        Ok(Self { data })
    }

    /// Wraps a matrix that is already symmetric. Only the upper triangle is
    /// read; the lower triangle is overwritten with it.
    pub fn from_upper(m: DMatrix<f64>) -> Self {
        let mut data = m;
        let n = data.nrows();
        for j in 0..n {
            for i in 0..j {
                data[(j, i)] = data[(i, j)];
            }
        }
        Self { data }
    }

    fn check_finite(m: &DMatrix<f64>) -> Result<()> {
        if m.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Invalid("matrix has non-finite entries".into()))
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[(i, j)] = v;
        self.data[(j, i)] = v;
    }

    /// Adds `v` to `(i, j)` and, off the diagonal, to `(j, i)`.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[(i, j)] += v;
        if i != j {
            self.data[(j, i)] += v;
        }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.data.dot(&other.data)
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.norm_squared()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        for (a, b) in self.data.as_mut_slice().iter_mut().zip(other.data.as_slice()) {
            *a += alpha * b;
        }
    }

    pub fn scale_mut(&mut self, alpha: f64) {
        self.data *= alpha;
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * alpha,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &other.data,
        }
    }

    pub fn map(&self, f: impl FnMut(f64) -> f64) -> SymMatrix {
        SymMatrix {
            data: self.data.map(f),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn data_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.data
    }
}

/// Row-major upper-triangle serialization.
#[derive(Serialize, Deserialize)]
struct SymMatrixRepr {
    n: usize,
    upper: Vec<f64>,
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(m: SymMatrix) -> Self {
        let n = m.n();
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(m.get(i, j));
            }
        }
        SymMatrixRepr { n, upper }
    }
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = Error;

    fn try_from(r: SymMatrixRepr) -> Result<Self> {
        let expected = r.n * (r.n + 1) / 2;
        if r.upper.len() != expected {
            return Err(Error::Dimension {
                context: "serialized SymMatrix",
                expected,
                found: r.upper.len(),
            });
        }
        let mut m = SymMatrix::zeros(r.n);
        let mut k = 0;
        for i in 0..r.n {
            for j in i..r.n {
                m.set(i, j, r.upper[k]);
                k += 1;
            }
        }
        SymMatrix::check_finite(&m.data)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_averages_off_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymMatrix::symmetrize(m).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
    }

    #[test]
    fn symmetrize_rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 3.0]);
        assert!(SymMatrix::symmetrize(m).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let m = SymMatrix::from_upper_fn(3, |i, j| (i * 3 + j) as f64 - 2.5);
        let s = serde_json::to_string(&m).unwrap();
        let back: SymMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
