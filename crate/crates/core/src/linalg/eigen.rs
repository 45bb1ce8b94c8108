use nalgebra::{DMatrix, DVector};

use super::SymMatrix;
use crate::error::{Error, Result};

/// Eigensystem `X = P Λ Pᵀ` with eigenvalues sorted descending and the
/// columns of `P` paired with them.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Relative threshold above which an eigenvalue counts as positive.
    pub fn positivity_threshold(&self) -> f64 {
        let lead = self.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        1e-12 * lead.max(1.0)
    }

    /// Number of eigenvalues above [`Self::positivity_threshold`]. Since the
    /// spectrum is sorted, these are the leading entries.
    pub fn positive_count(&self) -> usize {
        let thr = self.positivity_threshold();
        self.eigenvalues.iter().take_while(|&&l| l > thr).count()
    }

    /// `P f(Λ) Pᵀ`, touching only the columns with `f(λ) != 0`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.n();
        let vals: Vec<(usize, f64)> = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, f(l)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        if vals.is_empty() {
            return SymMatrix::zeros(n);
        }
        let k = vals.len();
        let mut cols = DMatrix::zeros(n, k);
        let mut scaled = DMatrix::zeros(n, k);
        for (c, &(i, v)) in vals.iter().enumerate() {
            let p = self.eigenvectors.column(i);
            cols.set_column(c, &p);
            scaled.set_column(c, &(p * v));
        }
        SymMatrix::from_upper(scaled * cols.transpose())
    }

    /// `Π_{𝕊₊}(X) = P max(Λ, 0) Pᵀ`.
    pub fn positive_part(&self) -> SymMatrix {
        self.reconstruct_with(|l| l.max(0.0))
    }

    /// `Π_{𝕊₊}(−X) = P max(−Λ, 0) Pᵀ`.
    pub fn negative_part(&self) -> SymMatrix {
        self.reconstruct_with(|l| (-l).max(0.0))
    }

    /// Squared Frobenius norm of `Π_{𝕊₊}(X)`, read off the spectrum.
    pub fn positive_part_norm_squared(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.max(0.0).powi(2)).sum()
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Dense symmetric eigendecomposition, eigenvalues descending.
pub fn eig_sym(x: &SymMatrix) -> Result<SpectralDecomposition> {
    let n = x.n();
    let diag = || Error::EigenNonConvergence {
        n,
        frobenius: x.norm(),
        max_abs: x.max_abs(),
    };
    if !x.is_finite() {
        return Err(diag());
    }
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = x
        .as_matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 200 * n + 1000)
        .ok_or_else(diag)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        eigenvectors.set_column(c, &eig.eigenvectors.column(i));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Projection onto the positive semidefinite cone. The decomposition of the
/// argument is returned for reuse.
pub fn project_psd(x: &SymMatrix) -> Result<(SymMatrix, SpectralDecomposition)> {
    let d = eig_sym(x)?;
    Ok((d.positive_part(), d))
}

/// Elementwise `max(·, 0)` on a symmetric matrix.
pub fn project_nonneg(x: &SymMatrix) -> SymMatrix {
    x.map(|v| v.max(0.0))
}

/// Elementwise `max(·, 0)` on a vector.
pub fn project_nonneg_vec(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| x.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        let n = rows.len();
        SymMatrix::from_upper_fn(n, |i, j| rows[i][j])
    }

    #[test]
    fn diagonal_input() {
        let d = eig_sym(&SymMatrix::from_diagonal(&[-1.0, 3.0])).unwrap();
        assert_eq!(d.eigenvalues.as_slice(), &[3.0, -1.0]);
        assert_relative_eq!(d.eigenvectors[(1, 0)].abs(), 1.0);
        assert_relative_eq!(d.eigenvectors[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn identity_spectrum() {
        let d = eig_sym(&SymMatrix::identity(3)).unwrap();
        for l in d.eigenvalues.iter() {
            assert_relative_eq!(*l, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn swap_matrix_closed_form() {
        let d = eig_sym(&sym(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_relative_eq!(d.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(d.eigenvalues[1], -1.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p0 = d.eigenvectors.column(0);
        assert_relative_eq!(p0[0].abs(), r, epsilon = 1e-14);
        assert_relative_eq!(p0[0] * p0[1], 0.5, epsilon = 1e-14);
        let p1 = d.eigenvectors.column(1);
        assert_relative_eq!(p1[0] * p1[1], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn psd_projection_examples() {
        let (p, _) = project_psd(&SymMatrix::from_diagonal(&[2.0, -3.0])).unwrap();
        assert_relative_eq!(p.get(0, 0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(p.get(1, 1), 0.0, epsilon = 1e-15);

        let (p, _) = project_psd(&sym(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(p.get(i, j), 0.5, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn psd_input_is_fixed_point() {
        let x = sym(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        let (p, _) = project_psd(&x).unwrap();
        assert!(p.sub(&x).norm() <= 1e-10 * x.norm());
    }

    #[test]
    fn nonneg_projection() {
        let v = DVector::from_vec(vec![-1.0, 2.0, 0.0]);
        assert_eq!(project_nonneg_vec(&v).as_slice(), &[0.0, 2.0, 0.0]);
        let neg = SymMatrix::from_upper_fn(3, |_, _| -1.5);
        assert_eq!(project_nonneg(&neg), SymMatrix::zeros(3));
        let pos = SymMatrix::from_upper_fn(3, |i, j| (i + j) as f64);
        assert_eq!(project_nonneg(&pos), pos);
    }

    #[test]
    fn non_finite_input_is_an_error() {
        let mut x = SymMatrix::identity(2);
        x.set(0, 1, f64::NAN);
        assert!(matches!(
            eig_sym(&x),
            Err(Error::EigenNonConvergence { n: 2, .. })
        ));
    }
}
