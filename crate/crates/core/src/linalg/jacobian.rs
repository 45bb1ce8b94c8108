use nalgebra::DMatrix;

use super::{SpectralDecomposition, SymMatrix};

/// An element `V` of the Clarke generalized Jacobian of `Π_{𝕊₊}` at the
/// matrix whose eigensystem is `decomposition`.
///
/// `V(H) = P (Ω ∘ (Pᵀ H P)) Pᵀ` with
///
/// ```text
/// Ω_ij = 1                   λ_i > 0, λ_j > 0
/// Ω_ij = λ_i / (λ_i − λ_j)   λ_i > 0 ≥ λ_j   (and symmetrically)
/// Ω_ij = 0                   λ_i ≤ 0, λ_j ≤ 0
/// ```
///
/// where "positive" uses [`SpectralDecomposition::positivity_threshold`].
/// Pairs involving a (numerically) zero eigenvalue and a nonpositive one get
/// weight 0, which keeps `V` self-adjoint and positive semidefinite.
#[derive(Debug, Clone)]
pub struct PsdJacobian {
    pub decomposition: SpectralDecomposition,
    /// Eigenvalues `0..positive_count` are the positive index set.
    pub positive_count: usize,
    pub omega: DMatrix<f64>,
}

impl PsdJacobian {
    pub fn positive_indices(&self) -> std::ops::Range<usize> {
        0..self.positive_count
    }

    pub fn n(&self) -> usize {
        self.decomposition.n()
    }

    /// Applies `V` to `h`.
    pub fn apply(&self, h: &SymMatrix) -> SymMatrix {
        psd_jacobian_apply(self, h)
    }
}

pub fn psd_jacobian(decomp: &SpectralDecomposition) -> PsdJacobian {
    let n = decomp.n();
    let r = decomp.positive_count();
    let lam = &decomp.eigenvalues;
    let mut omega = DMatrix::zeros(n, n);
    for i in 0..r {
        for j in 0..r {
            omega[(i, j)] = 1.0;
        }
        for j in r..n {
            let li = lam[i];
            let lj = lam[j].min(0.0);
            let w = (li / (li - lj)).clamp(0.0, 1.0);
            omega[(i, j)] = w;
            omega[(j, i)] = w;
        }
    }
    PsdJacobian {
        decomposition: decomp.clone(),
        positive_count: r,
        omega,
    }
}

pub fn psd_jacobian_apply(v: &PsdJacobian, h: &SymMatrix) -> SymMatrix {
    let n = v.n();
    assert_eq!(h.n(), n, "psd_jacobian_apply: dimension mismatch");
    if v.positive_count == 0 {
        return SymMatrix::zeros(n);
    }
    if v.positive_count == n {
        return h.clone();
    }
    let p = &v.decomposition.eigenvectors;
    let t = p.transpose() * h.as_matrix() * p;
    let t = t.component_mul(&v.omega);
    SymMatrix::from_upper(p * t * p.transpose())
}
