//! Block-diagonal majorization of `ℬℬ*` for very many inequality rows.
//!
//! Rows are split into groups `ℬ₁, …, ℬ_q` and
//!
//! ```text
//! M_i = ℬ_iℬ_i* + Σ_{j≠i} (ℬ_iℬ_j* ℬ_jℬ_i*)^{1/2}
//! ```
//!
//! gives `ℬℬ* ⪯ Diag(M₁, …, M_q)`. Adding the proximal operator
//! `Q̂ = Diag(2M, 2I) − (ℬ*, I)*(ℬ*, I)` to the `(z, Z)` objective makes the
//! groups independent, and `Z` separates entrywise.

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::apg_sncg::{apg_sncg_minimize, ApgSncgOptions, ApgSncgStats, DenseQp};
use crate::error::{Error, Result};
use crate::linalg::{power_lambda_max, project_nonneg, LinearMap, SymMatrix};

#[derive(Debug, Clone)]
pub struct PartitionMajorizer {
    pub groups: Vec<Range<usize>>,
    pub blocks: Vec<DMatrix<f64>>,
    pub c: f64,
    /// `2M_i + cI` and its Cholesky factor.
    shifted: Vec<DMatrix<f64>>,
    factors: Vec<Cholesky<f64, Dyn>>,
    lipschitz: Vec<f64>,
}

/// `q` contiguous groups over `m` rows whose sizes differ by at most one.
pub fn contiguous_partition(m: usize, q: usize) -> Vec<Range<usize>> {
    let q = q.clamp(1, m.max(1));
    let base = m / q;
    let extra = m % q;
    let mut start = 0;
    (0..q)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Rows of `ℬ` in the isometric vectorization of `𝕊ⁿ` (off-diagonal
/// entries scaled by √2), so that `ℬℬ* = B Bᵀ`.
fn vectorized_rows(b: &(impl LinearMap + ?Sized)) -> DMatrix<f64> {
    let n = b.dim();
    let m = b.rows();
    let dim = n * (n + 1) / 2;
    let mut out = DMatrix::zeros(m, dim);
    let s2 = std::f64::consts::SQRT_2;
    let mut e = DVector::zeros(m);
    for r in 0..m {
        e[r] = 1.0;
        let a = b.adjoint(&e);
        e[r] = 0.0;
        let mut k = 0;
        for i in 0..n {
            out[(r, k)] = a.get(i, i);
            k += 1;
            for j in i + 1..n {
                out[(r, k)] = s2 * a.get(i, j);
                k += 1;
            }
        }
    }
    out
}

fn psd_sqrt(mat: DMatrix<f64>, group: usize, other: usize) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(mat);
    let lead = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min_eig = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if min_eig < -1e-10 * lead.max(1.0) {
        return Err(Error::IndefiniteSquareRoot {
            group,
            other,
            min_eig,
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let p = &eig.eigenvectors;
    let scaled = p * DMatrix::from_diagonal(&roots);
    let out = &scaled * p.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

pub fn build_partition_majorizer(
    b: &(impl LinearMap + ?Sized),
    groups: Vec<Range<usize>>,
    c: f64,
) -> Result<PartitionMajorizer> {
    let m = b.rows();
    let mut covered = 0;
    for g in &groups {
        if g.start != covered || g.end < g.start {
            return Err(Error::Invalid("partition must cover the rows contiguously".into()));
        }
        covered = g.end;
    }
    if covered != m {
        return Err(Error::Dimension {
            context: "partition coverage",
            expected: m,
            found: covered,
        });
    }
    if c <= 0.0 {
        return Err(Error::Invalid(format!("proximal constant must be positive, got {c}")));
    }
    let rows = vectorized_rows(b);
    let slices: Vec<DMatrix<f64>> = groups
        .iter()
        .map(|g| rows.rows(g.start, g.len()).into_owned())
        .collect();
    let mut blocks = Vec::with_capacity(groups.len());
    for (i, bi) in slices.iter().enumerate() {
        let mut mi = bi * bi.transpose();
        for (j, bj) in slices.iter().enumerate() {
            if i == j {
                continue;
            }
            let k = bi * bj.transpose();
            let cross = &k * k.transpose();
            mi += psd_sqrt((&cross + cross.transpose()) * 0.5, i, j)?;
        }
        blocks.push((&mi + mi.transpose()) * 0.5);
    }
    let mut shifted = Vec::with_capacity(blocks.len());
    let mut factors = Vec::with_capacity(blocks.len());
    let mut lipschitz = Vec::with_capacity(blocks.len());
    for mi in &blocks {
        let mut h = mi * 2.0;
        for k in 0..h.nrows() {
            h[(k, k)] += c;
        }
        let chol = Cholesky::new(h.clone())
            .ok_or_else(|| Error::Invalid("2M_i + cI is not positive definite".into()))?;
        lipschitz.push(power_lambda_max(|v| &h * v, h.nrows()) * 1.01);
        factors.push(chol);
        shifted.push(h);
    }
    Ok(PartitionMajorizer {
        groups,
        blocks,
        c,
        shifted,
        factors,
        lipschitz,
    })
}

impl PartitionMajorizer {
    pub fn rows(&self) -> usize {
        self.groups.last().map_or(0, |g| g.end)
    }

    /// `Mz` with `M = Diag(M₁, …, M_q)`.
    pub fn m_apply(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(z.len());
        for (g, mi) in self.groups.iter().zip(&self.blocks) {
            let part = mi * z.rows(g.start, g.len());
            out.rows_mut(g.start, g.len()).copy_from(&part);
        }
        out
    }

    /// `Q̂(z, Z) = (2Mz − ℬℬ*z − ℬZ, Z − ℬ*z)`.
    pub fn qhat_apply(
        &self,
        b: &(impl LinearMap + ?Sized),
        z: &DVector<f64>,
        zm: &SymMatrix,
    ) -> (DVector<f64>, SymMatrix) {
        let bz = b.adjoint(z);
        let top = self.m_apply(z) * 2.0 - b.apply(&bz.add(zm));
        (top, zm.sub(&bz))
    }
}

#[derive(Debug, Clone)]
pub struct DecomposedOutput {
    pub z: DVector<f64>,
    pub z_mat: SymMatrix,
    /// Largest group residual `‖F_i‖`.
    pub residual_norm: f64,
    /// Groups whose unconstrained minimizer was already nonnegative.
    pub direct_groups: usize,
    pub stats: ApgSncgStats,
}

/// Solves `minimize ½⟨Hz, z⟩ − ⟨h, z⟩ s.t. z ≥ 0` for one group.
pub fn solve_group_qp(
    h_mat: &DMatrix<f64>,
    h: &DVector<f64>,
    factor: Option<&Cholesky<f64, Dyn>>,
    lipschitz: f64,
    warm: &DVector<f64>,
    opts: &ApgSncgOptions,
) -> Result<(DVector<f64>, f64, Option<ApgSncgStats>)> {
    if let Some(chol) = factor {
        let x = chol.solve(h);
        if x.iter().all(|&v| v >= 0.0) {
            return Ok((x, 0.0, None));
        }
    }
    let qp = DenseQp {
        h_mat,
        h,
        lipschitz,
    };
    let out = apg_sncg_minimize(&qp, warm, opts)?;
    Ok((out.x, out.residual_norm, Some(out.stats)))
}

/// One `(z, Z)` step of the decomposed scheme with prox center `(z₀, Z₀)`:
///
/// ```text
/// h = d + cz₀ + 2Mz₀ − ℬ(G₂ + Z₀ + ℬ*z₀)
/// z_i = argmin { ½⟨(2M_i + cI)z_i, z_i⟩ − ⟨h_i, z_i⟩ : z_i ≥ 0 }
/// Z   = Π≥0(−(G₂ − Z₀ + ℬ*z₀)/2)
/// ```
#[allow(clippy::too_many_arguments)]
pub fn solve_z_decomposed(
    g2: &SymMatrix,
    b: &(impl LinearMap + ?Sized),
    d: &DVector<f64>,
    z0: &DVector<f64>,
    zm0: &SymMatrix,
    maj: &PartitionMajorizer,
    opts: &ApgSncgOptions,
) -> Result<DecomposedOutput> {
    let c = maj.c;
    let mut bz0 = SymMatrix::zeros(g2.n());
    b.adjoint_add(z0, &mut bz0);
    let inner = g2.add(zm0).add(&bz0);
    let h = d + z0 * c + maj.m_apply(z0) * 2.0 - b.apply(&inner);

    let mut z = DVector::zeros(z0.len());
    let mut residual_norm = 0.0_f64;
    let mut direct_groups = 0;
    let mut stats = ApgSncgStats::default();
    let group_opts = ApgSncgOptions {
        tol: opts.tol / (maj.groups.len() as f64).sqrt(),
        ..*opts
    };
    for (k, g) in maj.groups.iter().enumerate() {
        let hi = h.rows(g.start, g.len()).into_owned();
        let warm = z0.rows(g.start, g.len()).map(|v| v.max(0.0));
        let (zi, res, st) = solve_group_qp(
            &maj.shifted[k],
            &hi,
            Some(&maj.factors[k]),
            maj.lipschitz[k],
            &warm,
            &group_opts,
        )?;
        match st {
            None => direct_groups += 1,
            Some(s) => {
                stats.outer_iters += s.outer_iters;
                stats.newton_steps += s.newton_steps;
                stats.safeguard_activations += s.safeguard_activations;
                stats.apg_iters += s.apg_iters;
                stats.krylov_iters += s.krylov_iters;
                stats.hit_cap |= s.hit_cap;
            }
        }
        residual_norm = residual_norm.max(res);
        z.rows_mut(g.start, g.len()).copy_from(&zi);
    }

    let z_mat = project_nonneg(&g2.sub(zm0).add(&bz0).scaled(-0.5));
    Ok(DecomposedOutput {
        z,
        z_mat,
        residual_norm,
        direct_groups,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_sym, SparseRowMap};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_sizes() {
        let p = contiguous_partition(10, 3);
        assert_eq!(p, vec![0..4, 4..7, 7..10]);
        assert_eq!(contiguous_partition(2, 5).len(), 2);
    }

    #[test]
    fn single_group_is_exact_gram() {
        let b = SparseRowMap::new(2, vec![vec![(0, 0, 1.0)], vec![(0, 1, 1.0), (1, 1, 2.0)]]).unwrap();
        let maj = build_partition_majorizer(&b, contiguous_partition(2, 1), 1e-4).unwrap();
        let gram = crate::linalg::build_gram(&b).unwrap();
        assert!((&maj.blocks[0] - gram.matrix).norm() < 1e-14);
    }

    #[test]
    fn scalar_qhat() {
        let b = SparseRowMap::new(1, vec![vec![(0, 0, 1.0)]]).unwrap();
        let maj = build_partition_majorizer(&b, contiguous_partition(1, 1), 1e-4).unwrap();
        let (t1, b1) = maj.qhat_apply(&b, &DVector::from_vec(vec![1.0]), &SymMatrix::zeros(1));
        let (t2, b2) = maj.qhat_apply(&b, &DVector::zeros(1), &SymMatrix::identity(1));
        assert_relative_eq!(t1[0], 1.0);
        assert_relative_eq!(b1.get(0, 0), -1.0);
        assert_relative_eq!(t2[0], -1.0);
        assert_relative_eq!(b2.get(0, 0), 1.0);
    }

    #[test]
    fn scalar_group_qp() {
        let h = DMatrix::from_element(1, 1, 3.0);
        let chol = Cholesky::new(h.clone()).unwrap();
        let warm = DVector::zeros(1);
        let opts = ApgSncgOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let (z, _, st) =
            solve_group_qp(&h, &DVector::from_vec(vec![6.0]), Some(&chol), 3.0, &warm, &opts).unwrap();
        assert_relative_eq!(z[0], 2.0);
        assert!(st.is_none());
        let (z, _, _) =
            solve_group_qp(&h, &DVector::from_vec(vec![-6.0]), Some(&chol), 3.0, &warm, &opts).unwrap();
        assert_eq!(z[0], 0.0);
    }

    #[test]
    fn closed_form_z_entry() {
        let b = SparseRowMap::new(2, vec![vec![(0, 0, 1.0)]]).unwrap();
        let maj = build_partition_majorizer(&b, contiguous_partition(1, 1), 1e-4).unwrap();
        let mut g2 = SymMatrix::from_upper_fn(2, |_, _| 1.0);
        g2.set(0, 1, -4.0);
        let out = solve_z_decomposed(
            &g2,
            &b,
            &DVector::zeros(1),
            &DVector::zeros(1),
            &SymMatrix::zeros(2),
            &maj,
            &Default::default(),
        )
        .unwrap();
        assert_relative_eq!(out.z_mat.get(0, 1), 2.0);
        assert_eq!(out.z_mat.get(0, 0), 0.0);
    }

    #[test]
    fn domination_on_random_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<(usize, usize, f64)>> = (0..6)
            .map(|_| {
                (0..3)
                    .map(|_| (rng.random_range(0..3), rng.random_range(0..3), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let b = SparseRowMap::new(3, rows).unwrap();
        let gram = crate::linalg::build_gram(&b).unwrap().matrix;
        for q in 1..=3 {
            let maj = build_partition_majorizer(&b, contiguous_partition(6, q), 1e-4).unwrap();
            let mut full = DMatrix::zeros(6, 6);
            for (g, mi) in maj.groups.iter().zip(&maj.blocks) {
                full.view_mut((g.start, g.start), (g.len(), g.len())).copy_from(mi);
            }
            let diff = SymMatrix::symmetrize(full - &gram).unwrap();
            let lmin = eig_sym(&diff).unwrap().eigenvalues.min();
            assert!(lmin >= -1e-8, "q={q}: {lmin}");
        }
    }
}
