//! Dense symmetric linear algebra: eigensystems, cone projections,
//! generalized Jacobians of the PSD projection, abstract constraint maps and
//! small dense factorizations.

mod eigen;
mod jacobian;
pub mod krylov;
mod ops;
mod sym;

pub use eigen::{eig_sym, project_nonneg, project_nonneg_vec, project_psd, SpectralDecomposition};
pub use jacobian::{psd_jacobian, psd_jacobian_apply, PsdJacobian};
pub use ops::{build_gram, power_lambda_max, DenseGram, LinearMap, SparseRowMap};
pub use sym::SymMatrix;
