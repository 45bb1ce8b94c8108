//! Inner solvers for the two blocks of the dual.

mod apg_sncg;
mod partition;
mod sncg;

pub use apg_sncg::{
    apg_sncg_minimize, apg_sncg_solve, f_jacobian_solve, f_residual, ApgSncgOptions,
    ApgSncgOutput, ApgSncgStats, DenseQp, SmoothPart, ZBlockOutput, ZetaProblem,
};
pub use partition::{
    build_partition_majorizer, contiguous_partition, solve_group_qp, solve_z_decomposed,
    DecomposedOutput, PartitionMajorizer,
};
pub use sncg::{sncg_solve, xi_value_grad, SncgOptions, SncgOutput, SncgStats, XiEval};
