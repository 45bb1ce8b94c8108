//! Best approximation of a symmetric matrix onto the intersection of an
//! affine set, a polyhedral set and the doubly nonnegative cone.
//!
//! The problem solved is
//!
//! ```text
//! minimize    ½‖X − G‖²
//! subject to  𝒜X = b,  ℬX ≥ d,  X ⪰ 0,  X ≥ 0
//! ```
//!
//! through its four-block dual in the variables `(y, S, z, Z)`. The main
//! solver, [`solve_imabcd`], runs an inexact majorized accelerated two-block
//! coordinate descent with `(y, S)` and `(z, Z)` as blocks, each block solved
//! by a semismooth Newton method ([`subsolvers::sncg_solve`] and
//! [`subsolvers::apg_sncg_solve`]). Four comparison methods live in
//! [`baselines`], KKT residuals and performance profiles in [`metrics`].
//!
//! ```no_run
//! use dnn_approx::{problem, solve_imabcd, SolverOptions};
//!
//! let data = problem::load_biq("bqp50-1.sparse").unwrap();
//! let inst = problem::build_ex_biq(&data, "bqp8").unwrap();
//! let result = solve_imabcd(&inst, &SolverOptions::default()).unwrap();
//! println!("{:?} after {} iterations", result.reason, result.iterations);
//! ```

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod imabcd;
pub mod linalg;
pub mod metrics;
pub mod problem;
pub mod solver;
pub mod subsolvers;

pub use error::{Error, Result};
pub use imabcd::solve_imabcd;
pub use linalg::{LinearMap, SpectralDecomposition, SymMatrix};
pub use metrics::{ConvergenceTrace, KktResidual, TraceRecord};
pub use problem::{BestApproxInstance, DualPoint, PrimalPoint};
pub use solver::{solve, SolveResult, SolverKind, SolverOptions, TerminationReason};
