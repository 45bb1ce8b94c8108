//! Command-line front end for the `dnn-approx` solvers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod instance;
pub mod run;
pub mod svg;
