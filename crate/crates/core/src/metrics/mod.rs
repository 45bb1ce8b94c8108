//! KKT residuals, convergence traces, complexity envelopes and performance
//! profiles.

mod envelope;
mod kkt;
mod profile;
mod trace;

pub use envelope::{complexity_envelope, fit_c0, EnvelopeReport};
pub use kkt::{duality_gap, duality_gap_with, kkt_residual, kkt_residual_with, KktResidual};
pub use profile::{performance_profile, PerfProfileCurve};
pub use trace::{ConvergenceTrace, RunSummary, TraceRecord, TRACE_HEADER};
