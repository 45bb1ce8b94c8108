use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KktResidual;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str =
    "iter,time_s,eta1,eta2,eta3,eta4,eta,eta_gap,obj_p,obj_d,eps_k,newton_iters,cg_iters,z_inner_iters";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub time_s: f64,
    pub kkt: KktResidual,
    /// Inner tolerance used at this iteration (0 when not applicable).
    pub eps_k: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub z_inner_iters: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; iterations must increase and times must not go
    /// backwards.
    pub fn push(&mut self, rec: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if rec.iter <= last.iter || rec.time_s < last.time_s {
                return Err(Error::Invalid(format!(
                    "trace record {} does not follow {}",
                    rec.iter, last.iter
                )));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with [`TRACE_HEADER`]. In canonical mode `time_s` is written as 0
    /// so that reruns compare byte for byte.
    pub fn to_csv(&self, canonical: bool) -> String {
        let mut s = String::with_capacity(64 + 160 * self.records.len());
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for r in &self.records {
            let k = &r.kkt;
            let t = if canonical { 0.0 } else { r.time_s };
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{}",
                r.iter,
                t,
                k.eta1,
                k.eta2,
                k.eta3,
                k.eta4,
                k.eta,
                k.eta_gap,
                k.obj_p,
                k.obj_d,
                r.eps_k,
                r.newton_iters,
                r.cg_iters,
                r.z_inner_iters
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, canonical: bool) -> Result<()> {
        std::fs::write(path, self.to_csv(canonical))?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing trace header".into(),
                })
            }
        }
        let mut trace = Self::new();
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: ln + 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 14 {
                return Err(bad("expected 14 fields"));
            }
            let num = |i: usize| f[i].trim().parse::<f64>().map_err(|_| bad("bad number"));
            let int = |i: usize| f[i].trim().parse::<usize>().map_err(|_| bad("bad integer"));
            trace.records.push(TraceRecord {
                iter: int(0)?,
                time_s: num(1)?,
                kkt: KktResidual {
                    eta1: num(2)?,
                    eta2: num(3)?,
                    eta3: num(4)?,
                    eta4: num(5)?,
                    eta: num(6)?,
                    eta_gap: num(7)?,
                    obj_p: num(8)?,
                    obj_d: num(9)?,
                },
                eps_k: num(10)?,
                newton_iters: int(11)?,
                cg_iters: int(12)?,
                z_inner_iters: int(13)?,
            });
        }
        Ok(trace)
    }
}

/// Per-run summary persisted next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub instance: String,
    pub solver: String,
    pub seed: u64,
    pub tol: f64,
    pub iterations: usize,
    pub reason: String,
    #[serde(rename = "final")]
    pub final_residual: KktResidual,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_s: Option<f64>,
    pub config: serde_json::Value,
}
