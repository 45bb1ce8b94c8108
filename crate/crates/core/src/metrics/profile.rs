use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step function `x ↦` fraction of problems a solver finished within `x`
/// times the best time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfProfileCurve {
    pub solver: String,
    /// Sorted finite ratios `r_sp ≥ 1`, one per solved problem.
    pub ratios: Vec<f64>,
    pub problems: usize,
}

impl PerfProfileCurve {
    pub fn value_at(&self, x: f64) -> f64 {
        if self.problems == 0 {
            return 0.0;
        }
        let hit = self.ratios.partition_point(|&r| r <= x);
        hit as f64 / self.problems as f64
    }

    /// Fraction solved at all.
    pub fn success_fraction(&self) -> f64 {
        self.value_at(f64::INFINITY)
    }

    /// `(x, y)` corners of the step function starting at `x = 1`.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(1.0, self.value_at(1.0))];
        for &r in &self.ratios {
            if r > 1.0 && out.last().is_none_or(|p| p.0 != r) {
                out.push((r, self.value_at(r)));
            }
        }
        out
    }
}

/// `times[s][p]` is solver `s`'s time on problem `p`, `None` if it did not
/// reach the tolerance.
pub fn performance_profile(
    solvers: &[String],
    times: &[Vec<Option<f64>>],
) -> Result<Vec<PerfProfileCurve>> {
    if solvers.is_empty() || times.is_empty() {
        return Err(Error::Invalid("performance profile needs at least one solver".into()));
    }
    if solvers.len() != times.len() {
        return Err(Error::Dimension {
            context: "profile solver count",
            expected: solvers.len(),
            found: times.len(),
        });
    }
    let problems = times[0].len();
    if problems == 0 {
        return Err(Error::Invalid("performance profile needs at least one problem".into()));
    }
    if let Some(row) = times.iter().find(|r| r.len() != problems) {
        return Err(Error::Dimension {
            context: "profile problem count",
            expected: problems,
            found: row.len(),
        });
    }
    let floor = 1e-12;
    let best: Vec<Option<f64>> = (0..problems)
        .map(|p| {
            times
                .iter()
                .filter_map(|row| row[p])
                .map(|t| t.max(floor))
                .reduce(f64::min)
        })
        .collect();
    Ok(solvers
        .iter()
        .zip(times)
        .map(|(name, row)| {
            let mut ratios: Vec<f64> = row
                .iter()
                .zip(&best)
                .filter_map(|(t, b)| Some(t.as_ref()?.max(floor) / (*b)?))
                .collect();
            ratios.sort_by(f64::total_cmp);
            PerfProfileCurve {
                solver: name.clone(),
                ratios,
                problems,
            }
        })
        .collect())
}
