//! Per-iteration convergence record.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::state::ResidualReport;

/// Shortest round-trip text of `x`, in exponent form outside `[1e-4, 1e15)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Max-min RMI of the masters after trial recovery, in bits.
    pub objective_bits: f64,
    pub residuals: ResidualReport,
    /// Smallest rate slack of the trial-recovered state, in bits.
    pub min_rate_slack: f64,
    /// Elapsed time since the solver started; `None` unless requested.
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn header() -> String {
        let mut h = String::from("iteration,objective_bits,max_residual");
        for f in ResidualReport::FAMILIES {
            let _ = write!(h, ",res_{f}");
        }
        h.push_str(",master_drift,min_rate_slack,wall_time_ms");
        h
    }

    /// CSV with the header above. Numbers use the shortest round-trip
    /// representation; `wall_time_ms` is empty when timing was not recorded.
    pub fn to_csv(&self) -> String {
        let mut out = Self::header();
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{}",
                r.iteration,
                num(r.objective_bits),
                num(r.residuals.max())
            );
            for v in r.residuals.families() {
                let _ = write!(out, ",{}", num(v));
            }
            let _ = write!(out, ",{},{},", num(r.residuals.master_drift), num(r.min_rate_slack));
            if let Some(t) = r.wall_time_ms {
                let _ = write!(out, "{}", num(t));
            }
            out.push('\n');
        }
        out
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective_bits).collect()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}
