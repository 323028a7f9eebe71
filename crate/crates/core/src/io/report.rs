//! Result and trace serialization.

use serde::Serialize;

use crate::decomposition::CliqueStats;
use crate::solver::{ProgressRecord, SolveCounters, SolverResult, SolverStatus, Timings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Summary {
    objective: f64,
    status: SolverStatus,
    iterations: usize,
    eps_p: f64,
    eps_d: f64,
    affine_residual: f64,
    timings: Timings,
    counters: SolveCounters,
    clique_stats: CliqueStats,
}

/// Serializes a result: JSON gives the summary (objective, status,
/// iterations, residuals, timings, counters, clique statistics); CSV gives
/// the per-iteration trace.
pub fn write_result(result: &SolverResult, format: ResultFormat) -> String {
    match format {
        ResultFormat::Json => {
            let summary = Summary {
                objective: result.objective,
                status: result.status,
                iterations: result.iterations,
                eps_p: result.eps_p,
                eps_d: result.eps_d,
                affine_residual: result.affine_residual,
                timings: result.timings,
                counters: result.counters,
                clique_stats: result.clique_stats,
            };
            let mut text =
                serde_json::to_string_pretty(&summary).expect("summary serializes");
            text.push('\n');
            text
        }
        ResultFormat::Csv => write_trace_csv(&result.trace),
    }
}

/// Per-iteration trace in CSV form, one row per iteration.
pub fn write_trace_csv(trace: &[ProgressRecord]) -> String {
    let mut out = String::from("iter,eps_p,eps_d,objective,rho\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iter, r.eps_p, r.eps_d, r.objective, r.rho
        ));
    }
    out
}
