//! Convergence traces, sweeps, timing and oracle runs.
//!
//! Output files (all CSV with a header row):
//!
//! - `trace_<point>_seed<S>.csv`: one row per outer iteration, see
//!   `tris_isac::admm::ConvergenceTrace::header`.
//! - `links_<point>_seed<S>.csv`: `k,m,established` link map.
//! - `state_<point>_seed<S>.json`: [`StateDump`] of the returned design,
//!   readable by the `check` subcommand.
//! - `sweep.csv`: [`SweepRow`] per (point, seed); `sweep_summary.csv`:
//!   [`SummaryRow`] per point; `sweep.gp`: gnuplot script for the summary.
//! - `timing.csv`: [`TimingRow`] per point; `timing_slopes.csv`: log-log
//!   slope of per-iteration time per dimension.
//! - `oracle_report.json`: oracle suites under both update rule sets.
//!
//! `<point>` is `n<N>`, `pt<P_t>` or `base`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tris_isac::admm::{solve, Solution, UpdateRules};
use tris_isac::metrics::{check_feasibility, summarize, ConstraintReport, MetricSummary, PrimalState};
use tris_isac::oracle::{default_suite, run_suite, SuiteReport};
use tris_isac::scenario::Scenario;

use crate::config::{Axis, ExperimentConfig};
use crate::BenchError;

/// One solve at one sweep point.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub axis: Axis,
    pub value: f64,
    pub seed: u64,
    pub solution: Solution,
    pub metrics: MetricSummary,
    pub feasible: bool,
    pub wall_time_s: f64,
}

pub fn point_label(axis: Axis, value: f64) -> String {
    match axis {
        Axis::N => format!("n{value}"),
        Axis::Pt => format!("pt{value}"),
        Axis::None => "base".to_string(),
    }
}

pub fn solve_point(cfg: &ExperimentConfig, axis: Axis, value: f64, seed: u64) -> Result<RunOutcome, BenchError> {
    let scenario = cfg.scenario_at(axis, value);
    let problem = scenario.problem(seed)?;
    let start = Instant::now();
    let solution = solve(&problem, &cfg.solver)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let metrics = summarize(&problem, &solution.state);
    let feasible = check_feasibility(&problem, &solution.state).all_satisfied();
    Ok(RunOutcome {
        axis,
        value,
        seed,
        solution,
        metrics,
        feasible,
        wall_time_s,
    })
}

/// Runs every (point, seed) pair in parallel; results come back sorted by
/// point order, then seed.
pub fn solve_all(cfg: &ExperimentConfig) -> Result<Vec<RunOutcome>, BenchError> {
    let jobs: Vec<(usize, Axis, f64, u64)> = cfg
        .points()
        .into_iter()
        .enumerate()
        .flat_map(|(i, (a, v))| cfg.seeds.iter().map(move |&s| (i, a, v, s)))
        .collect();
    let mut out: Vec<(usize, RunOutcome)> = jobs
        .into_par_iter()
        .map(|(i, a, v, s)| solve_point(cfg, a, v, s).map(|r| (i, r)))
        .collect::<Result<_, _>>()?;
    out.sort_by_key(|(i, r)| (*i, r.seed));
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

/// Design plus everything needed to rebuild its channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub scenario: Scenario,
    pub seed: u64,
    pub state: PrimalState,
}

fn write(path: &Path, contents: &str) -> Result<(), BenchError> {
    fs::write(path, contents).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn ensure_dir(dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes the trace, link map and state dump of every run; returns the
/// trace paths.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<(Vec<RunOutcome>, Vec<PathBuf>), BenchError> {
    ensure_dir(&cfg.output_dir)?;
    let runs = solve_all(cfg)?;
    let mut traces = Vec::new();
    for r in &runs {
        let stem = format!("{}_seed{}", point_label(r.axis, r.value), r.seed);
        let trace = cfg.output_dir.join(format!("trace_{stem}.csv"));
        write(&trace, &r.solution.trace.to_csv())?;
        write(
            &cfg.output_dir.join(format!("links_{stem}.csv")),
            &r.solution.schedule.to_csv(),
        )?;
        let dump = StateDump {
            scenario: cfg.scenario_at(r.axis, r.value),
            seed: r.seed,
            state: r.solution.state.clone(),
        };
        write(
            &cfg.output_dir.join(format!("state_{stem}.json")),
            &serde_json::to_string_pretty(&dump)?,
        )?;
        traces.push(trace);
    }
    Ok((runs, traces))
}

/// Trace CSV of a single run, without touching the filesystem.
pub fn trace_csv(cfg: &ExperimentConfig, axis: Axis, value: f64, seed: u64) -> Result<String, BenchError> {
    Ok(solve_point(cfg, axis, value, seed)?.solution.trace.to_csv())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub seed: u64,
    /// Sum of CUE private rates and DUE rates, bits/s/Hz.
    pub sum_rate: f64,
    pub max_min_rmi: f64,
    pub link_count: usize,
    pub iterations: usize,
    pub converged: bool,
    pub feasible: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis: String,
    pub value: f64,
    pub seeds: usize,
    pub sum_rate: f64,
    pub max_min_rmi: f64,
    pub link_count: f64,
    pub converged: usize,
    pub feasible: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
}

impl SweepTable {
    pub fn from_runs(runs: &[RunOutcome]) -> Self {
        let rows: Vec<SweepRow> = runs
            .iter()
            .map(|r| SweepRow {
                axis: r.axis.to_string(),
                value: r.value,
                seed: r.seed,
                sum_rate: r.metrics.sum_rate,
                max_min_rmi: r.metrics.objective,
                link_count: r.metrics.link_count,
                iterations: r.solution.iterations,
                converged: r.solution.converged,
                feasible: r.feasible,
                wall_time_s: r.wall_time_s,
            })
            .collect();
        let mut summary: Vec<SummaryRow> = Vec::new();
        for row in &rows {
            let fresh = summary
                .last()
                .is_none_or(|s| s.axis != row.axis || s.value != row.value);
            if fresh {
                summary.push(SummaryRow {
                    axis: row.axis.clone(),
                    value: row.value,
                    seeds: 0,
                    sum_rate: 0.0,
                    max_min_rmi: 0.0,
                    link_count: 0.0,
                    converged: 0,
                    feasible: 0,
                    wall_time_s: 0.0,
                });
            }
            let s = summary.last_mut().expect("pushed above");
            s.seeds += 1;
            s.sum_rate += row.sum_rate;
            s.max_min_rmi += row.max_min_rmi;
            s.link_count += row.link_count as f64;
            s.converged += usize::from(row.converged);
            s.feasible += usize::from(row.feasible);
            s.wall_time_s += row.wall_time_s;
        }
        for s in &mut summary {
            let k = s.seeds as f64;
            s.sum_rate /= k;
            s.max_min_rmi /= k;
            s.link_count /= k;
            s.wall_time_s /= k;
        }
        Self { rows, summary }
    }
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Output(e.to_string()))
}

fn gnuplot_script(axis: Axis) -> String {
    let xlabel = match axis {
        Axis::N => "Number of TRIS elements N",
        Axis::Pt => "Per-element power P_t (W)",
        Axis::None => "Point",
    };
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel '{xlabel}'\n\
         set terminal pngcairo size 1200,400\n\
         set output 'sweep.png'\n\
         set multiplot layout 1,3\n\
         set ylabel 'Max-min RMI (bits)'\n\
         plot 'sweep_summary.csv' using 2:5 with linespoints\n\
         set ylabel 'Sum-rate (bits/s/Hz)'\n\
         plot 'sweep_summary.csv' using 2:4 with linespoints\n\
         set ylabel 'Established links'\n\
         plot 'sweep_summary.csv' using 2:6 with linespoints\n\
         unset multiplot\n"
    )
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepTable, BenchError> {
    if cfg.sweep.axis == Axis::None {
        return Err(BenchError::Invalid {
            field: "sweep.axis".into(),
            reason: "a sweep needs an axis (n or pt)".into(),
        });
    }
    ensure_dir(&cfg.output_dir)?;
    let table = SweepTable::from_runs(&solve_all(cfg)?);
    write(&cfg.output_dir.join("sweep.csv"), &csv_string(&table.rows)?)?;
    write(&cfg.output_dir.join("sweep_summary.csv"), &csv_string(&table.summary)?)?;
    write(&cfg.output_dir.join("sweep.gp"), &gnuplot_script(cfg.sweep.axis))?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    /// `n` or `m`.
    pub dimension: String,
    pub value: usize,
    pub repeats: usize,
    pub iterations: f64,
    pub total_ms_mean: f64,
    pub total_ms_std: f64,
    pub per_iter_ms_mean: f64,
    pub per_iter_ms_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub dimension: String,
    /// Least-squares slope of `ln(per-iteration time)` against `ln(value)`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
    pub slopes: Vec<SlopeRow>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Times one scenario: an untimed warmup, then `repeats` timed solves.
pub fn time_scenario(
    scenario: &Scenario,
    cfg: &ExperimentConfig,
    seed: u64,
    repeats: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>), BenchError> {
    let problem = scenario.problem(seed)?;
    solve(&problem, &cfg.solver)?;
    let mut totals = Vec::with_capacity(repeats);
    let mut per_iter = Vec::with_capacity(repeats);
    let mut iters = 0;
    for _ in 0..repeats {
        let start = Instant::now();
        let sol = solve(&problem, &cfg.solver)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        iters = sol.iterations;
        totals.push(ms);
        per_iter.push(ms / sol.iterations.max(1) as f64);
    }
    Ok((iters as f64, totals, per_iter))
}

/// Sequential timing study over `N` and over `M`.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingTable, BenchError> {
    ensure_dir(&cfg.output_dir)?;
    let seed = cfg.seeds[0];
    let repeats = cfg.timing.repeats;
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for dimension in ["n", "m"] {
        let values = if dimension == "n" {
            &cfg.timing.n_values
        } else {
            &cfg.timing.m_values
        };
        let mut pts = Vec::new();
        for &v in values {
            let mut sc = cfg.scenario.clone();
            if dimension == "n" {
                sc = sc.with_elements(v)?;
            } else {
                sc.geometry.due_positions.truncate(v);
            }
            let (iterations, totals, per_iter) = time_scenario(&sc, cfg, seed, repeats)?;
            let (total_ms_mean, total_ms_std) = mean_std(&totals);
            let (per_iter_ms_mean, per_iter_ms_std) = mean_std(&per_iter);
            pts.push((v as f64, per_iter_ms_mean));
            rows.push(TimingRow {
                dimension: dimension.to_string(),
                value: v,
                repeats,
                iterations,
                total_ms_mean,
                total_ms_std,
                per_iter_ms_mean,
                per_iter_ms_std,
            });
        }
        if pts.len() >= 2 {
            slopes.push(SlopeRow {
                dimension: dimension.to_string(),
                slope: log_log_slope(&pts),
            });
        }
    }
    let table = TimingTable { rows, slopes };
    write(&cfg.output_dir.join("timing.csv"), &csv_string(&table.rows)?)?;
    write(&cfg.output_dir.join("timing_slopes.csv"), &csv_string(&table.slopes)?)?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRun {
    pub corrected: SuiteReport,
    pub printed: SuiteReport,
}

/// Runs the oracle suite under both rule sets and writes the JSON report.
/// Only the corrected suite decides success.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<OracleRun, BenchError> {
    ensure_dir(&cfg.output_dir)?;
    let (corrected, printed) = rayon::join(
        || run_suite(&default_suite(UpdateRules::Corrected)),
        || run_suite(&default_suite(UpdateRules::Printed)),
    );
    let run = OracleRun { corrected, printed };
    write(
        &cfg.output_dir.join("oracle_report.json"),
        &serde_json::to_string_pretty(&run)?,
    )?;
    Ok(run)
}

/// Feasibility of a dumped design.
pub fn run_check(path: &Path) -> Result<ConstraintReport, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let dump: StateDump = serde_json::from_str(&text).map_err(|e| BenchError::Parse(format!("{}: {e}", path.display())))?;
    let problem = dump.scenario.problem(dump.seed)?;
    dump.state.check_dims(&problem.channels)?;
    Ok(check_feasibility(&problem, &dump.state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [16.0, 36.0, 64.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.7))).collect();
        assert!((log_log_slope(&pts) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn summary_means_match_rows() {
        let mut cfg = ExperimentConfig::from_toml_str("seeds = [1, 2]\n[sweep]\naxis = \"n\"\nvalues = [4, 9]\n").unwrap();
        cfg.solver.max_iters = 15;
        let table = SweepTable::from_runs(&solve_all(&cfg).unwrap());
        assert_eq!(table.rows.len(), 4);
        assert_eq!(table.summary.len(), 2);
        for s in &table.summary {
            let rows: Vec<&SweepRow> = table.rows.iter().filter(|r| r.value == s.value).collect();
            let mean = rows.iter().map(|r| r.max_min_rmi).sum::<f64>() / rows.len() as f64;
            assert_eq!(s.seeds, 2);
            assert!((s.max_min_rmi - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            let sr = rows.iter().map(|r| r.sum_rate).sum::<f64>() / rows.len() as f64;
            assert!((s.sum_rate - sr).abs() <= 1e-12 * sr.abs().max(1.0));
        }
    }

    #[test]
    fn point_labels() {
        assert_eq!(point_label(Axis::N, 16.0), "n16");
        assert_eq!(point_label(Axis::Pt, 0.5), "pt0.5");
        assert_eq!(point_label(Axis::None, 0.0), "base");
    }
}
