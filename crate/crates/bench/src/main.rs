use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tris_isac_bench::config::{Axis, ExperimentConfig};
use tris_isac_bench::experiments::{point_label, run_check, run_convergence, run_sweep, run_timing, run_verify};
use tris_isac_bench::{load_config, BenchError};

/// Experiments for the transmissive-RIS cooperative ISAC solver.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// TOML experiment config; omitted keys take the reference-scenario defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sweep axis: `n` (element count) or `pt` (per-element power, W).
    #[arg(long, global = true, value_parser = parse_axis)]
    axis: Option<Axis>,
    /// Comma-separated sweep values, e.g. `16,36,64`.
    #[arg(long, global = true, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One convergence trace per (point, seed).
    Converge,
    /// Sum-rate, max-min RMI and link count per (point, seed), plus means.
    Sweep,
    /// Wall time against N and M.
    Timing,
    /// Stationarity checks of every closed-form update.
    Verify,
    /// Feasibility report of a dumped state (`state_*.json`).
    Check { state: PathBuf },
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    Axis::parse(s).ok_or_else(|| format!("unknown axis `{s}` (expected n or pt)"))
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(axis) = cli.axis {
        cfg.sweep.axis = axis;
    }
    if let Some(values) = &cli.values {
        cfg.sweep.values = values.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, BenchError> {
    if let Command::Check { state } = &cli.command {
        let report = run_check(state)?;
        for v in report.violations() {
            println!("violated {} {:?} slack {:.6e}", v.constraint_id, v.indices, v.slack);
        }
        if report.all_satisfied() {
            println!("all {} constraints satisfied", report.entries.len());
            return Ok(ExitCode::SUCCESS);
        }
        return Ok(ExitCode::from(2));
    }

    let cfg = build_config(cli)?;
    match cli.command {
        Command::Converge => {
            let (runs, traces) = run_convergence(&cfg)?;
            for (r, path) in runs.iter().zip(&traces) {
                println!(
                    "{} seed {}: objective {:.4} bits, {} iterations, converged {}, feasible {} -> {}",
                    point_label(r.axis, r.value),
                    r.seed,
                    r.metrics.objective,
                    r.solution.iterations,
                    r.solution.converged,
                    r.feasible,
                    path.display()
                );
            }
        }
        Command::Sweep => {
            let table = run_sweep(&cfg)?;
            println!("axis,value,seeds,sum_rate,max_min_rmi,link_count,converged,feasible");
            for s in &table.summary {
                println!(
                    "{},{},{},{:.4},{:.4},{:.2},{},{}",
                    s.axis, s.value, s.seeds, s.sum_rate, s.max_min_rmi, s.link_count, s.converged, s.feasible
                );
            }
        }
        Command::Timing => {
            let table = run_timing(&cfg)?;
            for r in &table.rows {
                println!(
                    "{}={:<3} iters {:>5.1}  total {:>9.2} ms (sd {:.2})  per-iteration {:>7.3} ms (sd {:.3})",
                    r.dimension,
                    r.value,
                    r.iterations,
                    r.total_ms_mean,
                    r.total_ms_std,
                    r.per_iter_ms_mean,
                    r.per_iter_ms_std
                );
            }
            for s in &table.slopes {
                println!("log-log slope in {}: {:.3}", s.dimension, s.slope);
            }
        }
        Command::Verify => {
            let run = run_verify(&cfg)?;
            println!("corrected update rules:\n{}", run.corrected.summary());
            println!("printed update rules:\n{}", run.printed.summary());
            if !run.corrected.all_passed() {
                for f in run.corrected.failures() {
                    eprintln!("FAIL {} seed {}: {}", f.case.update, f.case.seed, f.notes.join("; "));
                }
                return Ok(ExitCode::from(3));
            }
        }
        Command::Check { .. } => unreachable!("handled above"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
