//! Consensus ADMM for the max-min RMI design.
//!
//! Every coupled quantity of the problem gets private copies: one copy of
//! `W` per CUE (rate constraints) and per element row (power), copies of each
//! `F_k` per element row, per DUE and per sensing receiver, and so on. A
//! round updates the masters as averages of `copy + error`, then every copy
//! in closed form from the masters and the round-start copies, then the
//! error terms. Because no copy update reads another copy's new value, the
//! result does not depend on the order in which copies are visited.
//!
//! The closed forms live in [`updates`]; [`crate::oracle`] checks each of
//! them against a finite-difference gradient of its Lagrangian.

pub mod state;
pub mod trace;
pub mod updates;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{check_feasibility, objective, PrimalState, Problem, SlackUnit};
use crate::recovery::{recover_state, ScheduleMatrix, DEFAULT_THRESHOLD};
use state::Engine;
pub use state::ResidualReport;
pub use trace::{ConvergenceTrace, TraceRow};
pub use updates::UpdateRules;

/// Multiplier families, each with its own step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `eta_u <= is_u` on the epigraph copies.
    Sensing,
    BsPower,
    CuePowerPrecoder,
    CuePowerSchedule,
    PrivateRate,
    CommonRate,
    DueSinrPrecoder,
    DueSinrSchedule,
    NullingPrecoder,
    NullingSchedule,
    SplitSchedule,
    DueAlloc,
    CommonSplitAlloc,
    CommonSplitSchedule,
    BoxLower,
    BoxUpper,
    SensingSchedule,
    SensingPrecoder,
}

impl Family {
    pub const ALL: [Family; 18] = [
        Family::Sensing,
        Family::BsPower,
        Family::CuePowerPrecoder,
        Family::CuePowerSchedule,
        Family::PrivateRate,
        Family::CommonRate,
        Family::DueSinrPrecoder,
        Family::DueSinrSchedule,
        Family::NullingPrecoder,
        Family::NullingSchedule,
        Family::SplitSchedule,
        Family::DueAlloc,
        Family::CommonSplitAlloc,
        Family::CommonSplitSchedule,
        Family::BoxLower,
        Family::BoxUpper,
        Family::SensingSchedule,
        Family::SensingPrecoder,
    ];
}

/// Diminishing step `base / (1 + decay * r)`, overridable per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepSizes {
    pub base: f64,
    pub decay: f64,
    pub overrides: BTreeMap<Family, f64>,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            base: 1.0,
            decay: 1.0,
            overrides: BTreeMap::new(),
        }
    }
}

impl StepSizes {
    pub fn step(&self, family: Family, iteration: usize) -> f64 {
        let base = self.overrides.get(&family).copied().unwrap_or(self.base);
        base / (1.0 + self.decay * iteration as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Penalty weight of the epigraph consensus term.
    pub rho: f64,
    pub steps: StepSizes,
    pub max_iters: usize,
    /// Rounds always executed before the stopping test is consulted.
    pub min_iters: usize,
    /// Stop when the fractional objective change falls below this.
    pub epsilon: f64,
    /// ... and the largest relative consensus residual is at most this.
    pub consensus_tol: f64,
    /// Recovery threshold for the scheduling blocks.
    pub threshold: f64,
    pub rules: UpdateRules,
    /// Upper bound on `multiplier * channel gain` for the rate, SINR and
    /// sensing constraints; below 1 every copy subproblem is strongly convex.
    pub dual_cap: f64,
    /// Keep every inequality and equality multiplier at zero.
    pub freeze_multipliers: bool,
    /// Fill the `wall_time_ms` trace column (makes traces run-dependent).
    pub record_wall_time: bool,
    /// Scale any row exceeding the per-element cap back onto it after recovery.
    pub project_power: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 10.0,
            steps: StepSizes::default(),
            max_iters: 300,
            min_iters: 10,
            epsilon: 1e-3,
            consensus_tol: 1e-2,
            threshold: DEFAULT_THRESHOLD,
            rules: UpdateRules::Corrected,
            dual_cap: 0.5,
            freeze_multipliers: false,
            record_wall_time: false,
            project_power: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::invalid("solver.rho", "must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("solver.epsilon", "must be positive"));
        }
        if !(self.consensus_tol > 0.0) {
            return Err(Error::invalid("solver.consensus_tol", "must be positive"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("solver.threshold", "must lie in (0, 1)"));
        }
        if !(self.dual_cap > 0.0) || !self.dual_cap.is_finite() {
            return Err(Error::invalid("solver.dual_cap", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("solver.max_iters", "must be at least 1"));
        }
        if !(self.steps.base >= 0.0) || !(self.steps.decay >= 0.0) {
            return Err(Error::invalid("solver.steps", "base and decay must be nonnegative"));
        }
        if self.steps.overrides.values().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("solver.steps.overrides", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Result of a solve.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Final design in physical units with binary scheduling.
    pub state: PrimalState,
    pub schedule: ScheduleMatrix,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    pub iterations: usize,
    /// Residuals of the returned iterate.
    pub residuals: ResidualReport,
    /// Smallest inequality multiplier seen over all rounds.
    pub min_multiplier: f64,
}

fn fractional_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / prev.abs().max(1e-12)
}

/// Scales rows of `W` and of the scheduled `F_k` back onto the cap.
pub fn project_row_power(state: &mut PrimalState, p_t: f64) {
    let n = state.num_elements();
    for row in 0..n {
        let pw: f64 = (0..state.w.cols()).map(|c| state.w.get(row, c).norm_sqr()).sum();
        if pw > p_t {
            let s = (p_t / pw).sqrt();
            for c in 0..state.w.cols() {
                let v = state.w.get(row, c) * s;
                state.w.set(row, c, v);
            }
        }
    }
    for (f, p) in state.f.iter_mut().zip(&state.p) {
        for row in 0..n {
            let pw: f64 = (0..f.cols())
                .map(|c| (f.get(row, c) * p[c * n + row]).norm_sqr())
                .sum();
            if pw > p_t {
                let s = (p_t / pw).sqrt();
                for c in 0..f.cols() {
                    let v = f.get(row, c) * s;
                    f.set(row, c, v);
                }
            }
        }
    }
}

/// Trial recovery of an exported state.
struct Trial {
    state: PrimalState,
    schedule: ScheduleMatrix,
    objective: f64,
    min_rate_slack: f64,
    feasible: bool,
}

fn evaluate(problem: &Problem, exported: &PrimalState, cfg: &SolverConfig) -> Result<Trial> {
    let mut state = exported.clone();
    let schedule = recover_state(&mut state, cfg.threshold)?;
    if cfg.project_power {
        project_row_power(&mut state, problem.thresholds.p_t);
    }
    let objective = objective(problem, &state);
    let report = check_feasibility(problem, &state);
    Ok(Trial {
        min_rate_slack: report.min_slack_by_unit(SlackUnit::Rate).unwrap_or(0.0),
        feasible: report.all_satisfied(),
        objective,
        state,
        schedule,
    })
}

/// Runs the consensus ADMM until the objective settles and the copies agree,
/// or until `max_iters` rounds.
pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    problem.thresholds.validate()?;
    solve_inner(problem, cfg, |_| {})
}

/// [`solve`] with a hook called after every round with the internal
/// multiplier minimum, used by tests to watch invariants.
pub(crate) fn solve_inner(
    problem: &Problem,
    cfg: &SolverConfig,
    mut hook: impl FnMut(&Engine),
) -> Result<Solution> {
    let start = Instant::now();
    let mut engine = Engine::init(problem);
    let mut trace = ConvergenceTrace::default();
    let mut prev_obj: Option<f64> = None;
    // Feasible iterates beat infeasible ones, then higher objective wins.
    let mut best: Option<(bool, f64, Trial, ResidualReport)> = None;
    let mut iterations = 0;
    let mut min_multiplier = f64::INFINITY;

    for it in 0..cfg.max_iters {
        let before = engine.masters.clone();
        engine.round(it, cfg);
        hook(&engine);
        min_multiplier = min_multiplier.min(engine.mult.min_inequality());
        let res = engine.residuals(&before);
        if res.families().iter().any(|v| !v.is_finite()) {
            break;
        }
        iterations = it + 1;
        let trial = evaluate(problem, &engine.export(), cfg)?;
        let obj = trial.objective;
        trace.rows.push(TraceRow {
            iteration: iterations,
            objective_bits: obj,
            residuals: res,
            min_rate_slack: trial.min_rate_slack,
            wall_time_ms: cfg
                .record_wall_time
                .then(|| start.elapsed().as_secs_f64() * 1e3),
        });
        let settled = prev_obj.is_some_and(|p| fractional_change(p, obj) < cfg.epsilon);
        prev_obj = Some(obj);
        if iterations >= cfg.min_iters && settled && trial.feasible && res.max() <= cfg.consensus_tol {
            return Ok(Solution {
                state: trial.state,
                schedule: trial.schedule,
                trace,
                converged: true,
                iterations,
                residuals: res,
                min_multiplier,
            });
        }
        let better = match &best {
            None => true,
            Some((f, o, _, _)) => (trial.feasible, obj) > (*f, *o),
        };
        if better {
            best = Some((trial.feasible, obj, trial, res));
        }
    }
    let (state, schedule, residuals) = match best {
        Some((_, _, t, r)) => (t.state, t.schedule, r),
        None => {
            let t = evaluate(problem, &engine.export(), cfg)?;
            (t.state, t.schedule, ResidualReport::default())
        }
    };
    Ok(Solution {
        state,
        schedule,
        trace,
        converged: false,
        iterations,
        residuals,
        min_multiplier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_schedule() {
        let mut s = StepSizes::default();
        assert!((s.step(Family::BsPower, 0) - 1.0).abs() < 1e-15);
        assert!((s.step(Family::BsPower, 9) - 0.1).abs() < 1e-15);
        s.overrides.insert(Family::Sensing, 1.0);
        assert_eq!(s.step(Family::Sensing, 0), 1.0);
    }

    fn tiny_problem(seed: u64) -> Problem {
        crate::scenario::Scenario::default()
            .with_elements(4)
            .unwrap()
            .problem(seed)
            .unwrap()
    }

    #[test]
    fn multipliers_stay_nonnegative() {
        let p = tiny_problem(3);
        let cfg = SolverConfig {
            max_iters: 40,
            ..SolverConfig::default()
        };
        let mut lowest = f64::INFINITY;
        solve_inner(&p, &cfg, |e| lowest = lowest.min(e.mult.min_inequality())).unwrap();
        assert!(lowest >= 0.0, "{lowest}");
    }

    #[test]
    fn frozen_multipliers_stay_zero() {
        let p = tiny_problem(4);
        let cfg = SolverConfig {
            max_iters: 10,
            freeze_multipliers: true,
            ..SolverConfig::default()
        };
        let mut seen = Vec::new();
        solve_inner(&p, &cfg, |e| seen.push(e.mult.clone())).unwrap();
        let zero = state::Multipliers::zeros(4, 3, 5);
        assert!(seen.iter().all(|m| *m == zero));
    }

    #[test]
    fn repeated_solves_match() {
        let p = tiny_problem(5);
        let cfg = SolverConfig {
            max_iters: 15,
            ..SolverConfig::default()
        };
        let a = solve(&p, &cfg).unwrap();
        let b = solve(&p, &cfg).unwrap();
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn returned_state_is_binary_and_within_power() {
        let p = tiny_problem(6);
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        for pk in &sol.state.p {
            assert!(pk.iter().all(|&v| v == 0.0 || v == 1.0));
        }
        let rep = check_feasibility(&p, &sol.state);
        for id in ["bs_power", "cue_power"] {
            assert!(rep.min_slack(id).unwrap() >= -1e-9, "{id}");
        }
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.rho = 0.0;
        assert!(c.validate().is_err());
        let c = SolverConfig {
            threshold: 1.0,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
