//! Numerical verification of the closed-form updates.
//!
//! Each update is checked against its own Lagrangian, rebuilt here as a
//! plain real-valued function of real coordinates (complex entries split into
//! real and imaginary parts). The check evaluates a central-difference
//! gradient at the closed-form point and, where the variable lives in a box,
//! the projected gradient. A projected-gradient reference minimizer gives a
//! second opinion on the same objective.
//!
//! The Lagrangians are written with index masks and explicit loops over the
//! stacked vectors rather than through the solver's problem structs, so a
//! slip in either place shows up as a mismatch.

mod cases;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::admm::UpdateRules;

/// Central-difference gradient with step `h`.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let x0 = probe[i];
            probe[i] = x0 + h;
            let up = f(&probe);
            probe[i] = x0 - h;
            let down = f(&probe);
            probe[i] = x0;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Feasible set of a verification problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Free,
    /// Coordinate-wise bounds; use infinities for open sides.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    fn project(&self, x: &mut [f64]) {
        if let Region::Box { lo, hi } = self {
            for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
                *v = v.clamp(*l, *h);
            }
        }
    }

    /// Gradient with the components pushing out of an active bound removed.
    pub fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        match self {
            Region::Free => g.to_vec(),
            Region::Box { lo, hi } => x
                .iter()
                .zip(g)
                .zip(lo.iter().zip(hi))
                .map(|((&xi, &gi), (&l, &h))| {
                    let tol = 1e-12 * (1.0 + xi.abs());
                    if xi <= l + tol {
                        gi.min(0.0)
                    } else if xi >= h - tol {
                        gi.max(0.0)
                    } else {
                        gi
                    }
                })
                .collect(),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxResult {
    pub point: Vec<f64>,
    pub iterations: usize,
    /// Norm of the gradient mapping at `point`.
    pub projected_grad_norm: f64,
    /// False when the iteration cap was hit before the tolerance.
    pub certified: bool,
}

pub const PROX_MAX_ITERS: usize = 10_000;
const PROX_TOL: f64 = 1e-8;
const PROX_FD_STEP: f64 = 1e-4;

/// Gradient mapping `x - P(x - g)`.
fn mapping_norm(region: &Region, x: &[f64], g: &[f64]) -> f64 {
    let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    region.project(&mut y);
    norm(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>())
}

/// Reference minimizer: projected gradient descent, gradients by central
/// differences. The step is backtracked until the local Lipschitz estimate
/// `|g(y) - g(x)| / |y - x|` is at most `1 / step`; a function-value test
/// cannot resolve the last digits once `f` is large.
pub fn numeric_prox(objective: impl Fn(&[f64]) -> f64, region: &Region, start: &[f64]) -> ProxResult {
    let grad = |x: &[f64]| finite_diff_grad(&objective, x, PROX_FD_STEP);
    let mut x = start.to_vec();
    region.project(&mut x);
    let mut g = grad(&x);
    let mut alpha = 1.0;
    for it in 0..PROX_MAX_ITERS {
        let mapping = mapping_norm(region, &x, &g);
        if mapping <= PROX_TOL * (1.0 + norm(&x)) {
            return ProxResult {
                point: x,
                iterations: it,
                projected_grad_norm: mapping,
                certified: true,
            };
        }
        loop {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
            region.project(&mut y);
            let step = norm(&y.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
            let gy = grad(&y);
            let change = norm(&gy.iter().zip(&g).map(|(a, b)| a - b).collect::<Vec<_>>());
            if alpha * change <= step || alpha < 1e-14 {
                x = y;
                g = gy;
                break;
            }
            alpha *= 0.5;
        }
        alpha = (alpha * 2.0).min(1e6);
    }
    let mapping = mapping_norm(region, &x, &g);
    ProxResult {
        point: x,
        iterations: PROX_MAX_ITERS,
        projected_grad_norm: mapping,
        certified: false,
    }
}

/// The closed-form updates, named by the variable they produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateId {
    /// Epigraph variable `gamma`.
    Gamma,
    /// BS precoder master `W`.
    WMaster,
    /// CUE precoder master `F_k`.
    FMaster,
    /// Common-rate allocation master `c_k`.
    CMaster,
    /// Scheduling master `p_k`.
    PMaster,
    /// Epigraph copy `eta_u`.
    Eta,
    /// BS row-power copy.
    BsRowPower,
    /// CUE row-power copy of `F_k`.
    CueRowPower,
    /// BS precoder copy with the CUE rate constraints.
    RatePrecoder,
    /// Forwarding-precoder copy with the DUE SINR and link-nulling constraints.
    DuePrecoder,
    /// Scheduling copy with the DUE SINR, link-nulling and split constraints.
    DueSchedule,
    /// Allocation copy with the common-rate split constraint.
    SplitAlloc,
    /// Allocation copy with the DUE common-rate constraint.
    DueAlloc,
    /// Scheduling copy with the split constraint and the unit box.
    SplitSchedule,
    /// Scheduling copy with the CUE row-power constraint.
    SchedulePower,
    /// Scheduling copy with the sensing constraint.
    SensingSchedule,
    /// Precoder copy with the sensing constraint.
    SensingPrecoder,
}

impl UpdateId {
    pub const ALL: [UpdateId; 17] = [
        UpdateId::Gamma,
        UpdateId::WMaster,
        UpdateId::FMaster,
        UpdateId::CMaster,
        UpdateId::PMaster,
        UpdateId::Eta,
        UpdateId::BsRowPower,
        UpdateId::CueRowPower,
        UpdateId::RatePrecoder,
        UpdateId::DuePrecoder,
        UpdateId::DueSchedule,
        UpdateId::SplitAlloc,
        UpdateId::DueAlloc,
        UpdateId::SplitSchedule,
        UpdateId::SchedulePower,
        UpdateId::SensingSchedule,
        UpdateId::SensingPrecoder,
    ];

    /// Updates whose Lagrangian contains a linearized `|.|^2` term.
    pub fn has_sca_term(self) -> bool {
        matches!(
            self,
            UpdateId::RatePrecoder
                | UpdateId::DuePrecoder
                | UpdateId::DueSchedule
                | UpdateId::SensingSchedule
                | UpdateId::SensingPrecoder
        )
    }

    pub fn default_tolerance(self) -> f64 {
        if self.has_sca_term() {
            1e-5
        } else {
            1e-6
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UpdateId::Gamma => "gamma",
            UpdateId::WMaster => "w_master",
            UpdateId::FMaster => "f_master",
            UpdateId::CMaster => "c_master",
            UpdateId::PMaster => "p_master",
            UpdateId::Eta => "eta",
            UpdateId::BsRowPower => "bs_row_power",
            UpdateId::CueRowPower => "cue_row_power",
            UpdateId::RatePrecoder => "rate_precoder",
            UpdateId::DuePrecoder => "due_precoder",
            UpdateId::DueSchedule => "due_schedule",
            UpdateId::SplitAlloc => "split_alloc",
            UpdateId::DueAlloc => "due_alloc",
            UpdateId::SplitSchedule => "split_schedule",
            UpdateId::SchedulePower => "schedule_power",
            UpdateId::SensingSchedule => "sensing_schedule",
            UpdateId::SensingPrecoder => "sensing_precoder",
        }
    }
}

impl fmt::Display for UpdateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One random instance of one update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationCase {
    pub update: UpdateId,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub rules: UpdateRules,
}

impl VerificationCase {
    pub fn new(update: UpdateId, n: usize, k: usize, m: usize, seed: u64) -> Self {
        Self {
            update,
            n,
            k,
            m,
            seed,
            tolerance: update.default_tolerance(),
            rules: UpdateRules::Corrected,
        }
    }

    pub fn with_rules(mut self, rules: UpdateRules) -> Self {
        self.rules = rules;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: VerificationCase,
    pub pass: bool,
    /// Finite-difference (projected) gradient norm at the closed-form point.
    pub grad_norm: f64,
    /// `tolerance * (1 + ||point||)`.
    pub threshold: f64,
    /// Distance to the reference minimizer, when it certified.
    pub prox_distance: Option<f64>,
    pub notes: Vec<String>,
}

const CHECK_FD_STEP: f64 = 1e-5;

fn check(case: &VerificationCase, perturb: Option<f64>) -> CaseReport {
    let inst = cases::build(case);
    let mut point = inst.point.clone();
    let mut notes = Vec::new();
    if let Some(d) = perturb {
        let i = 0;
        let out_of_box = match &inst.region {
            Region::Box { hi, .. } => point[i] + d > hi[i],
            Region::Free => false,
        };
        point[i] += if out_of_box { -d } else { d };
        notes.push(format!("coordinate {i} perturbed by {d:e}"));
    }
    let f = |x: &[f64]| (inst.objective)(x);
    let g = finite_diff_grad(f, &point, CHECK_FD_STEP);
    let pg = inst.region.projected_gradient(&point, &g);
    let grad_norm = norm(&pg);
    let threshold = case.tolerance * (1.0 + norm(&point));
    let mut pass = grad_norm <= threshold;
    if let Some(reason) = &inst.infeasible {
        notes.push(reason.clone());
        pass = false;
    }

    let prox = numeric_prox(f, &inst.region, &vec![0.0; point.len()]);
    let prox_distance = if prox.certified {
        let d = norm(&prox.point.iter().zip(&point).map(|(a, b)| a - b).collect::<Vec<_>>());
        if d > 1e-5 * (1.0 + norm(&point)) {
            notes.push(format!("reference minimizer is {d:.3e} away"));
            pass = false;
        }
        Some(d)
    } else {
        notes.push(format!("reference minimizer hit the {PROX_MAX_ITERS}-iteration cap"));
        None
    };
    if !pass && grad_norm > threshold {
        notes.push(format!("gradient norm {grad_norm:.3e} exceeds {threshold:.3e}"));
    }
    CaseReport {
        case: case.clone(),
        pass,
        grad_norm,
        threshold,
        prox_distance,
        notes,
    }
}

/// Stationarity of the closed-form point for `case`.
pub fn stationarity_check(case: &VerificationCase) -> CaseReport {
    check(case, None)
}

/// Same check with the closed-form point moved by `delta` along one
/// coordinate; must fail.
pub fn perturbed_check(case: &VerificationCase, delta: f64) -> CaseReport {
    check(case, Some(delta))
}

/// Dimensions the default suite cycles through (`N <= 4`, `K <= 2`, `M <= 2`).
pub const SUITE_DIMS: [(usize, usize, usize); 5] = [(2, 1, 2), (3, 2, 2), (4, 2, 2), (4, 1, 1), (2, 2, 1)];

/// Five seeded instances of every update under `rules`.
pub fn default_suite(rules: UpdateRules) -> Vec<VerificationCase> {
    let mut out = Vec::new();
    for id in UpdateId::ALL {
        for (s, &(n, k, m)) in SUITE_DIMS.iter().enumerate() {
            out.push(VerificationCase::new(id, n, k, m, 1000 + s as u64).with_rules(rules));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.reports.iter().filter(|r| !r.pass)
    }

    /// Updates with at least one failing case.
    pub fn failing_updates(&self) -> Vec<UpdateId> {
        let mut ids: Vec<UpdateId> = self.failures().map(|r| r.case.update).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// One line per update: `name  passed/total  worst grad/threshold`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for id in UpdateId::ALL {
            let rs: Vec<&CaseReport> = self.reports.iter().filter(|r| r.case.update == id).collect();
            if rs.is_empty() {
                continue;
            }
            let passed = rs.iter().filter(|r| r.pass).count();
            let worst = rs.iter().map(|r| r.grad_norm / r.threshold).fold(0.0, f64::max);
            out.push_str(&format!(
                "{:<18} {}/{}  worst grad/threshold {:.2e}\n",
                id.name(),
                passed,
                rs.len(),
                worst
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

pub fn run_suite(cases: &[VerificationCase]) -> SuiteReport {
    SuiteReport {
        reports: cases.iter().map(stationarity_check).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_squared_norm() {
        let x = [1.0, -2.0, 0.5];
        let g = finite_diff_grad(|v| v.iter().map(|a| a * a).sum(), &x, 1e-4);
        for (gi, xi) in g.iter().zip(x) {
            assert!((gi - 2.0 * xi).abs() < 1e-9);
        }
    }

    #[test]
    fn central_difference_error_is_second_order() {
        let f = |v: &[f64]| v[0].sin() * v[0].exp();
        let x = [0.7];
        let exact = 0.7f64.exp() * (0.7f64.sin() + 0.7f64.cos());
        let e1 = (finite_diff_grad(f, &x, 1e-2)[0] - exact).abs();
        let e2 = (finite_diff_grad(f, &x, 5e-3)[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn prox_of_distance_returns_target() {
        let v = [0.3, -1.2, 2.0];
        let r = numeric_prox(|x| x.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum(), &Region::Free, &[0.0; 3]);
        assert!(r.certified);
        for (a, b) in r.point.iter().zip(v) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn prox_respects_box() {
        let region = Region::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        let r = numeric_prox(|x| (x[0] + 1.0).powi(2) + (x[1] - 3.0).powi(2), &region, &[0.5, 0.5]);
        assert!(r.certified);
        assert!(r.point[0].abs() < 1e-9 && (r.point[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prox_matches_gamma_example() {
        let (rho, eta, xi) = (2.0, [1.0, 1.0], [0.0, 0.0]);
        let f = |g: &[f64]| -g[0] + rho / 2.0 * eta.iter().zip(xi).map(|(e, x)| (e - g[0] + x).powi(2)).sum::<f64>();
        let r = numeric_prox(f, &Region::Free, &[0.0]);
        assert!(r.certified);
        assert!((r.point[0] - 1.25).abs() < 1e-8);
    }

    #[test]
    fn row_power_closed_form_matches_prox() {
        let report = stationarity_check(&VerificationCase::new(UpdateId::BsRowPower, 4, 2, 2, 7));
        assert!(report.pass, "{report:?}");
        assert!(report.prox_distance.unwrap() < 1e-6);
    }

    #[test]
    fn w_master_passes() {
        for seed in 0..5 {
            let r = stationarity_check(&VerificationCase::new(UpdateId::WMaster, 3, 2, 2, seed));
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn perturbed_point_fails() {
        for id in UpdateId::ALL {
            let case = VerificationCase::new(id, 3, 2, 2, 11);
            assert!(stationarity_check(&case).pass, "{id}");
            let r = perturbed_check(&case, 1e-3);
            assert!(!r.pass, "{id} passed after perturbation");
        }
    }

    #[test]
    fn default_suite_covers_every_update() {
        let suite = default_suite(UpdateRules::Corrected);
        for id in UpdateId::ALL {
            assert!(suite.iter().filter(|c| c.update == id).count() >= 5);
        }
        assert!(suite.iter().all(|c| c.n <= 4 && c.k <= 2 && c.m <= 2));
    }

    #[test]
    fn corrected_suite_passes() {
        let report = run_suite(&default_suite(UpdateRules::Corrected));
        assert!(report.all_passed(), "{}", report.summary());
    }

    #[test]
    fn printed_suite_flags_the_known_updates() {
        let report = run_suite(&default_suite(UpdateRules::Printed));
        let failing = report.failing_updates();
        for id in [
            UpdateId::CMaster,
            UpdateId::PMaster,
            UpdateId::CueRowPower,
            UpdateId::SplitAlloc,
            UpdateId::DueAlloc,
            UpdateId::SplitSchedule,
        ] {
            assert!(failing.contains(&id), "{id} not flagged: {}", report.summary());
        }
        assert!(!failing.contains(&UpdateId::FMaster));
        assert!(!failing.contains(&UpdateId::WMaster));
    }
}
