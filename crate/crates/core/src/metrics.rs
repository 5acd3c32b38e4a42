//! Communication and sensing metrics, objective, and constraint checking.
//!
//! Every quantity is in physical units: powers in watts, rates in
//! bits/s/Hz. The formulas are written with the index vectors of
//! [`crate::tensorops`] so that they read like their stacked-vector
//! definitions; tests cross-check them against column slicing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::tensorops::{make_index, CMatrix, IndexKind};

/// Power tolerance for feasibility verdicts, in watts.
pub const POWER_TOL: f64 = 1e-6;
/// Rate tolerance for feasibility verdicts, in bits/s/Hz.
pub const RATE_TOL: f64 = 1e-3;

/// Candidate design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalState {
    /// `N x (K+1)`, columns `[w_c, w_1, ..., w_K]`.
    pub w: CMatrix,
    /// One `N x M` forwarding precoder per CUE.
    pub f: Vec<CMatrix>,
    /// Common-rate allocation, one length-`NM` block-constant vector per CUE.
    pub c: Vec<Vec<f64>>,
    /// Scheduling, one length-`NM` block-constant vector per CUE.
    pub p: Vec<Vec<f64>>,
    /// Epigraph variable of the max-min objective.
    pub gamma: f64,
}

impl PrimalState {
    pub fn zeros(n: usize, k: usize, m: usize) -> Self {
        Self {
            w: CMatrix::zeros(n, k + 1),
            f: vec![CMatrix::zeros(n, m); k],
            c: vec![vec![0.0; n * m]; k],
            p: vec![vec![0.0; n * m]; k],
            gamma: 0.0,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.w.rows()
    }

    pub fn num_cues(&self) -> usize {
        self.f.len()
    }

    pub fn num_dues(&self) -> usize {
        self.f.first().map_or(0, CMatrix::cols)
    }

    /// `rho_{k,m}` read from the leading entry of block `m` of `p_k`.
    pub fn link(&self, k: usize, m: usize) -> f64 {
        self.p[k][m * self.num_elements()]
    }

    /// Checks the shapes against a channel set.
    pub fn check_dims(&self, channels: &ChannelSet) -> Result<()> {
        let n = channels.n;
        let k = channels.num_cues();
        let m = channels.num_dues();
        let ok = self.w.rows() == n
            && self.w.cols() == k + 1
            && self.f.len() == k
            && self.f.iter().all(|f| f.rows() == n && f.cols() == m)
            && self.c.len() == k
            && self.c.iter().all(|c| c.len() == n * m)
            && self.p.len() == k
            && self.p.iter().all(|p| p.len() == n * m);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "state does not match N={n}, K={k}, M={m}"
            )))
        }
    }
}

/// Noise powers in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePowers {
    pub cue: f64,
    pub due: f64,
    pub sense: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateThresholds {
    /// Private-rate floor per CUE.
    pub r1: f64,
    /// Rate floor per DUE.
    pub r2: f64,
    /// Common-rate floor per CUE.
    pub r3: f64,
    /// Per-element power cap in watts.
    pub p_t: f64,
}

impl RateThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("R1", self.r1), ("R2", self.r2), ("R3", self.r3)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be finite and nonnegative"));
            }
        }
        if !(self.p_t > 0.0) || !self.p_t.is_finite() {
            return Err(Error::invalid("P_t", "must be finite and positive"));
        }
        Ok(())
    }
}

/// SINR threshold equivalent to a rate floor, `2^R - 1`.
pub fn sinr_threshold(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

/// Which expression is used for the DUE common-stream rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DueRateForm {
    /// `log2(1 + desired_m / (interference_m + noise))`.
    #[default]
    Sinr,
    /// `log2(1 + (sum_j desired_j + noise) / (interference_m + noise))`,
    /// kept only for comparison.
    PrintedSum,
}

/// Channels plus everything else a metric needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub channels: ChannelSet,
    pub noise: NoisePowers,
    pub thresholds: RateThresholds,
    pub due_rate_form: DueRateForm,
}

fn masked_inner(ch: &[Complex64], x: &[Complex64], mask: &[f64]) -> Complex64 {
    ch.iter()
        .zip(x)
        .zip(mask)
        .filter(|(_, &m)| m != 0.0)
        .map(|((h, v), &m)| h.conj() * v * m)
        .sum()
}

fn masked_inner_sched(ch: &[Complex64], x: &[Complex64], mask: &[f64], p: &[f64]) -> Complex64 {
    ch.iter()
        .zip(x)
        .zip(mask)
        .zip(p)
        .filter(|((_, &m), _)| m != 0.0)
        .map(|(((h, v), &m), &pp)| h.conj() * v * (m * pp))
        .sum()
}

fn stream_masks(n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..=k)
        .map(|i| make_index(IndexKind::A, i, n, k).expect("valid stream index").entries)
        .collect()
}

fn due_masks(n: usize, m: usize) -> Vec<Vec<f64>> {
    (1..=m)
        .map(|j| make_index(IndexKind::B, j, n, m).expect("valid DUE index").entries)
        .collect()
}

/// `|h~_k^H (vec(W) ∘ a_i)|^2` for every stream `i = 0..=K` (0 = common).
pub fn cue_stream_powers(channels: &ChannelSet, w: &CMatrix, k: usize) -> Vec<f64> {
    let n = channels.n;
    let kn = channels.num_cues();
    let h = channels.h_expanded(k);
    stream_masks(n, kn)
        .iter()
        .map(|a| masked_inner(&h, w.as_vec(), a).norm_sqr())
        .collect()
}

/// `(R_common, R_private)` at CUE `k`.
pub fn cue_rates(problem: &Problem, state: &PrimalState, k: usize) -> (f64, f64) {
    let pw = cue_stream_powers(&problem.channels, &state.w, k);
    let noise = problem.noise.cue;
    let private_sum: f64 = pw[1..].iter().sum();
    let common = (1.0 + pw[0] / (private_sum + noise)).log2();
    let private = (1.0 + pw[k + 1] / (private_sum - pw[k + 1] + noise)).log2();
    (common, private.max(0.0))
}

/// `|sum_k g~_{k,m}^H (vec(F_k) ∘ b_j ∘ p_k)|^2` for every stream `j`, at DUE `m`.
pub fn due_stream_powers(channels: &ChannelSet, state: &PrimalState, m: usize) -> Vec<f64> {
    let n = channels.n;
    let mn = channels.num_dues();
    due_masks(n, mn)
        .iter()
        .map(|b| {
            (0..channels.num_cues())
                .map(|k| {
                    let g = channels.g_expanded(k, m);
                    masked_inner_sched(&g, state.f[k].as_vec(), b, &state.p[k])
                })
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect()
}

/// Common-rate allocation delivered to DUE `m`, `sum_k (p_k ∘ e_m)^T c_k`.
pub fn due_allocation(state: &PrimalState, m: usize) -> f64 {
    let n = state.num_elements();
    let mn = state.num_dues();
    let e = make_index(IndexKind::E, m + 1, n, mn).expect("valid DUE index");
    (0..state.num_cues())
        .map(|k| {
            e.support()
                .map(|i| state.p[k][i] * state.c[k][i])
                .sum::<f64>()
        })
        .sum()
}

/// `(C_m, R_{d,m})` at DUE `m`.
pub fn due_rates(problem: &Problem, state: &PrimalState, m: usize) -> (f64, f64) {
    let pw = due_stream_powers(&problem.channels, state, m);
    let noise = problem.noise.due;
    let total: f64 = pw.iter().sum();
    let interference = total - pw[m];
    let num = match problem.due_rate_form {
        DueRateForm::Sinr => pw[m],
        DueRateForm::PrintedSum => total + noise,
    };
    let c_m = (1.0 + num / (interference.max(0.0) + noise)).log2();
    (c_m, due_allocation(state, m).min(c_m))
}

/// Received sensing power at CUE `u`, `|sum_{k,m} z~_{k,u}^H (vec(F_k) ∘ b_m ∘ p_k)|^2`.
pub fn sensing_power(channels: &ChannelSet, state: &PrimalState, u: usize) -> f64 {
    let n = channels.n;
    let mn = channels.num_dues();
    let masks = due_masks(n, mn);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..channels.num_cues() {
        let z = channels.z_stacked(k, u);
        for b in &masks {
            acc += masked_inner_sched(&z, state.f[k].as_vec(), b, &state.p[k]);
        }
    }
    acc.norm_sqr()
}

/// Radar mutual information at CUE `u`, in bits.
pub fn rmi(problem: &Problem, state: &PrimalState, u: usize) -> f64 {
    (1.0 + sensing_power(&problem.channels, state, u) / problem.noise.sense).log2()
}

/// Max-min RMI over the sensing receivers.
pub fn objective(problem: &Problem, state: &PrimalState) -> f64 {
    (0..problem.channels.num_cues())
        .map(|u| rmi(problem, state, u))
        .fold(f64::INFINITY, f64::min)
}

/// All metrics of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub common_rate: Vec<f64>,
    pub private_rate: Vec<f64>,
    pub due_capacity: Vec<f64>,
    pub due_rate: Vec<f64>,
    pub rmi: Vec<f64>,
    pub objective: f64,
    /// `sum_k R_{r,k} + sum_m R_{d,m}`.
    pub sum_rate: f64,
    /// Number of established links `sum rho_{k,m}` (rounded at 0.5).
    pub link_count: usize,
}

pub fn summarize(problem: &Problem, state: &PrimalState) -> MetricSummary {
    let kn = problem.channels.num_cues();
    let mn = problem.channels.num_dues();
    let (common_rate, private_rate): (Vec<_>, Vec<_>) =
        (0..kn).map(|k| cue_rates(problem, state, k)).unzip();
    let (due_capacity, due_rate): (Vec<_>, Vec<_>) =
        (0..mn).map(|m| due_rates(problem, state, m)).unzip();
    let rmi: Vec<f64> = (0..kn).map(|u| rmi(problem, state, u)).collect();
    let objective = rmi.iter().copied().fold(f64::INFINITY, f64::min);
    let sum_rate = private_rate.iter().sum::<f64>() + due_rate.iter().sum::<f64>();
    let link_count = (0..kn)
        .flat_map(|k| (0..mn).map(move |m| (k, m)))
        .filter(|&(k, m)| state.link(k, m) >= 0.5)
        .count();
    MetricSummary {
        common_rate,
        private_rate,
        due_capacity,
        due_rate,
        rmi,
        objective,
        sum_rate,
        link_count,
    }
}

/// One constraint instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub constraint_id: String,
    /// 1-based indices (`n`, `k`, `m`, ... as the constraint requires).
    pub indices: Vec<usize>,
    /// Signed slack; negative means violated.
    pub slack: f64,
    pub satisfied: bool,
}

/// Whether a constraint is measured in watts or bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackUnit {
    Power,
    Rate,
}

/// Units of each constraint id.
pub fn slack_unit(constraint_id: &str) -> SlackUnit {
    match constraint_id {
        "private_rate" | "due_rate" | "common_rate" | "common_split" | "common_alloc_nonneg" => {
            SlackUnit::Rate
        }
        _ => SlackUnit::Power,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintEntry>,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintEntry> {
        self.entries.iter().filter(|e| !e.satisfied)
    }

    /// Smallest slack among entries with the given id.
    pub fn min_slack(&self, constraint_id: &str) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.constraint_id == constraint_id)
            .map(|e| e.slack)
            .reduce(f64::min)
    }

    /// Smallest slack among entries of the given unit.
    pub fn min_slack_by_unit(&self, unit: SlackUnit) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| slack_unit(&e.constraint_id) == unit)
            .map(|e| e.slack)
            .reduce(f64::min)
    }
}

/// Evaluates every constraint of the design problem.
pub fn check_feasibility(problem: &Problem, state: &PrimalState) -> ConstraintReport {
    let n = problem.channels.n;
    let kn = problem.channels.num_cues();
    let mn = problem.channels.num_dues();
    let th = &problem.thresholds;
    let mut entries = Vec::new();
    let mut push = |id: &str, indices: Vec<usize>, slack: f64| {
        let tol = match slack_unit(id) {
            SlackUnit::Power => POWER_TOL,
            SlackUnit::Rate => RATE_TOL,
        };
        entries.push(ConstraintEntry {
            constraint_id: id.to_string(),
            indices,
            slack,
            satisfied: slack >= -tol,
        });
    };

    for row in 1..=n {
        let c = make_index(IndexKind::C, row, n, kn).expect("valid row index");
        let power: f64 = c.support().map(|i| state.w.as_vec()[i].norm_sqr()).sum();
        push("bs_power", vec![row], th.p_t - power);
    }
    for k in 0..kn {
        for row in 1..=n {
            let d = make_index(IndexKind::D, row, n, mn).expect("valid row index");
            let power: f64 = d
                .support()
                .map(|i| (state.f[k].as_vec()[i] * state.p[k][i]).norm_sqr())
                .sum();
            push("cue_power", vec![k + 1, row], th.p_t - power);
        }
    }
    let cue: Vec<(f64, f64)> = (0..kn).map(|k| cue_rates(problem, state, k)).collect();
    for (k, &(_, private)) in cue.iter().enumerate() {
        push("private_rate", vec![k + 1], private - th.r1);
    }
    for m in 0..mn {
        let (_, r) = due_rates(problem, state, m);
        push("due_rate", vec![m + 1], r - th.r2);
    }
    for k in 0..kn {
        let min_c = state.c[k].iter().copied().fold(f64::INFINITY, f64::min);
        push("common_alloc_nonneg", vec![k + 1], min_c);
    }
    for (k, &(common, _)) in cue.iter().enumerate() {
        push("common_rate", vec![k + 1], common - th.r3);
    }
    for (k, &(common, _)) in cue.iter().enumerate() {
        let split: f64 = (1..=mn)
            .map(|m| {
                let i = (m - 1) * n;
                state.p[k][i] * state.c[k][i]
            })
            .sum();
        push("common_split", vec![k + 1], common - split);
    }
    let due = due_masks(n, mn);
    for k in 0..kn {
        for (m, b) in due.iter().enumerate() {
            let leak: f64 = state.f[k]
                .as_vec()
                .iter()
                .zip(b)
                .zip(&state.p[k])
                .map(|((f, &bb), &p)| (f * bb * (1.0 - p)).norm_sqr())
                .sum();
            push("link_nulling", vec![k + 1, m + 1], -leak);
        }
    }
    for k in 0..kn {
        let slack = state.p[k]
            .iter()
            .map(|&p| p.min(1.0 - p))
            .fold(f64::INFINITY, f64::min);
        push("schedule_box", vec![k + 1], slack);
    }
    ConstraintReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Geometry, RadioParams, SPEED_OF_LIGHT};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn problem(n: usize, k: usize, m: usize, seed: u64) -> Problem {
        let geometry = Geometry {
            bs_position: [0.0, 0.0, 50.0],
            cue_positions: (0..k)
                .map(|i| [40.0 * i as f64 + 20.0, 50.0, 10.0])
                .collect(),
            due_positions: (0..m)
                .map(|j| [30.0 * j as f64 - 40.0, 150.0, 5.0])
                .collect(),
        };
        let radio = RadioParams {
            carrier_freq_hz: 3e9,
            rician_factor: 3.0,
            rcs_m2: 1.0,
            noise_cue_w: 1e-12,
            noise_due_w: 1e-12,
            noise_sense_w: 1e-12,
            grid: (n, 1),
        };
        Problem {
            channels: ChannelSet::generate(&geometry, &radio, seed).unwrap(),
            noise: NoisePowers {
                cue: 1e-12,
                due: 1e-12,
                sense: 1e-12,
            },
            thresholds: RateThresholds {
                r1: 0.1,
                r2: 0.1,
                r3: 0.1,
                p_t: 1.0,
            },
            due_rate_form: DueRateForm::Sinr,
        }
    }

    fn random_state(n: usize, k: usize, m: usize, rng: &mut ChaCha8Rng) -> PrimalState {
        let mut s = PrimalState::zeros(n, k, m);
        let cx = |rng: &mut ChaCha8Rng| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        s.w = CMatrix::from_fn(n, k + 1, |_, _| cx(rng));
        for f in &mut s.f {
            *f = CMatrix::from_fn(n, m, |_, _| cx(rng));
        }
        for kk in 0..k {
            for j in 0..m {
                let pv: f64 = rng.random_range(0.0..1.0);
                let cv: f64 = rng.random_range(0.0..2.0);
                s.p[kk][j * n..(j + 1) * n].fill(pv);
                s.c[kk][j * n..(j + 1) * n].fill(cv);
            }
        }
        s
    }

    // Direct column-slicing versions of the rate formulas.
    fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    fn oracle_cue_rates(pr: &Problem, s: &PrimalState, k: usize) -> (f64, f64) {
        let h = &pr.channels.h[k];
        let kn = s.num_cues();
        let p: Vec<f64> = (0..=kn).map(|i| dot(h, s.w.column(i)).norm_sqr()).collect();
        let mut inter_c = 0.0;
        for i in 1..=kn {
            inter_c += p[i];
        }
        let mut inter_p = 0.0;
        for i in 1..=kn {
            if i != k + 1 {
                inter_p += p[i];
            }
        }
        (
            (1.0 + p[0] / (inter_c + pr.noise.cue)).log2(),
            (1.0 + p[k + 1] / (inter_p + pr.noise.cue)).log2(),
        )
    }

    fn oracle_due_stream(pr: &Problem, s: &PrimalState, m: usize, j: usize) -> Complex64 {
        let n = s.num_elements();
        let mut acc = c(0.0, 0.0);
        for k in 0..s.num_cues() {
            let rho = s.p[k][j * n];
            acc += dot(&pr.channels.g[k][m], s.f[k].column(j)) * rho;
        }
        acc
    }

    fn oracle_due_rates(pr: &Problem, s: &PrimalState, m: usize) -> (f64, f64) {
        let n = s.num_elements();
        let mn = s.num_dues();
        let desired = oracle_due_stream(pr, s, m, m).norm_sqr();
        let mut inter = 0.0;
        for j in 0..mn {
            if j != m {
                inter += oracle_due_stream(pr, s, m, j).norm_sqr();
            }
        }
        let cm = (1.0 + desired / (inter + pr.noise.due)).log2();
        let mut alloc = 0.0;
        for k in 0..s.num_cues() {
            alloc += s.p[k][m * n] * s.c[k][m * n];
        }
        (cm, alloc.min(cm))
    }

    fn oracle_rmi(pr: &Problem, s: &PrimalState, u: usize) -> f64 {
        let n = s.num_elements();
        let mut acc = c(0.0, 0.0);
        for k in 0..s.num_cues() {
            for m in 0..s.num_dues() {
                acc += dot(&pr.channels.z[k][m][u], s.f[k].column(m)) * s.p[k][m * n];
            }
        }
        (1.0 + acc.norm_sqr() / pr.noise.sense).log2()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn zero_precoder_gives_zero_rates() {
        let pr = problem(4, 2, 2, 1);
        let s = PrimalState::zeros(4, 2, 2);
        assert_eq!(cue_rates(&pr, &s, 0), (0.0, 0.0));
        assert_eq!(due_rates(&pr, &s, 1), (0.0, 0.0));
        assert_eq!(rmi(&pr, &s, 0), 0.0);
        assert_eq!(objective(&pr, &s), 0.0);
    }

    #[test]
    fn unit_snr_gives_one_bit() {
        let mut pr = problem(1, 1, 1, 1);
        pr.channels.h[0] = vec![c(1.0, 0.0)];
        let mut s = PrimalState::zeros(1, 1, 1);
        s.w.set(0, 0, c(pr.noise.cue.sqrt(), 0.0));
        let (common, private) = cue_rates(&pr, &s, 0);
        assert!((common - 1.0).abs() < 1e-12);
        assert_eq!(private, 0.0);
    }

    #[test]
    fn single_link_due_rate_has_no_interference() {
        let pr = problem(3, 1, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_state(3, 1, 1, &mut rng);
        let g = &pr.channels.g[0][0];
        let snr = (dot(g, s.f[0].column(0)) * s.p[0][0]).norm_sqr() / pr.noise.due;
        let (cm, _) = due_rates(&pr, &s, 0);
        assert!(close(cm, (1.0 + snr).log2()));
    }

    #[test]
    fn unit_sensing_snr_gives_one_bit() {
        let mut pr = problem(1, 1, 1, 2);
        pr.channels.z[0][0][0] = vec![c(0.0, 1.0)];
        let mut s = PrimalState::zeros(1, 1, 1);
        s.p[0][0] = 1.0;
        s.f[0].set(0, 0, c(0.0, pr.noise.sense.sqrt()));
        assert!((rmi(&pr, &s, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rates_match_slicing_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..10 {
            let pr = problem(4, 2, 2, seed);
            let mut s = random_state(4, 2, 2, &mut rng);
            s.w.scale(1e-3);
            for f in &mut s.f {
                f.scale(1e-3);
            }
            for k in 0..2 {
                let (a, b) = cue_rates(&pr, &s, k);
                let (oa, ob) = oracle_cue_rates(&pr, &s, k);
                assert!(close(a, oa) && close(b, ob));
            }
            for m in 0..2 {
                let (a, b) = due_rates(&pr, &s, m);
                let (oa, ob) = oracle_due_rates(&pr, &s, m);
                assert!(close(a, oa) && close(b, ob));
            }
            for u in 0..2 {
                assert!(close(rmi(&pr, &s, u), oracle_rmi(&pr, &s, u)));
            }
        }
    }

    #[test]
    fn objective_is_min_over_receivers() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pr = problem(2, 3, 2, 3);
        let s = random_state(2, 3, 2, &mut rng);
        let all: Vec<f64> = (0..3).map(|u| oracle_rmi(&pr, &s, u)).collect();
        let min = all.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(close(objective(&pr, &s), min));
    }

    #[test]
    fn rmi_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pr = problem(3, 2, 2, 5);
        let s = random_state(3, 2, 2, &mut rng);
        for _ in 0..20 {
            let alpha: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let rot = Complex64::from_polar(1.0, alpha);
            let mut t = s.clone();
            for f in &mut t.f {
                for v in f.as_vec_mut() {
                    *v *= rot;
                }
            }
            for u in 0..2 {
                assert!(close(rmi(&pr, &s, u), rmi(&pr, &t, u)));
            }
        }
    }

    #[test]
    fn due_rate_never_exceeds_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pr = problem(2, 2, 3, 6);
        for _ in 0..50 {
            let s = random_state(2, 2, 3, &mut rng);
            for m in 0..3 {
                let (cm, r) = due_rates(&pr, &s, m);
                assert!(r <= cm && cm >= 0.0);
            }
        }
    }

    #[test]
    fn printed_due_form_differs_from_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut pr = problem(2, 1, 2, 6);
        let s = random_state(2, 1, 2, &mut rng);
        let (a, _) = due_rates(&pr, &s, 0);
        pr.due_rate_form = DueRateForm::PrintedSum;
        let (b, _) = due_rates(&pr, &s, 0);
        assert!(b > a);
    }

    #[test]
    fn zero_state_feasibility_pattern() {
        let pr = problem(2, 2, 2, 1);
        let s = PrimalState::zeros(2, 2, 2);
        let rep = check_feasibility(&pr, &s);
        for e in &rep.entries {
            let rate_floor = matches!(
                e.constraint_id.as_str(),
                "private_rate" | "due_rate" | "common_rate"
            );
            assert_eq!(e.satisfied, !rate_floor, "{e:?}");
        }
        let json = serde_json::to_value(&rep.entries[0]).unwrap();
        for key in ["constraint_id", "indices", "slack", "satisfied"] {
            assert!(json.get(key).is_some());
        }
    }

    #[test]
    fn all_ones_schedule_satisfies_link_nulling() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pr = problem(2, 2, 2, 1);
        let mut s = random_state(2, 2, 2, &mut rng);
        for p in &mut s.p {
            p.fill(1.0);
        }
        let rep = check_feasibility(&pr, &s);
        assert_eq!(rep.min_slack("link_nulling"), Some(0.0));
    }

    #[test]
    fn feasibility_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let pr = problem(3, 2, 2, 2);
        let s = random_state(3, 2, 2, &mut rng);
        assert_eq!(check_feasibility(&pr, &s), check_feasibility(&pr, &s));
    }

    #[test]
    fn sinr_threshold_values() {
        assert_eq!(sinr_threshold(0.0), 0.0);
        assert_eq!(sinr_threshold(1.0), 1.0);
        assert!((sinr_threshold(0.1) - 0.071773462536293).abs() < 1e-12);
    }

    #[test]
    fn wavelength_constant_is_consistent() {
        assert!((SPEED_OF_LIGHT / 3e9 - 0.0999308193).abs() < 1e-9);
    }
}
