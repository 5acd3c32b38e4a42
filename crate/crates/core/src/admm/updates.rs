//! Closed-form subproblem solutions.
//!
//! Each copy update minimizes
//! `||copy - target||^2 + sum_j mult_j * g_j(copy)` where `target` is the
//! master minus the copy's error term and `g_j(copy) <= 0` (or `= 0`) are
//! the constraints attached to that copy. Complex equality constraints
//! enter as `Re(mult^H g(copy))`. Nonconvex terms are replaced by their
//! first-order lower bound `|a0|^2 + 2 Re(conj(a0) (a - a0))` around the
//! previous iterate.
//!
//! The problem structs carry every input explicitly so the oracle can
//! rebuild the same Lagrangian on its own.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::tensorops::CMatrix;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Which family of update formulas to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRules {
    /// Forms derived from the subproblem Lagrangians (see `SIGNS.md`).
    #[default]
    Corrected,
    /// Literal transcription of the originally published expressions where
    /// they are well defined; kept for comparison only.
    Printed,
}

/// Projected multiplier step for a constraint `g <= 0` evaluated to `violation`.
pub fn ascend(mult: f64, step: f64, violation: f64, rules: UpdateRules) -> f64 {
    match rules {
        UpdateRules::Corrected => (mult + step * violation).max(0.0),
        UpdateRules::Printed => (mult - step * violation).max(0.0),
    }
}

/// Lower bound of `|a|^2` linearized at `a0`: exact at `a = a0`, below elsewhere.
pub fn sca_lower_bound(a0: C, a: C) -> f64 {
    a0.norm_sqr() + 2.0 * (a0.conj() * (a - a0)).re
}

fn cdot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `(I + w u u^H) x = b` in place.
fn rank1_solve(u: &[C], w: f64, b: &mut [C]) {
    let uu: f64 = u.iter().map(|v| v.norm_sqr()).sum();
    let s = cdot(u, b) * (w / (1.0 + w * uu));
    for (bi, ui) in b.iter_mut().zip(u) {
        *bi -= ui * s;
    }
}

/// Solves `(I + w (a a^T + c c^T)) x = b` for real `a`, `c`, `b`, in place.
fn rank2_real_solve(a: &[f64], c: &[f64], w: f64, b: &mut [f64]) {
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(p, q)| p * q).sum() };
    let (aa, ac, cc) = (dot(a, a), dot(a, c), dot(c, c));
    let (ab, cb) = (dot(a, b), dot(c, b));
    // (I2 + w U^T U)^{-1} U^T b with U = [a c]
    let m11 = 1.0 + w * aa;
    let m12 = w * ac;
    let m22 = 1.0 + w * cc;
    let det = m11 * m22 - m12 * m12;
    let s1 = (m22 * ab - m12 * cb) / det;
    let s2 = (m11 * cb - m12 * ab) / det;
    for i in 0..b.len() {
        b[i] -= w * (a[i] * s1 + c[i] * s2);
    }
}

/// Epigraph update: maximizer of `gamma - rho/2 sum_u (eta_u - gamma + xi_u)^2`
/// plus the divisor used by the literal formula (`K rho`, identical when
/// there is one copy per receiver).
pub fn update_gamma(eta: &[f64], xi: &[f64], rho: f64) -> f64 {
    let s: f64 = eta.iter().zip(xi).map(|(a, b)| a + b).sum();
    (1.0 + rho * s) / (eta.len() as f64 * rho)
}

/// Copy of the epigraph variable with the sensing constraint `eta <= is_u`.
pub fn update_eta(gamma: f64, xi: f64, lambda: f64) -> f64 {
    gamma - xi - lambda / 2.0
}

/// Mean of `copy + error` over a family.
pub fn average_complex<'a>(pairs: impl IntoIterator<Item = (&'a [C], &'a [C])>, divisor: f64) -> Vec<C> {
    let mut acc: Vec<C> = Vec::new();
    for (copy, err) in pairs {
        if acc.is_empty() {
            acc = vec![ZERO; copy.len()];
        }
        for ((a, x), e) in acc.iter_mut().zip(copy).zip(err) {
            *a += x + e;
        }
    }
    acc.iter_mut().for_each(|a| *a /= divisor);
    acc
}

pub fn average_real<'a>(pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>, divisor: f64) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for (copy, err) in pairs {
        if acc.is_empty() {
            acc = vec![0.0; copy.len()];
        }
        for ((a, x), e) in acc.iter_mut().zip(copy).zip(err) {
            *a += x + e;
        }
    }
    acc.iter_mut().for_each(|a| *a /= divisor);
    acc
}

/// Number of terms each master average divides by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterDivisors {
    pub w: f64,
    pub f: f64,
    pub c: f64,
    pub p: f64,
}

impl MasterDivisors {
    /// Copy counts: `W` has `K + N` copies, `F_k` has `N + M + U`, `c_k` has
    /// `1 + M` and `p_k` has `1 + M + N + U`. The printed rules use
    /// `K + M + N`, `K + M` and `K + M + N + U` for the last three.
    pub fn new(rules: UpdateRules, n: usize, k: usize, m: usize) -> Self {
        let u = k;
        let (f, c, p) = match rules {
            UpdateRules::Corrected => (n + m + u, 1 + m, 1 + m + n + u),
            UpdateRules::Printed => (k + m + n, k + m, k + m + n + u),
        };
        Self {
            w: (k + n) as f64,
            f: f as f64,
            c: c as f64,
            p: p as f64,
        }
    }
}

/// Allocation master: average, then the nonnegativity projection.
pub fn update_c_master<'a>(pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>, divisor: f64) -> Vec<f64> {
    let mut c = average_real(pairs, divisor);
    c.iter_mut().for_each(|v| *v = v.max(0.0));
    c
}

/// Scheduling master: average, then (corrected rules only) the projection
/// onto vectors that are constant on each length-`n` block, then `[0, 1]`.
pub fn update_p_master<'a>(
    pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
    divisor: f64,
    n: usize,
    rules: UpdateRules,
) -> Vec<f64> {
    let mut p = average_real(pairs, divisor);
    if rules == UpdateRules::Corrected {
        for blk in p.chunks_mut(n) {
            let mean = blk.iter().sum::<f64>() / blk.len() as f64;
            blk.fill(mean);
        }
    }
    p.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    p
}

/// BS row-power copy: `||G - target||^2 + theta (sum_i |G[row, i]|^2 - p_max)`.
#[derive(Debug, Clone)]
pub struct RowPowerProblem<'a> {
    pub target: &'a CMatrix,
    /// 0-based element row.
    pub row: usize,
    pub theta: f64,
}

impl RowPowerProblem<'_> {
    pub fn solve(&self) -> CMatrix {
        let mut out = self.target.clone();
        let s = 1.0 / (1.0 + self.theta);
        for c in 0..out.cols() {
            let v = out.get(self.row, c) * s;
            out.set(self.row, c, v);
        }
        out
    }

    pub fn row_power(&self, g: &CMatrix) -> f64 {
        (0..g.cols()).map(|c| g.get(self.row, c).norm_sqr()).sum()
    }
}

/// CUE row-power copy of `F_k`:
/// `||T - target||^2 + iota (sum_m |T[row, m] phi[m N + row]|^2 - p_max)`.
#[derive(Debug, Clone)]
pub struct ScheduledRowPowerProblem<'a> {
    pub target: &'a CMatrix,
    pub schedule: &'a [f64],
    pub row: usize,
    pub iota: f64,
    pub rules: UpdateRules,
}

impl ScheduledRowPowerProblem<'_> {
    pub fn solve(&self) -> CMatrix {
        let n = self.target.rows();
        let mut out = self.target.clone();
        for c in 0..out.cols() {
            let phi = self.schedule[c * n + self.row];
            let w = match self.rules {
                UpdateRules::Corrected => phi * phi,
                UpdateRules::Printed => phi,
            };
            let v = out.get(self.row, c) / (1.0 + self.iota * w);
            out.set(self.row, c, v);
        }
        out
    }

    pub fn row_power(&self, t: &CMatrix) -> f64 {
        let n = t.rows();
        (0..t.cols())
            .map(|c| (t.get(self.row, c) * self.schedule[c * n + self.row]).norm_sqr())
            .sum()
    }
}

/// Scheduling copy under the same row-power constraint, with the precoder
/// copy fixed: `||phi - target||^2 + delta (sum_m |T[row, m]|^2 phi[mN+row]^2 - p_max)`.
#[derive(Debug, Clone)]
pub struct SchedulePowerProblem<'a> {
    pub target: &'a [f64],
    pub precoder: &'a CMatrix,
    pub row: usize,
    pub delta: f64,
}

impl SchedulePowerProblem<'_> {
    pub fn solve(&self) -> Vec<f64> {
        let n = self.precoder.rows();
        let mut out = self.target.to_vec();
        for c in 0..self.precoder.cols() {
            let i = c * n + self.row;
            out[i] /= 1.0 + self.delta * self.precoder.get(self.row, c).norm_sqr();
        }
        out
    }
}

/// BS precoder copy carrying the private- and common-rate constraints of CUE `k`:
///
/// - `mu`: `R1bar (sum_{i>=1, i!=k} |h^H psi_i|^2 + noise) - lb(|h^H psi_k|^2) <= 0`
/// - `pi`: `R3bar (sum_{i>=1} |h^H psi_i|^2 + noise) - lb(|h^H psi_0|^2) <= 0`
///
/// with `psi_i` column `i` of the copy (column 0 is the common stream) and
/// the lower bounds taken around `expansion`.
#[derive(Debug, Clone)]
pub struct RatePrecoderProblem<'a> {
    pub target: &'a CMatrix,
    pub h: &'a [C],
    pub expansion: &'a CMatrix,
    /// Private stream column, `1..=K`.
    pub k: usize,
    pub mu: f64,
    pub pi: f64,
    pub r1bar: f64,
    pub r3bar: f64,
    pub noise: f64,
}

impl RatePrecoderProblem<'_> {
    pub fn solve(&self) -> CMatrix {
        let cols = self.target.cols();
        let mut out = self.target.clone();
        for i in 0..cols {
            let col = out.column_mut(i);
            if i == 0 {
                let a0 = cdot(self.h, self.expansion.column(0));
                for (x, h) in col.iter_mut().zip(self.h) {
                    *x += h * (a0 * self.pi);
                }
            } else if i == self.k {
                let a0 = cdot(self.h, self.expansion.column(i));
                for (x, h) in col.iter_mut().zip(self.h) {
                    *x += h * (a0 * self.mu);
                }
            }
            let mut w = 0.0;
            if i >= 1 {
                w += self.pi * self.r3bar;
                if i != self.k {
                    w += self.mu * self.r1bar;
                }
            }
            if w > 0.0 {
                rank1_solve(self.h, w, col);
            }
        }
        out
    }

    /// `(private constraint, common constraint)` values at `psi`.
    pub fn constraints(&self, psi: &CMatrix) -> (f64, f64) {
        let pw: Vec<f64> = (0..psi.cols())
            .map(|i| cdot(self.h, psi.column(i)).norm_sqr())
            .collect();
        let a = |i: usize| cdot(self.h, psi.column(i));
        let a0 = |i: usize| cdot(self.h, self.expansion.column(i));
        let inter_private: f64 = (1..psi.cols()).filter(|&i| i != self.k).map(|i| pw[i]).sum();
        let inter_common: f64 = pw[1..].iter().sum();
        (
            self.r1bar * (inter_private + self.noise) - sca_lower_bound(a0(self.k), a(self.k)),
            self.r3bar * (inter_common + self.noise) - sca_lower_bound(a0(0), a(0)),
        )
    }
}

/// Forwarding-precoder copy `D_{m,k}` carrying the DUE-`m` SINR constraint and
/// the link-nulling equality:
///
/// - `tau`: `R2bar (sum_{j!=m} |s_j(D)|^2 + noise) - lb(|s_m(D)|^2) <= 0`,
///   `s_j(D) = g^H (D_j ∘ y_j) + others[j]`,
/// - `omega`: `(1 - y) ∘ vec(D) ∘ b_m = 0`, entering as `Re(omega^H (...))`.
#[derive(Debug, Clone)]
pub struct DuePrecoderProblem<'a> {
    pub target: &'a CMatrix,
    /// `g_{k,m}`, length `N`.
    pub g: &'a [C],
    /// Scheduling copy `y_{m,k}`, length `N M`.
    pub y: &'a [f64],
    /// 0-based DUE index.
    pub m: usize,
    /// Contribution of the other CUEs to each stream `j` at DUE `m`.
    pub others: &'a [C],
    pub expansion: &'a CMatrix,
    pub tau: f64,
    pub r2bar: f64,
    pub noise: f64,
    /// Link-nulling multiplier, length `N M`.
    pub omega: &'a [C],
}

impl DuePrecoderProblem<'_> {
    fn weights(&self, j: usize) -> Vec<C> {
        let n = self.g.len();
        self.g
            .iter()
            .zip(&self.y[j * n..(j + 1) * n])
            .map(|(g, y)| g * *y)
            .collect()
    }

    pub fn stream(&self, d: &CMatrix, j: usize) -> C {
        cdot(&self.weights(j), d.column(j)) + self.others[j]
    }

    pub fn solve(&self) -> CMatrix {
        let n = self.g.len();
        let mut out = self.target.clone();
        for j in 0..out.cols() {
            let u = self.weights(j);
            let col = out.column_mut(j);
            if j == self.m {
                let a0 = cdot(&u, self.expansion.column(j)) + self.others[j];
                let y = &self.y[j * n..(j + 1) * n];
                let om = &self.omega[j * n..(j + 1) * n];
                for i in 0..n {
                    col[i] += u[i] * (a0 * self.tau) - om[i] * (0.5 * (1.0 - y[i]));
                }
            } else {
                let w = self.tau * self.r2bar;
                if w > 0.0 {
                    let jj = self.others[j];
                    for i in 0..n {
                        col[i] -= u[i] * (jj * w);
                    }
                    rank1_solve(&u, w, col);
                }
            }
        }
        out
    }

    /// SINR constraint value at `d`.
    pub fn constraint(&self, d: &CMatrix) -> f64 {
        let inter: f64 = (0..d.cols())
            .filter(|&j| j != self.m)
            .map(|j| self.stream(d, j).norm_sqr())
            .sum();
        let a0 = self.stream(self.expansion, self.m);
        self.r2bar * (inter + self.noise) - sca_lower_bound(a0, self.stream(d, self.m))
    }

    /// Link-nulling residual `(1 - y) ∘ vec(D) ∘ b_m`.
    pub fn nulling_residual(&self, d: &CMatrix) -> Vec<C> {
        let n = self.g.len();
        let mut out = vec![ZERO; self.y.len()];
        let col = d.column(self.m);
        for i in 0..n {
            out[self.m * n + i] = col[i] * (1.0 - self.y[self.m * n + i]);
        }
        out
    }
}

/// Scheduling copy `y_{m,k}` carrying the DUE-`m` SINR constraint (`o`), the
/// link-nulling equality (`varpi`) and the rate-split constraint
/// `R2 - sum_k y[e_m] f[e_m] <= 0` (`sigma`), with the precoder copy fixed.
/// The copy is real, so stationarity is taken over real coordinates.
#[derive(Debug, Clone)]
pub struct DueScheduleProblem<'a> {
    pub target: &'a [f64],
    pub g: &'a [C],
    /// Precoder copy `D_{m,k}`.
    pub d: &'a CMatrix,
    pub m: usize,
    pub others: &'a [C],
    pub expansion: &'a [f64],
    pub o: f64,
    pub r2bar: f64,
    pub noise: f64,
    pub varpi: &'a [C],
    pub sigma: f64,
    /// Rate-allocation copy `f_{m,k}`.
    pub alloc: &'a [f64],
}

impl DueScheduleProblem<'_> {
    /// `v_j = g ∘ conj(D_j)` so that `s_j(y) = v_j^H y_j + others[j]`.
    fn weights(&self, j: usize) -> Vec<C> {
        self.g
            .iter()
            .zip(self.d.column(j))
            .map(|(g, d)| g * d.conj())
            .collect()
    }

    pub fn stream(&self, y: &[f64], j: usize) -> C {
        let n = self.g.len();
        let v = self.weights(j);
        v.iter()
            .zip(&y[j * n..(j + 1) * n])
            .map(|(vi, yi)| vi.conj() * *yi)
            .sum::<C>()
            + self.others[j]
    }

    pub fn solve(&self) -> Vec<f64> {
        let n = self.g.len();
        let mut out = self.target.to_vec();
        for j in 0..self.d.cols() {
            let v = self.weights(j);
            let blk = &mut out[j * n..(j + 1) * n];
            if j == self.m {
                let a0 = self.stream(self.expansion, j);
                let dcol = self.d.column(j);
                let vp = &self.varpi[j * n..(j + 1) * n];
                for i in 0..n {
                    blk[i] += self.o * (a0 * v[i]).re + 0.5 * (vp[i].conj() * dcol[i]).re;
                }
                blk[0] += 0.5 * self.sigma * self.alloc[j * n];
            } else {
                let w = self.o * self.r2bar;
                if w > 0.0 {
                    let jj = self.others[j];
                    for i in 0..n {
                        blk[i] -= w * (v[i] * jj).re;
                    }
                    let a: Vec<f64> = v.iter().map(|c| c.re).collect();
                    let c: Vec<f64> = v.iter().map(|c| c.im).collect();
                    rank2_real_solve(&a, &c, w, blk);
                }
            }
        }
        out
    }

    pub fn constraint(&self, y: &[f64]) -> f64 {
        let inter: f64 = (0..self.d.cols())
            .filter(|&j| j != self.m)
            .map(|j| self.stream(y, j).norm_sqr())
            .sum();
        let a0 = self.stream(self.expansion, self.m);
        self.r2bar * (inter + self.noise) - sca_lower_bound(a0, self.stream(y, self.m))
    }
}

/// Common-rate allocation copy `r_{k,k}` with
/// `(q ∘ d_1)^T r - R_common <= 0`.
pub fn update_alloc_split(target: &[f64], q: &[f64], n: usize, chi: f64, rules: UpdateRules) -> Vec<f64> {
    let scale = match rules {
        UpdateRules::Corrected => 0.5,
        UpdateRules::Printed => 1.0,
    };
    let mut out = target.to_vec();
    for i in (0..out.len()).step_by(n) {
        out[i] -= scale * chi * q[i];
    }
    out
}

/// Common-rate allocation copy `f_{m,k}` with
/// `R2 - sum_k y[e_m] f[e_m] <= 0`.
pub fn update_alloc_due(target: &[f64], y: &[f64], n: usize, m: usize, mult: f64, rules: UpdateRules) -> Vec<f64> {
    let mut out = target.to_vec();
    let i = m * n;
    match rules {
        UpdateRules::Corrected => out[i] += 0.5 * mult * y[i],
        UpdateRules::Printed => out[i] -= mult * y[i],
    }
    out
}

/// Scheduling copy `q_{k,k}` with the split constraint (`nu`) and the box
/// `0 <= q <= 1` (`zeta` for `-q <= 0`, `omega` for `q - 1 <= 0`).
pub fn update_sched_box(
    target: &[f64],
    r: &[f64],
    n: usize,
    nu: f64,
    zeta: &[f64],
    omega: &[f64],
    rules: UpdateRules,
) -> Vec<f64> {
    let scale = match rules {
        UpdateRules::Corrected => 0.5,
        UpdateRules::Printed => 1.0,
    };
    let mut out: Vec<f64> = target
        .iter()
        .zip(zeta)
        .zip(omega)
        .map(|((t, z), o)| t + scale * (z - o))
        .collect();
    for i in (0..out.len()).step_by(n) {
        out[i] -= scale * nu * r[i];
    }
    out
}

/// Sensing-receiver coupling of one CUE's copies: `is = |c^H x + other|^2`.
fn sensing_term(z: &[C], v: &[C], x: &[f64], other: C) -> C {
    z.iter()
        .zip(v)
        .zip(x)
        .map(|((zi, vi), xi)| zi.conj() * vi * *xi)
        .sum::<C>()
        + other
}

/// Scheduling copy `x_{u,k}` with `eta - lb(is_u) <= 0`, precoder copy fixed.
#[derive(Debug, Clone)]
pub struct SensingScheduleProblem<'a> {
    pub target: &'a [f64],
    /// Stacked sensing channel of CUE `k` at receiver `u`, length `N M`.
    pub z: &'a [C],
    /// Precoder copy `V_{u,k}`.
    pub v: &'a CMatrix,
    /// Contribution of the other CUEs.
    pub other: C,
    pub expansion: &'a [f64],
    pub vartheta: f64,
}

impl SensingScheduleProblem<'_> {
    pub fn sensing(&self, x: &[f64]) -> C {
        sensing_term(self.z, self.v.as_vec(), x, self.other)
    }

    pub fn solve(&self) -> Vec<f64> {
        let a0 = self.sensing(self.expansion);
        self.target
            .iter()
            .zip(self.z)
            .zip(self.v.as_vec())
            .map(|((t, z), v)| t + self.vartheta * (a0 * z * v.conj()).re)
            .collect()
    }

    pub fn lower_bound(&self, x: &[f64]) -> f64 {
        sca_lower_bound(self.sensing(self.expansion), self.sensing(x))
    }
}

/// Precoder copy `V_{u,k}` with `eta - lb(is_u) <= 0`, scheduling copy fixed.
#[derive(Debug, Clone)]
pub struct SensingPrecoderProblem<'a> {
    pub target: &'a CMatrix,
    pub z: &'a [C],
    /// Scheduling copy `x_{u,k}`.
    pub x: &'a [f64],
    pub other: C,
    pub expansion: &'a CMatrix,
    pub kappa: f64,
}

impl SensingPrecoderProblem<'_> {
    pub fn sensing(&self, v: &CMatrix) -> C {
        sensing_term(self.z, v.as_vec(), self.x, self.other)
    }

    pub fn solve(&self) -> CMatrix {
        let a0 = self.sensing(self.expansion);
        let mut out = self.target.clone();
        for ((o, z), x) in out.as_vec_mut().iter_mut().zip(self.z).zip(self.x) {
            *o += z * (a0 * (self.kappa * x));
        }
        out
    }

    pub fn lower_bound(&self, v: &CMatrix) -> f64 {
        sca_lower_bound(self.sensing(self.expansion), self.sensing(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C {
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    #[test]
    fn gamma_examples() {
        assert!((update_gamma(&[1.0, 1.0], &[0.0, 0.0], 2.0) - 1.25).abs() < 1e-15);
        assert_eq!(update_gamma(&[0.0], &[0.0], 1.0), 1.0);
        let g = update_gamma(&[3.0, 3.0, 3.0], &[0.5, 0.5, 0.5], 1e9);
        assert!((g - 3.5).abs() < 1e-6);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(update_eta(2.0, 0.5, 1.0), 1.0);
        assert_eq!(update_eta(2.0, 0.5, 0.0), 1.5);
    }

    #[test]
    fn multiplier_projection() {
        assert_eq!(ascend(0.1, 1.0, -1.0, UpdateRules::Corrected), 0.0);
        assert_eq!(ascend(0.1, 1.0, 1.0, UpdateRules::Corrected), 1.1);
        assert_eq!(ascend(0.1, 1.0, 1.0, UpdateRules::Printed), 0.0);
    }

    #[test]
    fn averaging_examples() {
        let two = [C::new(2.0, 0.0)];
        let four = [C::new(4.0, 0.0)];
        let zero = [ZERO];
        let w = average_complex([(&two[..], &zero[..]), (&four[..], &zero[..])], 2.0);
        assert_eq!(w, vec![C::new(3.0, 0.0)]);
        let x = [C::new(1.5, -2.0)];
        let w = average_complex([(&x[..], &zero[..]); 5], 5.0);
        assert!((w[0] - x[0]).norm() < 1e-15);
    }

    #[test]
    fn zero_multipliers_give_proximal_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let target = CMatrix::from_fn(3, 3, |_, _| rc(&mut rng));
        let h: Vec<C> = (0..3).map(|_| rc(&mut rng)).collect();
        let psi = RatePrecoderProblem {
            target: &target,
            h: &h,
            expansion: &target,
            k: 1,
            mu: 0.0,
            pi: 0.0,
            r1bar: 1.0,
            r3bar: 1.0,
            noise: 1.0,
        };
        assert_eq!(psi.solve(), target);
        let row = RowPowerProblem {
            target: &target,
            row: 1,
            theta: 0.0,
        };
        assert_eq!(row.solve(), target);
        let y = vec![0.5; 9];
        let others = vec![ZERO; 3];
        let omega = vec![ZERO; 9];
        let d = DuePrecoderProblem {
            target: &target,
            g: &h,
            y: &y,
            m: 0,
            others: &others,
            expansion: &target,
            tau: 0.0,
            r2bar: 1.0,
            noise: 1.0,
            omega: &omega,
        };
        assert_eq!(d.solve(), target);
    }

    #[test]
    fn all_ones_schedule_removes_nulling_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = CMatrix::from_fn(2, 2, |_, _| rc(&mut rng));
        let g: Vec<C> = (0..2).map(|_| rc(&mut rng)).collect();
        let y = vec![1.0; 4];
        let others = vec![ZERO; 2];
        let omega: Vec<C> = (0..4).map(|_| rc(&mut rng)).collect();
        let zeros = vec![ZERO; 4];
        let base = DuePrecoderProblem {
            target: &target,
            g: &g,
            y: &y,
            m: 1,
            others: &others,
            expansion: &target,
            tau: 0.3,
            r2bar: 0.5,
            noise: 1.0,
            omega: &omega,
        };
        let without = DuePrecoderProblem {
            omega: &zeros,
            ..base.clone()
        };
        assert_eq!(base.solve(), without.solve());
    }

    #[test]
    fn rank_one_and_two_solvers_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<C> = (0..4).map(|_| rc(&mut rng)).collect();
        let b: Vec<C> = (0..4).map(|_| rc(&mut rng)).collect();
        let mut x = b.clone();
        rank1_solve(&u, 0.7, &mut x);
        let s = cdot(&u, &x);
        for i in 0..4 {
            assert!((x[i] + u[i] * s * 0.7 - b[i]).norm() < 1e-12);
        }
        let a: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = b.clone();
        rank2_real_solve(&a, &c, 1.3, &mut x);
        let ax: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum();
        let cx: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
        for i in 0..5 {
            assert!((x[i] + 1.3 * (a[i] * ax + c[i] * cx) - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn sca_bound_is_tight_and_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let a0 = rc(&mut rng);
            let a = rc(&mut rng) * 3.0;
            assert!(sca_lower_bound(a0, a) <= a.norm_sqr() + 1e-12);
            assert!((sca_lower_bound(a0, a0) - a0.norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn affine_copy_updates() {
        let t = vec![1.0, 2.0, 3.0, 4.0];
        let q = vec![0.5, 0.5, 1.0, 1.0];
        assert_eq!(update_alloc_split(&t, &q, 2, 0.0, UpdateRules::Corrected), t);
        let r = update_alloc_split(&t, &q, 2, 2.0, UpdateRules::Corrected);
        assert_eq!(r, vec![0.5, 2.0, 2.0, 4.0]);
        let f = update_alloc_due(&t, &q, 2, 1, 2.0, UpdateRules::Corrected);
        assert_eq!(f, vec![1.0, 2.0, 4.0, 4.0]);
        let z = vec![0.0; 4];
        assert_eq!(update_sched_box(&t, &q, 2, 0.0, &z, &z, UpdateRules::Corrected), t);
    }

    #[test]
    fn schedule_power_zero_delta_is_identity() {
        let t = vec![0.2, 0.4, 0.6, 0.8];
        let prec = CMatrix::from_fn(2, 2, |_, _| C::new(1.0, 1.0));
        let p = SchedulePowerProblem {
            target: &t,
            precoder: &prec,
            row: 0,
            delta: 0.0,
        };
        assert_eq!(p.solve(), t);
    }
}
