//! Solver state in normalized units and one synchronous round.
//!
//! Inside the solver every channel is multiplied by `sqrt(P_t) / sigma` of
//! its receiver and every precoder is divided by `sqrt(P_t)`. Noise powers
//! become 1, the per-element power cap becomes 1, and the sensing epigraph
//! variable is an SNR. Rates are unchanged by this scaling.

use num_complex::Complex64;

use super::updates::{
    ascend, average_complex, update_alloc_due, update_c_master, update_p_master, MasterDivisors, update_alloc_split, update_eta,
    update_gamma, update_sched_box, DuePrecoderProblem, DueScheduleProblem, RatePrecoderProblem,
    RowPowerProblem, SchedulePowerProblem, ScheduledRowPowerProblem, SensingPrecoderProblem,
    SensingScheduleProblem,
};
use super::{Family, SolverConfig};
use crate::metrics::{sinr_threshold, PrimalState, Problem};
use crate::tensorops::CMatrix;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Channels and thresholds after normalization.
#[derive(Debug, Clone)]
pub(crate) struct Scaled {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// `h[k]`, length `N`.
    pub h: Vec<Vec<C>>,
    /// `g[k][m]`, length `N`.
    pub g: Vec<Vec<Vec<C>>>,
    /// `z[k][u]`, stacked over DUEs, length `N M`.
    pub z: Vec<Vec<Vec<C>>>,
    pub r1bar: f64,
    pub r2bar: f64,
    pub r3bar: f64,
    pub r2: f64,
    pub amplitude: f64,
    /// `||h_k||^2`, `sum_k ||g_{k,m}||^2` and `sum_k ||z_{k,u}||^2`: the
    /// scale of each quadratic constraint, used to normalize its multiplier
    /// step. The DUE and sensing gains sum over the CUEs because every CUE's
    /// copy moves the same received signal in the same round.
    pub h_gain: Vec<f64>,
    pub g_gain: Vec<f64>,
    pub z_gain: Vec<f64>,
}

impl Scaled {
    pub fn new(problem: &Problem) -> Self {
        let ch = &problem.channels;
        let th = &problem.thresholds;
        let amp = th.p_t.sqrt();
        let scale = |v: &[C], s: f64| v.iter().map(|x| x * s).collect::<Vec<_>>();
        let sh = amp / problem.noise.cue.sqrt();
        let sg = amp / problem.noise.due.sqrt();
        let sz = amp / problem.noise.sense.sqrt();
        let k = ch.num_cues();
        let gain = |v: &[C]| v.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let h: Vec<Vec<C>> = ch.h.iter().map(|h| scale(h, sh)).collect();
        let g: Vec<Vec<Vec<C>>> = ch
            .g
            .iter()
            .map(|gk| gk.iter().map(|g| scale(g, sg)).collect())
            .collect();
        let z: Vec<Vec<Vec<C>>> = (0..k)
            .map(|kk| (0..k).map(|u| scale(&ch.z_stacked(kk, u), sz)).collect())
            .collect();
        Self {
            n: ch.n,
            k,
            m: ch.num_dues(),
            h_gain: h.iter().map(|v| gain(v)).collect(),
            g_gain: (0..ch.num_dues()).map(|mm| (0..k).map(|kk| gain(&g[kk][mm])).sum()).collect(),
            z_gain: (0..k).map(|u| (0..k).map(|kk| gain(&z[kk][u])).sum()).collect(),
            h,
            g,
            z,
            r1bar: sinr_threshold(th.r1),
            r2bar: sinr_threshold(th.r2),
            r3bar: sinr_threshold(th.r3),
            r2: th.r2,
            amplitude: amp,
        }
    }
}

fn cdot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Consensus copies, or error terms shaped like them.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Copies {
    pub eta: Vec<f64>,
    pub psi: Vec<CMatrix>,
    pub gam: Vec<CMatrix>,
    /// `[k][n]`
    pub t: Vec<Vec<CMatrix>>,
    /// `[k][m]`
    pub d: Vec<Vec<CMatrix>>,
    /// `[k][u]`
    pub v: Vec<Vec<CMatrix>>,
    pub q: Vec<Vec<f64>>,
    /// `[k][m]`
    pub y: Vec<Vec<Vec<f64>>>,
    /// `[k][n]`
    pub phi: Vec<Vec<Vec<f64>>>,
    /// `[k][u]`
    pub x: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    /// `[k][m]`
    pub fa: Vec<Vec<Vec<f64>>>,
}

impl Copies {
    /// Every copy equal to its master.
    pub fn from_masters(s: &PrimalState, n: usize, m: usize) -> Self {
        let k = s.f.len();
        Self {
            eta: vec![s.gamma; k],
            psi: vec![s.w.clone(); k],
            gam: vec![s.w.clone(); n],
            t: s.f.iter().map(|f| vec![f.clone(); n]).collect(),
            d: s.f.iter().map(|f| vec![f.clone(); m]).collect(),
            v: s.f.iter().map(|f| vec![f.clone(); k]).collect(),
            q: s.p.clone(),
            y: s.p.iter().map(|p| vec![p.clone(); m]).collect(),
            phi: s.p.iter().map(|p| vec![p.clone(); n]).collect(),
            x: s.p.iter().map(|p| vec![p.clone(); k]).collect(),
            r: s.c.clone(),
            fa: s.c.iter().map(|c| vec![c.clone(); m]).collect(),
        }
    }

    pub fn zeros_like(other: &Self) -> Self {
        let zc = |m: &CMatrix| CMatrix::zeros(m.rows(), m.cols());
        let zr = |v: &Vec<f64>| vec![0.0; v.len()];
        Self {
            eta: vec![0.0; other.eta.len()],
            psi: other.psi.iter().map(zc).collect(),
            gam: other.gam.iter().map(zc).collect(),
            t: other.t.iter().map(|v| v.iter().map(zc).collect()).collect(),
            d: other.d.iter().map(|v| v.iter().map(zc).collect()).collect(),
            v: other.v.iter().map(|v| v.iter().map(zc).collect()).collect(),
            q: other.q.iter().map(zr).collect(),
            y: other.y.iter().map(|v| v.iter().map(zr).collect()).collect(),
            phi: other.phi.iter().map(|v| v.iter().map(zr).collect()).collect(),
            x: other.x.iter().map(|v| v.iter().map(zr).collect()).collect(),
            r: other.r.iter().map(zr).collect(),
            fa: other.fa.iter().map(|v| v.iter().map(zr).collect()).collect(),
        }
    }
}

/// Inequality and equality multipliers.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Multipliers {
    /// `eta_u <= is_u` on the epigraph copy.
    pub lambda: Vec<f64>,
    /// BS row power, `[n]`.
    pub theta: Vec<f64>,
    /// CUE row power on the precoder copy, `[k][n]`.
    pub iota: Vec<Vec<f64>>,
    /// Private rate, `[k]`.
    pub mu: Vec<f64>,
    /// Common rate, `[k]`.
    pub pi: Vec<f64>,
    /// DUE SINR on the precoder copy, `[k][m]`.
    pub tau: Vec<Vec<f64>>,
    /// Link nulling on the precoder copy, `[k][m]`, length `N M`.
    pub omega: Vec<Vec<Vec<C>>>,
    /// Rate split on the scheduling copy, `[k][m]`.
    pub sigma: Vec<Vec<f64>>,
    /// Link nulling on the scheduling copy, `[k][m]`, length `N M`.
    pub varpi: Vec<Vec<Vec<C>>>,
    /// DUE SINR on the scheduling copy, `[k][m]`.
    pub o: Vec<Vec<f64>>,
    /// Common split on the allocation copy, `[k]`.
    pub chi: Vec<f64>,
    /// Rate split on the allocation copy, `[k][m]`.
    pub alloc: Vec<Vec<f64>>,
    /// Common split on the scheduling copy, `[k]`.
    pub nu: Vec<f64>,
    /// `q >= 0`, `[k]`, length `N M`.
    pub zeta: Vec<Vec<f64>>,
    /// `q <= 1`, `[k]`, length `N M`.
    pub upper: Vec<Vec<f64>>,
    /// CUE row power on the scheduling copy, `[k][n]`.
    pub delta: Vec<Vec<f64>>,
    /// Sensing on the scheduling copy, `[k][u]`.
    pub vartheta: Vec<Vec<f64>>,
    /// Sensing on the precoder copy, `[k][u]`.
    pub kappa: Vec<Vec<f64>>,
}

impl Multipliers {
    pub fn zeros(n: usize, k: usize, m: usize) -> Self {
        let nm = n * m;
        Self {
            lambda: vec![0.0; k],
            theta: vec![0.0; n],
            iota: vec![vec![0.0; n]; k],
            mu: vec![0.0; k],
            pi: vec![0.0; k],
            tau: vec![vec![0.0; m]; k],
            omega: vec![vec![vec![ZERO; nm]; m]; k],
            sigma: vec![vec![0.0; m]; k],
            varpi: vec![vec![vec![ZERO; nm]; m]; k],
            o: vec![vec![0.0; m]; k],
            chi: vec![0.0; k],
            alloc: vec![vec![0.0; m]; k],
            nu: vec![0.0; k],
            zeta: vec![vec![0.0; nm]; k],
            upper: vec![vec![0.0; nm]; k],
            delta: vec![vec![0.0; n]; k],
            vartheta: vec![vec![0.0; k]; k],
            kappa: vec![vec![0.0; k]; k],
        }
    }

    /// Smallest inequality multiplier (equality multipliers excluded).
    pub fn min_inequality(&self) -> f64 {
        let flat = |v: &Vec<Vec<f64>>| v.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let one = |v: &Vec<f64>| v.iter().copied().fold(f64::INFINITY, f64::min);
        [
            one(&self.lambda),
            one(&self.theta),
            flat(&self.iota),
            one(&self.mu),
            one(&self.pi),
            flat(&self.tau),
            flat(&self.sigma),
            flat(&self.o),
            one(&self.chi),
            flat(&self.alloc),
            one(&self.nu),
            flat(&self.zeta),
            flat(&self.upper),
            flat(&self.delta),
            flat(&self.vartheta),
            flat(&self.kappa),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

/// Relative consensus residual per copy family.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    pub eta: f64,
    pub psi: f64,
    pub gamma_copy: f64,
    pub t: f64,
    pub d: f64,
    pub v: f64,
    pub q: f64,
    pub y: f64,
    pub phi: f64,
    pub x: f64,
    pub r: f64,
    pub f: f64,
    /// `||masters_r - masters_{r-1}||` in normalized units.
    pub master_drift: f64,
}

impl ResidualReport {
    pub const FAMILIES: [&'static str; 12] = [
        "eta", "psi", "gamma_copy", "t", "d", "v", "q", "y", "phi", "x", "r", "f",
    ];

    pub fn families(&self) -> [f64; 12] {
        [
            self.eta,
            self.psi,
            self.gamma_copy,
            self.t,
            self.d,
            self.v,
            self.q,
            self.y,
            self.phi,
            self.x,
            self.r,
            self.f,
        ]
    }

    pub fn max(&self) -> f64 {
        self.families().into_iter().fold(0.0, f64::max)
    }
}

fn rel_c(copy: &CMatrix, master: &CMatrix) -> f64 {
    let diff: f64 = copy
        .as_vec()
        .iter()
        .zip(master.as_vec())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    diff.sqrt() / (1.0 + master.norm_sqr().sqrt())
}

fn rel_r(copy: &[f64], master: &[f64]) -> f64 {
    let diff: f64 = copy.iter().zip(master).map(|(a, b)| (a - b) * (a - b)).sum();
    let norm: f64 = master.iter().map(|a| a * a).sum();
    diff.sqrt() / (1.0 + norm.sqrt())
}

fn fold_max(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// Complete solver state.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    pub sc: Scaled,
    pub masters: PrimalState,
    pub copies: Copies,
    pub errors: Copies,
    pub mult: Multipliers,
}

impl Engine {
    /// Phase-only matched-filter start: every precoder entry has the
    /// modulus that fills the per-element cap, all links on, the DUE rate
    /// floor split evenly over the CUEs, duals zero.
    pub fn init(problem: &Problem) -> Self {
        let sc = Scaled::new(problem);
        let (n, k, m) = (sc.n, sc.k, sc.m);
        let unit = |v: C| if v.norm() > 0.0 { v / v.norm() } else { C::new(1.0, 0.0) };
        let w = initial_bs_precoder(&sc);
        let cue_amp = (1.0 / m as f64).sqrt();
        let mut f: Vec<CMatrix> = (0..k)
            .map(|kk| CMatrix::from_fn(n, m, |row, col| unit(sc.g[kk][col][row]) * cue_amp))
            .collect();
        align_sensing_phases(&sc, &mut f);
        let mut masters = PrimalState {
            w,
            f,
            c: vec![vec![sc.r2 / k as f64; n * m]; k],
            p: vec![vec![1.0; n * m]; k],
            gamma: 0.0,
        };
        let is0 = (0..k)
            .map(|u| sensing_power_scaled(&sc, &masters, u))
            .fold(f64::INFINITY, f64::min);
        masters.gamma = is0;
        let copies = Copies::from_masters(&masters, n, m);
        let errors = Copies::zeros_like(&copies);
        Self {
            mult: Multipliers::zeros(n, k, m),
            sc,
            masters,
            copies,
            errors,
        }
    }

    /// Physical-unit export of the masters. `c` is read from the leading
    /// entry of each block, the only entries any constraint touches.
    pub fn export(&self) -> PrimalState {
        let amp = self.sc.amplitude;
        let n = self.sc.n;
        let mut s = self.masters.clone();
        s.w.scale(amp);
        for f in &mut s.f {
            f.scale(amp);
        }
        for c in &mut s.c {
            for blk in c.chunks_mut(n) {
                let lead = blk[0];
                blk.fill(lead);
            }
        }
        s
    }

    pub fn residuals(&self, previous: &PrimalState) -> ResidualReport {
        let ms = &self.masters;
        let cp = &self.copies;
        let k = self.sc.k;
        let drift = {
            let mut acc = (ms.gamma - previous.gamma).powi(2);
            acc += ms
                .w
                .as_vec()
                .iter()
                .zip(previous.w.as_vec())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>();
            for kk in 0..k {
                acc += ms.f[kk]
                    .as_vec()
                    .iter()
                    .zip(previous.f[kk].as_vec())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>();
                acc += ms.c[kk].iter().zip(&previous.c[kk]).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                acc += ms.p[kk].iter().zip(&previous.p[kk]).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
            acc.sqrt()
        };
        let eta_res = fold_max(cp.eta.iter().map(|e| (e - ms.gamma).abs() / (1.0 + ms.gamma.abs())));
        ResidualReport {
            eta: eta_res,
            psi: fold_max(cp.psi.iter().map(|x| rel_c(x, &ms.w))),
            gamma_copy: fold_max(cp.gam.iter().map(|x| rel_c(x, &ms.w))),
            t: fold_max((0..k).flat_map(|kk| cp.t[kk].iter().map(move |x| rel_c(x, &ms.f[kk])))),
            d: fold_max((0..k).flat_map(|kk| cp.d[kk].iter().map(move |x| rel_c(x, &ms.f[kk])))),
            v: fold_max((0..k).flat_map(|kk| cp.v[kk].iter().map(move |x| rel_c(x, &ms.f[kk])))),
            q: fold_max((0..k).map(|kk| rel_r(&cp.q[kk], &ms.p[kk]))),
            y: fold_max((0..k).flat_map(|kk| cp.y[kk].iter().map(move |x| rel_r(x, &ms.p[kk])))),
            phi: fold_max((0..k).flat_map(|kk| cp.phi[kk].iter().map(move |x| rel_r(x, &ms.p[kk])))),
            x: fold_max((0..k).flat_map(|kk| cp.x[kk].iter().map(move |x| rel_r(x, &ms.p[kk])))),
            r: fold_max((0..k).map(|kk| rel_r(&cp.r[kk], &ms.c[kk]))),
            f: fold_max((0..k).flat_map(|kk| cp.fa[kk].iter().map(move |x| rel_r(x, &ms.c[kk])))),
            master_drift: drift,
        }
    }

    /// One synchronous round: masters, then every copy from the masters and
    /// the round-start copies, then the error terms.
    pub fn round(&mut self, iteration: usize, cfg: &SolverConfig) {
        self.update_masters(cfg);
        let next = self.update_copies(iteration, cfg);
        self.copies = next;
        self.update_errors();
    }

    fn update_masters(&mut self, cfg: &SolverConfig) {
        let (n, k, m) = (self.sc.n, self.sc.k, self.sc.m);
        let cp = &self.copies;
        let er = &self.errors;
        let ms = &mut self.masters;

        ms.gamma = update_gamma(&cp.eta, &er.eta, cfg.rho);

        let pairs = cp
            .psi
            .iter()
            .zip(&er.psi)
            .chain(cp.gam.iter().zip(&er.gam))
            .map(|(a, b)| (a.as_vec(), b.as_vec()));
        let w = average_complex(pairs, MasterDivisors::new(cfg.rules, n, k, m).w);
        ms.w = CMatrix::from_vec(n, k + 1, w).expect("shape preserved");

        let div = MasterDivisors::new(cfg.rules, n, k, m);
        for kk in 0..k {
            let pairs = cp.t[kk]
                .iter()
                .zip(&er.t[kk])
                .chain(cp.d[kk].iter().zip(&er.d[kk]))
                .chain(cp.v[kk].iter().zip(&er.v[kk]))
                .map(|(a, b)| (a.as_vec(), b.as_vec()));
            let f = average_complex(pairs, div.f);
            ms.f[kk] = CMatrix::from_vec(n, m, f).expect("shape preserved");

            let pairs = std::iter::once((&cp.r[kk][..], &er.r[kk][..]))
                .chain(cp.fa[kk].iter().zip(&er.fa[kk]).map(|(a, b)| (&a[..], &b[..])));
            ms.c[kk] = update_c_master(pairs, div.c);

            let pairs = std::iter::once((&cp.q[kk][..], &er.q[kk][..]))
                .chain(cp.y[kk].iter().zip(&er.y[kk]).map(|(a, b)| (&a[..], &b[..])))
                .chain(cp.phi[kk].iter().zip(&er.phi[kk]).map(|(a, b)| (&a[..], &b[..])))
                .chain(cp.x[kk].iter().zip(&er.x[kk]).map(|(a, b)| (&a[..], &b[..])));
            ms.p[kk] = update_p_master(pairs, div.p, n, cfg.rules);
        }
    }

    fn update_copies(&mut self, iteration: usize, cfg: &SolverConfig) -> Copies {
        let sc = &self.sc;
        let (n, k, m) = (sc.n, sc.k, sc.m);
        let ms = &self.masters;
        let cp = &self.copies;
        let er = &self.errors;
        let rules = cfg.rules;
        let frozen = cfg.freeze_multipliers;
        let step = |fam: Family| cfg.steps.step(fam, iteration);
        let mult = &mut self.mult;
        let asc = |mu: &mut f64, fam: Family, violation: f64| {
            if !frozen {
                *mu = ascend(*mu, step(fam), violation, rules);
            }
        };
        // Quadratic-form constraints scale with the squared channel gain;
        // dividing the step by its square makes the primal move gain-free.
        // Capping the multiplier at `dual_cap / gain` keeps the concave part
        // of each copy subproblem weaker than its unit consensus penalty, so
        // the subproblem stays strongly convex and the SCA step contracts.
        let cap = cfg.dual_cap;
        let asc_gain = |mu: &mut f64, fam: Family, violation: f64, gain: f64| {
            if !frozen {
                *mu = ascend(*mu, step(fam) / (gain * gain), violation, rules).min(cap / gain);
            }
        };

        // Couplings read from the round-start copies.
        let sens: Vec<Vec<C>> = (0..k)
            .map(|u| {
                (0..k)
                    .map(|kk| {
                        sc.z[kk][u]
                            .iter()
                            .zip(cp.v[kk][u].as_vec())
                            .zip(&cp.x[kk][u])
                            .map(|((z, v), x)| z.conj() * v * *x)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let is_copies: Vec<f64> = sens.iter().map(|s| s.iter().sum::<C>().norm_sqr()).collect();
        // due[m][k][j]: stream j of CUE k's copy at DUE m.
        let due: Vec<Vec<Vec<C>>> = (0..m)
            .map(|mm| {
                (0..k)
                    .map(|kk| {
                        (0..m)
                            .map(|j| {
                                let g = &sc.g[kk][mm];
                                let d = cp.d[kk][mm].column(j);
                                let y = &cp.y[kk][mm][j * n..(j + 1) * n];
                                g.iter()
                                    .zip(d)
                                    .zip(y)
                                    .map(|((g, d), y)| g.conj() * d * *y)
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let others_due = |mm: usize, kk: usize| -> Vec<C> {
            (0..m)
                .map(|j| (0..k).filter(|&i| i != kk).map(|i| due[mm][i][j]).sum())
                .collect()
        };
        let split_terms: Vec<Vec<f64>> = (0..m)
            .map(|mm| (0..k).map(|kk| cp.y[kk][mm][mm * n] * cp.fa[kk][mm][mm * n]).collect())
            .collect();
        let common_rate: Vec<f64> = (0..k)
            .map(|kk| {
                let pw: Vec<f64> = (0..=k)
                    .map(|i| cdot(&sc.h[kk], cp.psi[kk].column(i)).norm_sqr())
                    .collect();
                (1.0 + pw[0] / (pw[1..].iter().sum::<f64>() + 1.0)).log2()
            })
            .collect();

        let mut next = cp.clone();

        // epigraph copies
        for u in 0..k {
            let eta = update_eta(ms.gamma, er.eta[u], mult.lambda[u]);
            asc(&mut mult.lambda[u], Family::Sensing, eta - is_copies[u]);
            next.eta[u] = eta;
        }

        // BS row power
        for row in 0..n {
            let target = sub_c(&ms.w, &er.gam[row]);
            let prob = RowPowerProblem {
                target: &target,
                row,
                theta: mult.theta[row],
            };
            let g = prob.solve();
            asc(&mut mult.theta[row], Family::BsPower, prob.row_power(&g) - 1.0);
            next.gam[row] = g;
        }

        // CUE row power on the precoder
        for kk in 0..k {
            for row in 0..n {
                let target = sub_c(&ms.f[kk], &er.t[kk][row]);
                let prob = ScheduledRowPowerProblem {
                    target: &target,
                    schedule: &cp.phi[kk][row],
                    row,
                    iota: mult.iota[kk][row],
                    rules,
                };
                let t = prob.solve();
                asc(&mut mult.iota[kk][row], Family::CuePowerPrecoder, prob.row_power(&t) - 1.0);
                next.t[kk][row] = t;
            }
        }

        // rate-constrained BS copies
        for kk in 0..k {
            let target = sub_c(&ms.w, &er.psi[kk]);
            let prob = RatePrecoderProblem {
                target: &target,
                h: &sc.h[kk],
                expansion: &cp.psi[kk],
                k: kk + 1,
                mu: mult.mu[kk],
                pi: mult.pi[kk],
                r1bar: sc.r1bar,
                r3bar: sc.r3bar,
                noise: 1.0,
            };
            let psi = prob.solve();
            let (g_private, g_common) = prob.constraints(&psi);
            asc_gain(&mut mult.mu[kk], Family::PrivateRate, g_private, sc.h_gain[kk]);
            asc_gain(&mut mult.pi[kk], Family::CommonRate, g_common, sc.h_gain[kk]);
            next.psi[kk] = psi;
        }

        // DUE copies of the precoder and the schedule
        for kk in 0..k {
            for mm in 0..m {
                let others = others_due(mm, kk);
                let target = sub_c(&ms.f[kk], &er.d[kk][mm]);
                let prob = DuePrecoderProblem {
                    target: &target,
                    g: &sc.g[kk][mm],
                    y: &cp.y[kk][mm],
                    m: mm,
                    others: &others,
                    expansion: &cp.d[kk][mm],
                    tau: mult.tau[kk][mm],
                    r2bar: sc.r2bar,
                    noise: 1.0,
                    omega: &mult.omega[kk][mm],
                };
                let d = prob.solve();
                asc_gain(
                    &mut mult.tau[kk][mm],
                    Family::DueSinrPrecoder,
                    prob.constraint(&d),
                    sc.g_gain[mm],
                );
                if !frozen {
                    let t = step(Family::NullingPrecoder);
                    let res = prob.nulling_residual(&d);
                    for (w, r) in mult.omega[kk][mm].iter_mut().zip(res) {
                        *w += r * t;
                    }
                }
                next.d[kk][mm] = d;

                let target = sub_r(&ms.p[kk], &er.y[kk][mm]);
                let prob = DueScheduleProblem {
                    target: &target,
                    g: &sc.g[kk][mm],
                    d: &cp.d[kk][mm],
                    m: mm,
                    others: &others,
                    expansion: &cp.y[kk][mm],
                    o: mult.o[kk][mm],
                    r2bar: sc.r2bar,
                    noise: 1.0,
                    varpi: &mult.varpi[kk][mm],
                    sigma: mult.sigma[kk][mm],
                    alloc: &cp.fa[kk][mm],
                };
                let y = prob.solve();
                asc_gain(&mut mult.o[kk][mm], Family::DueSinrSchedule, prob.constraint(&y), sc.g_gain[mm]);
                let lead = mm * n;
                let split_others: f64 = (0..k).filter(|&i| i != kk).map(|i| split_terms[mm][i]).sum();
                asc(
                    &mut mult.sigma[kk][mm],
                    Family::SplitSchedule,
                    sc.r2 - split_others - y[lead] * cp.fa[kk][mm][lead],
                );
                if !frozen {
                    let t = step(Family::NullingSchedule);
                    let dcol = cp.d[kk][mm].column(mm);
                    for i in 0..n {
                        mult.varpi[kk][mm][lead + i] += dcol[i] * ((1.0 - y[lead + i]) * t);
                    }
                }
                next.y[kk][mm] = y;

                let target = sub_r(&ms.c[kk], &er.fa[kk][mm]);
                let fa = update_alloc_due(&target, &cp.y[kk][mm], n, mm, mult.alloc[kk][mm], rules);
                asc(
                    &mut mult.alloc[kk][mm],
                    Family::DueAlloc,
                    sc.r2 - split_others - cp.y[kk][mm][lead] * fa[lead],
                );
                next.fa[kk][mm] = fa;
            }
        }

        // common-rate split copies and the box-constrained schedule
        for kk in 0..k {
            let target = sub_r(&ms.c[kk], &er.r[kk]);
            let r = update_alloc_split(&target, &cp.q[kk], n, mult.chi[kk], rules);
            let split: f64 = (0..m).map(|j| cp.q[kk][j * n] * r[j * n]).sum();
            asc(&mut mult.chi[kk], Family::CommonSplitAlloc, split - common_rate[kk]);
            next.r[kk] = r;

            let target = sub_r(&ms.p[kk], &er.q[kk]);
            let q = update_sched_box(
                &target,
                &cp.r[kk],
                n,
                mult.nu[kk],
                &mult.zeta[kk],
                &mult.upper[kk],
                rules,
            );
            let split: f64 = (0..m).map(|j| q[j * n] * cp.r[kk][j * n]).sum();
            asc(&mut mult.nu[kk], Family::CommonSplitSchedule, split - common_rate[kk]);
            if !frozen {
                let tz = step(Family::BoxLower);
                let tu = step(Family::BoxUpper);
                for i in 0..q.len() {
                    mult.zeta[kk][i] = ascend(mult.zeta[kk][i], tz, -q[i], rules);
                    mult.upper[kk][i] = ascend(mult.upper[kk][i], tu, q[i] - 1.0, rules);
                }
            }
            next.q[kk] = q;
        }

        // CUE row power on the schedule
        for kk in 0..k {
            for row in 0..n {
                let target = sub_r(&ms.p[kk], &er.phi[kk][row]);
                let prob = SchedulePowerProblem {
                    target: &target,
                    precoder: &cp.t[kk][row],
                    row,
                    delta: mult.delta[kk][row],
                };
                let phi = prob.solve();
                let power: f64 = (0..m)
                    .map(|j| (cp.t[kk][row].get(row, j) * phi[j * n + row]).norm_sqr())
                    .sum();
                asc(&mut mult.delta[kk][row], Family::CuePowerSchedule, power - 1.0);
                next.phi[kk][row] = phi;
            }
        }

        // sensing copies
        for kk in 0..k {
            for u in 0..k {
                let other: C = (0..k).filter(|&i| i != kk).map(|i| sens[u][i]).sum();
                let target = sub_r(&ms.p[kk], &er.x[kk][u]);
                let prob = SensingScheduleProblem {
                    target: &target,
                    z: &sc.z[kk][u],
                    v: &cp.v[kk][u],
                    other,
                    expansion: &cp.x[kk][u],
                    vartheta: mult.vartheta[kk][u],
                };
                let x = prob.solve();
                asc_gain(
                    &mut mult.vartheta[kk][u],
                    Family::SensingSchedule,
                    cp.eta[u] - prob.sensing(&x).norm_sqr(),
                    sc.z_gain[u],
                );
                next.x[kk][u] = x;

                let target = sub_c(&ms.f[kk], &er.v[kk][u]);
                let prob = SensingPrecoderProblem {
                    target: &target,
                    z: &sc.z[kk][u],
                    x: &cp.x[kk][u],
                    other,
                    expansion: &cp.v[kk][u],
                    kappa: mult.kappa[kk][u],
                };
                let v = prob.solve();
                asc_gain(
                    &mut mult.kappa[kk][u],
                    Family::SensingPrecoder,
                    cp.eta[u] - prob.sensing(&v).norm_sqr(),
                    sc.z_gain[u],
                );
                next.v[kk][u] = v;
            }
        }
        next
    }

    fn update_errors(&mut self) {
        let ms = &self.masters;
        let cp = &self.copies;
        let er = &mut self.errors;
        for (e, c) in er.eta.iter_mut().zip(&cp.eta) {
            *e += c - ms.gamma;
        }
        for (e, c) in er.psi.iter_mut().zip(&cp.psi).chain(er.gam.iter_mut().zip(&cp.gam)) {
            acc_c(e, c, &ms.w);
        }
        for kk in 0..ms.f.len() {
            let f = &ms.f[kk];
            for (e, c) in er.t[kk]
                .iter_mut()
                .zip(&cp.t[kk])
                .chain(er.d[kk].iter_mut().zip(&cp.d[kk]))
                .chain(er.v[kk].iter_mut().zip(&cp.v[kk]))
            {
                acc_c(e, c, f);
            }
            let p = &ms.p[kk];
            acc_r(&mut er.q[kk], &cp.q[kk], p);
            for (e, c) in er.y[kk]
                .iter_mut()
                .zip(&cp.y[kk])
                .chain(er.phi[kk].iter_mut().zip(&cp.phi[kk]))
                .chain(er.x[kk].iter_mut().zip(&cp.x[kk]))
            {
                acc_r(e, c, p);
            }
            let c = &ms.c[kk];
            acc_r(&mut er.r[kk], &cp.r[kk], c);
            for (e, x) in er.fa[kk].iter_mut().zip(&cp.fa[kk]) {
                acc_r(e, x, c);
            }
        }
    }
}

/// Regularized zero-forcing private columns plus a common column matched to
/// the phase-aligned sum of the CUE channels. The common share of the power
/// is the smallest one whose common rate at every CUE is twice what the
/// common-rate floor and an even split of the DUE floors need, and the whole
/// matrix is scaled so its strongest row meets the cap.
fn initial_bs_precoder(sc: &Scaled) -> CMatrix {
    use nalgebra::DMatrix;
    let (n, k) = (sc.n, sc.k);
    let hm = DMatrix::from_fn(n, k, |i, j| sc.h[j][i]);
    let snr = sc.h_gain.iter().sum::<f64>() / (k as f64);
    let gram = hm.adjoint() * &hm + DMatrix::identity(k, k) * C::new(k as f64 / snr.max(1e-12), 0.0);
    let private = match gram.lu().solve(&DMatrix::identity(k, k)) {
        Some(inv) => &hm * inv,
        None => hm.clone(),
    };
    let unit = |v: C| if v.norm() > 0.0 { v / v.norm() } else { C::new(1.0, 0.0) };
    let common: Vec<C> = (0..n)
        .map(|i| unit((0..k).map(|j| unit(sc.h[j][i])).sum::<C>()))
        .collect();
    let col_norm = |j: usize| private.column(j).norm().max(1e-300);
    let build = |share: f64| {
        CMatrix::from_fn(n, k + 1, |row, col| {
            if col == 0 {
                common[row] * (share / n as f64).sqrt()
            } else {
                private[(row, col - 1)] / col_norm(col - 1) * ((1.0 - share) / k as f64).sqrt()
            }
        })
    };
    let m = sc.m as f64;
    let need = 2.0 * (sinr_threshold_inv(sc.r3bar)).max(m * sc.r2 / k as f64);
    let scale_rows = |w: &mut CMatrix| {
        let peak = (0..n)
            .map(|row| (0..=k).map(|c| w.get(row, c).norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max);
        if peak > 0.0 {
            w.scale(1.0 / peak.sqrt());
        }
    };
    let min_common = |w: &CMatrix| {
        (0..k)
            .map(|j| {
                let p: Vec<f64> = (0..=k).map(|c| cdot(&sc.h[j], w.column(c)).norm_sqr()).collect();
                (1.0 + p[0] / (p[1..].iter().sum::<f64>() + 1.0)).log2()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let mut w = build(mid);
        scale_rows(&mut w);
        if min_common(&w) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut w = build(hi);
    scale_rows(&mut w);
    w
}

fn sinr_threshold_inv(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Rotates whole columns of the forwarding precoders so the echoes at the
/// sensing receivers add up coherently: coordinate ascent on the weakest
/// receiver's echo power over a grid of column phases.
fn align_sensing_phases(sc: &Scaled, f: &mut [CMatrix]) {
    const PHASES: usize = 16;
    const SWEEPS: usize = 4;
    let (n, k, m) = (sc.n, sc.k, sc.m);
    // echo[u][kk][col]: contribution of column col of F_kk at receiver u.
    let mut echo: Vec<Vec<Vec<C>>> = (0..k)
        .map(|u| {
            (0..k)
                .map(|kk| {
                    (0..m)
                        .map(|col| cdot(&sc.z[kk][u][col * n..(col + 1) * n], f[kk].column(col)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let worst = |echo: &Vec<Vec<Vec<C>>>| -> f64 {
        echo.iter()
            .map(|e| e.iter().flatten().sum::<C>().norm_sqr())
            .fold(f64::INFINITY, f64::min)
    };
    let rot: Vec<C> = (0..PHASES)
        .map(|i| C::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / PHASES as f64))
        .collect();
    for _ in 0..SWEEPS {
        for kk in 0..k {
            for col in 0..m {
                let mut best = (worst(&echo), 0);
                for (i, r) in rot.iter().enumerate().skip(1) {
                    let mut trial = echo.clone();
                    for e in trial.iter_mut() {
                        e[kk][col] *= r;
                    }
                    let w = worst(&trial);
                    if w > best.0 {
                        best = (w, i);
                    }
                }
                if best.1 != 0 {
                    let r = rot[best.1];
                    for e in echo.iter_mut() {
                        e[kk][col] *= r;
                    }
                    f[kk].column_mut(col).iter_mut().for_each(|v| *v *= r);
                }
            }
        }
    }
}

fn sub_c(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let data = a.as_vec().iter().zip(b.as_vec()).map(|(x, y)| x - y).collect();
    CMatrix::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

fn sub_r(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn acc_c(err: &mut CMatrix, copy: &CMatrix, master: &CMatrix) {
    for ((e, c), m) in err.as_vec_mut().iter_mut().zip(copy.as_vec()).zip(master.as_vec()) {
        *e += c - m;
    }
}

fn acc_r(err: &mut [f64], copy: &[f64], master: &[f64]) {
    for ((e, c), m) in err.iter_mut().zip(copy).zip(master) {
        *e += c - m;
    }
}

/// Sensing SNR at receiver `u` evaluated on the normalized masters.
pub(crate) fn sensing_power_scaled(sc: &Scaled, s: &PrimalState, u: usize) -> f64 {
    (0..sc.k)
        .map(|kk| {
            sc.z[kk][u]
                .iter()
                .zip(s.f[kk].as_vec())
                .zip(&s.p[kk])
                .map(|((z, f), p)| z.conj() * f * *p)
                .sum::<C>()
        })
        .sum::<C>()
        .norm_sqr()
}
