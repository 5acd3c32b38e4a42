//! Random instances and independently written Lagrangians.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Region, UpdateId, VerificationCase};
use crate::admm::updates::{self, MasterDivisors};
use crate::tensorops::{expand, make_index, CMatrix, ExpandMode, IndexKind};

type C = Complex64;

pub(super) struct Instance {
    pub objective: Box<dyn Fn(&[f64]) -> f64>,
    pub point: Vec<f64>,
    pub region: Region,
    /// Set when the closed form returns something outside the variable's domain.
    pub infeasible: Option<String>,
}

impl Instance {
    fn free(point: Vec<f64>, objective: impl Fn(&[f64]) -> f64 + 'static) -> Self {
        Self {
            objective: Box::new(objective),
            point,
            region: Region::Free,
            infeasible: None,
        }
    }
}

fn pack(v: &[C]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn unpack(x: &[f64]) -> Vec<C> {
    x.chunks(2).map(|p| C::new(p[0], p[1])).collect()
}

/// Linearized `|a|^2` around `a0`.
fn lb(a0: C, a: C) -> f64 {
    a0.norm_sqr() + 2.0 * (a0.conj() * (a - a0)).re
}

fn dist2_c(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

fn dist2_r(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `sum_l conj(w_l) mask_l x_l` over a stacked vector.
fn masked_inner(w: &[C], mask: &[f64], x: &[C]) -> C {
    let mut acc = C::new(0.0, 0.0);
    for l in 0..x.len() {
        acc += w[l].conj() * mask[l] * x[l];
    }
    acc
}

fn mask(kind: IndexKind, index: usize, n: usize, blocks: usize) -> Vec<f64> {
    make_index(kind, index, n, blocks)
        .expect("oracle index within range")
        .entries
}

struct Draw(ChaCha8Rng);

impl Draw {
    fn new(case: &VerificationCase) -> Self {
        let salt = UpdateId::ALL.iter().position(|&u| u == case.update).unwrap_or(0) as u64;
        Self(ChaCha8Rng::seed_from_u64(case.seed.wrapping_mul(131).wrapping_add(salt)))
    }

    fn r(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }

    fn idx(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    fn rv(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.r(lo, hi)).collect()
    }

    fn c(&mut self) -> C {
        C::new(self.r(-1.0, 1.0), self.r(-1.0, 1.0))
    }

    fn cv(&mut self, len: usize) -> Vec<C> {
        (0..len).map(|_| self.c()).collect()
    }

    fn cm(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| self.c())
    }
}

pub(super) fn build(case: &VerificationCase) -> Instance {
    let (n, k, m) = (case.n, case.k, case.m);
    let u_count = k;
    let rules = case.rules;
    let div = MasterDivisors::new(rules, n, k, m);
    let mut d = Draw::new(case);

    match case.update {
        UpdateId::Gamma => {
            let eta = d.rv(u_count, -1.0, 2.0);
            let xi = d.rv(u_count, -0.5, 0.5);
            let rho = d.r(0.5, 3.0);
            let point = vec![updates::update_gamma(&eta, &xi, rho)];
            Instance::free(point, move |x| {
                let mut s = 0.0;
                for u in 0..eta.len() {
                    s += (eta[u] - x[0] + xi[u]).powi(2);
                }
                -x[0] + rho / 2.0 * s
            })
        }
        UpdateId::Eta => {
            let gamma = d.r(-1.0, 2.0);
            let xi = d.r(-0.5, 0.5);
            let lambda = d.r(0.0, 2.0);
            let is = d.r(0.0, 3.0);
            let point = vec![updates::update_eta(gamma, xi, lambda)];
            Instance::free(point, move |x| (x[0] - gamma + xi).powi(2) + lambda * (x[0] - is))
        }
        UpdateId::WMaster | UpdateId::FMaster => {
            let (copies, cols, divisor) = if case.update == UpdateId::WMaster {
                (k + n, k + 1, div.w)
            } else {
                (n + m + u_count, m, div.f)
            };
            let pairs: Vec<(Vec<C>, Vec<C>)> = (0..copies).map(|_| (d.cv(n * cols), d.cv(n * cols))).collect();
            let avg = updates::average_complex(pairs.iter().map(|(a, b)| (a.as_slice(), b.as_slice())), divisor);
            Instance::free(pack(&avg), move |x| {
                let v = unpack(x);
                let mut s = 0.0;
                for (copy, err) in &pairs {
                    for l in 0..v.len() {
                        s += (copy[l] + err[l] - v[l]).norm_sqr();
                    }
                }
                s
            })
        }
        UpdateId::CMaster => {
            let len = n * m;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..1 + m)
                .map(|_| (d.rv(len, -1.0, 1.0), d.rv(len, -0.5, 0.5)))
                .collect();
            let point = updates::update_c_master(pairs.iter().map(|(a, b)| (a.as_slice(), b.as_slice())), div.c);
            Instance {
                objective: Box::new(move |x| {
                    let mut s = 0.0;
                    for (copy, err) in &pairs {
                        for l in 0..x.len() {
                            s += (copy[l] + err[l] - x[l]).powi(2);
                        }
                    }
                    s
                }),
                point,
                region: Region::Box {
                    lo: vec![0.0; len],
                    hi: vec![f64::INFINITY; len],
                },
                infeasible: None,
            }
        }
        UpdateId::PMaster => {
            // The scheduling master lives on vectors that repeat one value per
            // DUE block, so the free coordinates are the `M` block values.
            let len = n * m;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..1 + m + n + u_count)
                .map(|_| (d.rv(len, -0.5, 1.5), d.rv(len, -0.3, 0.3)))
                .collect();
            let p = updates::update_p_master(pairs.iter().map(|(a, b)| (a.as_slice(), b.as_slice())), div.p, n, rules);
            let point: Vec<f64> = (0..m).map(|j| p[j * n]).collect();
            let block_constant = (0..len).all(|l| p[l] == point[l / n]);
            Instance {
                objective: Box::new(move |b| {
                    let mut s = 0.0;
                    for (copy, err) in &pairs {
                        for l in 0..len {
                            s += (copy[l] + err[l] - b[l / n]).powi(2);
                        }
                    }
                    s
                }),
                point,
                region: Region::Box {
                    lo: vec![0.0; m],
                    hi: vec![1.0; m],
                },
                infeasible: (!block_constant).then(|| "result is not constant on each DUE block".to_string()),
            }
        }
        UpdateId::BsRowPower => {
            let target = d.cm(n, k + 1);
            let row = d.idx(n);
            let theta = d.r(0.0, 2.0);
            let point = updates::RowPowerProblem {
                target: &target,
                row,
                theta,
            }
            .solve();
            let sel = mask(IndexKind::C, row + 1, n, k);
            let t = target.into_vec();
            Instance::free(pack(point.as_vec()), move |x| {
                let g = unpack(x);
                let mut rp = 0.0;
                for l in 0..g.len() {
                    rp += sel[l] * g[l].norm_sqr();
                }
                dist2_c(&g, &t) + theta * (rp - 1.0)
            })
        }
        UpdateId::CueRowPower => {
            let target = d.cm(n, m);
            let schedule = d.rv(n * m, 0.0, 1.0);
            let row = d.idx(n);
            let iota = d.r(0.0, 2.0);
            let point = updates::ScheduledRowPowerProblem {
                target: &target,
                schedule: &schedule,
                row,
                iota,
                rules,
            }
            .solve();
            let sel = mask(IndexKind::D, row + 1, n, m);
            let t = target.into_vec();
            Instance::free(pack(point.as_vec()), move |x| {
                let v = unpack(x);
                let mut rp = 0.0;
                for l in 0..v.len() {
                    rp += sel[l] * (v[l] * schedule[l]).norm_sqr();
                }
                dist2_c(&v, &t) + iota * (rp - 1.0)
            })
        }
        UpdateId::SchedulePower => {
            let target = d.rv(n * m, -0.2, 1.2);
            let precoder = d.cm(n, m);
            let row = d.idx(n);
            let delta = d.r(0.0, 2.0);
            let point = updates::SchedulePowerProblem {
                target: &target,
                precoder: &precoder,
                row,
                delta,
            }
            .solve();
            let sel = mask(IndexKind::D, row + 1, n, m);
            let f = precoder.into_vec();
            Instance::free(point, move |x| {
                let mut rp = 0.0;
                for l in 0..x.len() {
                    rp += sel[l] * f[l].norm_sqr() * x[l] * x[l];
                }
                dist2_r(x, &target) + delta * (rp - 1.0)
            })
        }
        UpdateId::RatePrecoder => {
            let target = d.cm(n, k + 1);
            let h = d.cv(n);
            let expansion = d.cm(n, k + 1);
            let kk = 1 + d.idx(k);
            let mu = d.r(0.0, 1.5);
            let pi = d.r(0.0, 1.5);
            let r1bar = d.r(0.1, 1.0);
            let r3bar = d.r(0.1, 1.0);
            let noise = d.r(0.5, 1.5);
            let point = updates::RatePrecoderProblem {
                target: &target,
                h: &h,
                expansion: &expansion,
                k: kk,
                mu,
                pi,
                r1bar,
                r3bar,
                noise,
            }
            .solve();
            let h_tilde = expand(&h, k + 1, ExpandMode::Channel).expect("copies >= 1");
            let sel: Vec<Vec<f64>> = (0..=k).map(|i| mask(IndexKind::A, i, n, k)).collect();
            let stream = move |psi: &[C], i: usize| masked_inner(&h_tilde, &sel[i], psi);
            let t = target.into_vec();
            let e = expansion.into_vec();
            let a0: Vec<C> = (0..=k).map(|i| stream(&e, i)).collect();
            Instance::free(pack(point.as_vec()), move |x| {
                let psi = unpack(x);
                let a: Vec<C> = (0..=k).map(|i| stream(&psi, i)).collect();
                let mut inter_private = 0.0;
                let mut inter_common = 0.0;
                for i in 1..=k {
                    inter_common += a[i].norm_sqr();
                    if i != kk {
                        inter_private += a[i].norm_sqr();
                    }
                }
                dist2_c(&psi, &t)
                    + mu * (r1bar * (inter_private + noise) - lb(a0[kk], a[kk]))
                    + pi * (r3bar * (inter_common + noise) - lb(a0[0], a[0]))
            })
        }
        UpdateId::DuePrecoder => {
            let target = d.cm(n, m);
            let g = d.cv(n);
            let y = d.rv(n * m, 0.0, 1.0);
            let mm = d.idx(m);
            let others = d.cv(m);
            let expansion = d.cm(n, m);
            let tau = d.r(0.0, 1.5);
            let r2bar = d.r(0.1, 1.0);
            let noise = d.r(0.5, 1.5);
            let omega = d.cv(n * m);
            let point = updates::DuePrecoderProblem {
                target: &target,
                g: &g,
                y: &y,
                m: mm,
                others: &others,
                expansion: &expansion,
                tau,
                r2bar,
                noise,
                omega: &omega,
            }
            .solve();
            let g_tilde = expand(&g, m, ExpandMode::Channel).expect("copies >= 1");
            let sel: Vec<Vec<f64>> = (1..=m).map(|j| mask(IndexKind::B, j, n, m)).collect();
            let weights: Vec<C> = g_tilde.iter().zip(&y).map(|(gi, yi)| gi * *yi).collect();
            let sel_s = sel.clone();
            let stream = move |dv: &[C], j: usize| masked_inner(&weights, &sel_s[j], dv) + others[j];
            let t = target.into_vec();
            let a0 = stream(expansion.as_vec(), mm);
            Instance::free(pack(point.as_vec()), move |x| {
                let dv = unpack(x);
                let mut inter = 0.0;
                for j in 0..m {
                    if j != mm {
                        inter += stream(&dv, j).norm_sqr();
                    }
                }
                let mut nulling = 0.0;
                for l in 0..dv.len() {
                    nulling += (omega[l].conj() * (1.0 - y[l]) * dv[l] * sel[mm][l]).re;
                }
                dist2_c(&dv, &t) + tau * (r2bar * (inter + noise) - lb(a0, stream(&dv, mm))) + nulling
            })
        }
        UpdateId::DueSchedule => {
            let target = d.rv(n * m, -0.2, 1.2);
            let g = d.cv(n);
            let dm = d.cm(n, m);
            let mm = d.idx(m);
            let others = d.cv(m);
            let expansion = d.rv(n * m, 0.0, 1.0);
            let o = d.r(0.0, 1.5);
            let r2bar = d.r(0.1, 1.0);
            let noise = d.r(0.5, 1.5);
            let varpi = d.cv(n * m);
            let sigma = d.r(0.0, 1.5);
            let alloc = d.rv(n * m, 0.0, 1.0);
            let r2 = d.r(0.05, 0.5);
            let split_others = d.r(0.0, 1.0);
            let point = updates::DueScheduleProblem {
                target: &target,
                g: &g,
                d: &dm,
                m: mm,
                others: &others,
                expansion: &expansion,
                o,
                r2bar,
                noise,
                varpi: &varpi,
                sigma,
                alloc: &alloc,
            }
            .solve();
            let g_tilde = expand(&g, m, ExpandMode::Channel).expect("copies >= 1");
            let sel: Vec<Vec<f64>> = (1..=m).map(|j| mask(IndexKind::B, j, n, m)).collect();
            let lead = mask(IndexKind::E, mm + 1, n, m);
            let dv = dm.into_vec();
            let stream = {
                let (g_tilde, sel, dv) = (g_tilde.clone(), sel.clone(), dv.clone());
                move |yv: &[f64], j: usize| {
                    let mut acc = others[j];
                    for l in 0..yv.len() {
                        acc += g_tilde[l].conj() * dv[l] * yv[l] * sel[j][l];
                    }
                    acc
                }
            };
            let a0 = stream(&expansion, mm);
            Instance::free(point, move |x| {
                let mut inter = 0.0;
                for j in 0..m {
                    if j != mm {
                        inter += stream(x, j).norm_sqr();
                    }
                }
                let mut nulling = 0.0;
                let mut split = 0.0;
                for l in 0..x.len() {
                    nulling += (varpi[l].conj() * (1.0 - x[l]) * dv[l] * sel[mm][l]).re;
                    split += lead[l] * x[l] * alloc[l];
                }
                dist2_r(x, &target)
                    + o * (r2bar * (inter + noise) - lb(a0, stream(x, mm)))
                    + nulling
                    + sigma * (r2 - split_others - split)
            })
        }
        UpdateId::SplitAlloc => {
            let target = d.rv(n * m, -0.5, 1.0);
            let q = d.rv(n * m, 0.0, 1.0);
            let chi = d.r(0.0, 2.0);
            let r_common = d.r(0.0, 1.0);
            let point = updates::update_alloc_split(&target, &q, n, chi, rules);
            let lead = mask(IndexKind::D, 1, n, m);
            Instance::free(point, move |x| {
                let mut s = 0.0;
                for l in 0..x.len() {
                    s += q[l] * lead[l] * x[l];
                }
                dist2_r(x, &target) + chi * (s - r_common)
            })
        }
        UpdateId::DueAlloc => {
            let target = d.rv(n * m, -0.5, 1.0);
            let y = d.rv(n * m, 0.0, 1.0);
            let mm = d.idx(m);
            let phi = d.r(0.0, 2.0);
            let r2 = d.r(0.05, 0.5);
            let split_others = d.r(0.0, 1.0);
            let point = updates::update_alloc_due(&target, &y, n, mm, phi, rules);
            let lead = mask(IndexKind::E, mm + 1, n, m);
            Instance::free(point, move |x| {
                let mut s = 0.0;
                for l in 0..x.len() {
                    s += y[l] * lead[l] * x[l];
                }
                dist2_r(x, &target) + phi * (r2 - split_others - s)
            })
        }
        UpdateId::SplitSchedule => {
            let target = d.rv(n * m, -0.2, 1.2);
            let r = d.rv(n * m, 0.0, 1.0);
            let nu = d.r(0.0, 2.0);
            let zeta = d.rv(n * m, 0.0, 1.0);
            let omega = d.rv(n * m, 0.0, 1.0);
            let r_common = d.r(0.0, 1.0);
            let point = updates::update_sched_box(&target, &r, n, nu, &zeta, &omega, rules);
            let lead = mask(IndexKind::D, 1, n, m);
            Instance::free(point, move |x| {
                let mut split = 0.0;
                let mut bx = 0.0;
                for l in 0..x.len() {
                    split += lead[l] * x[l] * r[l];
                    bx += -zeta[l] * x[l] + omega[l] * (x[l] - 1.0);
                }
                dist2_r(x, &target) + nu * (split - r_common) + bx
            })
        }
        UpdateId::SensingSchedule => {
            let target = d.rv(n * m, -0.2, 1.2);
            let z = d.cv(n * m);
            let v = d.cm(n, m);
            let other = d.c();
            let expansion = d.rv(n * m, 0.0, 1.0);
            let vartheta = d.r(0.0, 1.5);
            let eta = d.r(0.0, 2.0);
            let point = updates::SensingScheduleProblem {
                target: &target,
                z: &z,
                v: &v,
                other,
                expansion: &expansion,
                vartheta,
            }
            .solve();
            let vv = v.into_vec();
            let sensing = move |x: &[f64]| {
                let mut acc = other;
                for l in 0..x.len() {
                    acc += z[l].conj() * vv[l] * x[l];
                }
                acc
            };
            let a0 = sensing(&expansion);
            Instance::free(point, move |x| dist2_r(x, &target) + vartheta * (eta - lb(a0, sensing(x))))
        }
        UpdateId::SensingPrecoder => {
            let target = d.cm(n, m);
            let z = d.cv(n * m);
            let xs = d.rv(n * m, 0.0, 1.0);
            let other = d.c();
            let expansion = d.cm(n, m);
            let kappa = d.r(0.0, 1.5);
            let eta = d.r(0.0, 2.0);
            let point = updates::SensingPrecoderProblem {
                target: &target,
                z: &z,
                x: &xs,
                other,
                expansion: &expansion,
                kappa,
            }
            .solve();
            let sensing = move |v: &[C]| {
                let mut acc = other;
                for l in 0..v.len() {
                    acc += z[l].conj() * v[l] * xs[l];
                }
                acc
            };
            let a0 = sensing(expansion.as_vec());
            let t = target.into_vec();
            Instance::free(pack(point.as_vec()), move |x| {
                let v = unpack(x);
                dist2_c(&v, &t) + kappa * (eta - lb(a0, sensing(&v)))
            })
        }
    }
}
