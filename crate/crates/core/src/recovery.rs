//! Threshold recovery of binary scheduling vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PrimalState;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Binary link map `rho[k][m]` with the threshold that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleMatrix {
    pub rho: Vec<Vec<u8>>,
    /// Threshold in parts per million, so the struct stays `Eq`.
    pub threshold_ppm: u32,
}

impl ScheduleMatrix {
    pub fn threshold(&self) -> f64 {
        f64::from(self.threshold_ppm) * 1e-6
    }

    pub fn link_count(&self) -> usize {
        self.rho.iter().flatten().filter(|&&v| v == 1).count()
    }

    /// `k,m,established` rows (1-based indices), with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,m,established\n");
        for (k, row) in self.rho.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", k + 1, m + 1, v));
            }
        }
        out
    }
}

fn check_threshold(th: f64) -> Result<()> {
    if th > 0.0 && th < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("threshold", "must lie in (0, 1)"))
    }
}

/// Rounds each length-`n` block of every `p_k` to all-ones when its sum is at
/// least `n * th`, and to all-zeros otherwise.
pub fn recover(p: &[Vec<f64>], th: f64, n: usize, m: usize) -> Result<(Vec<Vec<f64>>, ScheduleMatrix)> {
    check_threshold(th)?;
    let mut out = Vec::with_capacity(p.len());
    let mut rho = Vec::with_capacity(p.len());
    for pk in p {
        if pk.len() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "scheduling vector has length {}, expected {}",
                pk.len(),
                n * m
            )));
        }
        let mut bin = vec![0.0; n * m];
        let mut row = Vec::with_capacity(m);
        for (block, chunk) in pk.chunks(n).enumerate() {
            let on = chunk.iter().sum::<f64>() >= n as f64 * th;
            if on {
                bin[block * n..(block + 1) * n].fill(1.0);
            }
            row.push(u8::from(on));
        }
        out.push(bin);
        rho.push(row);
    }
    Ok((
        out,
        ScheduleMatrix {
            rho,
            threshold_ppm: (th * 1e6).round() as u32,
        },
    ))
}

/// Recovers the scheduling of `state` in place and zeroes the forwarding
/// precoder columns of every dropped link.
pub fn recover_state(state: &mut PrimalState, th: f64) -> Result<ScheduleMatrix> {
    let n = state.num_elements();
    let m = state.num_dues();
    let (p, schedule) = recover(&state.p, th, n, m)?;
    state.p = p;
    for (k, f) in state.f.iter_mut().enumerate() {
        for (j, &on) in schedule.rho[k].iter().enumerate() {
            if on == 0 {
                f.column_mut(j).fill(num_complex::Complex64::new(0.0, 0.0));
            }
        }
    }
    Ok(schedule)
}
