//! Reference deployment: one BS at 50 m height, three CUEs on a 70.7 m
//! ring, five DUEs in the blocked region, 3 GHz carrier, -90 dBm noise.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, Geometry, RadioParams};
use crate::error::{Error, Result};
use crate::metrics::{DueRateForm, NoisePowers, Problem, RateThresholds};

/// `10^((dbm - 30) / 10)` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn reference_geometry() -> Geometry {
    let r2 = std::f64::consts::SQRT_2;
    Geometry {
        bs_position: [0.0, 0.0, 50.0],
        cue_positions: vec![[50.0, 50.0, 10.0], [-50.0, 50.0, 10.0], [0.0, -50.0 * r2, 10.0]],
        due_positions: vec![
            [150.0, 50.0, 5.0],
            [25.0, 200.0, 5.0],
            [-25.0, 200.0, 5.0],
            [-150.0, -50.0, 5.0],
            [0.0, -150.0 * r2, 5.0],
        ],
    }
}

/// Square-ish `(N_r, N_c)` factorization with `N_r <= N_c`.
pub fn grid_for(n: usize) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let mut r = (n as f64).sqrt().floor() as usize;
    while n % r != 0 {
        r -= 1;
    }
    Ok((r, n / r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub geometry: Geometry,
    pub radio: RadioParams,
    pub thresholds: RateThresholds,
    pub due_rate_form: DueRateForm,
}

impl Default for Scenario {
    fn default() -> Self {
        let noise = dbm_to_watts(-90.0);
        Self {
            geometry: reference_geometry(),
            radio: RadioParams {
                carrier_freq_hz: 3e9,
                rician_factor: 10.0,
                rcs_m2: 1.0,
                noise_cue_w: noise,
                noise_due_w: noise,
                noise_sense_w: noise,
                grid: (4, 4),
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
}

impl Scenario {
    /// Same deployment with `n` elements arranged by [`grid_for`].
    pub fn with_elements(mut self, n: usize) -> Result<Self> {
        self.radio.grid = grid_for(n)?;
        Ok(self)
    }

    pub fn with_power(mut self, p_t: f64) -> Self {
        self.thresholds.p_t = p_t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.radio.validate()?;
        self.thresholds.validate()
    }

    pub fn noise(&self) -> NoisePowers {
        NoisePowers {
            cue: self.radio.noise_cue_w,
            due: self.radio.noise_due_w,
            sense: self.radio.noise_sense_w,
        }
    }

    /// Draws the channels for `seed` and bundles them into a [`Problem`].
    pub fn problem(&self, seed: u64) -> Result<Problem> {
        self.validate()?;
        let channels = ChannelSet::generate(&self.geometry, &self.radio, seed)?;
        Ok(Problem {
            channels,
            noise: self.noise(),
            thresholds: self.thresholds,
            due_rate_form: self.due_rate_form,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minus_ninety_dbm() {
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn grids() {
        assert_eq!(grid_for(16).unwrap(), (4, 4));
        assert_eq!(grid_for(36).unwrap(), (6, 6));
        assert_eq!(grid_for(64).unwrap(), (8, 8));
        assert_eq!(grid_for(8).unwrap(), (2, 4));
        assert_eq!(grid_for(7).unwrap(), (1, 7));
        assert!(grid_for(0).is_err());
    }

    #[test]
    fn default_problem_shapes() {
        let p = Scenario::default().problem(1).unwrap();
        assert_eq!(p.channels.num_cues(), 3);
        assert_eq!(p.channels.num_dues(), 5);
        assert_eq!(p.channels.n, 16);
    }
}
