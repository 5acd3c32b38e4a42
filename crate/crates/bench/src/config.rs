//! Experiment configuration.
//!
//! A config is one TOML file. Every key is optional; missing keys take the
//! reference-scenario values, so an empty file is a complete config. See
//! `configs/default.toml` for the full schema with every default spelled out.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tris_isac::admm::SolverConfig;
use tris_isac::channel::Point3;
use tris_isac::metrics::DueRateForm;
use tris_isac::scenario::{dbm_to_watts, grid_for, Scenario};

use crate::BenchError;

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Number of surface elements `N`.
    N,
    /// Per-element power cap `P_t`, in watts.
    Pt,
    #[default]
    None,
}

impl Axis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "n" | "N" => Some(Axis::N),
            "pt" | "P_t" | "p_t" => Some(Axis::Pt),
            "none" => Some(Axis::None),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::N => "n",
            Axis::Pt => "pt",
            Axis::None => "none",
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawScenario {
    bs_position: Option<Point3>,
    cue_positions: Option<Vec<Point3>>,
    due_positions: Option<Vec<Point3>>,
    carrier_freq_hz: Option<f64>,
    rician_factor: Option<f64>,
    rcs_m2: Option<f64>,
    /// Applies to every receiver unless overridden below.
    noise_dbm: Option<f64>,
    noise_cue_dbm: Option<f64>,
    noise_due_dbm: Option<f64>,
    noise_sense_dbm: Option<f64>,
    /// `[N_r, N_c]`; mutually exclusive with `elements`.
    grid: Option<[usize; 2]>,
    elements: Option<usize>,
    due_rate_form: Option<DueRateForm>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawThresholds {
    #[serde(rename = "R1", alias = "r1")]
    r1: Option<f64>,
    #[serde(rename = "R2", alias = "r2")]
    r2: Option<f64>,
    #[serde(rename = "R3", alias = "r3")]
    r3: Option<f64>,
    #[serde(rename = "P_t", alias = "p_t")]
    p_t: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSweep {
    axis: Option<Axis>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTiming {
    n_values: Option<Vec<usize>>,
    m_values: Option<Vec<usize>>,
    repeats: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    thresholds: RawThresholds,
    solver: Option<SolverConfig>,
    sweep: RawSweep,
    timing: RawTiming,
    seeds: Option<Vec<u64>>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingConfig {
    pub n_values: Vec<usize>,
    /// DUE counts; the first `M` DUEs of the geometry are kept.
    pub m_values: Vec<usize>,
    /// Timed runs per point, after one untimed warmup.
    pub repeats: usize,
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub solver: SolverConfig,
    pub sweep: Sweep,
    pub timing: TimingConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> BenchError {
    BenchError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), BenchError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, BenchError> {
        let mut scenario = Scenario::default();
        let s = raw.scenario;
        if let Some(v) = s.bs_position {
            scenario.geometry.bs_position = v;
        }
        if let Some(v) = s.cue_positions {
            scenario.geometry.cue_positions = v;
        }
        if let Some(v) = s.due_positions {
            scenario.geometry.due_positions = v;
        }
        let radio = &mut scenario.radio;
        if let Some(v) = s.carrier_freq_hz {
            radio.carrier_freq_hz = v;
        }
        if let Some(v) = s.rician_factor {
            radio.rician_factor = v;
        }
        if let Some(v) = s.rcs_m2 {
            radio.rcs_m2 = v;
        }
        if let Some(dbm) = s.noise_dbm {
            let w = dbm_to_watts(dbm);
            radio.noise_cue_w = w;
            radio.noise_due_w = w;
            radio.noise_sense_w = w;
        }
        for (dbm, slot) in [
            (s.noise_cue_dbm, &mut radio.noise_cue_w),
            (s.noise_due_dbm, &mut radio.noise_due_w),
            (s.noise_sense_dbm, &mut radio.noise_sense_w),
        ] {
            if let Some(dbm) = dbm {
                *slot = dbm_to_watts(dbm);
            }
        }
        match (s.grid, s.elements) {
            (Some(_), Some(_)) => {
                return Err(invalid("scenario.grid", "give either grid or elements, not both"));
            }
            (Some([r, c]), None) => {
                if r == 0 || c == 0 {
                    return Err(invalid("scenario.grid", "both dimensions must be at least 1"));
                }
                radio.grid = (r, c);
            }
            (None, Some(n)) => {
                radio.grid = grid_for(n).map_err(|_| invalid("scenario.elements", "must be at least 1"))?;
            }
            (None, None) => {}
        }
        if let Some(v) = s.due_rate_form {
            scenario.due_rate_form = v;
        }

        let t = raw.thresholds;
        let th = &mut scenario.thresholds;
        th.r1 = t.r1.unwrap_or(th.r1);
        th.r2 = t.r2.unwrap_or(th.r2);
        th.r3 = t.r3.unwrap_or(th.r3);
        th.p_t = t.p_t.unwrap_or(th.p_t);

        let sweep = Sweep {
            axis: raw.sweep.axis.unwrap_or_default(),
            values: raw.sweep.values.unwrap_or_default(),
        };
        let timing = TimingConfig {
            n_values: raw.timing.n_values.unwrap_or_else(|| vec![16, 36, 64]),
            m_values: raw
                .timing
                .m_values
                .unwrap_or_else(|| (1..=scenario.geometry.num_dues()).collect()),
            repeats: raw.timing.repeats.unwrap_or(3),
        };
        let cfg = Self {
            scenario,
            solver: raw.solver.unwrap_or_default(),
            sweep,
            timing,
            seeds: raw.seeds.unwrap_or_else(|| vec![1]),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let th = &self.scenario.thresholds;
        positive("thresholds.P_t", th.p_t)?;
        for (name, v) in [("thresholds.R1", th.r1), ("thresholds.R2", th.r2), ("thresholds.R3", th.r3)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be finite and nonnegative, got {v}")));
            }
        }
        let radio = &self.scenario.radio;
        positive("scenario.carrier_freq_hz", radio.carrier_freq_hz)?;
        positive("scenario.rcs_m2", radio.rcs_m2)?;
        positive("scenario.noise_cue_dbm", radio.noise_cue_w)?;
        positive("scenario.noise_due_dbm", radio.noise_due_w)?;
        positive("scenario.noise_sense_dbm", radio.noise_sense_w)?;
        if !(radio.rician_factor >= 0.0 && radio.rician_factor.is_finite()) {
            return Err(invalid("scenario.rician_factor", "must be finite and nonnegative"));
        }
        let geo = &self.scenario.geometry;
        if geo.num_cues() == 0 {
            return Err(invalid("scenario.cue_positions", "needs at least one CUE"));
        }
        if geo.num_dues() == 0 {
            return Err(invalid("scenario.due_positions", "needs at least one DUE"));
        }
        geo.validate().map_err(|e| invalid("scenario", e.to_string()))?;
        self.solver.validate().map_err(|e| match e {
            tris_isac::Error::InvalidParameter { field, reason } => BenchError::Invalid { field, reason },
            other => BenchError::Core(other),
        })?;

        match self.sweep.axis {
            Axis::None => {}
            Axis::N => {
                if self.sweep.values.is_empty() {
                    return Err(invalid("sweep.values", "must be nonempty when an axis is set"));
                }
                if self.sweep.values.iter().any(|&v| !(v >= 1.0 && v.fract() == 0.0)) {
                    return Err(invalid("sweep.values", "element counts must be positive integers"));
                }
            }
            Axis::Pt => {
                if self.sweep.values.is_empty() {
                    return Err(invalid("sweep.values", "must be nonempty when an axis is set"));
                }
                for &v in &self.sweep.values {
                    positive("sweep.values", v)?;
                }
            }
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "must be nonempty"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(invalid("seeds", "must be distinct"));
        }
        if self.timing.n_values.is_empty() || self.timing.n_values.contains(&0) {
            return Err(invalid("timing.n_values", "must be nonempty positive counts"));
        }
        let m_max = geo.num_dues();
        if self.timing.m_values.is_empty() || self.timing.m_values.iter().any(|&m| m == 0 || m > m_max) {
            return Err(invalid("timing.m_values", format!("each value must lie in 1..={m_max}")));
        }
        if self.timing.repeats == 0 {
            return Err(invalid("timing.repeats", "must be at least 1"));
        }
        Ok(())
    }

    /// Scenario at one sweep point.
    pub fn scenario_at(&self, axis: Axis, value: f64) -> Scenario {
        let sc = self.scenario.clone();
        match axis {
            Axis::N => sc.with_elements(value as usize).expect("validated element count"),
            Axis::Pt => sc.with_power(value),
            Axis::None => sc,
        }
    }

    /// Sweep points, or the single base point when no axis is set.
    pub fn points(&self) -> Vec<(Axis, f64)> {
        match self.sweep.axis {
            Axis::None => vec![(Axis::None, 0.0)],
            axis => self.sweep.values.iter().map(|&v| (axis, v)).collect(),
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    ExperimentConfig::from_toml_str(&text).map_err(|e| match e {
        BenchError::Parse(msg) => BenchError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_scenario() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.scenario, Scenario::default());
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.sweep.axis, Axis::None);
        assert_eq!(cfg.seeds, vec![1]);
    }

    #[test]
    fn shipped_default_file_matches_builtin() {
        let text = include_str!("../configs/default.toml");
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let def = ExperimentConfig::default();
        assert_eq!(cfg.solver, def.solver);
        assert_eq!(cfg.timing, def.timing);
        assert_eq!(cfg.scenario.thresholds, def.scenario.thresholds);
        assert_eq!(cfg.scenario.radio, def.scenario.radio);
        let close = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
        let (g, d) = (&cfg.scenario.geometry, &def.scenario.geometry);
        assert!(close(&g.bs_position, &d.bs_position));
        assert!(g.cue_positions.iter().zip(&d.cue_positions).all(|(a, b)| close(a, b)));
        assert!(g.due_positions.iter().zip(&d.due_positions).all(|(a, b)| close(a, b)));
    }

    #[test]
    fn negative_power_names_the_field() {
        let err = ExperimentConfig::from_toml_str("[thresholds]\nP_t = -1.0\n").unwrap_err();
        assert!(matches!(&err, BenchError::Invalid { field, .. } if field == "thresholds.P_t"), "{err}");
        assert!(err.to_string().contains("thresholds.P_t"));
    }

    #[test]
    fn noise_in_dbm() {
        let cfg = ExperimentConfig::from_toml_str("[scenario]\nnoise_dbm = -90\n").unwrap();
        assert!((cfg.scenario.radio.noise_cue_w - 1e-12).abs() < 1e-24);
        let cfg = ExperimentConfig::from_toml_str("[scenario]\nnoise_dbm = -90\nnoise_sense_dbm = -80\n").unwrap();
        assert!((cfg.scenario.radio.noise_sense_w - 1e-11).abs() < 1e-23);
        assert!((cfg.scenario.radio.noise_due_w - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn parse_errors_carry_the_location() {
        let err = ExperimentConfig::from_toml_str("[thresholds]\nP_t = \"one\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        let err = ExperimentConfig::from_toml_str("[solver]\nrhoo = 1\n").unwrap_err();
        assert!(err.to_string().contains("rhoo"));
    }

    #[test]
    fn sweep_and_seed_invariants() {
        assert!(ExperimentConfig::from_toml_str("[sweep]\naxis = \"n\"\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[sweep]\naxis = \"n\"\nvalues = [16.5]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = [1, 1]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = []\n").is_err());
        let cfg = ExperimentConfig::from_toml_str("[sweep]\naxis = \"pt\"\nvalues = [0.5, 1, 2]\n").unwrap();
        assert_eq!(cfg.points().len(), 3);
        assert_eq!(cfg.scenario_at(Axis::Pt, 2.0).thresholds.p_t, 2.0);
    }

    #[test]
    fn elements_pick_a_grid() {
        let cfg = ExperimentConfig::from_toml_str("[scenario]\nelements = 36\n").unwrap();
        assert_eq!(cfg.scenario.radio.grid, (6, 6));
        assert!(ExperimentConfig::from_toml_str("[scenario]\nelements = 36\ngrid = [6, 6]\n").is_err());
    }

    #[test]
    fn solver_section_overrides_defaults() {
        let cfg = ExperimentConfig::from_toml_str("[solver]\nrho = 3.0\n[solver.steps]\nbase = 0.5\n").unwrap();
        assert_eq!(cfg.solver.rho, 3.0);
        assert_eq!(cfg.solver.steps.base, 0.5);
        assert_eq!(cfg.solver.max_iters, SolverConfig::default().max_iters);
    }
}
