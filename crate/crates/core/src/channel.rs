//! Geometry, array response and channel synthesis.
//!
//! Three channel families are generated for a scenario:
//! - `h_k`: BS → CUE `k`, pure line of sight.
//! - `g_{k,m}`: CUE `k` → DUE `m`, Rician.
//! - `z_{k,m,u}`: CUE `k` → DUE `m` → CUE `u`, round-trip sensing channel.
//!
//! Angles follow one convention everywhere: for the displacement
//! `(dx, dy, dz)` from transmitter to receiver, the azimuth is
//! `atan2(dy, dx)` and the elevation is measured from the array boresight
//! (`z` axis), `acos(dz / d)`.
//!
//! Random draws come from one master seed. Every `(family, k, m, u)` entry
//! has its own ChaCha stream, so enlarging the population never changes the
//! channels already drawn.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_position: Point3,
    pub cue_positions: Vec<Point3>,
    pub due_positions: Vec<Point3>,
}

impl Geometry {
    pub fn num_cues(&self) -> usize {
        self.cue_positions.len()
    }

    pub fn num_dues(&self) -> usize {
        self.due_positions.len()
    }

    /// Rejects coincident transmitter/receiver pairs.
    pub fn validate(&self) -> Result<()> {
        if self.cue_positions.is_empty() || self.due_positions.is_empty() {
            return Err(Error::DegenerateGeometry(
                "at least one CUE and one DUE are required".into(),
            ));
        }
        for (k, cue) in self.cue_positions.iter().enumerate() {
            if distance(&self.bs_position, cue) <= 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "CUE {k} coincides with the BS"
                )));
            }
            for (m, due) in self.due_positions.iter().enumerate() {
                if distance(cue, due) <= 0.0 {
                    return Err(Error::DegenerateGeometry(format!(
                        "CUE {k} coincides with DUE {m}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub carrier_freq_hz: f64,
    pub rician_factor: f64,
    pub rcs_m2: f64,
    /// Noise power at the CUE communication receivers, in watts.
    pub noise_cue_w: f64,
    /// Noise power at the DUEs, in watts.
    pub noise_due_w: f64,
    /// Noise power at the CUE sensing receivers, in watts.
    pub noise_sense_w: f64,
    /// `(N_r, N_c)`; the surface has `N = N_r * N_c` elements.
    pub grid: (usize, usize),
}

impl RadioParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn num_elements(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq_hz > 0.0) || !self.carrier_freq_hz.is_finite() {
            return Err(Error::invalid("carrier_freq_hz", "must be positive"));
        }
        if !(self.rician_factor >= 0.0) {
            return Err(Error::invalid("rician_factor", "must be nonnegative"));
        }
        if !(self.rcs_m2 > 0.0) {
            return Err(Error::invalid("rcs_m2", "must be positive"));
        }
        for (name, v) in [
            ("noise_cue_w", self.noise_cue_w),
            ("noise_due_w", self.noise_due_w),
            ("noise_sense_w", self.noise_sense_w),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::invalid("grid", "both dimensions must be at least 1"));
        }
        Ok(())
    }
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let dz = b[2] - a[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// `(elevation, azimuth, distance)` of `to` seen from `from`.
pub fn departure_angles(from: &Point3, to: &Point3) -> (f64, f64, f64) {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    let dz = to[2] - from[2];
    let d = (dx * dx + dy * dy + dz * dz).sqrt();
    let theta = if d > 0.0 {
        (dz / d).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    (theta, dy.atan2(dx), d)
}

/// Free-space amplitude path loss `λ / (4π d)`.
pub fn path_loss(wavelength: f64, d: f64) -> f64 {
    wavelength / (4.0 * PI * d)
}

/// Planar-array response `row ⊗ col` with
/// `row[r] = exp(-jπ sinθ cosφ r)` and `col[c] = exp(-j2π sinθ sinφ c)`.
pub fn steering_vector(theta: f64, phi: f64, grid: (usize, usize)) -> Vec<Complex64> {
    let (nr, nc) = grid;
    let st = theta.sin();
    let row_phase = -PI * st * phi.cos();
    let col_phase = -2.0 * PI * st * phi.sin();
    let mut out = Vec::with_capacity(nr * nc);
    for r in 0..nr {
        for c in 0..nc {
            out.push(Complex64::from_polar(
                1.0,
                row_phase * r as f64 + col_phase * c as f64,
            ));
        }
    }
    out
}

/// Draws `CN(0, var)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

#[derive(Debug, Clone, Copy)]
enum Family {
    Rician = 1,
    Sensing = 2,
}

/// Independent generator for one channel entry.
fn substream(seed: u64, family: Family, k: usize, m: usize, u: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = ((family as u64) << 60) | ((k as u64) << 40) | ((m as u64) << 20) | u as u64;
    rng.set_stream(id);
    rng
}

/// Line-of-sight BS → CUE `k` channel (0-based `k`).
pub fn los_channel(geometry: &Geometry, radio: &RadioParams, k: usize) -> Result<Vec<Complex64>> {
    let cue = geometry
        .cue_positions
        .get(k)
        .ok_or(Error::IndexOutOfRange {
            what: "CUE",
            index: k,
            lo: 0,
            hi: geometry.num_cues().saturating_sub(1),
        })?;
    let (theta, phi, d) = departure_angles(&geometry.bs_position, cue);
    if d <= 0.0 {
        return Err(Error::DegenerateGeometry(format!("CUE {k} at the BS")));
    }
    let xi = path_loss(radio.wavelength(), d);
    Ok(steering_vector(theta, phi, radio.grid)
        .into_iter()
        .map(|a| a * xi)
        .collect())
}

fn cue_due(geometry: &Geometry, k: usize, m: usize) -> Result<(&Point3, &Point3)> {
    let cue = geometry.cue_positions.get(k).ok_or(Error::IndexOutOfRange {
        what: "CUE",
        index: k,
        lo: 0,
        hi: geometry.num_cues().saturating_sub(1),
    })?;
    let due = geometry.due_positions.get(m).ok_or(Error::IndexOutOfRange {
        what: "DUE",
        index: m,
        lo: 0,
        hi: geometry.num_dues().saturating_sub(1),
    })?;
    Ok((cue, due))
}

/// Rician CUE `k` → DUE `m` channel drawn from `rng`.
pub fn rician_channel<R: Rng + ?Sized>(
    geometry: &Geometry,
    radio: &RadioParams,
    k: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let (cue, due) = cue_due(geometry, k, m)?;
    let (theta, phi, d) = departure_angles(cue, due);
    if d <= 0.0 {
        return Err(Error::DegenerateGeometry(format!("CUE {k} at DUE {m}")));
    }
    let xi = path_loss(radio.wavelength(), d);
    let kappa = radio.rician_factor;
    let los_w = (kappa / (kappa + 1.0)).sqrt();
    let nlos_w = (1.0 / (kappa + 1.0)).sqrt();
    Ok(steering_vector(theta, phi, radio.grid)
        .into_iter()
        .map(|a| xi * (los_w * a + nlos_w * complex_gaussian(rng, 1.0)))
        .collect())
}

/// Variance of the reflection coefficient `α_{k,m,u}`.
pub fn reflection_variance(rcs: f64, wavelength: f64, d_km: f64, d_um: f64) -> f64 {
    rcs * wavelength * wavelength / ((4.0 * PI).powi(3) * d_km * d_km * d_um * d_um)
}

/// Round-trip sensing channel CUE `k` → DUE `m` → CUE `u`.
pub fn sensing_channel<R: Rng + ?Sized>(
    geometry: &Geometry,
    radio: &RadioParams,
    k: usize,
    m: usize,
    u: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let (cue, due) = cue_due(geometry, k, m)?;
    let (rx, _) = cue_due(geometry, u, m)?;
    let (theta, phi, d_km) = departure_angles(cue, due);
    let d_um = distance(rx, due);
    if d_km <= 0.0 || d_um <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "zero-length sensing leg for ({k}, {m}, {u})"
        )));
    }
    let lambda = radio.wavelength();
    let alpha = complex_gaussian(rng, reflection_variance(radio.rcs_m2, lambda, d_km, d_um));
    let phase = Complex64::from_polar(1.0, -2.0 * PI * d_um / lambda);
    Ok(steering_vector(theta, phi, radio.grid)
        .into_iter()
        .map(|a| alpha * phase * a)
        .collect())
}

/// All channels of one random draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub seed: u64,
    pub n: usize,
    /// `h[k]`, length `N`.
    pub h: Vec<Vec<Complex64>>,
    /// `g[k][m]`, length `N`.
    pub g: Vec<Vec<Vec<Complex64>>>,
    /// `z[k][m][u]`, length `N`.
    pub z: Vec<Vec<Vec<Vec<Complex64>>>>,
}

impl ChannelSet {
    /// Synthesizes every channel of the scenario from `seed`.
    pub fn generate(geometry: &Geometry, radio: &RadioParams, seed: u64) -> Result<Self> {
        geometry.validate()?;
        radio.validate()?;
        let kn = geometry.num_cues();
        let mn = geometry.num_dues();
        let h = (0..kn)
            .map(|k| los_channel(geometry, radio, k))
            .collect::<Result<Vec<_>>>()?;
        let mut g = Vec::with_capacity(kn);
        let mut z = Vec::with_capacity(kn);
        for k in 0..kn {
            let mut gk = Vec::with_capacity(mn);
            let mut zk = Vec::with_capacity(mn);
            for m in 0..mn {
                let mut rng = substream(seed, Family::Rician, k, m, 0);
                gk.push(rician_channel(geometry, radio, k, m, &mut rng)?);
                let zkm = (0..kn)
                    .map(|u| {
                        let mut rng = substream(seed, Family::Sensing, k, m, u);
                        sensing_channel(geometry, radio, k, m, u, &mut rng)
                    })
                    .collect::<Result<Vec<_>>>()?;
                zk.push(zkm);
            }
            g.push(gk);
            z.push(zk);
        }
        Ok(Self {
            seed,
            n: radio.num_elements(),
            h,
            g,
            z,
        })
    }

    pub fn num_cues(&self) -> usize {
        self.h.len()
    }

    pub fn num_dues(&self) -> usize {
        self.g.first().map_or(0, Vec::len)
    }

    /// `h~_k`: `K+1` stacked copies of `h_k`.
    pub fn h_expanded(&self, k: usize) -> Vec<Complex64> {
        self.h[k].repeat(self.num_cues() + 1)
    }

    /// `g~_{k,m}`: `M` stacked copies of `g_{k,m}`.
    pub fn g_expanded(&self, k: usize, m: usize) -> Vec<Complex64> {
        self.g[k][m].repeat(self.num_dues())
    }

    /// `z~_{k,u} = [z_{k,1,u}; ...; z_{k,M,u}]`.
    pub fn z_stacked(&self, k: usize, u: usize) -> Vec<Complex64> {
        self.z[k].iter().flat_map(|zm| zm[u].iter().copied()).collect()
    }

    /// JSON dump with `[re, im]` entries under keys `h/k`, `g/k/m`, `z/k/m/u`
    /// (1-based), plus the seed and the geometry that produced the draw.
    pub fn to_json(&self, geometry: &Geometry) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let enc = |v: &[Complex64]| -> Value {
            Value::Array(v.iter().map(|c| json!([c.re, c.im])).collect())
        };
        let mut channels = Map::new();
        for (k, hk) in self.h.iter().enumerate() {
            channels.insert(format!("h/{}", k + 1), enc(hk));
        }
        for (k, gk) in self.g.iter().enumerate() {
            for (m, gkm) in gk.iter().enumerate() {
                channels.insert(format!("g/{}/{}", k + 1, m + 1), enc(gkm));
            }
        }
        for (k, zk) in self.z.iter().enumerate() {
            for (m, zkm) in zk.iter().enumerate() {
                for (u, zkmu) in zkm.iter().enumerate() {
                    channels.insert(format!("z/{}/{}/{}", k + 1, m + 1, u + 1), enc(zkmu));
                }
            }
        }
        json!({
            "seed": self.seed,
            "n": self.n,
            "geometry": geometry,
            "channels": channels,
        })
    }

    /// Inverse of [`ChannelSet::to_json`].
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let bad = |what: &str| Error::Serialization(format!("channel dump: {what}"));
        let seed = value["seed"].as_u64().ok_or_else(|| bad("missing seed"))?;
        let n = value["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
        let geometry: Geometry = serde_json::from_value(value["geometry"].clone())?;
        let channels = value["channels"]
            .as_object()
            .ok_or_else(|| bad("missing channels"))?;
        let dec = |key: String| -> Result<Vec<Complex64>> {
            let arr = channels
                .get(&key)
                .and_then(|v| v.as_array())
                .ok_or_else(|| bad(&format!("missing {key}")))?;
            let out = arr
                .iter()
                .map(|e| {
                    let re = e.get(0).and_then(|x| x.as_f64());
                    let im = e.get(1).and_then(|x| x.as_f64());
                    match (re, im) {
                        (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                        _ => Err(bad(&format!("malformed entry in {key}"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if out.len() != n {
                return Err(bad(&format!("{key} has {} entries, expected {n}", out.len())));
            }
            Ok(out)
        };
        let kn = geometry.num_cues();
        let mn = geometry.num_dues();
        let h = (0..kn)
            .map(|k| dec(format!("h/{}", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        let mut g = Vec::with_capacity(kn);
        let mut z = Vec::with_capacity(kn);
        for k in 0..kn {
            g.push(
                (0..mn)
                    .map(|m| dec(format!("g/{}/{}", k + 1, m + 1)))
                    .collect::<Result<Vec<_>>>()?,
            );
            let mut zk = Vec::with_capacity(mn);
            for m in 0..mn {
                zk.push(
                    (0..kn)
                        .map(|u| dec(format!("z/{}/{}/{}", k + 1, m + 1, u + 1)))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            z.push(zk);
        }
        Ok(Self { seed, n, h, g, z })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radio(grid: (usize, usize)) -> RadioParams {
        RadioParams {
            carrier_freq_hz: SPEED_OF_LIGHT / 0.1,
            rician_factor: 10.0,
            rcs_m2: 1.0,
            noise_cue_w: 1e-12,
            noise_due_w: 1e-12,
            noise_sense_w: 1e-12,
            grid,
        }
    }

    fn geometry() -> Geometry {
        Geometry {
            bs_position: [0.0, 0.0, 50.0],
            cue_positions: vec![[50.0, 50.0, 10.0], [-50.0, 50.0, 10.0]],
            due_positions: vec![[150.0, 50.0, 5.0], [25.0, 200.0, 5.0]],
        }
    }

    #[test]
    fn boresight_steering_is_all_ones() {
        for phi in [0.0, 0.7, -2.0] {
            let a = steering_vector(0.0, phi, (2, 2));
            assert!(a.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn endfire_row_factor_alternates() {
        let a = steering_vector(PI / 2.0, 0.0, (2, 1));
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_entries_are_unit_modulus() {
        for (t, p) in [(0.3, 1.1), (2.0, -0.4), (1.2, 3.0)] {
            let a = steering_vector(t, p, (3, 4));
            assert_eq!(a.len(), 12);
            assert!(a.iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn los_path_loss_example() {
        let r = radio((4, 4));
        let g = geometry();
        let h = los_channel(&g, &r, 0).unwrap();
        let d = 6600f64.sqrt();
        assert!((d - 81.240).abs() < 1e-3);
        let xi = 0.1 / (4.0 * PI * d);
        assert!((xi - 9.795e-5).abs() < 1e-8);
        let norm = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - xi * 4.0).abs() / (xi * 4.0) < 1e-12);
    }

    #[test]
    fn cue_below_bs_is_well_defined() {
        let mut g = geometry();
        g.cue_positions[0] = [0.0, 0.0, 10.0];
        let h = los_channel(&g, &radio((2, 2)), 0).unwrap();
        assert!(h.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        let (theta, _, _) = departure_angles(&g.bs_position, &g.cue_positions[0]);
        assert!((theta - PI).abs() < 1e-12);
    }

    #[test]
    fn coincident_positions_are_rejected() {
        let mut g = geometry();
        g.cue_positions[1] = g.bs_position;
        assert!(matches!(g.validate(), Err(Error::DegenerateGeometry(_))));
        assert!(los_channel(&g, &radio((2, 2)), 1).is_err());
    }

    #[test]
    fn huge_rician_factor_gives_los() {
        let mut r = radio((2, 2));
        r.rician_factor = 1e12;
        let g = geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = rician_channel(&g, &r, 0, 1, &mut rng).unwrap();
        let (theta, phi, d) = departure_angles(&g.cue_positions[0], &g.due_positions[1]);
        let xi = path_loss(r.wavelength(), d);
        let los: Vec<_> = steering_vector(theta, phi, r.grid)
            .into_iter()
            .map(|a| a * xi)
            .collect();
        let err: f64 = ch.iter().zip(&los).map(|(a, b)| (a - b).norm_sqr()).sum();
        let refn: f64 = los.iter().map(|b| b.norm_sqr()).sum();
        assert!((err / refn).sqrt() < 1e-5);
    }

    #[test]
    fn rayleigh_limit_statistics() {
        // kappa = 0: zero mean, E||g||^2 = xi^2 N
        let mut r = radio((2, 2));
        r.rician_factor = 0.0;
        let g = geometry();
        let (_, _, d) = departure_angles(&g.cue_positions[0], &g.due_positions[0]);
        let xi = path_loss(r.wavelength(), d);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut energy = 0.0;
        for _ in 0..draws {
            let ch = rician_channel(&g, &r, 0, 0, &mut rng).unwrap();
            mean += ch[0];
            energy += ch.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        mean /= draws as f64;
        energy /= draws as f64;
        // per-component std of the sample mean: xi / sqrt(2 * draws)
        let sigma = xi / (2.0 * draws as f64).sqrt();
        assert!(mean.re.abs() < 3.0 * sigma && mean.im.abs() < 3.0 * sigma);
        assert!((energy / (xi * xi * 4.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn rician_energy_concentrates() {
        let r = radio((4, 2));
        let g = geometry();
        let (_, _, d) = departure_angles(&g.cue_positions[1], &g.due_positions[1]);
        let xi = path_loss(r.wavelength(), d);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 10_000;
        let mut energy = 0.0;
        for _ in 0..draws {
            let ch = rician_channel(&g, &r, 1, 1, &mut rng).unwrap();
            energy += ch.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        energy /= draws as f64;
        assert!((energy / (xi * xi * 8.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn reflection_variance_example() {
        let v = reflection_variance(1.0, 0.1, 100.0, 100.0);
        assert!(((4.0 * PI).powi(3) - 1984.40).abs() < 0.01);
        assert!((v - 5.039e-14).abs() / 5.039e-14 < 1e-3);
    }

    #[test]
    fn full_wavelength_round_trip_has_unit_phase() {
        let lambda: f64 = 0.1;
        let phase = Complex64::from_polar(1.0, -2.0 * PI * lambda / lambda);
        assert!((phase - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn reflection_sample_variance() {
        let r = radio((1, 1));
        let g = geometry();
        let d_km = distance(&g.cue_positions[0], &g.due_positions[1]);
        let d_um = distance(&g.cue_positions[1], &g.due_positions[1]);
        let var = reflection_variance(r.rcs_m2, r.wavelength(), d_km, d_um);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            // single-element array: |z|^2 = |alpha|^2
            let z = sensing_channel(&g, &r, 0, 1, 1, &mut rng).unwrap();
            acc += z[0].norm_sqr();
        }
        assert!((acc / draws as f64 / var - 1.0).abs() < 0.05);
    }

    #[test]
    fn generation_is_deterministic_and_prefix_stable() {
        let r = radio((2, 2));
        let g = geometry();
        let a = ChannelSet::generate(&g, &r, 42).unwrap();
        let b = ChannelSet::generate(&g, &r, 42).unwrap();
        assert_eq!(a, b);
        let c = ChannelSet::generate(&g, &r, 43).unwrap();
        assert_ne!(a.g, c.g);

        let mut bigger = g.clone();
        bigger.due_positions.push([-150.0, -50.0, 5.0]);
        let d = ChannelSet::generate(&bigger, &r, 42).unwrap();
        for k in 0..2 {
            for m in 0..2 {
                assert_eq!(a.g[k][m], d.g[k][m]);
                assert_eq!(a.z[k][m], d.z[k][m]);
            }
        }
    }

    #[test]
    fn los_norm_matches_path_loss() {
        let r = radio((3, 3));
        let g = geometry();
        let set = ChannelSet::generate(&g, &r, 1).unwrap();
        for (k, hk) in set.h.iter().enumerate() {
            let d = distance(&g.bs_position, &g.cue_positions[k]);
            let xi = path_loss(r.wavelength(), d);
            let norm = hk.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - xi * 3.0).abs() < 1e-12 * xi * 3.0);
        }
    }

    #[test]
    fn json_dump_round_trips() {
        let r = radio((2, 1));
        let g = geometry();
        let set = ChannelSet::generate(&g, &r, 9).unwrap();
        let v = set.to_json(&g);
        assert!(v["channels"]["z/2/1/2"].is_array());
        let back = ChannelSet::from_json(&v).unwrap();
        assert_eq!(back, set);
    }
}
