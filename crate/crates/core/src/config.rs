//! JSON scenario configuration.
//!
//! Every key is optional; missing keys take the nominal values below. Angles
//! are in degrees here and nowhere else. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "orbit": { "altitude_km": 375, "inclination_deg": 55, "raan_deg": -50, "phase_deg": 40 },
//!   "ue": { "latitude_deg": 48.8323, "longitude_deg": 2.3364, "height_km": 0,
//!           "speed_km_s": 0.30677, "direction": null },
//!   "earth": { "equatorial_radius_km": 6371, "polar_radius_km": 6371, "mu_km3_s2": 398600.4418 },
//!   "noise": { "q_diag": [0, 0, 0, 1e-4, 1e-4, 1e-4, 0, 0, 0, 1e-4, 1e-4, 1e-4],
//!              "r_range_km2": 0.01, "r_elevation_rad2": 1e-6, "r_position_km2": 0.01 },
//!   "initial_cov_diag": [1, 1, 1, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 1e-4, 1e-4, 1e-4],
//!   "clock": { "eps1": 0, "eps2": 0 },
//!   "f_t_hz": 10.7e9, "c_km_s": 300000, "dt_s": 0.01, "t0_s": 0, "t1_s": 800,
//!   "seed": 1, "theta_min_deg": 0,
//!   "measurement_mode": "range_elevation",
//!   "measurements_only_when_visible": true,
//!   "covariance_form": "joseph"
//! }
//! ```
//!
//! `ue.direction` is an earth-centred unit vector for the UE velocity; `null`
//! means local east at the start point.

use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Matrix12, OrbitElements, StateVector};
use crate::error::{Error, Result};
use crate::estimator::{CovarianceForm, NoiseConfig};
use crate::geo::{
    local_east, EarthModel, GeodeticPosition, Vec3, EARTH_MU_KM3_S2, EARTH_RADIUS_KM,
};
use crate::link::{ClockModel, SPEED_OF_LIGHT_KM_S};
use crate::scenario::{
    default_initial_cov, default_process_noise, nominal_orbit, nominal_ue_start, MeasurementMode,
    ScenarioConfig, NOMINAL_UE_SPEED,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSection {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub phase_deg: f64,
}

impl Default for OrbitSection {
    fn default() -> Self {
        let o = nominal_orbit();
        Self {
            altitude_km: o.altitude,
            inclination_deg: 55.0,
            raan_deg: -50.0,
            phase_deg: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeSection {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub height_km: f64,
    pub speed_km_s: f64,
    pub direction: Option<[f64; 3]>,
}

impl Default for UeSection {
    fn default() -> Self {
        Self {
            latitude_deg: 48.8323,
            longitude_deg: 2.3364,
            height_km: nominal_ue_start().height,
            speed_km_s: NOMINAL_UE_SPEED,
            direction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarthSection {
    pub equatorial_radius_km: f64,
    pub polar_radius_km: f64,
    pub mu_km3_s2: f64,
}

impl Default for EarthSection {
    fn default() -> Self {
        Self {
            equatorial_radius_km: EARTH_RADIUS_KM,
            polar_radius_km: EARTH_RADIUS_KM,
            mu_km3_s2: EARTH_MU_KM3_S2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Diagonal of Q in state order (sat pos, sat vel, UE pos, UE vel).
    pub q_diag: [f64; 12],
    pub r_range_km2: f64,
    pub r_elevation_rad2: f64,
    pub r_position_km2: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::default();
        let q = default_process_noise().diagonal();
        Self {
            q_diag: std::array::from_fn(|i| q[i]),
            r_range_km2: n.r[(0, 0)],
            r_elevation_rad2: n.r[(1, 1)],
            r_position_km2: n.r_position[(0, 0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub orbit: OrbitSection,
    pub ue: UeSection,
    pub earth: EarthSection,
    pub noise: NoiseSection,
    pub initial_cov_diag: [f64; 12],
    pub clock: ClockModel,
    pub f_t_hz: f64,
    pub c_km_s: f64,
    pub dt_s: f64,
    pub t0_s: f64,
    pub t1_s: f64,
    pub seed: u64,
    pub theta_min_deg: f64,
    pub measurement_mode: MeasurementMode,
    pub measurements_only_when_visible: bool,
    pub covariance_form: CovarianceForm,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        let p0 = default_initial_cov().diagonal();
        Self {
            orbit: OrbitSection::default(),
            ue: UeSection::default(),
            earth: EarthSection::default(),
            noise: NoiseSection::default(),
            initial_cov_diag: std::array::from_fn(|i| p0[i]),
            clock: s.clock,
            f_t_hz: s.f_t,
            c_km_s: SPEED_OF_LIGHT_KM_S,
            dt_s: s.dt,
            t0_s: s.t0,
            t1_s: s.t1,
            seed: s.seed,
            theta_min_deg: 0.0,
            measurement_mode: s.measurement_mode,
            measurements_only_when_visible: s.measurements_only_when_visible,
            covariance_form: s.covariance_form,
        }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Converts to radians and matrices and validates the result. Errors name
    /// the offending field.
    pub fn to_scenario(&self) -> Result<ScenarioConfig> {
        let field =
            |name: &'static str| move |e: Error| Error::config(format!("{name}: {}", strip(&e)));
        let earth = EarthModel::new(
            self.earth.equatorial_radius_km,
            self.earth.polar_radius_km,
            self.earth.mu_km3_s2,
        )
        .map_err(field("earth"))?;
        let ue_start = GeodeticPosition::from_degrees(
            self.ue.latitude_deg,
            self.ue.longitude_deg,
            self.ue.height_km,
        )
        .map_err(field("ue"))?;
        if !(self.ue.speed_km_s >= 0.0 && self.ue.speed_km_s.is_finite()) {
            return Err(Error::config(format!(
                "ue.speed_km_s = {} must be >= 0",
                self.ue.speed_km_s
            )));
        }
        let direction = match self.ue.direction {
            None => local_east(&ue_start),
            Some(d) => {
                let v = Vec3::from(d);
                let n = v.norm();
                if !(n > 0.0 && n.is_finite()) {
                    return Err(Error::config(
                        "ue.direction must be a non-zero finite vector",
                    ));
                }
                v / n
            }
        };
        let orbit = OrbitElements {
            altitude: self.orbit.altitude_km,
            inclination: self.orbit.inclination_deg.to_radians(),
            raan: self.orbit.raan_deg.to_radians(),
            phase: self.orbit.phase_deg.to_radians(),
        };
        orbit.validate().map_err(field("orbit"))?;
        let noise = NoiseConfig {
            q: Matrix12::from_diagonal(&StateVector::from_column_slice(&self.noise.q_diag)),
            r: Matrix2::from_diagonal(&Vector2::new(
                self.noise.r_range_km2,
                self.noise.r_elevation_rad2,
            )),
            r_position: Matrix3::identity() * self.noise.r_position_km2,
        };
        noise.validate().map_err(field("noise"))?;
        let cfg = ScenarioConfig {
            orbit,
            ue_start,
            ue_velocity: direction * self.ue.speed_km_s,
            earth,
            noise,
            initial_cov: Matrix12::from_diagonal(&StateVector::from_column_slice(
                &self.initial_cov_diag,
            )),
            clock: self.clock,
            f_t: self.f_t_hz,
            c: self.c_km_s,
            dt: self.dt_s,
            t0: self.t0_s,
            t1: self.t1_s,
            seed: self.seed,
            theta_min: self.theta_min_deg.to_radians(),
            measurement_mode: self.measurement_mode,
            measurements_only_when_visible: self.measurements_only_when_visible,
            covariance_form: self.covariance_form,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Domain(m) | Error::Config(m) | Error::Numerical(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Reads a JSON config file; an empty file means all defaults.
pub fn load_config_file(path: impl AsRef<Path>) -> Result<ConfigFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(ConfigFile::default());
    }
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    load_config_file(path)?.to_scenario()
}
