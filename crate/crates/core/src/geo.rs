//! Earth-centred geometry between a ground UE and a satellite.
//!
//! Every vector lives in one earth-centred Cartesian frame with the origin at
//! the earth's centre, in kilometres. No earth rotation is modelled, so this
//! frame is both the "inertial" frame of the orbit and the frame the UE's
//! geodetic coordinates are expressed in.

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Mean earth radius used by the spherical model, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Earth's gravitational parameter, km³/s².
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthModel {
    /// Semi-major axis, km.
    pub equatorial_radius: f64,
    /// Semi-minor axis, km.
    pub polar_radius: f64,
    /// Gravitational parameter, km³/s².
    pub mu: f64,
}

impl Default for EarthModel {
    fn default() -> Self {
        Self::spherical(EARTH_RADIUS_KM)
    }
}

impl EarthModel {
    pub fn spherical(radius: f64) -> Self {
        Self {
            equatorial_radius: radius,
            polar_radius: radius,
            mu: EARTH_MU_KM3_S2,
        }
    }

    pub fn new(equatorial_radius: f64, polar_radius: f64, mu: f64) -> Result<Self> {
        let model = Self {
            equatorial_radius,
            polar_radius,
            mu,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.polar_radius > 0.0 && self.polar_radius.is_finite()) {
            return Err(Error::domain("polar radius must be positive and finite"));
        }
        if !(self.equatorial_radius >= self.polar_radius && self.equatorial_radius.is_finite()) {
            return Err(Error::domain(
                "equatorial radius must be finite and at least the polar radius",
            ));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::domain("gravitational parameter must be positive"));
        }
        Ok(())
    }

    /// Radius used by the spherical-triangle relations (the equatorial radius).
    pub fn radius(&self) -> f64 {
        self.equatorial_radius
    }
}

/// UE location as latitude / longitude (radians) and height above the surface (km).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodeticPosition {
    pub latitude: f64,
    pub longitude: f64,
    pub height: f64,
}

impl GeodeticPosition {
    pub fn new(latitude: f64, longitude: f64, height: f64) -> Result<Self> {
        let g = Self {
            latitude,
            longitude,
            height,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn from_degrees(latitude_deg: f64, longitude_deg: f64, height: f64) -> Result<Self> {
        Self::new(
            latitude_deg.to_radians(),
            longitude_deg.to_radians(),
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::{FRAC_PI_2, PI};
        if !(self.latitude.is_finite() && self.longitude.is_finite() && self.height.is_finite()) {
            return Err(Error::domain("geodetic coordinates must be finite"));
        }
        if self.latitude.abs() > FRAC_PI_2 {
            return Err(Error::domain(format!(
                "latitude {} rad outside [-pi/2, pi/2]",
                self.latitude
            )));
        }
        if !(self.longitude > -PI && self.longitude <= PI) {
            return Err(Error::domain(format!(
                "longitude {} rad outside (-pi, pi]",
                self.longitude
            )));
        }
        if self.height < 0.0 {
            return Err(Error::domain("height must be non-negative"));
        }
        Ok(())
    }
}

fn check_finite(v: &Vec3, what: &str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} has non-finite components")))
    }
}

/// Geodetic to earth-centred position, km. Uses the ellipsoidal form with the
/// prime-vertical radius of curvature, so a spherical model gives a vector of
/// length `radius + height`.
pub fn geodetic_to_ecef(g: &GeodeticPosition, m: &EarthModel) -> Result<Vec3> {
    g.validate()?;
    let (a, b) = (m.equatorial_radius, m.polar_radius);
    let (sin_lat, cos_lat) = g.latitude.sin_cos();
    let (sin_lon, cos_lon) = g.longitude.sin_cos();
    let n = a * a / (a * a * cos_lat * cos_lat + b * b * sin_lat * sin_lat).sqrt();
    let nh = n + g.height;
    Ok(Vec3::new(
        nh * cos_lat * cos_lon,
        nh * cos_lat * sin_lon,
        b * b * nh / (a * a) * sin_lat,
    ))
}

/// Local east unit vector at a geodetic position.
pub fn local_east(g: &GeodeticPosition) -> Vec3 {
    let (sin_lon, cos_lon) = g.longitude.sin_cos();
    Vec3::new(-sin_lon, cos_lon, 0.0)
}

/// Angle at the earth's centre between the UE and satellite position vectors, in `[0, pi]`.
pub fn earth_centered_angle(p_u: &Vec3, p_l: &Vec3) -> Result<f64> {
    check_finite(p_u, "UE position")?;
    check_finite(p_l, "satellite position")?;
    let (nu, nl) = (p_u.norm(), p_l.norm());
    if nu == 0.0 || nl == 0.0 {
        return Err(Error::domain("earth-centred angle of a zero vector"));
    }
    Ok((p_u.dot(p_l) / (nu * nl)).clamp(-1.0, 1.0).acos())
}

/// Elevation of the satellite above the UE's local horizon, in `[-pi/2, pi/2]`.
pub fn elevation_angle(p_l: &Vec3, p_u: &Vec3) -> Result<f64> {
    check_finite(p_u, "UE position")?;
    check_finite(p_l, "satellite position")?;
    let nu = p_u.norm();
    if nu == 0.0 {
        return Err(Error::domain("elevation seen from the earth's centre"));
    }
    let los = p_l - p_u;
    let d = los.norm();
    if d == 0.0 {
        return Err(Error::domain("elevation between coincident points"));
    }
    Ok((los.dot(p_u) / (nu * d)).clamp(-1.0, 1.0).asin())
}

pub fn slant_range(p_l: &Vec3, p_u: &Vec3) -> f64 {
    (p_l - p_u).norm()
}

/// Slant range from the earth-centred angle by the law of cosines, for a UE on
/// the surface of radius `m.radius()`.
pub fn slant_range_from_gamma(gamma: f64, r_l: f64, m: &EarthModel) -> Result<f64> {
    let re = m.radius();
    if !(gamma.is_finite() && r_l.is_finite()) {
        return Err(Error::domain("non-finite angle or radius"));
    }
    if r_l < re {
        return Err(Error::domain(format!(
            "satellite radius {r_l} km is below the surface ({re} km)"
        )));
    }
    Ok((re * re + r_l * r_l - 2.0 * re * r_l * gamma.cos())
        .max(0.0)
        .sqrt())
}
