//! Joint satellite / UE motion model.
//!
//! The filter model is the explicit Euler step of `ṗ = v`, `v̇ = -μ p / |p|³`
//! for the satellite and of constant-velocity motion for the UE. Simulated
//! truth uses a separate fourth-order Runge-Kutta integrator (or the analytic
//! circular orbit) so that the filter's discretisation error is a genuine
//! model mismatch.

use nalgebra::{Matrix3, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geo::{EarthModel, Vec3};

pub type StateVector = SVector<f64, 12>;
pub type Matrix12 = SMatrix<f64, 12, 12>;

/// Offsets of the four 3-vectors inside the flattened state.
pub const SAT_POS: usize = 0;
pub const SAT_VEL: usize = 3;
pub const UE_POS: usize = 6;
pub const UE_VEL: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatState {
    pub pos: Vec3,
    pub vel: Vec3,
}

impl SatState {
    pub fn specific_energy(&self, mu: f64) -> f64 {
        0.5 * self.vel.norm_squared() - mu / self.pos.norm()
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.pos.cross(&self.vel)
    }
}

/// Satellite and UE position/velocity, flattened as `[p_sat, v_sat, p_ue, v_ue]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub sat_pos: Vec3,
    pub sat_vel: Vec3,
    pub ue_pos: Vec3,
    pub ue_vel: Vec3,
}

impl JointState {
    pub fn new(sat: SatState, ue_pos: Vec3, ue_vel: Vec3) -> Self {
        Self {
            sat_pos: sat.pos,
            sat_vel: sat.vel,
            ue_pos,
            ue_vel,
        }
    }

    pub fn sat(&self) -> SatState {
        SatState {
            pos: self.sat_pos,
            vel: self.sat_vel,
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(SAT_POS).copy_from(&self.sat_pos);
        x.fixed_rows_mut::<3>(SAT_VEL).copy_from(&self.sat_vel);
        x.fixed_rows_mut::<3>(UE_POS).copy_from(&self.ue_pos);
        x.fixed_rows_mut::<3>(UE_VEL).copy_from(&self.ue_vel);
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            sat_pos: x.fixed_rows::<3>(SAT_POS).into_owned(),
            sat_vel: x.fixed_rows::<3>(SAT_VEL).into_owned(),
            ue_pos: x.fixed_rows::<3>(UE_POS).into_owned(),
            ue_vel: x.fixed_rows::<3>(UE_VEL).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Circular-orbit description used by the synthetic truth generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitElements {
    /// Height above the surface, km.
    pub altitude: f64,
    /// Radians, in `[0, pi]`.
    pub inclination: f64,
    /// Right ascension of the ascending node, radians.
    pub raan: f64,
    /// Argument of latitude at `t = 0`, radians.
    pub phase: f64,
}

impl OrbitElements {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude > 0.0 && self.altitude.is_finite()) {
            return Err(Error::domain("orbit altitude must be positive"));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.inclination) {
            return Err(Error::domain("inclination must lie in [0, pi]"));
        }
        if !(self.raan.is_finite() && self.phase.is_finite()) {
            return Err(Error::domain("non-finite orbit angle"));
        }
        Ok(())
    }

    pub fn radius(&self, m: &EarthModel) -> f64 {
        m.radius() + self.altitude
    }

    pub fn mean_motion(&self, m: &EarthModel) -> f64 {
        (m.mu / self.radius(m).powi(3)).sqrt()
    }

    pub fn period(&self, m: &EarthModel) -> f64 {
        std::f64::consts::TAU / self.mean_motion(m)
    }
}

/// Two-body acceleration `-μ p / |p|³`, km/s².
pub fn gravitational_acceleration(p_l: &Vec3, m: &EarthModel) -> Result<Vec3> {
    let r2 = p_l.norm_squared();
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::domain("gravitational acceleration at the origin"));
    }
    Ok(gravity(p_l, m.mu))
}

#[inline]
fn gravity(p: &Vec3, mu: f64) -> Vec3 {
    let r2 = p.norm_squared();
    -mu / (r2 * r2.sqrt()) * p
}

/// Gravity gradient `∂a/∂p = -μ/|p|⁵ (|p|² I - 3 p pᵀ)`; symmetric and traceless.
pub fn gravity_gradient(p_l: &Vec3, m: &EarthModel) -> Result<Matrix3<f64>> {
    let r2 = p_l.norm_squared();
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::domain("gravity gradient at the origin"));
    }
    let r5 = r2 * r2 * r2.sqrt();
    let mut a = Matrix3::zeros();
    for i in 0..3 {
        a[(i, i)] = -m.mu / r5 * (r2 - 3.0 * p_l[i] * p_l[i]);
        for j in (i + 1)..3 {
            let v = m.mu / r5 * 3.0 * p_l[i] * p_l[j];
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}

/// One noise-free Euler step of the joint model.
pub fn propagate_joint(x: &JointState, dt: f64, m: &EarthModel) -> Result<JointState> {
    if !(dt > 0.0) {
        return Err(Error::domain("time step must be positive"));
    }
    let a = gravitational_acceleration(&x.sat_pos, m)?;
    Ok(JointState {
        sat_pos: x.sat_pos + x.sat_vel * dt,
        sat_vel: x.sat_vel + a * dt,
        ue_pos: x.ue_pos + x.ue_vel * dt,
        ue_vel: x.ue_vel,
    })
}

/// Jacobian of [`propagate_joint`] with respect to the 12-state.
pub fn motion_jacobian(x: &JointState, dt: f64, m: &EarthModel) -> Result<Matrix12> {
    if !(dt > 0.0) {
        return Err(Error::domain("time step must be positive"));
    }
    let a = gravity_gradient(&x.sat_pos, m)?;
    let mut f = Matrix12::identity();
    let dt_i = Matrix3::identity() * dt;
    f.fixed_view_mut::<3, 3>(SAT_POS, SAT_VEL).copy_from(&dt_i);
    f.fixed_view_mut::<3, 3>(SAT_VEL, SAT_POS)
        .copy_from(&(a * dt));
    f.fixed_view_mut::<3, 3>(UE_POS, UE_VEL).copy_from(&dt_i);
    Ok(f)
}

/// Analytic circular-orbit state at time `t`.
pub fn truth_orbit_state(el: &OrbitElements, t: f64, m: &EarthModel) -> Result<SatState> {
    el.validate()?;
    if !(t >= 0.0) {
        return Err(Error::domain("orbit time must be non-negative"));
    }
    let r = el.radius(m);
    let n = el.mean_motion(m);
    let u = el.phase + n * t;
    let (su, cu) = u.sin_cos();
    let (so, co) = el.raan.sin_cos();
    let (si, ci) = el.inclination.sin_cos();
    let pos = r * Vec3::new(co * cu - so * su * ci, so * cu + co * su * ci, su * si);
    let vel = r * n * Vec3::new(-co * su - so * cu * ci, -so * su + co * cu * ci, cu * si);
    Ok(SatState { pos, vel })
}

/// Classical RK4 step of the two-body equations.
pub fn truth_orbit_step_rk4(s: &SatState, dt: f64, m: &EarthModel) -> Result<SatState> {
    if !(dt > 0.0) {
        return Err(Error::domain("time step must be positive"));
    }
    if s.pos.norm_squared() == 0.0 {
        return Err(Error::domain("satellite at the origin"));
    }
    let mu = m.mu;
    let (p, v) = (s.pos, s.vel);
    let k1p = v;
    let k1v = gravity(&p, mu);
    let k2p = v + 0.5 * dt * k1v;
    let k2v = gravity(&(p + 0.5 * dt * k1p), mu);
    let k3p = v + 0.5 * dt * k2v;
    let k3v = gravity(&(p + 0.5 * dt * k2p), mu);
    let k4p = v + dt * k3v;
    let k4v = gravity(&(p + dt * k3p), mu);
    Ok(SatState {
        pos: p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        vel: v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn earth() -> EarthModel {
        EarthModel::default()
    }

    fn leo() -> OrbitElements {
        OrbitElements {
            altitude: 375.0,
            inclination: 0.0,
            raan: 0.0,
            phase: 0.0,
        }
    }

    #[test]
    fn gravity_examples() {
        let m = earth();
        let r = 7000.0;
        let a = gravitational_acceleration(&Vec3::new(0.0, 0.0, r), &m).unwrap();
        assert_relative_eq!(a, Vec3::new(0.0, 0.0, -m.mu / (r * r)), epsilon = 1e-18);

        let a = gravitational_acceleration(&Vec3::new(6746.0, 0.0, 0.0), &m).unwrap();
        assert_relative_eq!(a.x, -8.758_809_929_113_048e-3, max_relative = 1e-12);
        assert_eq!((a.y, a.z), (0.0, 0.0));

        let p = Vec3::new(3000.0, -4000.0, 5000.0);
        let a1 = gravitational_acceleration(&p, &m).unwrap().norm();
        let a2 = gravitational_acceleration(&(2.0 * p), &m).unwrap().norm();
        assert_relative_eq!(a2, a1 / 4.0, max_relative = 1e-14);

        assert!(gravitational_acceleration(&Vec3::zeros(), &m).is_err());
    }

    #[test]
    fn euler_step_blocks() {
        let m = earth();
        let x = JointState {
            sat_pos: Vec3::new(6746.0, 0.0, 0.0),
            sat_vel: Vec3::zeros(),
            ue_pos: Vec3::new(6371.0, 0.0, 0.0),
            ue_vel: Vec3::new(0.0, 0.1, 0.0),
        };
        let y = propagate_joint(&x, 10.0, &m).unwrap();
        assert_relative_eq!(y.ue_pos, Vec3::new(6371.0, 1.0, 0.0), epsilon = 1e-12);
        assert_eq!(y.ue_vel, x.ue_vel);
        assert_eq!(y.sat_pos, x.sat_pos);
        let a = gravitational_acceleration(&x.sat_pos, &m).unwrap();
        assert_eq!(y.sat_vel, a * 10.0);
        assert!(propagate_joint(&x, 0.0, &m).is_err());
    }

    #[test]
    fn euler_step_matches_hand_expansion() {
        // Expected values from a 30-digit evaluation of the step.
        let m = earth();
        let x = JointState {
            sat_pos: Vec3::new(4000.0, -3000.0, 4500.0),
            sat_vel: Vec3::new(1.5, 6.0, 2.0),
            ue_pos: Vec3::new(4190.0, 171.0, 4796.0),
            ue_vel: Vec3::new(-0.01, 0.3, 0.0),
        };
        let y = propagate_joint(&x, 0.5, &m).unwrap();
        assert_relative_eq!(
            y.sat_pos,
            Vec3::new(4000.75, -2997.0, 4501.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            y.sat_vel,
            Vec3::new(
                1.497_380_973_479_943,
                6.001_964_269_890_043,
                1.997_053_595_164_936
            ),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            y.ue_pos,
            Vec3::new(4189.995, 171.15, 4796.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn jacobian_structure() {
        let m = earth();
        let x = JointState {
            sat_pos: Vec3::new(5000.0, 3000.0, 3500.0),
            sat_vel: Vec3::new(-3.0, 4.0, 5.0),
            ue_pos: Vec3::new(6371.0, 0.0, 0.0),
            ue_vel: Vec3::zeros(),
        };
        let dt = 0.01;
        let f = motion_jacobian(&x, dt, &m).unwrap();
        assert_eq!(f.fixed_view::<3, 3>(0, 0).into_owned(), Matrix3::identity());
        assert_eq!(
            f.fixed_view::<3, 3>(0, 3).into_owned(),
            Matrix3::identity() * dt
        );
        assert_eq!(
            f.fixed_view::<3, 3>(6, 9).into_owned(),
            Matrix3::identity() * dt
        );
        assert_eq!(f.fixed_view::<3, 3>(9, 9).into_owned(), Matrix3::identity());
        for (r, c) in [
            (0, 6),
            (0, 9),
            (3, 6),
            (3, 9),
            (6, 0),
            (6, 3),
            (9, 0),
            (9, 3),
            (9, 6),
        ] {
            assert_eq!(f.fixed_view::<3, 3>(r, c).into_owned(), Matrix3::zeros());
        }
        let a = gravity_gradient(&x.sat_pos, &m).unwrap();
        assert_eq!(a, a.transpose());
        assert!(a.trace().abs() < 1e-20);
        assert_eq!(f.fixed_view::<3, 3>(3, 0).into_owned(), a * dt);
    }

    #[test]
    fn circular_orbit_construction() {
        let m = earth();
        let s = truth_orbit_state(&leo(), 0.0, &m).unwrap();
        assert_relative_eq!(s.pos, Vec3::new(6746.0, 0.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(
            s.vel,
            Vec3::new(0.0, (m.mu / 6746.0f64).sqrt(), 0.0),
            epsilon = 1e-12
        );
        assert!(truth_orbit_state(&leo(), -1.0, &m).is_err());
    }

    #[test]
    fn circular_orbit_period() {
        let m = earth();
        let el = OrbitElements {
            inclination: 55f64.to_radians(),
            raan: 0.4,
            phase: 1.1,
            ..leo()
        };
        // 2*pi*sqrt(r^3/mu) evaluated at 30 digits.
        let period = el.period(&m);
        assert_relative_eq!(period, 5514.174_248_948_048, max_relative = 1e-12);
        let s0 = truth_orbit_state(&el, 0.0, &m).unwrap();
        let s1 = truth_orbit_state(&el, period, &m).unwrap();
        assert!((s1.pos - s0.pos).norm() < 1e-6);
        for t in [0.0, 123.4, 1000.0, 4321.0] {
            let s = truth_orbit_state(&el, t, &m).unwrap();
            assert_relative_eq!(s.pos.norm(), 6746.0, max_relative = 1e-14);
            assert!(s.pos.dot(&s.vel).abs() < 1e-9);
            assert_relative_eq!(
                s.vel.norm(),
                (m.mu / 6746.0f64).sqrt(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn rk4_single_step_tracks_circle() {
        let m = earth();
        let el = OrbitElements {
            inclination: 55f64.to_radians(),
            raan: -0.87,
            phase: 0.7,
            ..leo()
        };
        let s0 = truth_orbit_state(&el, 0.0, &m).unwrap();
        let s1 = truth_orbit_step_rk4(&s0, 0.01, &m).unwrap();
        let exact = truth_orbit_state(&el, 0.01, &m).unwrap();
        assert!((s1.pos - exact.pos).norm() < 1e-9);
    }

    #[test]
    fn rk4_conserves_invariants_over_one_orbit() {
        let m = earth();
        let el = OrbitElements {
            inclination: 55f64.to_radians(),
            ..leo()
        };
        let dt = 0.01;
        let n = (el.period(&m) / dt).round() as usize;
        let mut s = truth_orbit_state(&el, 0.0, &m).unwrap();
        let e0 = s.specific_energy(m.mu);
        let h0 = s.angular_momentum().norm();
        for _ in 0..n {
            s = truth_orbit_step_rk4(&s, dt, &m).unwrap();
        }
        assert!(((s.specific_energy(m.mu) - e0) / e0).abs() < 1e-9);
        assert!(((s.angular_momentum().norm() - h0) / h0).abs() < 1e-9);
    }

    #[test]
    fn rk4_and_euler_agree_to_second_order() {
        let m = earth();
        let s = truth_orbit_state(&leo(), 0.0, &m).unwrap();
        let x = JointState::new(s, Vec3::new(6371.0, 0.0, 0.0), Vec3::zeros());
        let gap = |dt: f64| {
            let rk = truth_orbit_step_rk4(&s, dt, &m).unwrap();
            let eu = propagate_joint(&x, dt, &m).unwrap();
            (rk.pos - eu.sat_pos).norm()
        };
        let ratio = gap(1.0) / gap(0.1);
        assert!((ratio - 100.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn state_vector_layout() {
        let x = JointState {
            sat_pos: Vec3::new(1.0, 2.0, 3.0),
            sat_vel: Vec3::new(4.0, 5.0, 6.0),
            ue_pos: Vec3::new(7.0, 8.0, 9.0),
            ue_vel: Vec3::new(10.0, 11.0, 12.0),
        };
        let v = x.to_vector();
        assert_eq!(
            v.as_slice(),
            &(1..=12).map(f64::from).collect::<Vec<_>>()[..]
        );
        assert_eq!(JointState::from_vector(&v), x);
    }

    proptest! {
        #[test]
        fn ue_block_is_linear_in_time(
            p in prop::array::uniform3(-7000.0..7000.0f64),
            v in prop::array::uniform3(-0.4..0.4f64),
            n in 1usize..50, dt in 0.001..1.0f64,
        ) {
            let m = earth();
            let mut x = JointState {
                sat_pos: Vec3::new(6746.0, 0.0, 0.0),
                sat_vel: Vec3::new(0.0, 7.6, 0.0),
                ue_pos: Vec3::from(p),
                ue_vel: Vec3::from(v),
            };
            let once = propagate_joint(&x, n as f64 * dt, &m).unwrap();
            for _ in 0..n {
                x = propagate_joint(&x, dt, &m).unwrap();
            }
            prop_assert!((x.ue_pos - once.ue_pos).norm() < 1e-9);
            prop_assert_eq!(x.ue_vel, once.ue_vel);
        }
    }
}
