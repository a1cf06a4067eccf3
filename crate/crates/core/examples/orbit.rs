//! RK4 truth against the analytic circular orbit, and the filter's Euler
//! transition with its Jacobian.

use ntnsim::dynamics::{
    motion_jacobian, propagate_joint, truth_orbit_state, truth_orbit_step_rk4, JointState,
    OrbitElements,
};
use ntnsim::geo::{EarthModel, Vec3};

fn main() -> ntnsim::Result<()> {
    let earth = EarthModel::default();
    let orbit = OrbitElements {
        altitude: 375.0,
        inclination: 55f64.to_radians(),
        raan: 0.0,
        phase: 0.0,
    };
    let period = orbit.period(&earth);
    println!(
        "period {period:.2} s, speed {:.4} km/s",
        orbit.radius(&earth) * orbit.mean_motion(&earth)
    );

    let dt = 0.01;
    let mut s = truth_orbit_state(&orbit, 0.0, &earth)?;
    let e0 = s.specific_energy(earth.mu);
    let steps = (period / 4.0 / dt) as usize;
    for _ in 0..steps {
        s = truth_orbit_step_rk4(&s, dt, &earth)?;
    }
    let exact = truth_orbit_state(&orbit, steps as f64 * dt, &earth)?;
    println!(
        "quarter orbit: RK4 vs analytic {:.3e} km, energy drift {:.3e}",
        (s.pos - exact.pos).norm(),
        (s.specific_energy(earth.mu) - e0) / e0.abs()
    );

    let x = JointState::new(
        exact,
        Vec3::new(4190.3, 171.0, 4796.0),
        Vec3::new(-0.0125, 0.3065, 0.0),
    );
    let next = propagate_joint(&x, dt, &earth)?;
    println!(
        "Euler step vs analytic after dt: {:.3e} km",
        (next.sat_pos - truth_orbit_state(&orbit, (steps + 1) as f64 * dt, &earth)?.pos).norm()
    );
    let f = motion_jacobian(&x, dt, &earth)?;
    println!(
        "d(sat velocity)/d(sat position) block:\n{:.3e}",
        f.fixed_view::<3, 3>(3, 0)
    );
    Ok(())
}
