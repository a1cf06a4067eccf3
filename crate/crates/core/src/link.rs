//! Link quantities derived from the satellite–UE geometry.

use serde::{Deserialize, Serialize};

use crate::dynamics::{truth_orbit_state, JointState, OrbitElements};
use crate::error::{Error, Result};
use crate::geo::{elevation_angle, EarthModel, Vec3};

/// Speed of light, km/s (rounded, as used for the link budget figures).
pub const SPEED_OF_LIGHT_KM_S: f64 = 3.0e5;

/// Window boundaries and the elevation peak are refined to this many seconds.
pub const WINDOW_TIME_TOLERANCE: f64 = 1e-3;

/// Link parameters at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub time: f64,
    /// Slant range, km.
    pub range: f64,
    /// Timing advance (round trip), s.
    pub ta: f64,
    /// Positive while the satellite approaches, Hz.
    pub doppler: f64,
    /// Rate of change of the slant range, km/s.
    pub range_rate: f64,
    /// `(d(t) - d(t - dt)) / c`, s; `None` at the first epoch.
    pub tdoa_prev: Option<f64>,
    /// TDoA as timed by the unsynchronised UE clock, s.
    pub tdoa_measured: Option<f64>,
}

/// Offset rates of the UE clock at the two arrival instants of a TDoA pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockModel {
    pub eps1: f64,
    pub eps2: f64,
}

impl ClockModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(v.abs() < 1e-3) {
                return Err(Error::config(format!(
                    "clock {name} = {v} outside |eps| < 1e-3"
                )));
            }
        }
        Ok(())
    }

    pub fn is_synchronized(&self) -> bool {
        self.eps1 == 0.0 && self.eps2 == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub theta_max: f64,
    pub t_theta_max: f64,
}

impl VisibilityWindow {
    pub fn contains(&self, t: f64) -> bool {
        (self.t_start..=self.t_end).contains(&t)
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Round-trip time `2 d / c`.
pub fn timing_advance(d: f64, c: f64) -> f64 {
    2.0 * d / c
}

/// `d/dt |p_sat - p_ue|`, km/s.
pub fn range_rate(x: &JointState) -> Result<f64> {
    let los = x.sat_pos - x.ue_pos;
    let d = los.norm();
    if d == 0.0 {
        return Err(Error::domain("range rate between coincident points"));
    }
    Ok(los.dot(&(x.sat_vel - x.ue_vel)) / d)
}

/// Doppler shift of a carrier `f_t` (Hz) from the line-of-sight projection of
/// the relative velocity. Positive while the satellite approaches.
pub fn doppler_shift(x: &JointState, f_t: f64, c: f64) -> Result<f64> {
    Ok(-f_t * range_rate(x)? / c)
}

/// Time difference of arrival between consecutive epochs, `(d(t+1) - d(t)) / c`.
pub fn tdoa(d_t: f64, d_t1: f64, c: f64) -> f64 {
    (d_t1 - d_t) / c
}

/// Error in a measured TDoA caused by clock offsets: `t12 ε2 - t11 ε1`.
pub fn clock_drift(t11: f64, t12: f64, clk: &ClockModel) -> f64 {
    t12 * clk.eps2 - t11 * clk.eps1
}

/// TDoA measured by a clock that reads `t (1 + ε)` at arrival instants
/// `t11` and `t12`; `spacing` is the known transmit spacing, removed from the
/// difference of arrival instants.
pub fn measured_tdoa(t11: f64, t12: f64, spacing: f64, clk: &ClockModel) -> f64 {
    (t12 * (1.0 + clk.eps2) - t11 * (1.0 + clk.eps1)) - spacing
}

/// Least-squares line `drift = alpha t + beta` through `(t, drift)` samples.
pub fn fit_clock_drift(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::domain("clock drift fit needs at least two samples"));
    }
    let n = samples.len() as f64;
    let t_mean = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let y_mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, y) in samples {
        sxx += (t - t_mean) * (t - t_mean);
        sxy += (t - t_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(Error::domain(
            "clock drift fit needs at least two distinct times",
        ));
    }
    let alpha = sxy / sxx;
    Ok((alpha, y_mean - alpha * t_mean))
}

/// Largest `|drift - (alpha t + beta)|` over the samples.
pub fn max_fit_residual(samples: &[(f64, f64)], alpha: f64, beta: f64) -> f64 {
    samples
        .iter()
        .map(|&(t, y)| (y - (alpha * t + beta)).abs())
        .fold(0.0, f64::max)
}

/// Link metrics for one state. TDoA fields are left empty; they need the
/// previous epoch (see [`LinkMetrics::with_previous`]).
pub fn link_metrics(x: &JointState, time: f64, f_t: f64, c: f64) -> Result<LinkMetrics> {
    let range = (x.sat_pos - x.ue_pos).norm();
    let rr = range_rate(x)?;
    Ok(LinkMetrics {
        time,
        range,
        ta: timing_advance(range, c),
        doppler: -f_t * rr / c,
        range_rate: rr,
        tdoa_prev: None,
        tdoa_measured: None,
    })
}

impl LinkMetrics {
    /// Fills the TDoA fields against the previous epoch's metrics.
    pub fn with_previous(mut self, prev: &LinkMetrics, c: f64, clk: &ClockModel) -> Self {
        self.tdoa_prev = Some(tdoa(prev.range, self.range, c));
        let t11 = prev.time + prev.range / c;
        let t12 = self.time + self.range / c;
        self.tdoa_measured = Some(measured_tdoa(t11, t12, self.time - prev.time, clk));
        self
    }

    /// Arrival instant of the signal sent at `time`.
    pub fn arrival_time(&self, c: f64) -> f64 {
        self.time + self.range / c
    }
}

fn bisect_crossing(g: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let lo_sign = g(lo)? >= 0.0;
    while hi - lo > WINDOW_TIME_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if (g(mid)? >= 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden_max(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > WINDOW_TIME_TOLERANCE {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

/// Sample times `t0, t0 + dt, ...` up to and including `t1`.
pub fn time_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
    if t1 - grid[n] > 1e-9 * dt {
        grid.push(t1);
    }
    grid
}

/// Maximal intervals of `[t0, t1]` where the elevation of `sat(t)` seen from
/// `ue(t)` is at least `theta_min`. The scan uses step `dt`; boundaries and
/// the elevation peak are refined to [`WINDOW_TIME_TOLERANCE`]. Windows
/// that are already open at `t0` (or still open at `t1`) are clipped there.
pub fn visibility_windows_with<S, U>(
    sat: S,
    ue: U,
    theta_min: f64,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<VisibilityWindow>>
where
    S: Fn(f64) -> Result<Vec3>,
    U: Fn(f64) -> Vec3,
{
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(Error::domain("visibility scan needs t1 > t0 and dt > 0"));
    }
    let theta = |t: f64| elevation_angle(&sat(t)?, &ue(t));
    let margin = |t: f64| Ok(theta(t)? - theta_min);

    let grid = time_grid(t0, t1, dt);
    let samples = grid.iter().map(|&t| theta(t)).collect::<Result<Vec<_>>>()?;

    let mut windows = Vec::new();
    let mut open: Option<(f64, usize)> = None;
    for k in 0..grid.len() {
        let visible = samples[k] >= theta_min;
        match (open, visible) {
            (None, true) => {
                let start = if k == 0 {
                    grid[0]
                } else {
                    bisect_crossing(&margin, grid[k - 1], grid[k])?
                };
                open = Some((start, k));
            }
            (Some((start, first)), false) => {
                let end = bisect_crossing(&margin, grid[k - 1], grid[k])?;
                windows.push(close_window(
                    &theta,
                    &grid,
                    &samples,
                    start,
                    end,
                    first,
                    k - 1,
                )?);
                open = None;
            }
            _ => {}
        }
    }
    if let Some((start, first)) = open {
        let last = grid.len() - 1;
        windows.push(close_window(
            &theta, &grid, &samples, start, grid[last], first, last,
        )?);
    }
    Ok(windows)
}

fn close_window(
    theta: &impl Fn(f64) -> Result<f64>,
    grid: &[f64],
    samples: &[f64],
    start: f64,
    end: f64,
    first: usize,
    last: usize,
) -> Result<VisibilityWindow> {
    let k = (first..=last)
        .max_by(|&a, &b| samples[a].total_cmp(&samples[b]))
        .expect("window holds at least one sample");
    let lo = if k > first { grid[k - 1] } else { start };
    let hi = if k < last { grid[k + 1] } else { end };
    let (mut t_peak, mut peak) = (grid[k], samples[k]);
    if hi - lo > WINDOW_TIME_TOLERANCE {
        let (t, v) = golden_max(theta, lo, hi)?;
        if v > peak {
            (t_peak, peak) = (t, v);
        }
    }
    Ok(VisibilityWindow {
        t_start: start,
        t_end: end,
        theta_max: peak,
        t_theta_max: t_peak,
    })
}

/// Visibility of a circular-orbit satellite from a UE trajectory.
pub fn visibility_windows<U>(
    orbit: &OrbitElements,
    earth: &EarthModel,
    ue_traj: U,
    theta_min: f64,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<VisibilityWindow>>
where
    U: Fn(f64) -> Vec3,
{
    orbit.validate()?;
    visibility_windows_with(
        |t| truth_orbit_state(orbit, t, earth).map(|s| s.pos),
        ue_traj,
        theta_min,
        t0,
        t1,
        dt,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SatState;
    use crate::geo::{geodetic_to_ecef, GeodeticPosition};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::FRAC_PI_2;

    const C: f64 = SPEED_OF_LIGHT_KM_S;

    fn state(sat_pos: Vec3, sat_vel: Vec3, ue_pos: Vec3, ue_vel: Vec3) -> JointState {
        JointState {
            sat_pos,
            sat_vel,
            ue_pos,
            ue_vel,
        }
    }

    #[test]
    fn timing_advance_cases() {
        assert_relative_eq!(timing_advance(375.0, C), 2.5e-3, max_relative = 1e-15);
        assert_eq!(timing_advance(0.0, C), 0.0);
        // Slant range at gamma = 66.1 deg, r = 6746 (30-digit cosine-law value).
        let d = crate::geo::slant_range_from_gamma(
            66.1f64.to_radians(),
            6746.0,
            &EarthModel::default(),
        )
        .unwrap();
        assert_relative_eq!(d, 7160.529_735_280_707, max_relative = 1e-12);
        assert_relative_eq!(
            timing_advance(d, C),
            0.047_736_864_901_871_38,
            max_relative = 1e-12
        );
    }

    #[test]
    fn doppler_cases() {
        let ue = Vec3::new(6371.0, 0.0, 0.0);
        // Relative velocity perpendicular to the line of sight.
        let x = state(
            Vec3::new(6746.0, 0.0, 0.0),
            Vec3::new(0.0, 7.5, 0.0),
            ue,
            Vec3::zeros(),
        );
        assert_eq!(doppler_shift(&x, 10.7e9, C).unwrap(), 0.0);
        // Head-on approach at 7.5 km/s.
        let x = state(
            Vec3::new(6746.0, 0.0, 0.0),
            Vec3::new(-7.5, 0.0, 0.0),
            ue,
            Vec3::zeros(),
        );
        assert_relative_eq!(
            doppler_shift(&x, 10.7e9, C).unwrap(),
            267.5e3,
            max_relative = 1e-12
        );
        let rev = state(x.sat_pos, -x.sat_vel, x.ue_pos, -x.ue_vel);
        assert_eq!(doppler_shift(&rev, 10.7e9, C).unwrap(), -267.5e3);
        assert!(doppler_shift(&state(ue, Vec3::x(), ue, Vec3::zeros()), 1e9, C).is_err());
    }

    proptest! {
        #[test]
        fn doppler_bounded_by_relative_speed(
            p in prop::array::uniform3(-8000.0..8000.0f64),
            v in prop::array::uniform3(-8.0..8.0f64),
            w in prop::array::uniform3(-0.4..0.4f64),
        ) {
            let ue = Vec3::new(4190.3, 171.0, 4796.0);
            let x = state(Vec3::from(p), Vec3::from(v), ue, Vec3::from(w));
            prop_assume!((x.sat_pos - ue).norm() > 1.0);
            let f = doppler_shift(&x, 10.9e9, C).unwrap();
            prop_assert!(f.abs() <= 10.9e9 * (x.sat_vel.norm() + x.ue_vel.norm()) / C * (1.0 + 1e-12));
            let rev = state(x.sat_pos, -x.sat_vel, x.ue_pos, -x.ue_vel);
            prop_assert_eq!(doppler_shift(&rev, 10.9e9, C).unwrap(), -f);
        }
    }

    #[test]
    fn tdoa_cases() {
        assert_eq!(tdoa(1000.0, 1000.0, C), 0.0);
        assert_relative_eq!(tdoa(1000.0, 1003.0, C), 10e-6, max_relative = 1e-9);
    }

    #[test]
    fn clock_drift_cases() {
        let zero = ClockModel::default();
        assert_eq!(clock_drift(1.0, 2.0, &zero), 0.0);
        let common = ClockModel {
            eps1: 1e-6,
            eps2: 1e-6,
        };
        assert_relative_eq!(clock_drift(1.0, 2.0, &common), 1e-6, max_relative = 1e-12);
        let clk = ClockModel {
            eps1: 2e-6,
            eps2: 3e-6,
        };
        assert_relative_eq!(clock_drift(10.0, 11.0, &clk), 13e-6, max_relative = 1e-12);
        assert!(ClockModel {
            eps1: 2e-3,
            eps2: 0.0
        }
        .validate()
        .is_err());

        let (t11, t12) = (100.000_001, 100.010_002);
        let deviation = measured_tdoa(t11, t12, 0.01, &clk) - measured_tdoa(t11, t12, 0.01, &zero);
        assert!((deviation - clock_drift(t11, t12, &clk)).abs() < 1e-12);
    }

    #[test]
    fn clock_fit_interpolates_two_points() {
        let (alpha, beta) = fit_clock_drift(&[(0.0, 4e-6), (1.0, 7e-6)]).unwrap();
        assert_relative_eq!(alpha, 3e-6, max_relative = 1e-12);
        assert_relative_eq!(beta, 4e-6, max_relative = 1e-12);
        assert!(fit_clock_drift(&[(1.0, 0.0)]).is_err());
        assert!(fit_clock_drift(&[(1.0, 0.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn clock_fit_is_exact_for_affine_drift() {
        let clk = ClockModel {
            eps1: 2e-6,
            eps2: 3e-6,
        };
        let t11 = 10.0;
        let samples: Vec<_> = (1..500)
            .map(|k| {
                let t = t11 + 0.01 * k as f64;
                (t, clock_drift(t11, t, &clk))
            })
            .collect();
        let (alpha, beta) = fit_clock_drift(&samples).unwrap();
        assert_relative_eq!(alpha, clk.eps2, max_relative = 1e-9);
        assert_relative_eq!(beta, -t11 * clk.eps1, max_relative = 1e-9);
        assert!(max_fit_residual(&samples, alpha, beta) < 1e-12);
    }

    #[test]
    fn clock_fit_with_noise_recovers_slope() {
        // Monte Carlo over 200 independent series: the slope error stays
        // within 3 standard errors, sigma / sqrt(sum (t - mean)^2).
        let sigma = 1e-9;
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let times: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let se = sigma / times.iter().map(|t| (t - mean).powi(2)).sum::<f64>().sqrt();
        let mut outside = 0;
        for _ in 0..200 {
            let samples: Vec<_> = times
                .iter()
                .map(|&t| (t, 2e-7 * t + 5e-6 + noise.sample(&mut rng)))
                .collect();
            let (alpha, _) = fit_clock_drift(&samples).unwrap();
            if (alpha - 2e-7).abs() > 3.0 * se {
                outside += 1;
            }
        }
        assert!(outside <= 3, "{outside} of 200 fits outside 3 sigma");
    }

    fn paris() -> Vec3 {
        geodetic_to_ecef(
            &GeodeticPosition::from_degrees(48.8323, 2.3364, 0.0).unwrap(),
            &EarthModel::default(),
        )
        .unwrap()
    }

    fn paris_orbit() -> OrbitElements {
        OrbitElements {
            altitude: 375.0,
            inclination: 55f64.to_radians(),
            raan: (-50.0f64).to_radians(),
            phase: 40f64.to_radians(),
        }
    }

    #[test]
    fn zenith_start_is_visible() {
        let earth = EarthModel::default();
        let orbit = OrbitElements {
            altitude: 375.0,
            inclination: 0.3,
            raan: 0.2,
            phase: 0.9,
        };
        let t_star = 100.0;
        let sub = truth_orbit_state(&orbit, t_star, &earth)
            .unwrap()
            .pos
            .normalize()
            * earth.radius();
        let w = visibility_windows(&orbit, &earth, |_| sub, 0.0, 0.0, 1000.0, 1.0).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains(t_star));
        assert!((w[0].t_theta_max - t_star).abs() < 2e-3);
        assert_relative_eq!(w[0].theta_max, FRAC_PI_2, epsilon = 1e-4);

        let none =
            visibility_windows(&orbit, &earth, |_| sub, FRAC_PI_2, 0.0, 1000.0, 1.0).unwrap();
        assert!(none.iter().all(|w| w.duration() < 0.01));
    }

    #[test]
    fn windows_match_dense_scan() {
        let earth = EarthModel::default();
        let orbit = paris_orbit();
        let ue = paris();
        let (t0, t1) = (0.0, 12_000.0);
        let windows = visibility_windows(&orbit, &earth, |_| ue, 0.0, t0, t1, 1.0).unwrap();
        assert!(windows.len() >= 2);

        // Brute force on a 1 ms grid.
        let mut dense = Vec::new();
        let mut start: Option<f64> = None;
        let mut best = (f64::MIN, 0.0);
        let n = ((t1 - t0) / 1e-3) as usize;
        for k in 0..=n {
            let t = t0 + k as f64 * 1e-3;
            let th =
                elevation_angle(&truth_orbit_state(&orbit, t, &earth).unwrap().pos, &ue).unwrap();
            if th >= 0.0 {
                if start.is_none() {
                    start = Some(t);
                    best = (f64::MIN, 0.0);
                }
                if th > best.0 {
                    best = (th, t);
                }
            } else if let Some(s) = start.take() {
                dense.push((s, t - 1e-3, best.0, best.1));
            }
        }
        assert_eq!(windows.len(), dense.len());
        for (w, d) in windows.iter().zip(&dense) {
            assert!((w.t_start - d.0).abs() <= 1.5e-3, "{w:?} vs {d:?}");
            assert!((w.t_end - d.1).abs() <= 1.5e-3, "{w:?} vs {d:?}");
            assert!((w.t_theta_max - d.3).abs() <= 1.5e-3);
            assert!((w.theta_max - d.2).abs() < 1e-6);
            assert!(w.t_start < w.t_theta_max && w.t_theta_max < w.t_end);
        }
    }

    #[test]
    fn clipped_window_at_scan_start() {
        let earth = EarthModel::default();
        let orbit = paris_orbit();
        let ue = paris();
        let full = visibility_windows(&orbit, &earth, |_| ue, 0.0, 0.0, 900.0, 0.5).unwrap();
        let mid = 0.5 * (full[0].t_start + full[0].t_end);
        let clipped = visibility_windows(&orbit, &earth, |_| ue, 0.0, mid, 900.0, 0.5).unwrap();
        assert_eq!(clipped[0].t_start, mid);
        assert!((clipped[0].t_end - full[0].t_end).abs() < 2e-3);
    }

    #[test]
    fn link_metrics_chain() {
        let sat = SatState {
            pos: Vec3::new(6746.0, 0.0, 0.0),
            vel: Vec3::new(-1.0, 7.0, 0.0),
        };
        let x0 = JointState::new(sat, Vec3::new(6371.0, 0.0, 0.0), Vec3::zeros());
        let mut x1 = x0;
        x1.sat_pos += x0.sat_vel * 0.01;
        let clk = ClockModel {
            eps1: 1e-7,
            eps2: 2e-7,
        };
        let m0 = link_metrics(&x0, 0.0, 10.7e9, C).unwrap();
        let m1 = link_metrics(&x1, 0.01, 10.7e9, C)
            .unwrap()
            .with_previous(&m0, C, &clk);
        assert_eq!(m0.ta, 2.0 * m0.range / C);
        assert_eq!(m1.tdoa_prev, Some((m1.range - m0.range) / C));
        let drift = m1.tdoa_measured.unwrap() - m1.tdoa_prev.unwrap();
        assert!((drift - clock_drift(m0.arrival_time(C), m1.arrival_time(C), &clk)).abs() < 1e-12);
    }
}
