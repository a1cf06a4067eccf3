//! End-to-end runs: truth generation, noisy measurements, the EKF loop,
//! error metrics and Monte Carlo replication.
//!
//! Random numbers come from ChaCha20 keyed by the scenario seed. Every
//! (run, epoch) pair reads its own stream, `(run << 40) | epoch`, so runs are
//! independent and any epoch can be regenerated on its own. The initial
//! belief perturbation uses epoch [`INITIAL_BELIEF_STREAM`].

use nalgebra::{Matrix2, Matrix3, SMatrix, SVector, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_joint, truth_orbit_state, truth_orbit_step_rk4, JointState, Matrix12, OrbitElements,
    SatState, StateVector,
};
use crate::ephemeris::Ephemeris;
use crate::error::{Error, Result};
use crate::estimator::{
    self, check_psd, normalized_error_squared, CovarianceForm, GaussianBelief, Measurement,
    NoiseConfig, Observation, PositionFix,
};
use crate::geo::{
    earth_centered_angle, elevation_angle, geodetic_to_ecef, local_east, EarthModel,
    GeodeticPosition, Vec3,
};
use crate::link::{
    fit_clock_drift, link_metrics, visibility_windows_with, ClockModel, LinkMetrics,
    VisibilityWindow, SPEED_OF_LIGHT_KM_S,
};

/// Epoch slot of the stream that perturbs the initial belief.
pub const INITIAL_BELIEF_STREAM: u64 = (1 << 40) - 1;

/// Percentage errors skip epochs where the true coordinate is smaller than this, km.
pub const MPE_MIN_ABS_KM: f64 = 1.0;

/// UE speed used by the nominal scenario, km/s.
pub const NOMINAL_UE_SPEED: f64 = 0.306_77;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    #[default]
    RangeElevation,
    DirectPosition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub orbit: OrbitElements,
    pub ue_start: GeodeticPosition,
    /// km/s, earth-centred frame.
    pub ue_velocity: Vec3,
    pub earth: EarthModel,
    pub noise: NoiseConfig,
    /// Covariance of the initial belief; its mean is the truth perturbed by a draw from it.
    pub initial_cov: Matrix12,
    pub clock: ClockModel,
    /// Carrier frequency, Hz.
    pub f_t: f64,
    /// Speed of light, km/s.
    pub c: f64,
    pub dt: f64,
    pub t0: f64,
    pub t1: f64,
    pub seed: u64,
    pub theta_min: f64,
    pub measurement_mode: MeasurementMode,
    /// Only update on epochs where the true elevation is at least `theta_min`.
    pub measurements_only_when_visible: bool,
    pub covariance_form: CovarianceForm,
}

pub fn default_process_noise() -> Matrix12 {
    let mut d = StateVector::zeros();
    d.fixed_rows_mut::<3>(3).fill(1e-4);
    d.fixed_rows_mut::<3>(9).fill(1e-4);
    Matrix12::from_diagonal(&d)
}

pub fn default_initial_cov() -> Matrix12 {
    Matrix12::from_diagonal(&StateVector::from_column_slice(&[
        1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-2, 1e-2, 1e-2, 1e-2, 1e-4, 1e-4, 1e-4,
    ]))
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q: default_process_noise(),
            r: Matrix2::from_diagonal(&Vector2::new(0.1 * 0.1, 1e-3 * 1e-3)),
            r_position: Matrix3::identity() * 0.01,
        }
    }
}

/// Paris, the UE location of the nominal scenario.
pub fn nominal_ue_start() -> GeodeticPosition {
    GeodeticPosition::from_degrees(48.8323, 2.3364, 0.0).expect("valid coordinates")
}

/// 375 km, 55° circular orbit placed for a near-overhead pass over Paris
/// about 400 s after `t = 0`.
pub fn nominal_orbit() -> OrbitElements {
    OrbitElements {
        altitude: 375.0,
        inclination: 55f64.to_radians(),
        raan: (-50f64).to_radians(),
        phase: 40f64.to_radians(),
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let ue_start = nominal_ue_start();
        Self {
            orbit: nominal_orbit(),
            ue_velocity: local_east(&ue_start) * NOMINAL_UE_SPEED,
            ue_start,
            earth: EarthModel::default(),
            noise: NoiseConfig::default(),
            initial_cov: default_initial_cov(),
            clock: ClockModel::default(),
            f_t: 10.7e9,
            c: SPEED_OF_LIGHT_KM_S,
            dt: 0.01,
            t0: 0.0,
            t1: 800.0,
            seed: 1,
            theta_min: 0.0,
            measurement_mode: MeasurementMode::RangeElevation,
            measurements_only_when_visible: true,
            covariance_form: CovarianceForm::Joseph,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 > self.t0) {
            return Err(Error::config(format!(
                "t1 = {} must exceed t0 = {}",
                self.t1, self.t0
            )));
        }
        if !(self.f_t > 0.0 && self.f_t.is_finite()) {
            return Err(Error::config(format!(
                "f_t = {} must be positive",
                self.f_t
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("c = {} must be positive", self.c)));
        }
        if !(self.theta_min.abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::config(format!(
                "theta_min = {} outside [-pi/2, pi/2]",
                self.theta_min
            )));
        }
        if !self.ue_velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::config("ue_velocity must be finite"));
        }
        let named = |field: &'static str| move |e: Error| Error::config(format!("{field}: {e}"));
        self.orbit.validate().map_err(named("orbit"))?;
        self.ue_start.validate().map_err(named("ue_start"))?;
        self.earth.validate().map_err(named("earth"))?;
        self.noise.validate().map_err(named("noise"))?;
        check_psd(&self.initial_cov, "initial covariance")?;
        self.clock.validate()?;
        Ok(())
    }

    /// Number of epochs, `floor((t1 - t0) / dt) + 1`.
    pub fn epoch_count(&self) -> usize {
        ((self.t1 - self.t0) / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn epoch_time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn ue_start_ecef(&self) -> Result<Vec3> {
        geodetic_to_ecef(&self.ue_start, &self.earth)
    }
}

/// True joint states on the epoch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<JointState>,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    fn interpolate_sat(&self, t: f64) -> Vec3 {
        let last = self.states.len() - 1;
        let s = ((t - self.t0) / self.dt).max(0.0);
        let k = (s.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return self.states[0].sat_pos;
        }
        let w = s - k as f64;
        self.states[k].sat_pos + (self.states[k + 1].sat_pos - self.states[k].sat_pos) * w
    }
}

fn ue_states(cfg: &ScenarioConfig) -> Result<impl Fn(f64) -> (Vec3, Vec3)> {
    let p0 = cfg.ue_start_ecef()?;
    let (v, t0) = (cfg.ue_velocity, cfg.t0);
    Ok(move |t: f64| (p0 + v * (t - t0), v))
}

/// Satellite truth from RK4 on the two-body equations, started from the
/// circular orbit at `t0`; UE truth moves at constant velocity.
pub fn truth_trajectory(cfg: &ScenarioConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let ue = ue_states(cfg)?;
    let n = cfg.epoch_count();
    let mut sat = truth_orbit_state(&cfg.orbit, cfg.t0, &cfg.earth)?;
    let mut states = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            sat = truth_orbit_step_rk4(&sat, cfg.dt, &cfg.earth)?;
        }
        let (p, v) = ue(cfg.epoch_time(k));
        states.push(JointState::new(sat, p, v));
    }
    Ok(Trajectory {
        t0: cfg.t0,
        dt: cfg.dt,
        states,
    })
}

/// Satellite truth linearly interpolated from an ephemeris covering `[t0, t1]`.
pub fn truth_from_ephemeris(cfg: &ScenarioConfig, eph: &Ephemeris) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.epoch_count();
    let t_last = cfg.epoch_time(n - 1);
    if eph.start() > cfg.t0 || eph.end() < t_last {
        return Err(Error::config(format!(
            "ephemeris covers [{}, {}] s but the scenario needs [{}, {}] s",
            eph.start(),
            eph.end(),
            cfg.t0,
            t_last
        )));
    }
    let ue = ue_states(cfg)?;
    let states = (0..n)
        .map(|k| {
            let t = cfg.epoch_time(k);
            let (p, v) = ue(t);
            Ok(JointState::new(eph.interpolate(t)?, p, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        t0: cfg.t0,
        dt: cfg.dt,
        states,
    })
}

/// Visibility windows of a truth trajectory, scanned on its epoch grid.
pub fn truth_windows(cfg: &ScenarioConfig, truth: &Trajectory) -> Result<Vec<VisibilityWindow>> {
    let ue = ue_states(cfg)?;
    let t_end = truth.time(truth.states.len() - 1);
    if truth.states.len() < 2 {
        return Ok(Vec::new());
    }
    visibility_windows_with(
        |t| Ok(truth.interpolate_sat(t)),
        |t| ue(t).0,
        cfg.theta_min,
        truth.t0,
        t_end,
        truth.dt,
    )
}

/// Generator for one (run, epoch) stream.
pub fn stream_rng(seed: u64, run: u64, epoch: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((run << 40) | (epoch & INITIAL_BELIEF_STREAM));
    rng
}

/// Square-root factor `L` with `L Lᵀ = cov` for a PSD matrix (zero for zero).
fn psd_sqrt<const N: usize>(cov: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    if cov.iter().all(|v| *v == 0.0) {
        return SMatrix::zeros();
    }
    if let Some(ch) = cov.cholesky() {
        return ch.l();
    }
    let dyn_cov = nalgebra::DMatrix::from_column_slice(N, N, cov.as_slice());
    let eig = dyn_cov.symmetric_eigen();
    let scaled = &eig.eigenvectors
        * nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    SMatrix::from_column_slice(scaled.as_slice())
}

fn gaussian_draw<const N: usize>(
    factor: &SMatrix<f64, N, N>,
    rng: &mut ChaCha20Rng,
) -> SVector<f64, N> {
    let z = SVector::<f64, N>::from_fn(|_, _| StandardNormal.sample(rng));
    factor * z
}

/// `h(truth) + e` per epoch with `e ~ N(0, R)` (or the satellite position plus
/// `N(0, R_pos)` in direct-position mode). Bit-identical for equal inputs.
pub fn synthesize_measurements(
    truth: &Trajectory,
    noise: &NoiseConfig,
    mode: MeasurementMode,
    seed: u64,
    run: u64,
) -> Result<Vec<Observation>> {
    check_psd(&noise.r, "measurement noise R")?;
    check_psd(&noise.r_position, "position measurement noise")?;
    let l_re = psd_sqrt(&noise.r);
    let l_pos = psd_sqrt(&noise.r_position);
    truth
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let t = truth.time(k);
            let mut rng = stream_rng(seed, run, k as u64);
            Ok(match mode {
                MeasurementMode::RangeElevation => {
                    let clean = estimator::measurement_model(x, t)?;
                    let e = gaussian_draw(&l_re, &mut rng);
                    Observation::RangeElevation(Measurement {
                        time: t,
                        range: clean.range + e[0],
                        elevation: clean.elevation + e[1],
                    })
                }
                MeasurementMode::DirectPosition => Observation::Position(PositionFix {
                    time: t,
                    pos: x.sat_pos + gaussian_draw(&l_pos, &mut rng),
                }),
            })
        })
        .collect()
}

/// Measurement residual `y - h(x⁻)` of an applied update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    RangeElevation(Vector2<f64>),
    Position(Vec3),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub time: f64,
    pub truth: JointState,
    pub estimate: JointState,
    pub cov_diag: StateVector,
    pub measurement: Observation,
    /// `None` when the update was skipped (satellite not visible).
    pub innovation: Option<Innovation>,
    /// From the estimated state.
    pub link: LinkMetrics,
    /// From the true state.
    pub link_truth: LinkMetrics,
    pub gamma: f64,
    pub theta: f64,
    pub gamma_est: f64,
    pub theta_est: f64,
    /// True elevation at least `theta_min`.
    pub visible: bool,
    /// Satellite-block NEES; `None` if that covariance block is singular.
    pub nees: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockFit {
    pub alpha: f64,
    pub beta: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    /// Per-axis satellite-position MPE inside the windows, %; `None` without windows.
    pub mpe: Option<[f64; 3]>,
    /// Per-state RMSE inside the windows, in state units.
    pub rmse: Option<[f64; 12]>,
    pub windows: Vec<VisibilityWindow>,
    /// Mean satellite-block NEES over epochs in the windows.
    pub nees_mean: Option<f64>,
    pub nees_epochs: usize,
    /// Affine fit of the clock-induced TDoA error against arrival time, on the
    /// true link series; present when a clock model is configured.
    pub clock_fit: Option<ClockFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub records: Vec<EpochRecord>,
    pub summary: ScenarioSummary,
}

impl ScenarioResult {
    /// Records whose time lies in one of the summary windows.
    pub fn window_records(&self) -> impl Iterator<Item = &EpochRecord> {
        self.records
            .iter()
            .filter(|r| self.summary.windows.iter().any(|w| w.contains(r.time)))
    }
}

/// Runs the nominal pipeline on the Keplerian truth, run index 0.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let truth = truth_trajectory(cfg)?;
    run_scenario_on(cfg, &truth, 0)
}

/// Filters one replication against a precomputed truth.
pub fn run_scenario_on(
    cfg: &ScenarioConfig,
    truth: &Trajectory,
    run: u64,
) -> Result<ScenarioResult> {
    cfg.validate()?;
    if truth.states.is_empty() {
        return Err(Error::domain("empty truth trajectory"));
    }
    let windows = truth_windows(cfg, truth)?;
    let measurements =
        synthesize_measurements(truth, &cfg.noise, cfg.measurement_mode, cfg.seed, run)?;

    let mut rng = stream_rng(cfg.seed, run, INITIAL_BELIEF_STREAM);
    let offset = gaussian_draw(&psd_sqrt(&cfg.initial_cov), &mut rng);
    let mut belief = GaussianBelief::new(
        JointState::from_vector(&(truth.states[0].to_vector() + offset)),
        cfg.initial_cov,
    );

    let mut records: Vec<EpochRecord> = Vec::with_capacity(truth.states.len());
    for (k, (x_true, y)) in truth.states.iter().zip(&measurements).enumerate() {
        let time = truth.time(k);
        let abort = |e: Error| Error::Aborted {
            epoch: k,
            time,
            source: Box::new(e),
        };
        if k > 0 {
            belief =
                estimator::predict(&belief, cfg.dt, &cfg.noise.q, &cfg.earth).map_err(abort)?;
        }
        let theta = elevation_angle(&x_true.sat_pos, &x_true.ue_pos).map_err(abort)?;
        let visible = theta >= cfg.theta_min;
        let mut innovation = None;
        if visible || !cfg.measurements_only_when_visible {
            let (updated, inn) = match y {
                Observation::RangeElevation(m) => {
                    let (b, i) =
                        estimator::update_with(&belief, m, &cfg.noise.r, cfg.covariance_form)
                            .map_err(abort)?;
                    (b, Innovation::RangeElevation(i))
                }
                Observation::Position(p) => {
                    let (b, i) = estimator::update_position(
                        &belief,
                        p,
                        &cfg.noise.r_position,
                        cfg.covariance_form,
                    )
                    .map_err(abort)?;
                    (b, Innovation::Position(i))
                }
            };
            belief = updated;
            innovation = Some(inn);
        }
        if !belief.mean.is_finite() || !belief.cov.iter().all(|v| v.is_finite()) {
            return Err(abort(Error::Numerical("non-finite filter state".into())));
        }

        let est = belief.mean;
        let mut link = link_metrics(&est, time, cfg.f_t, cfg.c).map_err(abort)?;
        let mut link_truth = link_metrics(x_true, time, cfg.f_t, cfg.c).map_err(abort)?;
        if let Some(prev) = records.last() {
            link = link.with_previous(&prev.link, cfg.c, &cfg.clock);
            link_truth = link_truth.with_previous(&prev.link_truth, cfg.c, &cfg.clock);
        }
        let e = estimator::state_error(&est, x_true);
        records.push(EpochRecord {
            time,
            truth: *x_true,
            estimate: est,
            cov_diag: belief.cov.diagonal(),
            measurement: *y,
            innovation,
            link,
            link_truth,
            gamma: earth_centered_angle(&x_true.ue_pos, &x_true.sat_pos).map_err(abort)?,
            theta,
            gamma_est: earth_centered_angle(&est.ue_pos, &est.sat_pos).map_err(abort)?,
            theta_est: elevation_angle(&est.sat_pos, &est.ue_pos).map_err(abort)?,
            visible,
            nees: normalized_error_squared::<6>(
                &e.fixed_rows::<6>(0).into_owned(),
                &belief.cov.fixed_view::<6, 6>(0, 0).into_owned(),
            ),
        });
    }

    let summary = summarize(&records, windows, &cfg.clock, cfg.c)?;
    Ok(ScenarioResult { records, summary })
}

/// Recomputes the summary from per-epoch records.
pub fn summarize(
    records: &[EpochRecord],
    windows: Vec<VisibilityWindow>,
    clock: &ClockModel,
    c: f64,
) -> Result<ScenarioSummary> {
    let inside: Vec<&EpochRecord> = records
        .iter()
        .filter(|r| windows.iter().any(|w| w.contains(r.time)))
        .collect();
    let (mpe, rmse) = if inside.is_empty() {
        (None, None)
    } else {
        let est: Vec<Vec3> = inside.iter().map(|r| r.estimate.sat_pos).collect();
        let tru: Vec<Vec3> = inside.iter().map(|r| r.truth.sat_pos).collect();
        let mut sq = [0.0; 12];
        for r in &inside {
            let e = estimator::state_error(&r.estimate, &r.truth);
            for (s, v) in sq.iter_mut().zip(e.iter()) {
                *s += v * v;
            }
        }
        let n = inside.len() as f64;
        (
            Some(mean_percentage_error(&est, &tru)?),
            Some(sq.map(|s| (s / n).sqrt())),
        )
    };
    let nees: Vec<f64> = inside.iter().filter_map(|r| r.nees).collect();
    let nees_mean = (!nees.is_empty()).then(|| nees.iter().sum::<f64>() / nees.len() as f64);

    let clock_fit = if clock.is_synchronized() {
        None
    } else {
        let samples: Vec<(f64, f64)> = records
            .windows(2)
            .filter_map(|w| {
                let measured = w[1].link_truth.tdoa_measured?;
                let ideal = w[1].link_truth.tdoa_prev?;
                Some((w[1].link_truth.arrival_time(c), measured - ideal))
            })
            .collect();
        match fit_clock_drift(&samples) {
            Ok((alpha, beta)) => Some(ClockFit {
                alpha,
                beta,
                max_residual: crate::link::max_fit_residual(&samples, alpha, beta),
            }),
            Err(_) => None,
        }
    };

    Ok(ScenarioSummary {
        mpe,
        rmse,
        windows,
        nees_mean,
        nees_epochs: nees.len(),
        clock_fit,
    })
}

/// Per-axis mean of `100 |est - truth| / |truth|`. Epochs where the true
/// coordinate is below [`MPE_MIN_ABS_KM`] in magnitude are left out of that
/// axis; an axis with no remaining epochs is NaN.
pub fn mean_percentage_error(est: &[Vec3], truth: &[Vec3]) -> Result<[f64; 3]> {
    if est.is_empty() {
        return Err(Error::domain("mean percentage error of an empty series"));
    }
    if est.len() != truth.len() {
        return Err(Error::domain(format!(
            "series lengths differ ({} vs {})",
            est.len(),
            truth.len()
        )));
    }
    let mut out = [0.0; 3];
    for (axis, slot) in out.iter_mut().enumerate() {
        let (mut sum, mut n) = (0.0, 0usize);
        for (e, t) in est.iter().zip(truth) {
            if t[axis].abs() >= MPE_MIN_ABS_KM {
                sum += 100.0 * (e[axis] - t[axis]).abs() / t[axis].abs();
                n += 1;
            }
        }
        *slot = if n == 0 { f64::NAN } else { sum / n as f64 };
    }
    Ok(out)
}

/// `eᵀ P⁻¹ e` on the satellite block per epoch; `None` where that block is singular.
pub fn nees_series(
    est: &[JointState],
    truth: &[JointState],
    cov: &[Matrix12],
) -> Result<Vec<Option<f64>>> {
    if est.len() != truth.len() || est.len() != cov.len() {
        return Err(Error::domain("nees_series needs equal-length inputs"));
    }
    Ok(est
        .iter()
        .zip(truth)
        .zip(cov)
        .map(|((e, t), p)| {
            let err = estimator::state_error(e, t);
            normalized_error_squared::<6>(
                &err.fixed_rows::<6>(0).into_owned(),
                &p.fixed_view::<6, 6>(0, 0).into_owned(),
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub runs: Vec<ScenarioSummary>,
    /// Mean over runs of the per-run NEES means.
    pub nees_mean: Option<f64>,
    /// Mean over runs of the per-run MPE.
    pub mpe_mean: Option<[f64; 3]>,
}

/// `runs` independent replications sharing one truth, run in parallel.
pub fn monte_carlo(
    cfg: &ScenarioConfig,
    truth: &Trajectory,
    runs: usize,
) -> Result<MonteCarloSummary> {
    if runs == 0 {
        return Err(Error::config("Monte Carlo needs at least one run"));
    }
    let summaries = (0..runs as u64)
        .into_par_iter()
        .map(|run| run_scenario_on(cfg, truth, run).map(|r| r.summary))
        .collect::<Result<Vec<_>>>()?;
    let nees: Vec<f64> = summaries.iter().filter_map(|s| s.nees_mean).collect();
    let mpes: Vec<[f64; 3]> = summaries.iter().filter_map(|s| s.mpe).collect();
    let mpe_mean = (!mpes.is_empty()).then(|| {
        let mut m = [0.0; 3];
        for v in &mpes {
            for i in 0..3 {
                m[i] += v[i] / mpes.len() as f64;
            }
        }
        m
    });
    Ok(MonteCarloSummary {
        nees_mean: (!nees.is_empty()).then(|| nees.iter().sum::<f64>() / nees.len() as f64),
        mpe_mean,
        runs: summaries,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn rank_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::domain(
            "rank correlation needs two equal series of length >= 2",
        ));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - mean) * (y - mean);
        saa += (x - mean) * (x - mean);
        sbb += (y - mean) * (y - mean);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::domain("rank correlation of a constant series"));
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Truth-only geometry at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryRow {
    pub time: f64,
    pub gamma: f64,
    pub theta: f64,
    pub range: f64,
    pub ta: f64,
    pub doppler: f64,
    pub visible: bool,
}

/// γ, θ, range, TA and Doppler along a truth trajectory; no noise, no filter.
pub fn geometry_table(cfg: &ScenarioConfig, truth: &Trajectory) -> Result<Vec<GeometryRow>> {
    truth
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let m = link_metrics(x, truth.time(k), cfg.f_t, cfg.c)?;
            let theta = elevation_angle(&x.sat_pos, &x.ue_pos)?;
            Ok(GeometryRow {
                time: m.time,
                gamma: earth_centered_angle(&x.ue_pos, &x.sat_pos)?,
                theta,
                range: m.range,
                ta: m.ta,
                doppler: m.doppler,
                visible: theta >= cfg.theta_min,
            })
        })
        .collect()
}

/// The filter's own model run forward without noise, for self-consistency checks.
pub fn model_trajectory(cfg: &ScenarioConfig, start: JointState) -> Result<Trajectory> {
    let n = cfg.epoch_count();
    let mut states = Vec::with_capacity(n);
    let mut x = start;
    for k in 0..n {
        if k > 0 {
            x = propagate_joint(&x, cfg.dt, &cfg.earth)?;
        }
        states.push(x);
    }
    Ok(Trajectory {
        t0: cfg.t0,
        dt: cfg.dt,
        states,
    })
}

/// Satellite state of the configured orbit at `t0`, joined with the UE start.
pub fn initial_truth(cfg: &ScenarioConfig) -> Result<JointState> {
    let sat: SatState = truth_orbit_state(&cfg.orbit, cfg.t0, &cfg.earth)?;
    Ok(JointState::new(sat, cfg.ue_start_ecef()?, cfg.ue_velocity))
}
