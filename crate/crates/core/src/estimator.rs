//! Kalman filter machinery and the EKF specialisation for the joint
//! satellite / UE state.
//!
//! The generic pieces (`linear_predict`, `kalman_gain`, the two covariance
//! update forms, `gaussian_density`) work for any static state/measurement
//! size. The EKF functions push the mean through the nonlinear motion and
//! measurement models and use the Jacobians only for covariance and gain.

use nalgebra::{Matrix2, Matrix3, SMatrix, SVector, Vector2, Vector3};

use crate::dynamics::{motion_jacobian, propagate_joint, JointState, Matrix12, StateVector};
use crate::error::{Error, Result};
use crate::geo::{elevation_angle, slant_range, EarthModel, Vec3};

/// Innovation covariances with a larger 2-norm condition number are rejected.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// Step used for the numerical elevation derivatives, km.
pub const ELEVATION_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: JointState,
    pub cov: Matrix12,
}

impl GaussianBelief {
    pub fn new(mean: JointState, cov: Matrix12) -> Self {
        Self { mean, cov }
    }

    /// Largest absolute asymmetry `|P - Pᵀ|` over all entries.
    pub fn asymmetry(&self) -> f64 {
        (self.cov - self.cov.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.cov.symmetric_eigenvalues().min()
    }
}

/// A range / elevation observation of the satellite from the UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub time: f64,
    /// km
    pub range: f64,
    /// rad
    pub elevation: f64,
}

impl Measurement {
    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.range, self.elevation)
    }
}

/// Direct, noisy observation of the satellite position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionFix {
    pub time: f64,
    pub pos: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    RangeElevation(Measurement),
    Position(PositionFix),
}

impl Observation {
    pub fn time(&self) -> f64 {
        match self {
            Observation::RangeElevation(m) => m.time,
            Observation::Position(p) => p.time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Process noise added at every prediction step.
    pub q: Matrix12,
    /// Range / elevation measurement noise.
    pub r: Matrix2<f64>,
    /// Noise of the direct-position measurement mode.
    pub r_position: Matrix3<f64>,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        check_psd(&self.q, "process noise Q")?;
        check_psd(&self.r, "measurement noise R")?;
        check_psd(&self.r_position, "position measurement noise")?;
        Ok(())
    }
}

fn symmetric_eigenvalues<const N: usize>(m: &SMatrix<f64, N, N>) -> nalgebra::DVector<f64> {
    nalgebra::DMatrix::from_column_slice(N, N, m.as_slice()).symmetric_eigenvalues()
}

pub(crate) fn check_psd<const N: usize>(m: &SMatrix<f64, N, N>, what: &str) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::config(format!("{what} has non-finite entries")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::config(format!("{what} is not symmetric")));
    }
    let min_eig = symmetric_eigenvalues(m).min();
    if min_eig < -1e-12 * scale {
        return Err(Error::config(format!(
            "{what} is not positive semidefinite (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// Which algebraic form of `P⁺ = (I - K H) P⁻` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceForm {
    /// `(I - KH) P (I - KH)ᵀ + K R Kᵀ`
    #[default]
    Joseph,
    /// `(I - KH) P`
    Standard,
}

fn symmetrize<const N: usize>(p: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (p + p.transpose()) * 0.5
}

/// `x⁻ = F x`, `P⁻ = F P Fᵀ + Q` for a linear model.
pub fn linear_predict<const N: usize>(
    x: &SVector<f64, N>,
    p: &SMatrix<f64, N, N>,
    f: &SMatrix<f64, N, N>,
    q: &SMatrix<f64, N, N>,
) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
    (f * x, symmetrize(&(f * p * f.transpose() + q)))
}

/// Inverse of a symmetric innovation covariance, refusing ill-conditioned ones.
fn invert_innovation<const M: usize>(s: &SMatrix<f64, M, M>) -> Result<SMatrix<f64, M, M>> {
    if !s.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite innovation covariance".into()));
    }
    let (lo, hi) = if M == 2 {
        let (a, b, d) = (s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - rad, mean + rad)
    } else {
        let eig = symmetric_eigenvalues(&symmetrize(s));
        (eig.min(), eig.max())
    };
    if !(lo > 0.0) || hi / lo > MAX_INNOVATION_CONDITION {
        return Err(Error::Numerical(format!(
            "innovation covariance is singular or ill-conditioned (eigenvalues {lo:e}, {hi:e})"
        )));
    }
    if M == 2 {
        let (a, b, c, d) = (s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
        let det = a * d - b * c;
        let mut inv = SMatrix::<f64, M, M>::zeros();
        inv[(0, 0)] = d / det;
        inv[(0, 1)] = -b / det;
        inv[(1, 0)] = -c / det;
        inv[(1, 1)] = a / det;
        Ok(inv)
    } else {
        s.try_inverse()
            .ok_or_else(|| Error::Numerical("innovation covariance is not invertible".into()))
    }
}

/// `K = P Hᵀ (H P Hᵀ + R)⁻¹`.
pub fn kalman_gain<const N: usize, const M: usize>(
    p_pred: &SMatrix<f64, N, N>,
    h: &SMatrix<f64, M, N>,
    r: &SMatrix<f64, M, M>,
) -> Result<SMatrix<f64, N, M>> {
    let pht = p_pred * h.transpose();
    let s = h * pht + r;
    Ok(pht * invert_innovation(&s)?)
}

pub fn covariance_update<const N: usize, const M: usize>(
    p_pred: &SMatrix<f64, N, N>,
    k: &SMatrix<f64, N, M>,
    h: &SMatrix<f64, M, N>,
    r: &SMatrix<f64, M, M>,
    form: CovarianceForm,
) -> SMatrix<f64, N, N> {
    let i_kh = SMatrix::<f64, N, N>::identity() - k * h;
    let p = match form {
        CovarianceForm::Joseph => i_kh * p_pred * i_kh.transpose() + k * r * k.transpose(),
        CovarianceForm::Standard => i_kh * p_pred,
    };
    symmetrize(&p)
}

/// One linear measurement update; returns the corrected mean and covariance.
pub fn linear_update<const N: usize, const M: usize>(
    x_pred: &SVector<f64, N>,
    p_pred: &SMatrix<f64, N, N>,
    y: &SVector<f64, M>,
    h: &SMatrix<f64, M, N>,
    r: &SMatrix<f64, M, M>,
    form: CovarianceForm,
) -> Result<(SVector<f64, N>, SMatrix<f64, N, N>)> {
    let k = kalman_gain(p_pred, h, r)?;
    let x = x_pred + k * (y - h * x_pred);
    Ok((x, covariance_update(p_pred, &k, h, r, form)))
}

fn check_process_noise(q: &Matrix12) -> Result<()> {
    if !q.iter().all(|v| v.is_finite()) {
        return Err(Error::config("process noise has non-finite entries"));
    }
    if (0..12).any(|i| q[(i, i)] < 0.0) {
        return Err(Error::config("process noise has a negative variance"));
    }
    if (q - q.transpose()).amax() > 1e-12 * q.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::config("process noise is not symmetric"));
    }
    Ok(())
}

/// EKF time update: the mean goes through the Euler motion model, the
/// covariance through its Jacobian evaluated at the pre-step mean.
///
/// `q` is checked for symmetry and non-negative variances here; full
/// positive-semidefiniteness is checked once by [`NoiseConfig::validate`].
pub fn predict(
    b: &GaussianBelief,
    dt: f64,
    q: &Matrix12,
    m: &EarthModel,
) -> Result<GaussianBelief> {
    check_process_noise(q)?;
    let f = motion_jacobian(&b.mean, dt, m)?;
    let mean = propagate_joint(&b.mean, dt, m)?;
    let cov = symmetrize(&(f * b.cov * f.transpose() + q));
    Ok(GaussianBelief { mean, cov })
}

/// Range and elevation the UE would observe for state `x`.
pub fn measurement_model(x: &JointState, time: f64) -> Result<Measurement> {
    if x.sat_pos == x.ue_pos {
        return Err(Error::domain("satellite and UE positions coincide"));
    }
    Ok(Measurement {
        time,
        range: slant_range(&x.sat_pos, &x.ue_pos),
        elevation: elevation_angle(&x.sat_pos, &x.ue_pos)?,
    })
}

/// `∂(range, elevation)/∂x`. The range row is analytic; the elevation row is a
/// central difference with step [`ELEVATION_FD_STEP`]. Velocity columns are zero.
pub fn measurement_jacobian(x: &JointState) -> Result<SMatrix<f64, 2, 12>> {
    let los = x.sat_pos - x.ue_pos;
    let d = los.norm();
    if d == 0.0 {
        return Err(Error::domain("satellite and UE positions coincide"));
    }
    let mut h = SMatrix::<f64, 2, 12>::zeros();
    let unit = los / d;
    for i in 0..3 {
        h[(0, i)] = unit[i];
        h[(0, 6 + i)] = -unit[i];
    }
    let step = ELEVATION_FD_STEP;
    for col in (0..3).chain(6..9) {
        let mut plus = x.to_vector();
        let mut minus = plus;
        plus[col] += step;
        minus[col] -= step;
        let (xp, xm) = (
            JointState::from_vector(&plus),
            JointState::from_vector(&minus),
        );
        let ep = elevation_angle(&xp.sat_pos, &xp.ue_pos)?;
        let em = elevation_angle(&xm.sat_pos, &xm.ue_pos)?;
        h[(1, col)] = (ep - em) / (2.0 * step);
    }
    if !h.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite measurement Jacobian".into()));
    }
    Ok(h)
}

/// EKF measurement update with the Joseph-form covariance.
pub fn update(
    b_pred: &GaussianBelief,
    y: &Measurement,
    r: &Matrix2<f64>,
) -> Result<(GaussianBelief, Vector2<f64>)> {
    update_with(b_pred, y, r, CovarianceForm::Joseph)
}

pub fn update_with(
    b_pred: &GaussianBelief,
    y: &Measurement,
    r: &Matrix2<f64>,
    form: CovarianceForm,
) -> Result<(GaussianBelief, Vector2<f64>)> {
    let predicted = measurement_model(&b_pred.mean, y.time)?;
    let h = measurement_jacobian(&b_pred.mean)?;
    let k = kalman_gain(&b_pred.cov, &h, r)?;
    let innovation = y.as_vector() - predicted.as_vector();
    let mean = JointState::from_vector(&(b_pred.mean.to_vector() + k * innovation));
    let cov = covariance_update(&b_pred.cov, &k, &h, r, form);
    Ok((GaussianBelief { mean, cov }, innovation))
}

/// Linear update for a direct observation of the satellite position.
pub fn update_position(
    b_pred: &GaussianBelief,
    fix: &PositionFix,
    r: &Matrix3<f64>,
    form: CovarianceForm,
) -> Result<(GaussianBelief, Vector3<f64>)> {
    let mut h = SMatrix::<f64, 3, 12>::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    let x = b_pred.mean.to_vector();
    let innovation = fix.pos - b_pred.mean.sat_pos;
    let (mean, cov) = linear_update(&x, &b_pred.cov, &(h * x + innovation), &h, r, form)?;
    Ok((
        GaussianBelief {
            mean: JointState::from_vector(&mean),
            cov,
        },
        innovation,
    ))
}

/// Closed-form scalar steady-state covariance `R/H² (F + sqrt(F² + H² Q / R))`.
///
/// This is the expression as commonly quoted; it is not in general the fixed
/// point of the discrete recursion (see [`iterate_scalar_riccati`]).
pub fn steady_state_covariance_scalar(f: f64, h: f64, q: f64, r: f64) -> Result<f64> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::domain("observation gain H must be non-zero"));
    }
    if !(r > 0.0) {
        return Err(Error::domain("measurement variance R must be positive"));
    }
    Ok(r / (h * h) * (f + (f * f + h * h * q / r).sqrt()))
}

/// Iterates the scalar predict/update covariance recursion from `p0` until the
/// posterior variance changes by less than `tol`, returning the posterior limit.
pub fn iterate_scalar_riccati(
    f: f64,
    h: f64,
    q: f64,
    r: f64,
    p0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut p = p0;
    for _ in 0..max_iter {
        let p_pred = f * f * p + q;
        let k = p_pred * h / (h * h * p_pred + r);
        let next = (1.0 - k * h) * p_pred;
        if (next - p).abs() <= tol {
            return Ok(next);
        }
        p = next;
    }
    Err(Error::Numerical(format!(
        "scalar Riccati recursion did not converge in {max_iter} iterations"
    )))
}

/// Multivariate normal log-density.
pub fn gaussian_log_density<const N: usize>(
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
    x: &SVector<f64, N>,
) -> Result<f64> {
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::domain("covariance is not positive definite"))?;
    let e = x - mean;
    let z = chol
        .l()
        .solve_lower_triangular(&e)
        .expect("cholesky factor is regular");
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * (N as f64 * std::f64::consts::TAU.ln() + log_det + z.norm_squared()))
}

pub fn gaussian_density<const N: usize>(
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
    x: &SVector<f64, N>,
) -> Result<f64> {
    gaussian_log_density(mean, cov, x).map(f64::exp)
}

/// Density of the belief at `x`.
pub fn posterior_density(b: &GaussianBelief, x: &JointState) -> Result<f64> {
    gaussian_density(&b.mean.to_vector(), &b.cov, &x.to_vector())
}

/// `eᵀ P⁻¹ e` over a sub-block of the state; `None` if that block is singular.
pub fn normalized_error_squared<const N: usize>(
    error: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
) -> Option<f64> {
    let chol = cov.cholesky()?;
    Some(chol.l().solve_lower_triangular(error)?.norm_squared())
}

/// Convenience view of the full state difference `estimate - truth`.
pub fn state_error(estimate: &JointState, truth: &JointState) -> StateVector {
    estimate.to_vector() - truth.to_vector()
}
