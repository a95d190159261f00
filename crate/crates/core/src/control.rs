//! Tracking errors, the geometric PID attitude law and its baselines, the
//! outer-loop thrust law, and the Lyapunov bookkeeping used to audit runs.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rigid_body::{BodyState, InertiaModel};
use crate::so3::{hat, morse_error, s_k, GainMatrixK, Mat3, Rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeErrors {
    /// `Q = R_d^T R`.
    pub q: Rotation,
    /// `omega = Omega - Q^T Omega_d`.
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredAttitudeSample {
    pub r_d: Rotation,
    pub omega_d: Vec3,
    pub omega_d_dot: Vec3,
}

impl DesiredAttitudeSample {
    pub fn fixed(r_d: Rotation) -> Self {
        DesiredAttitudeSample {
            r_d,
            omega_d: Vec3::zeros(),
            omega_d_dot: Vec3::zeros(),
        }
    }
}

/// Gains for the geometric controllers and the position loop.
///
/// The derivative gain is always `k_D = k_I + k_DI`; it cannot be set on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    kp: f64,
    ki: f64,
    kdi: f64,
    k: GainMatrixK,
    p: Mat3,
    lv: Mat3,
}

fn check_spd(name: &str, m: &Mat3) -> Result<()> {
    if !m.iter().all(|x| x.is_finite()) || (m - m.transpose()).norm() > 1e-12 {
        return Err(Error::InvalidParameter(format!("{name} must be symmetric")));
    }
    if m.symmetric_eigenvalues().iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive definite"
        )));
    }
    Ok(())
}

impl ControllerGains {
    pub fn new(kp: f64, ki: f64, kdi: f64, k: GainMatrixK, p: Mat3, lv: Mat3) -> Result<Self> {
        for (name, v) in [("kP", kp), ("kI", ki), ("kDI", kdi)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        check_spd("P", &p)?;
        check_spd("Lv", &lv)?;
        Ok(ControllerGains {
            kp,
            ki,
            kdi,
            k,
            p,
            lv,
        })
    }

    /// Defaults scaled to the vehicle mass: `kP = 8, kI = 1, kDI = 2`,
    /// `K = diag(1, 1.1, 1.2)`, `P = 4 m I`, `Lv = 2.8 m I`.
    pub fn default_for_mass(m: f64) -> Self {
        Self::new(
            8.0,
            1.0,
            2.0,
            GainMatrixK::new(1.0, 1.1, 1.2).expect("distinct"),
            Mat3::identity() * (4.0 * m),
            Mat3::identity() * (2.8 * m),
        )
        .expect("default gains are valid")
    }

    pub fn kp(&self) -> f64 {
        self.kp
    }
    pub fn ki(&self) -> f64 {
        self.ki
    }
    pub fn kdi(&self) -> f64 {
        self.kdi
    }
    pub fn kd(&self) -> f64 {
        self.ki + self.kdi
    }
    pub fn k(&self) -> &GainMatrixK {
        &self.k
    }
    pub fn p(&self) -> &Mat3 {
        &self.p
    }
    pub fn lv(&self) -> &Mat3 {
        &self.lv
    }
}

/// Integrator state of the geometric PID. Starts at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidControllerState {
    pub f_i: Vec3,
}

pub fn attitude_errors(
    r: &Rotation,
    omega: &Vec3,
    reference: &DesiredAttitudeSample,
) -> AttitudeErrors {
    let q = reference.r_d.transpose() * *r;
    AttitudeErrors {
        q,
        omega: omega - q.transpose() * reference.omega_d,
    }
}

/// `F_I' = J^-1 (-kP S_K(Q) - kD omega)`.
pub fn integrator_rhs(
    errors: &AttitudeErrors,
    gains: &ControllerGains,
    inertia: &InertiaModel,
) -> Vec3 {
    inertia.j_inv() * (-s_k(&errors.q, &gains.k) * gains.kp - errors.omega * gains.kd())
}

/// Explicit Euler on the integrator.
pub fn step_integrator(state: &PidControllerState, rhs: &Vec3, h: f64) -> PidControllerState {
    PidControllerState {
        f_i: state.f_i + rhs * h,
    }
}

/// Every term of the law except `kI F_I`.
fn pd_terms(
    errors: &AttitudeErrors,
    reference: &DesiredAttitudeSample,
    omega_body: &Vec3,
    gains: &ControllerGains,
    inertia: &InertiaModel,
) -> Vec3 {
    let j = inertia.j();
    let qt = errors.q.transpose();
    let qt_wd = qt * reference.omega_d;
    let qt_wd_dot = qt * reference.omega_d_dot;
    -s_k(&errors.q, &gains.k) * gains.kp - errors.omega * gains.kd()
        + j * (qt_wd_dot - hat(&errors.omega) * qt_wd)
        - (j * omega_body).cross(&qt_wd)
}

/// Geometric PID torque
///
/// ```text
/// tau = kI F_I - kP S_K(Q) - kD omega
///       + J (Q^T Omega_d' - omega^x Q^T Omega_d) - J Omega x Q^T Omega_d
/// ```
pub fn pid_torque(
    errors: &AttitudeErrors,
    ctl: &PidControllerState,
    reference: &DesiredAttitudeSample,
    omega_body: &Vec3,
    gains: &ControllerGains,
    inertia: &InertiaModel,
) -> Vec3 {
    ctl.f_i * gains.ki + pd_terms(errors, reference, omega_body, gains, inertia)
}

/// The same law with the integral channel removed.
pub fn pd_torque(
    errors: &AttitudeErrors,
    reference: &DesiredAttitudeSample,
    omega_body: &Vec3,
    gains: &ControllerGains,
    inertia: &InertiaModel,
) -> Vec3 {
    Vec3::zeros() + pd_terms(errors, reference, omega_body, gains, inertia)
}

/// Per-axis gains of the Euler-angle baseline, ordered roll, pitch, yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicPidGains {
    pub kp: Vec3,
    pub ki: Vec3,
    pub kd: Vec3,
}

impl ClassicPidGains {
    /// Matches the linearization of the geometric law about `Q = I`:
    /// proportional gain `kP (tr K - k_i)` per axis, same `kD` and `kI`.
    pub fn matching(gains: &ControllerGains) -> Self {
        let [k1, k2, k3] = gains.k.diag();
        ClassicPidGains {
            kp: Vec3::new(k2 + k3, k1 + k3, k1 + k2) * gains.kp,
            ki: Vec3::repeat(gains.ki),
            kd: Vec3::repeat(gains.kd()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicPidState {
    /// Running integral of the Euler-angle error.
    pub integral: Vec3,
}

pub const EULER_SINGULARITY_TOL: f64 = 1e-6;

/// ZYX Euler angles `[roll, pitch, yaw]` with `R = Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn euler_zyx(r: &Rotation) -> Result<Vec3> {
    let m = r.matrix();
    let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
    if (pitch.abs() - PI / 2.0).abs() <= EULER_SINGULARITY_TOL {
        return Err(Error::EulerSingularity(pitch));
    }
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    Ok(Vec3::new(roll, pitch, yaw))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Non-geometric baseline: per-axis PID on ZYX Euler-angle errors.
///
/// Returns the torque and the advanced integrator state.
pub fn classic_pid_torque(
    r: &Rotation,
    omega_body: &Vec3,
    reference: &DesiredAttitudeSample,
    gains: &ClassicPidGains,
    state: &ClassicPidState,
    h: f64,
) -> Result<(Vec3, ClassicPidState)> {
    let actual = euler_zyx(r)?;
    let desired = euler_zyx(&reference.r_d)?;
    let e = (desired - actual).map(wrap_angle);
    let tau = gains.kp.component_mul(&e)
        + gains.ki.component_mul(&state.integral)
        + gains.kd.component_mul(&(reference.omega_d - omega_body));
    Ok((
        tau,
        ClassicPidState {
            integral: state.integral + e * h,
        },
    ))
}

/// Desired force `m g e3 + P b~ + Lv (R nu - v_d) - m v_d'` in inertial
/// coordinates; its projection onto the body thrust axis is the thrust.
pub fn desired_force(
    state: &BodyState,
    b_d: &Vec3,
    v_d: &Vec3,
    v_d_dot: &Vec3,
    gains: &ControllerGains,
    m: f64,
    g: f64,
) -> Vec3 {
    let b_tilde = state.b - b_d;
    Vec3::z() * (m * g) + gains.p * b_tilde + gains.lv * (state.velocity() - v_d) - v_d_dot * m
}

/// Outer-loop thrust `f = e3^T R^T (m g e3 + P b~ + Lv (R nu - v_d) - m v_d')`.
pub fn position_thrust(
    state: &BodyState,
    b_d: &Vec3,
    v_d: &Vec3,
    v_d_dot: &Vec3,
    gains: &ControllerGains,
    m: f64,
    g: f64,
) -> f64 {
    let force = desired_force(state, b_d, v_d, v_d_dot, gains, m, g);
    (state.r.transpose() * force).z
}

/// `V = 1/2 {(F_I - w)^T J (F_I - w) + w^T J w} + kP <K, I - Q>`.
pub fn lyapunov_value(
    errors: &AttitudeErrors,
    f_i: &Vec3,
    gains: &ControllerGains,
    inertia: &InertiaModel,
) -> f64 {
    let j = inertia.j();
    let w = &errors.omega;
    let d = f_i - w;
    0.5 * (d.dot(&(j * d)) + w.dot(&(j * w))) + gains.kp * morse_error(&errors.q, &gains.k)
}

/// Closed-form decay rate `-kDI |w|^2 - kI |F_I - w|^2` of [`lyapunov_value`]
/// under the undisturbed PID loop.
pub fn lyapunov_rate(errors: &AttitudeErrors, f_i: &Vec3, gains: &ControllerGains) -> f64 {
    -gains.kdi * errors.omega.norm_squared() - gains.ki * (f_i - errors.omega).norm_squared()
}

/// Time derivative of [`lyapunov_value`] along the undisturbed closed loop,
/// including the gyroscopic coupling `-F_I . (J Omega x w)` that
/// [`lyapunov_rate`] leaves out.
pub fn lyapunov_rate_with_gyroscopic(
    errors: &AttitudeErrors,
    f_i: &Vec3,
    omega_body: &Vec3,
    gains: &ControllerGains,
    inertia: &InertiaModel,
) -> f64 {
    let coupling = f_i.dot(&(inertia.j() * omega_body).cross(&errors.omega));
    lyapunov_rate(errors, f_i, gains) - coupling
}

/// Membership test `|2w - F_I| gamma <= kDI |w|^2 + kI |F_I - w|^2`.
pub fn disturbance_neighborhood_check(
    errors: &AttitudeErrors,
    f_i: &Vec3,
    gains: &ControllerGains,
    gamma: f64,
) -> bool {
    let w = &errors.omega;
    let lhs = (w * 2.0 - f_i).norm() * gamma;
    lhs <= -lyapunov_rate(errors, f_i, gains)
}
