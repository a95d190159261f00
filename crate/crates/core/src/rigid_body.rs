//! Rigid-body plant: rotational dynamics discretized by the Lie group
//! variational integrator, plus a standard quadrotor translational model.
//!
//! Frames: `R` maps body to inertial coordinates. The inertial `z` axis points
//! down, gravity is `+g e3` and thrust acts along `-R e3`, so hover with
//! `R = I` needs `f = m g`.

use crate::error::{Error, Result};
use crate::so3::{Mat3, Rotation, Vec3};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaModel {
    j: Mat3,
    j_inv: Mat3,
    mass: f64,
}

impl InertiaModel {
    pub fn new(j: Mat3, mass: f64) -> Result<Self> {
        if !j.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter(
                "inertia has non-finite entries".into(),
            ));
        }
        if (j - j.transpose()).norm() > 1e-12 {
            return Err(Error::InvalidParameter("inertia must be symmetric".into()));
        }
        let eig = j.symmetric_eigenvalues();
        if eig.iter().any(|e| *e <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inertia must be positive definite, eigenvalues {:?}",
                eig.as_slice()
            )));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        let j_inv = j
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("inertia is singular".into()))?;
        Ok(InertiaModel { j, j_inv, mass })
    }

    pub fn diagonal(j: [f64; 3], mass: f64) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&Vec3::from(j)), mass)
    }

    /// The quadrotor used throughout the experiments.
    pub fn quadrotor() -> Self {
        Self::diagonal([0.0820, 0.0845, 0.1377], 4.34).expect("valid inertia")
    }

    pub fn j(&self) -> &Mat3 {
        &self.j
    }

    pub fn j_inv(&self) -> &Mat3 {
        &self.j_inv
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    /// Attitude, body to inertial.
    pub r: Rotation,
    /// Body angular velocity (rad/s).
    pub omega: Vec3,
    /// Inertial position (m).
    pub b: Vec3,
    /// Translational velocity in body coordinates (m/s).
    pub nu: Vec3,
}

impl BodyState {
    pub fn at_rest() -> Self {
        BodyState {
            r: Rotation::identity(),
            omega: Vec3::zeros(),
            b: Vec3::zeros(),
            nu: Vec3::zeros(),
        }
    }

    /// Inertial velocity `R nu`.
    pub fn velocity(&self) -> Vec3 {
        self.r * self.nu
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite()
            && self.omega.iter().all(|x| x.is_finite())
            && self.b.iter().all(|x| x.is_finite())
            && self.nu.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WrenchInput {
    /// Control torque, body frame (N m).
    pub tau: Vec3,
    /// Thrust magnitude along `-body z` (N).
    pub f: f64,
    /// Disturbance torque, body frame (N m).
    pub d: Vec3,
}

/// One LGVI step:
///
/// ```text
/// F_k       = exp(h Omega_k)
/// R_{k+1}   = R_k F_k
/// J Om_{k+1} = F_k^T J Om_k + h (tau_k + D_k)
/// ```
///
/// Position is untouched. The body-frame velocity is re-expressed in the new
/// body frame so that the inertial velocity `R nu` is unchanged.
pub fn lgvi_step(
    state: &BodyState,
    input: &WrenchInput,
    inertia: &InertiaModel,
    h: f64,
) -> BodyState {
    let fk = Rotation::exp(&(state.omega * h));
    let ft = fk.transpose();
    let momentum = ft * (inertia.j() * state.omega) + (input.tau + input.d) * h;
    BodyState {
        r: state.r * fk,
        omega: inertia.j_inv() * momentum,
        b: state.b,
        nu: ft * state.nu,
    }
}

/// Semi-implicit Euler on `m v' = m g e3 - f R e3`, with `v = R nu`.
pub fn translational_step(state: &BodyState, f: f64, m: f64, g: f64, h: f64) -> BodyState {
    let e3 = Vec3::z();
    let v = state.velocity();
    let accel = e3 * g - (state.r * e3) * (f / m);
    let v_next = v + accel * h;
    BodyState {
        b: state.b + v_next * h,
        nu: state.r.transpose() * v_next,
        ..*state
    }
}

/// Full plant step. Translation uses the step-k attitude, then the LGVI
/// advances the rotational state.
pub fn plant_step(
    state: &BodyState,
    input: &WrenchInput,
    inertia: &InertiaModel,
    g: f64,
    h: f64,
) -> BodyState {
    let moved = translational_step(state, input.f, inertia.mass(), g, h);
    lgvi_step(&moved, input, inertia, h)
}

/// Continuous `Omega' = J^-1 (J Omega x Omega + tau + D)`.
pub fn continuous_rotational_rhs(
    state: &BodyState,
    input: &WrenchInput,
    inertia: &InertiaModel,
) -> Vec3 {
    let jw = inertia.j() * state.omega;
    inertia.j_inv() * (jw.cross(&state.omega) + input.tau + input.d)
}
