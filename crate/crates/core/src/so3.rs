//! Rotation group kernel: hat/vee, the exponential and logarithm maps, and the
//! Morse error function `<K, I - Q>` together with its gradient `S_K(Q)`.
//!
//! Vectors and matrices are plain `nalgebra` types. A [`Rotation`] is a 3x3
//! matrix known to lie on SO(3); raw matrices are checked on construction,
//! while values produced by [`Rotation::exp`] and by group products are
//! trusted.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance for accepting a raw matrix as a rotation.
pub const ORTHONORMAL_TOL: f64 = 1e-9;
/// Tolerance on the symmetric part accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;
/// Below this angle exp/log switch to Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-6;

/// The cross map: `hat(v) * w == v.cross(&w)`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`].
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let sym = (m + m.transpose()).norm() * 0.5;
    if sym > SKEW_TOL {
        return Err(Error::NotSkewSymmetric(sym));
    }
    Ok(vee_unchecked(m))
}

/// Reads the skew part of `m` without checking symmetry; the result is
/// `vee((m - m^T) / 2)`.
pub fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// `|R^T R - I|_F`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Accepts `m` if it is orthonormal and proper within [`ORTHONORMAL_TOL`].
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NotOrthonormal(f64::NAN));
        }
        let err = orthonormality_error(&m);
        if err > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(err));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::NotProperRotation(det));
        }
        Ok(Rotation(m))
    }

    /// Wraps `m` without any check. Callers guarantee `m` is a rotation.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    /// Rodrigues' formula,
    /// `I + (sin|f|/|f|) f^x + ((1 - cos|f|)/|f|^2) (f^x)^2`.
    pub fn exp(f: &Vec3) -> Self {
        let theta2 = f.norm_squared();
        let theta = theta2.sqrt();
        let (a, b) = if theta < SMALL_ANGLE {
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        let k = hat(f);
        Rotation(Mat3::identity() + k * a + k * k * b)
    }

    /// Principal logarithm, returning a rotation vector with norm in `[0, pi]`.
    ///
    /// Within [`SMALL_ANGLE`] of `pi` the axis comes from the column of the
    /// symmetric part with the largest diagonal entry. Its sign follows the
    /// skew part when that is nonzero; at exactly `pi` the first nonzero
    /// component is made positive.
    pub fn log(&self) -> Vec3 {
        let r = &self.0;
        let skew = vee_unchecked(r);
        let cos_t = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let theta = skew.norm().atan2(cos_t);
        if theta < SMALL_ANGLE {
            // theta / (2 sin theta) ~ 1/2 (1 + theta^2 / 6), folded into the
            // skew part, which is already halved.
            return skew * (1.0 + theta * theta / 6.0);
        }
        if PI - theta >= SMALL_ANGLE {
            return skew * (theta / theta.sin());
        }
        let sym = (r + r.transpose()) * 0.5;
        let outer = (sym - Mat3::identity() * cos_t) / (1.0 - cos_t);
        let j = (0..3)
            .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
            .unwrap_or(0);
        let mut axis = outer.column(j).into_owned();
        axis /= axis.norm();
        let s = axis.dot(&skew);
        if s < 0.0 || (s == 0.0 && first_nonzero_negative(&axis)) {
            axis = -axis;
        }
        axis * theta
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// Geodesic distance to the identity.
    pub fn angle(&self) -> f64 {
        self.log().norm()
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

fn first_nonzero_negative(v: &Vec3) -> bool {
    v.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0)
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Diagonal weight matrix `K = diag(k1, k2, k3)` with distinct positive entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMatrixK {
    k: [f64; 3],
}

impl GainMatrixK {
    pub const DISTINCT_TOL: f64 = 1e-12;

    pub fn new(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        let k = [k1, k2, k3];
        if k.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "K entries must be positive, got {k:?}"
            )));
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            if (k[i] - k[j]).abs() <= Self::DISTINCT_TOL {
                return Err(Error::InvalidParameter(format!(
                    "K entries must be pairwise distinct, got {k:?}"
                )));
            }
        }
        Ok(GainMatrixK { k })
    }

    pub fn diag(&self) -> [f64; 3] {
        self.k
    }
}

/// `<K, I - Q> = sum_i k_i (1 - Q_ii)`.
pub fn morse_error(q: &Rotation, k: &GainMatrixK) -> f64 {
    let m = q.matrix();
    (0..3).map(|i| k.k[i] * (1.0 - m[(i, i)])).sum()
}

/// `S_K(Q) = sum_i k_i (Q^T e_i) x e_i`, so that
/// `d/dt <K, I - Q> = omega . S_K(Q)` along `Q' = Q omega^x`.
pub fn s_k(q: &Rotation, k: &GainMatrixK) -> Vec3 {
    let m = q.matrix();
    let mut out = Vec3::zeros();
    for i in 0..3 {
        // Q^T e_i is the i-th row of Q.
        let qi = m.row(i).transpose();
        out += qi.cross(&Vec3::ith(i, 1.0)) * k.k[i];
    }
    out
}
