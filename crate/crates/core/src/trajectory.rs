//! Reference generation: helix position profile, thrust-direction attitude,
//! and log-based discrete desired rates.
//!
//! Rate indexing: for a sequence `R_d[0..n]`,
//! `Omega_d[k+1] = log(R_d[k]^T R_d[k+1]) / h` is the body rate that carries
//! `R_d[k]` to `R_d[k+1]`, and `Omega_d'[k] = (Omega_d[k+1] - Omega_d[k]) / h`.
//! `Omega_d[0]` copies `Omega_d[1]` and the last acceleration copies the one
//! before it.

use std::f64::consts::PI;
use std::path::Path;

use crate::csv_io::{fmt_f64, parse_fields, read_table, write_table};
use crate::error::{Error, Result};
use crate::so3::{Mat3, Rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionRefSample {
    pub t: f64,
    pub b_d: Vec3,
    pub v_d: Vec3,
    pub v_d_dot: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelixParams {
    /// m
    pub radius: f64,
    /// rad/s
    pub angular_rate: f64,
    /// m/s along inertial z (negative climbs, since z points down)
    pub climb_rate: f64,
    pub center: Vec3,
    /// rad
    pub phase: f64,
}

impl Default for HelixParams {
    fn default() -> Self {
        HelixParams {
            radius: 1.0,
            angular_rate: 0.5,
            climb_rate: -0.2,
            center: Vec3::zeros(),
            phase: 0.0,
        }
    }
}

pub fn helix_sample(p: &HelixParams, t: f64) -> PositionRefSample {
    let a = p.angular_rate * t + p.phase;
    let (s, c) = a.sin_cos();
    let (r, w) = (p.radius, p.angular_rate);
    PositionRefSample {
        t,
        b_d: p.center + Vec3::new(r * c, r * s, p.climb_rate * t),
        v_d: Vec3::new(-r * w * s, r * w * c, p.climb_rate),
        v_d_dot: Vec3::new(-r * w * w * c, -r * w * w * s, 0.0),
    }
}

/// Below this norm the thrust vector has no usable direction.
pub const DEGENERATE_THRUST: f64 = 1e-6;

/// Attitude whose body `z` axis is along `force` (thrust acts along
/// `-body z` against `+g e3`), with body `x` taken from the heading
/// `[cos yaw, sin yaw, 0]` projected orthogonal to it.
pub fn thrust_attitude(force: &Vec3, yaw: f64) -> Result<Rotation> {
    let n = force.norm();
    if n.is_nan() || n < DEGENERATE_THRUST {
        return Err(Error::DegenerateThrust(n));
    }
    let z = force / n;
    let heading = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let x_raw = heading - z * heading.dot(&z);
    let xn = x_raw.norm();
    if xn < DEGENERATE_THRUST {
        return Err(Error::DegenerateThrust(xn));
    }
    let x = x_raw / xn;
    let y = z.cross(&x);
    Ok(Rotation::from_matrix_unchecked(Mat3::from_columns(&[
        x, y, z,
    ])))
}

/// Differentially flat desired attitude from the reference alone:
/// body `z` along `m g e3 - m v_d'`.
pub fn flat_desired_attitude(
    sample: &PositionRefSample,
    yaw_d: f64,
    m: f64,
    g: f64,
) -> Result<Rotation> {
    thrust_attitude(&((Vec3::z() * g - sample.v_d_dot) * m), yaw_d)
}

/// Largest admissible rotation between consecutive reference attitudes.
pub const MAX_REFERENCE_STEP: f64 = PI - 1e-3;

/// Desired rates and accelerations for each sample of `r_d`, indexed as in
/// the module docs.
pub fn discrete_desired_rates(r_d: &[Rotation], h: f64) -> Result<Vec<(Vec3, Vec3)>> {
    let n = r_d.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![(Vec3::zeros(), Vec3::zeros())]);
    }
    let mut rates = Vec::with_capacity(n);
    rates.push(Vec3::zeros());
    for (k, pair) in r_d.windows(2).enumerate() {
        let step = (pair[0].transpose() * pair[1]).log();
        let angle = step.norm();
        if angle >= MAX_REFERENCE_STEP {
            return Err(Error::LogBranch(angle).at_step(k + 1));
        }
        rates.push(step / h);
    }
    rates[0] = rates[1];
    let mut out = Vec::with_capacity(n);
    for k in 0..n - 1 {
        out.push((rates[k], (rates[k + 1] - rates[k]) / h));
    }
    let last_acc = out[n - 2].1;
    out.push((rates[n - 1], last_acc));
    Ok(out)
}

/// One row of an exported reference: position profile, attitude and rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub pos: PositionRefSample,
    pub r_d: Rotation,
    pub omega_d: Vec3,
    pub omega_d_dot: Vec3,
}

/// Samples the helix at `t = k h` for `k in 0..n` and attaches the
/// flatness attitude and discrete rates.
pub fn helix_reference(
    p: &HelixParams,
    yaw_d: f64,
    m: f64,
    g: f64,
    h: f64,
    n: usize,
) -> Result<Vec<ReferenceSample>> {
    let pos: Vec<_> = (0..n).map(|k| helix_sample(p, k as f64 * h)).collect();
    let att = pos
        .iter()
        .enumerate()
        .map(|(k, s)| flat_desired_attitude(s, yaw_d, m, g).map_err(|e| e.at_step(k)))
        .collect::<Result<Vec<_>>>()?;
    let rates = discrete_desired_rates(&att, h)?;
    Ok(pos
        .into_iter()
        .zip(att)
        .zip(rates)
        .map(|((pos, r_d), (omega_d, omega_d_dot))| ReferenceSample {
            pos,
            r_d,
            omega_d,
            omega_d_dot,
        })
        .collect())
}

pub const REFERENCE_HEADER: [&str; 25] = [
    "t", "bdx", "bdy", "bdz", "vdx", "vdy", "vdz", "adx", "ady", "adz", "r11", "r12", "r13", "r21",
    "r22", "r23", "r31", "r32", "r33", "wdx", "wdy", "wdz", "wddx", "wddy", "wddz",
];

pub fn write_reference_csv(samples: &[ReferenceSample], path: &Path) -> Result<()> {
    let rows = samples.iter().map(|s| {
        let m = s.r_d.matrix();
        let mut fields = vec![s.pos.t];
        fields.extend(s.pos.b_d.iter());
        fields.extend(s.pos.v_d.iter());
        fields.extend(s.pos.v_d_dot.iter());
        for i in 0..3 {
            for j in 0..3 {
                fields.push(m[(i, j)]);
            }
        }
        fields.extend(s.omega_d.iter());
        fields.extend(s.omega_d_dot.iter());
        fields.into_iter().map(fmt_f64).collect()
    });
    write_table(path, &REFERENCE_HEADER, rows)
}

pub fn read_reference_csv(path: &Path) -> Result<Vec<ReferenceSample>> {
    let mut out = Vec::new();
    for (row, rec) in read_table(path, &REFERENCE_HEADER)?.iter().enumerate() {
        let v = parse_fields(rec, row)?;
        let v3 = |i: usize| Vec3::new(v[i], v[i + 1], v[i + 2]);
        let m = Mat3::from_row_slice(&v[10..19]);
        let r_d = Rotation::from_matrix(m).map_err(|e| e.at_step(row))?;
        out.push(ReferenceSample {
            pos: PositionRefSample {
                t: v[0],
                b_d: v3(1),
                v_d: v3(4),
                v_d_dot: v3(7),
            },
            r_d,
            omega_d: v3(19),
            omega_d_dot: v3(22),
        });
    }
    Ok(out)
}
