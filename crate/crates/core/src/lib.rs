//! Geometric PID attitude tracking on SO(3).
//!
//! The crate bundles the SO(3) kernel, a rigid-body plant stepped by a Lie
//! group variational integrator, the geometric PID law with its PD and
//! Euler-angle baselines, helix references, and a deterministic scenario
//! harness with CSV logging.

pub mod cli;
pub mod config;
pub mod control;
mod csv_io;
pub mod error;
pub mod harness;
pub mod rigid_body;
pub mod so3;
pub mod trajectory;

pub use error::{Error, Result};
pub use so3::{hat, vee, GainMatrixK, Mat3, Rotation, Vec3};
