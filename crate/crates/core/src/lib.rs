//! Gaussian assumed-density filtering workbench.
//!
//! - [`filter`]: cubature moment matching ("UKF") and linearization (EKF)
//!   on top of a shared Kalman update.
//! - [`slam2d`]: planar SLAM with 1D pinhole projections.
//! - [`imu`]: quaternion IMU mechanization as a prediction model.
//! - [`benchmark`]: simulated robustness experiments and sweeps.
//! - [`selftest`]: embedded property checks used by the CLI.

pub mod benchmark;
pub mod error;
pub mod filter;
pub mod imu;
pub mod selftest;
pub mod slam2d;

pub use error::{FilterError, Result};
pub use filter::{FilterMode, GaussianState};
