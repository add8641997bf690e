//! Quaternion IMU mechanization as a filter prediction model.

mod io;
mod mechanize;
mod model;
mod quaternion;

pub use io::{read_imu_file, read_imu_rows, rows_to_samples, ImuCsvError, ImuRow};
pub use mechanize::{
    bias_correct, layout, mechanize, mechanize_unnormalized, ImuSample, VioValues, DEFAULT_GRAVITY,
};
pub use model::{
    propagate, propagate_sequence, renormalize_orientation, vio_dynamics_model, vio_initial_state,
    PropagationRecord, PropagationReport, VioDynamics, VioInitialVariances,
};
pub use quaternion::{omega_matrix, quat_exp, quat_from_wxyz, quat_to_wxyz, rotate_vector};
