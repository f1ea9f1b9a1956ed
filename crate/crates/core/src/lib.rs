//! Roadside vehicle localization and camera/LiDAR late fusion.
//!
//! The crate is organized along the processing chain:
//!
//! * [`frames`]: world-frame points, timestamped trajectories, time alignment.
//! * [`camera`]: pixel → angle → flat-ground localization and its inverse.
//! * [`pointcloud`]: the bottom-up LiDAR detector (filters, RANSAC ground
//!   removal, DBSCAN, agglomerative merging, oriented boxes).
//! * [`kalman`]: constant-velocity Kalman filter for single-sensor smoothing
//!   and sequential camera-then-LiDAR fusion.
//! * [`association`]: nearest-distance cross-sensor matching and
//!   frame-to-frame track identity.
//! * [`scenario`]: deterministic synthetic work-zone merge scenes.
//! * [`evaluation`]: error profiles, cumulative errors, averaging baseline.
//! * [`io`]: CSV, PLY and manifest formats shared by the command line.

// Validation writes `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod camera;
pub mod error;
pub mod evaluation;
pub mod frames;
pub mod io;
pub mod kalman;
pub mod pointcloud;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use frames::{SensorSource, TrackId, Trajectory, TrajectorySample, WorldPoint};
