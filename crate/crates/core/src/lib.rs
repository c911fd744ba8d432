//! Robust sequential estimation on a bounded information geometry.
//!
//! [`geometry`] holds the delta separation, the droplet prior and its
//! boundary. [`tracker`] builds the fixed-point information tracker and the
//! unconstrained MAP baseline on top of it. [`lidar`], [`tick`] and
//! [`tomography`] are the three benchmark scenarios.

// `!(x > 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod lidar;
pub mod rng;
pub mod tick;
pub mod tomography;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{
    delta_separation, droplet_density, gaussian_overlap, overlap_threshold, separation_quadrature,
    within_boundary, GaussianState, GeometryParams, GridDensity,
};
pub use lidar::{LidarScenarioConfig, MonteCarloSummary, TrialOutcome, TrialResult};
pub use tick::{FilteredSeries, TickSeries, WickConfig};
pub use tomography::{DensityMatrix, PauliExpectations};
pub use tracker::{KinematicModel, PointCloud, ProjectionResult, TrackerConfig};
