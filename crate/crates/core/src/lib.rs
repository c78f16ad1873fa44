//! Ground-truth curation and evaluation for occupancy completion and forecasting.
//!
//! Raw LiDAR sequences (points, ego poses, instance boxes) are turned into
//! dense spatial-temporal occupancy samples, and forecasts are scored against
//! them with IoU, average precision, precision/recall/F1 and the soft-IoU loss.
//! A synthetic LiDAR simulator supplies scenes whose occupancy is known
//! analytically.

pub mod baselines;
pub mod curation;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod occupancy;
pub mod pipeline;
pub mod sim;
pub mod store;

pub use error::{Error, Result};
pub use geometry::{GridSpec, OrientedBox, RigidTransform, Vec3};
pub use occupancy::{CellState, OccupancyGrid, Sample};
