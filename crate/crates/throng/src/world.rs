//! Field geometry, grid partitioning, pedestrian state, and the immutable
//! per-tick snapshots consumed by every other module.

mod field;
mod grid;
mod pedestrian;
mod snapshot;
mod vec2;

pub use field::{ExitSegment, FieldConfig, Obstacle, Rect};
pub use grid::{build_partition, locate, GridId, GridPartition, Layer};
pub use pedestrian::{ActiveDirective, Directive, Goal, Pedestrian};
pub use snapshot::{derive_kinematics, Kinematics, Snapshot, STILLNESS_SPEED};
pub use vec2::Vec2;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("cell size {0} must be positive and no larger than the smaller field dimension")]
    InvalidCellSize(f64),
    #[error("point ({0}, {1}) lies outside the field")]
    OutOfField(f64, f64),
    #[error("snapshot carries a non-positive dt")]
    InvalidSnapshot,
}
