//! Bottleneck identification on freeway speed heatmaps.
//!
//! A day of detector speeds (sections × time) is thresholded into a
//! congestion mask, cleaned with morphology, split at ramp acceleration
//! areas, and each remaining region is reported with its activation points,
//! shockwave speed and delay.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binarize;
pub mod cli;
pub mod characteristics;
pub mod components;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod fundamental;
pub mod geometry_filter;
pub mod grid;
pub mod morphology;
pub mod pipeline;
pub mod render;
pub mod report;
pub mod speed_grid;

pub use config::{Connectivity, DetectionConfig, RunConfig};
pub use error::{Error, Result};
pub use grid::{BinaryGrid, Matrix};
pub use pipeline::{DayInput, DayResult, Pipeline};
pub use speed_grid::{CorridorGeometry, SpeedGrid};
