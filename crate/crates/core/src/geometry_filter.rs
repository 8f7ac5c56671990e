//! Acceleration-area removal at ramp locations.
//!
//! Vehicles leaving a bottleneck head need distance to regain speed, so the
//! sections just downstream of an on-ramp often read below threshold and get
//! glued to the queue. Per region, a ramp section whose downstream neighbour
//! shows a speed rise of more than `lambda1` marks the start of such an area,
//! which is cleared from the region.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::components::{filter_small_components, label_regions, LabeledRegions, Region};
use crate::config::DetectionConfig;
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::morphology::denoise_grid;
use crate::speed_grid::{CorridorGeometry, SpeedGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// One value per section row.
    Sections,
    /// One value per time column.
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCurve {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// Per-row mean speed over the region's cells; rows the region does not touch read 0.
pub fn region_speed_projection(grid: &SpeedGrid, region: &Region) -> Result<ProjectionCurve> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut sums = vec![0.0; grid.rows()];
    let mut counts = vec![0usize; grid.rows()];
    for &(r, c) in &region.cells {
        sums[r] += grid.speed(r, c);
        counts[r] += 1;
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect();
    Ok(ProjectionCurve {
        axis: Axis::Sections,
        values,
    })
}

/// Acceleration areas of one region, as inclusive row ranges.
///
/// A ramp row `r` triggers when it and the row below both hold region cells
/// and `projection[r + 1] > lambda1 * projection[r]`. The area then runs over
/// the contiguous rows below `r` that keep exceeding that bound, ending at
/// the first row back at queue speed or at the region's downstream edge.
pub fn acceleration_zones(
    region: &Region,
    grid: &SpeedGrid,
    geometry: &CorridorGeometry,
    lambda1: f64,
) -> Result<Vec<RangeInclusive<usize>>> {
    let projection = region_speed_projection(grid, region)?;
    let mut occupied = vec![false; grid.rows()];
    for &(r, _) in &region.cells {
        occupied[r] = true;
    }
    let (top, bottom) = (region.bbox.row_min, region.bbox.row_max);
    let mut zones = Vec::new();
    for ramp in top..bottom {
        if !geometry.section(ramp).ramp || !occupied[ramp] {
            continue;
        }
        let bound = lambda1 * projection.values[ramp];
        let end = (ramp + 1..=bottom)
            .take_while(|&r| occupied[r] && projection.values[r] > bound)
            .last();
        if let Some(end) = end {
            zones.push(ramp + 1..=end);
        }
    }
    Ok(zones)
}

/// Clears acceleration areas from `binary`. Only cells are cleared, never set.
pub fn strip_acceleration_area(
    binary: &BinaryGrid,
    regions: &LabeledRegions,
    grid: &SpeedGrid,
    geometry: &CorridorGeometry,
    lambda1: f64,
) -> Result<BinaryGrid> {
    if geometry.len() != grid.rows() || binary.shape() != grid.shape() {
        return Err(Error::ShapeMismatch {
            left: binary.shape(),
            right: (geometry.len(), grid.cols()),
        });
    }
    let mut out = binary.clone();
    for region in &regions.regions {
        for zone in acceleration_zones(region, grid, geometry, lambda1)? {
            for &(r, c) in region.cells.iter().filter(|(r, _)| zone.contains(r)) {
                out.set(r, c, false);
            }
        }
    }
    Ok(out)
}

/// Result of the strip stage followed by the second filter pass.
#[derive(Debug, Clone)]
pub struct StripOutcome {
    pub stripped: BinaryGrid,
    pub denoised: BinaryGrid,
    pub filtered: BinaryGrid,
}

/// Labels `binary`, strips acceleration areas, then reruns the noise and
/// small-component filters so bottlenecks that were joined through an
/// acceleration area come apart.
pub fn remove_acceleration_areas(
    binary: &BinaryGrid,
    grid: &SpeedGrid,
    geometry: &CorridorGeometry,
    config: &DetectionConfig,
) -> Result<StripOutcome> {
    let regions = label_regions(binary, config.connectivity);
    let stripped = strip_acceleration_area(binary, &regions, grid, geometry, config.lambda1)?;
    let denoised = denoise_grid(&stripped, config)?;
    let filtered = filter_small_components(&denoised, config.alpha3, config.connectivity);
    Ok(StripOutcome {
        stripped,
        denoised,
        filtered,
    })
}
