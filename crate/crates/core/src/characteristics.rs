//! Per-bottleneck characteristics: activation/deactivation points on the
//! front (downstream) and rear (upstream) edges, the back-propagation
//! shockwave speed, and vehicle-hours of delay.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::components::Region;
use crate::error::{Error, Result};
use crate::fundamental::FundamentalDiagram;
use crate::geometry_filter::{Axis, ProjectionCurve};
use crate::grid::Matrix;
use crate::speed_grid::{CorridorGeometry, SpeedGrid};

/// Congested-cell counts of a region per column (`Axis::Time`) or per row
/// (`Axis::Sections`).
pub fn binary_projection(region: &Region, shape: (usize, usize), axis: Axis) -> Result<ProjectionCurve> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let len = match axis {
        Axis::Sections => shape.0,
        Axis::Time => shape.1,
    };
    let mut values = vec![0.0; len];
    for &(r, c) in &region.cells {
        values[if axis == Axis::Sections { r } else { c }] += 1.0;
    }
    Ok(ProjectionCurve { axis, values })
}

/// A (section, time) point on a bottleneck edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgePoint {
    pub section_id: String,
    pub row: usize,
    pub column: usize,
    pub time: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationPoints {
    pub front_activation: EdgePoint,
    pub front_deactivation: EdgePoint,
    pub rear_activation: EdgePoint,
    pub rear_deactivation: EdgePoint,
}

/// First and last non-zero index of a projection curve.
fn nonzero_span(values: &[f64]) -> Option<(usize, usize)> {
    let first = values.iter().position(|&v| v > 0.0)?;
    let last = values.iter().rposition(|&v| v > 0.0)?;
    Some((first, last))
}

/// Front is the most downstream row touched by the region, rear the most
/// upstream. On each, activation is the first congested interval and
/// deactivation the last.
pub fn extract_activation_points(region: &Region, grid: &SpeedGrid) -> Result<ActivationPoints> {
    let shape = grid.shape();
    let vertical = binary_projection(region, shape, Axis::Sections)?;
    let (rear_row, front_row) = nonzero_span(&vertical.values).ok_or(Error::EmptyRegion)?;

    let edge = |row: usize| -> (EdgePoint, EdgePoint) {
        let row_cells = Region::from_cells(
            region.label,
            region.cells.iter().copied().filter(|&(r, _)| r == row).collect(),
        )
        .expect("row selected from the region's vertical projection");
        let horizontal = binary_projection(&row_cells, shape, Axis::Time).expect("non-empty row");
        let (first, last) = nonzero_span(&horizontal.values).expect("non-empty row");
        let point = |column: usize| EdgePoint {
            section_id: grid.section_ids()[row].clone(),
            row,
            column,
            time: grid.timestamps()[column],
        };
        (point(first), point(last))
    };
    let (front_activation, front_deactivation) = edge(front_row);
    let (rear_activation, rear_deactivation) = edge(rear_row);
    Ok(ActivationPoints {
        front_activation,
        front_deactivation,
        rear_activation,
        rear_deactivation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shockwave {
    /// Signed propagation speed in mph, negative when moving upstream.
    /// `None` when front and rear activate in the same interval.
    pub raw_mph: Option<f64>,
    pub reported_mph: f64,
    pub clamped: bool,
}

/// Speed of the congestion boundary between the front and rear activation
/// points, measured between section midpoints and capped by the
/// fundamental-diagram maximum. Simultaneous activation or a rear that
/// activates before the front is reported at the cap.
pub fn shockwave_speed(
    front_activation: &EdgePoint,
    rear_activation: &EdgePoint,
    geometry: &CorridorGeometry,
    fd: &FundamentalDiagram,
) -> Shockwave {
    let cap = fd.max_shockwave_speed();
    let distance = geometry.midpoint_distance(rear_activation.row, front_activation.row);
    let hours = (rear_activation.time - front_activation.time).num_seconds() as f64 / 3600.0;
    if hours == 0.0 {
        return Shockwave {
            raw_mph: None,
            reported_mph: cap,
            clamped: true,
        };
    }
    let raw = -distance / hours;
    if hours < 0.0 || raw.abs() > cap {
        Shockwave {
            raw_mph: Some(raw),
            reported_mph: cap,
            clamped: true,
        }
    } else {
        Shockwave {
            raw_mph: Some(raw),
            reported_mph: raw.abs(),
            clamped: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    pub vehicle_hours: f64,
    /// Cells at 0 mph, which contribute nothing.
    pub zero_speed_cells: usize,
}

/// Delay of a single cell in vehicle-hours, or `None` for a zero-speed cell.
fn cell_delay(
    speed: f64,
    measured_flow: Option<f64>,
    length_miles: f64,
    lanes: u32,
    interval_hours: f64,
    fd: &FundamentalDiagram,
) -> Option<f64> {
    if speed >= fd.u_free {
        return Some(0.0);
    }
    if !(speed > 0.0) {
        return None;
    }
    let flow = match measured_flow {
        Some(q) => q,
        None => fd.flow(speed).ok()?,
    };
    let per_lane = length_miles * flow * (1.0 / speed - 1.0 / fd.u_free) * interval_hours;
    Some((per_lane * f64::from(lanes)).max(0.0))
}

/// Total delay over the region's cells. `volumes` holds measured per-lane
/// flows in veh/hour; `NaN` entries fall back to the Van Aerde flow.
pub fn region_delay(
    region: &Region,
    grid: &SpeedGrid,
    geometry: &CorridorGeometry,
    fd: &FundamentalDiagram,
    volumes: Option<&Matrix<f64>>,
) -> Result<DelayEstimate> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if let Some(v) = volumes {
        if v.shape() != grid.shape() {
            return Err(Error::ShapeMismatch {
                left: v.shape(),
                right: grid.shape(),
            });
        }
    }
    let interval_hours = f64::from(grid.interval_minutes()) / 60.0;
    let mut total = 0.0;
    let mut zero = 0;
    for &(r, c) in &region.cells {
        let section = geometry.section(r);
        let measured = volumes.map(|v| *v.get(r, c)).filter(|q| !q.is_nan());
        match cell_delay(
            grid.speed(r, c),
            measured,
            section.length_miles,
            section.lanes,
            interval_hours,
            fd,
        ) {
            Some(d) => total += d,
            None => zero += 1,
        }
    }
    Ok(DelayEstimate {
        vehicle_hours: total,
        zero_speed_cells: zero,
    })
}

/// One row of the bottleneck table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckReport {
    pub index: usize,
    pub front_activation: EdgePoint,
    pub front_deactivation: EdgePoint,
    pub rear_activation: EdgePoint,
    pub rear_deactivation: EdgePoint,
    pub shockwave: Shockwave,
    pub delay_vehicle_hours: f64,
    pub zero_speed_cells: usize,
    pub cell_count: usize,
}

pub fn characterize(
    index: usize,
    region: &Region,
    grid: &SpeedGrid,
    geometry: &CorridorGeometry,
    fd: &FundamentalDiagram,
    volumes: Option<&Matrix<f64>>,
) -> Result<BottleneckReport> {
    let points = extract_activation_points(region, grid)?;
    let shockwave = shockwave_speed(&points.front_activation, &points.rear_activation, geometry, fd);
    let delay = region_delay(region, grid, geometry, fd, volumes)?;
    Ok(BottleneckReport {
        index,
        front_activation: points.front_activation,
        front_deactivation: points.front_deactivation,
        rear_activation: points.rear_activation,
        rear_deactivation: points.rear_deactivation,
        shockwave,
        delay_vehicle_hours: delay.vehicle_hours,
        zero_speed_cells: delay.zero_speed_cells,
        cell_count: region.len(),
    })
}
