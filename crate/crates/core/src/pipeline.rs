//! Day-level orchestration:
//! binarize → denoise → component filter → strip acceleration areas →
//! denoise → component filter → label → characteristics.
//!
//! The threshold guard is the only state shared between days; batches compute
//! the per-day histograms in parallel, apply the guard in date order, and then
//! finish the days in parallel again.

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::binarize::{
    binarize_speed, fit_speed_mixture, guard_threshold, otsu_threshold, MixtureFit, OtsuResult,
    ThresholdState,
};
use crate::characteristics::{characterize, BottleneckReport};
use crate::components::{filter_small_components, label_regions, LabeledRegions};
use crate::config::DetectionConfig;
use crate::error::{Error, Result};
use crate::fundamental::FundamentalDiagram;
use crate::geometry_filter::remove_acceleration_areas;
use crate::grid::{BinaryGrid, Matrix};
use crate::morphology::{denoise_grid, StructuringElement};
use crate::speed_grid::{impute_missing, CorridorGeometry, SpeedGrid};

const MIXTURE_MAX_ITERATIONS: usize = 200;
const MIXTURE_TOLERANCE: f64 = 1e-6;

/// Intermediate masks, kept only when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSnapshots {
    pub binarized: BinaryGrid,
    pub denoised: BinaryGrid,
    pub component_filtered: BinaryGrid,
    pub stripped: BinaryGrid,
    pub final_mask: BinaryGrid,
}

impl StageSnapshots {
    pub fn stages(&self) -> [(&'static str, &BinaryGrid); 5] {
        [
            ("binarized", &self.binarized),
            ("denoised", &self.denoised),
            ("component_filtered", &self.component_filtered),
            ("stripped", &self.stripped),
            ("final", &self.final_mask),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct DayResult {
    pub date: Option<NaiveDate>,
    /// `None` when the day's histogram was degenerate.
    pub otsu: Option<OtsuResult>,
    pub threshold: ThresholdState,
    pub mixture: Option<MixtureFit>,
    pub reports: Vec<BottleneckReport>,
    pub final_mask: BinaryGrid,
    pub regions: LabeledRegions,
    pub snapshots: Option<StageSnapshots>,
}

/// One day of input.
#[derive(Debug, Clone, Copy)]
pub struct DayInput<'a> {
    pub grid: &'a SpeedGrid,
    /// Measured per-lane flows, veh/hour, same shape as the grid.
    pub volumes: Option<&'a Matrix<f64>>,
}

impl<'a> DayInput<'a> {
    pub fn new(grid: &'a SpeedGrid) -> Self {
        DayInput { grid, volumes: None }
    }
}

struct Prepared {
    grid: SpeedGrid,
    otsu: Option<OtsuResult>,
    mixture: Option<MixtureFit>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: DetectionConfig,
    pub fd: FundamentalDiagram,
    pub geometry: CorridorGeometry,
    pub keep_snapshots: bool,
}

impl Pipeline {
    pub fn new(config: DetectionConfig, fd: FundamentalDiagram, geometry: CorridorGeometry) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            config,
            fd,
            geometry,
            keep_snapshots: false,
        })
    }

    pub fn with_snapshots(mut self, keep: bool) -> Self {
        self.keep_snapshots = keep;
        self
    }

    pub fn initial_state(&self) -> ThresholdState {
        ThresholdState::from_config(&self.config)
    }

    fn prepare(&self, day: DayInput<'_>) -> Result<Prepared> {
        let grid = day.grid;
        if grid.rows() != self.geometry.len() {
            return Err(Error::RowMismatch {
                expected: self.geometry.len(),
                found: grid.rows(),
            });
        }
        if let Some(v) = day.volumes {
            if v.shape() != grid.shape() {
                return Err(Error::ShapeMismatch {
                    left: v.shape(),
                    right: grid.shape(),
                }
                .in_stage("volumes"));
            }
        }
        let se = StructuringElement::from_config(&self.config);
        if se.height > grid.rows() || se.width > grid.cols() {
            return Err(Error::SeLargerThanGrid {
                se_rows: se.height,
                se_cols: se.width,
                rows: grid.rows(),
                cols: grid.cols(),
            }
            .in_stage("denoise"));
        }
        let grid = impute_missing(grid, self.config.u_free);
        let otsu = match otsu_threshold(&grid, self.config.u_free, self.config.histogram_bins) {
            Ok(r) => Some(r),
            Err(Error::DegenerateData) => None,
            Err(e) => return Err(e.in_stage("binarize")),
        };
        let mixture = fit_speed_mixture(&grid, MIXTURE_MAX_ITERATIONS, MIXTURE_TOLERANCE).ok();
        Ok(Prepared { grid, otsu, mixture })
    }

    fn guard(&self, prepared: &Prepared, state: &ThresholdState) -> ThresholdState {
        guard_threshold(
            prepared.otsu.as_ref().map(|r| r.threshold_mph),
            state,
            &self.config,
        )
    }

    fn first_pass(&self, grid: &SpeedGrid, u_star: f64) -> Result<(BinaryGrid, BinaryGrid, BinaryGrid)> {
        let binarized = binarize_speed(grid, u_star);
        let denoised = denoise_grid(&binarized, &self.config).map_err(|e| e.in_stage("denoise"))?;
        let filtered = filter_small_components(&denoised, self.config.alpha3, self.config.connectivity);
        Ok((binarized, denoised, filtered))
    }

    fn finish(&self, prepared: Prepared, threshold: ThresholdState, volumes: Option<&Matrix<f64>>) -> Result<DayResult> {
        let grid = &prepared.grid;
        let (binarized, denoised, component_filtered) = self.first_pass(grid, threshold.u_star)?;
        let strip = remove_acceleration_areas(&component_filtered, grid, &self.geometry, &self.config)
            .map_err(|e| e.in_stage("strip-acceleration"))?;
        let final_mask = strip.filtered;
        let regions = label_regions(&final_mask, self.config.connectivity);

        let mut reports = regions
            .regions
            .iter()
            .map(|region| characterize(0, region, grid, &self.geometry, &self.fd, volumes))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("characteristics"))?;
        reports.sort_by(|a, b| {
            (a.front_activation.time, a.front_activation.row, a.rear_activation.row)
                .cmp(&(b.front_activation.time, b.front_activation.row, b.rear_activation.row))
        });
        for (i, r) in reports.iter_mut().enumerate() {
            r.index = i + 1;
        }

        let snapshots = self.keep_snapshots.then(|| StageSnapshots {
            binarized,
            denoised,
            component_filtered,
            stripped: strip.stripped,
            final_mask: final_mask.clone(),
        });
        Ok(DayResult {
            date: grid.date(),
            otsu: prepared.otsu,
            threshold,
            mixture: prepared.mixture,
            reports,
            final_mask,
            regions,
            snapshots,
        })
    }

    /// Runs one day; the returned result carries the updated threshold state.
    pub fn run_day(&self, day: DayInput<'_>, state: &ThresholdState) -> Result<DayResult> {
        let prepared = self.prepare(day)?;
        let threshold = self.guard(&prepared, state);
        self.finish(prepared, threshold, day.volumes)
    }

    /// Runs days in the given (chronological) order. A failed day leaves the
    /// threshold state untouched and does not stop the batch.
    pub fn run_batch(&self, days: &[DayInput<'_>], initial: ThresholdState) -> (Vec<Result<DayResult>>, ThresholdState) {
        let prepared: Vec<Result<Prepared>> = days.par_iter().map(|d| self.prepare(*d)).collect();

        let mut state = initial;
        let thresholds: Vec<Option<ThresholdState>> = prepared
            .iter()
            .map(|p| {
                p.as_ref().ok().map(|p| {
                    state = self.guard(p, &state);
                    state
                })
            })
            .collect();

        let results = prepared
            .into_par_iter()
            .zip(thresholds)
            .zip(days.par_iter())
            .map(|((p, t), day)| {
                let p = p?;
                self.finish(p, t.expect("threshold set for every prepared day"), day.volumes)
            })
            .collect();
        (results, state)
    }

    /// Congestion mask of the binarization and post-process filters only,
    /// with the guarded threshold used.
    pub fn congestion_mask(&self, grid: &SpeedGrid, state: &ThresholdState) -> Result<(BinaryGrid, ThresholdState)> {
        let prepared = self.prepare(DayInput::new(grid))?;
        let threshold = self.guard(&prepared, state);
        let (_, _, filtered) = self.first_pass(&prepared.grid, threshold.u_star)?;
        Ok((filtered, threshold))
    }
}
