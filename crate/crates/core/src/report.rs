//! Per-day JSON report and the threshold history carried between runs.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::binarize::{MixtureFit, ThresholdState};
use crate::characteristics::BottleneckReport;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pipeline::DayResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Threshold actually used for binarization.
    pub threshold_mph: f64,
    /// Otsu's proposal, absent for a degenerate day.
    pub otsu_threshold_mph: Option<f64>,
    pub guard_triggered: bool,
    /// Fallback threshold handed to the next day.
    pub u_pre_mph: f64,
    pub max_shockwave_mph: f64,
    pub mixture: Option<MixtureFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub date: Option<NaiveDate>,
    pub corridor: String,
    pub config: RunConfig,
    pub bottlenecks: Vec<BottleneckReport>,
    pub diagnostics: Diagnostics,
}

impl ReportDocument {
    pub fn new(corridor: &str, config: &RunConfig, max_shockwave_mph: f64, day: &DayResult) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            date: day.date,
            corridor: corridor.to_string(),
            config: config.clone(),
            bottlenecks: day.reports.clone(),
            diagnostics: Diagnostics {
                threshold_mph: day.threshold.u_star,
                otsu_threshold_mph: day.otsu.as_ref().map(|o| o.threshold_mph),
                guard_triggered: day.threshold.guard_triggered,
                u_pre_mph: day.threshold.u_pre,
                max_shockwave_mph,
                mixture: day.mixture.clone().map(|mut m| {
                    m.trace.clear();
                    m
                }),
            },
        }
    }

    /// Pretty JSON with a trailing newline. Field order follows the struct
    /// definitions, so equal documents always produce equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("report: {e}")))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.into(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub date: NaiveDate,
    pub u_pre_mph: f64,
}

/// Reads a `date,u_pre_mph` file. A missing file is an empty history.
pub fn read_threshold_history(path: impl AsRef<Path>) -> Result<Vec<HistoryEntry>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        path: path.into(),
        source: e,
    })?;
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| Error::Csv {
                path: path.into(),
                source: e,
            })
        })
        .collect()
}

/// Seed for the next run: the latest entry, or the configured default.
pub fn seed_state(history: &[HistoryEntry], u_pre_default: f64) -> ThresholdState {
    let u_pre = history
        .iter()
        .max_by_key(|h| h.date)
        .map_or(u_pre_default, |h| h.u_pre_mph);
    ThresholdState::seeded(u_pre)
}

/// Merges `entries` into the history (one row per date, newest value wins)
/// and rewrites the file sorted by date.
pub fn update_threshold_history(path: impl AsRef<Path>, entries: &[HistoryEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut all = read_threshold_history(path)?;
    for e in entries {
        match all.iter_mut().find(|h| h.date == e.date) {
            Some(h) => *h = *e,
            None => all.push(*e),
        }
    }
    all.sort_by_key(|h| h.date);
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.into(),
        source: e,
    })?;
    for h in &all {
        writer.serialize(h).map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{EdgePoint, Shockwave};

    fn point(section: &str, row: usize, column: usize) -> EdgePoint {
        EdgePoint {
            section_id: section.into(),
            row,
            column,
            time: NaiveDate::from_ymd_opt(2013, 6, 17)
                .unwrap()
                .and_hms_opt(6, 0, 0)
                .unwrap()
                + chrono::Duration::minutes(5 * column as i64),
        }
    }

    fn document() -> ReportDocument {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            date: NaiveDate::from_ymd_opt(2013, 6, 17),
            corridor: "I5-N".into(),
            config: RunConfig::default(),
            bottlenecks: vec![BottleneckReport {
                index: 1,
                front_activation: point("S06", 5, 9),
                front_deactivation: point("S06", 5, 34),
                rear_activation: point("S04", 3, 13),
                rear_deactivation: point("S04", 3, 22),
                shockwave: Shockwave {
                    raw_mph: Some(-15.8),
                    reported_mph: 14.6,
                    clamped: true,
                },
                delay_vehicle_hours: 344.25,
                zero_speed_cells: 0,
                cell_count: 140,
            }],
            diagnostics: Diagnostics {
                threshold_mph: 42.1875,
                otsu_threshold_mph: Some(42.1875),
                guard_triggered: false,
                u_pre_mph: 42.1875,
                max_shockwave_mph: 14.6,
                mixture: None,
            },
        }
    }

    #[test]
    fn json_round_trip() {
        let doc = document();
        let text = doc.to_json();
        assert_eq!(ReportDocument::from_json(&text).unwrap(), doc);
        assert_eq!(text, ReportDocument::from_json(&text).unwrap().to_json());
        assert!(text.contains("\"time\": \"2013-06-17T06:45:00\""));
    }

    #[test]
    fn history_merge_and_seed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("history.csv");
        assert!(read_threshold_history(&path).unwrap().is_empty());
        assert_eq!(seed_state(&[], 45.0).u_pre, 45.0);

        let d = |day| NaiveDate::from_ymd_opt(2013, 6, day).unwrap();
        update_threshold_history(&path, &[HistoryEntry { date: d(18), u_pre_mph: 40.0 }]).unwrap();
        update_threshold_history(
            &path,
            &[
                HistoryEntry { date: d(17), u_pre_mph: 38.0 },
                HistoryEntry { date: d(18), u_pre_mph: 41.0 },
            ],
        )
        .unwrap();
        let h = read_threshold_history(&path).unwrap();
        assert_eq!(h.iter().map(|e| e.date).collect::<Vec<_>>(), vec![d(17), d(18)]);
        assert_eq!(seed_state(&h, 45.0).u_pre, 41.0);
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "date,u_pre_mph\n2013-06-17,38.0\n2013-06-18,41.0\n"
        );
    }
}
