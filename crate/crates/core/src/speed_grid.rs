//! The canonical section × time speed model and its CSV ingestion.
//!
//! Speeds are mph. Row 0 is the most upstream section. A missing cell holds
//! `NaN` until [`impute_missing`] fills it; the missing mask keeps the audit
//! trail either way.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDateTime};

use crate::error::{Error, Result};
use crate::grid::Matrix;

const TIME_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

/// Interval assumed for a file with a single time column, where spacing
/// cannot be inferred.
pub const DEFAULT_INTERVAL_MINUTES: u32 = 5;

pub(crate) const TIME_OUTPUT_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub id: String,
    pub length_miles: f64,
    /// An on-ramp (or other geometry feature) sits at this section.
    pub ramp: bool,
    pub lanes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorridorGeometry {
    sections: Vec<Section>,
    pub direction_note: String,
}

impl CorridorGeometry {
    pub fn new(sections: Vec<Section>) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::InvalidConfig("geometry needs at least one section".into()));
        }
        for s in &sections {
            if !(s.length_miles.is_finite() && s.length_miles > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "section {}: length must be positive, got {}",
                    s.id, s.length_miles
                )));
            }
            if s.lanes == 0 {
                return Err(Error::InvalidConfig(format!("section {}: lanes must be >= 1", s.id)));
            }
        }
        Ok(CorridorGeometry {
            sections,
            direction_note: String::new(),
        })
    }

    /// `count` sections of equal length and lane count with `S01`, `S02`, ... ids.
    pub fn uniform(count: usize, length_miles: f64, lanes: u32, ramps: &[usize]) -> Result<Self> {
        let width = count.to_string().len().max(2);
        Self::new(
            (0..count)
                .map(|i| Section {
                    id: format!("S{:0width$}", i + 1),
                    length_miles,
                    ramp: ramps.contains(&i),
                    lanes,
                })
                .collect(),
        )
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn section(&self, row: usize) -> &Section {
        &self.sections[row]
    }

    pub fn ids(&self) -> Vec<String> {
        self.sections.iter().map(|s| s.id.clone()).collect()
    }

    /// Distance between the midpoints of two sections, in miles.
    pub fn midpoint_distance(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo == hi {
            return 0.0;
        }
        let between: f64 = self.sections[lo + 1..hi].iter().map(|s| s.length_miles).sum();
        self.sections[lo].length_miles / 2.0 + between + self.sections[hi].length_miles / 2.0
    }

    /// Reads `section_id,length_miles,ramp_flag,lanes`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let csv_err = |source| Error::Csv {
            path: path.into(),
            source,
        };
        let mut sections = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let malformed = |reason: String| Error::Malformed {
                path: path.into(),
                reason: format!("line {}: {reason}", i + 2),
            };
            if record.len() != 4 {
                return Err(malformed(format!("expected 4 fields, got {}", record.len())));
            }
            let length_miles = record[1]
                .parse::<f64>()
                .map_err(|_| malformed(format!("bad length {:?}", &record[1])))?;
            let ramp = match record[2].to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" => true,
                "0" | "false" | "no" | "" => false,
                other => return Err(malformed(format!("bad ramp_flag {other:?}"))),
            };
            let lanes = record[3]
                .parse::<u32>()
                .map_err(|_| malformed(format!("bad lanes {:?}", &record[3])))?;
            sections.push(Section {
                id: record[0].to_string(),
                length_miles,
                ramp,
                lanes,
            });
        }
        Self::new(sections).map_err(|e| match e {
            Error::InvalidConfig(reason) => Error::Malformed {
                path: path.into(),
                reason,
            },
            other => other,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("section_id,length_miles,ramp_flag,lanes\n");
        for s in &self.sections {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.id,
                s.length_miles,
                u8::from(s.ramp),
                s.lanes
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedGrid {
    values: Matrix<f64>,
    missing: Matrix<bool>,
    section_ids: Vec<String>,
    timestamps: Vec<NaiveDateTime>,
    interval_minutes: u32,
}

impl SpeedGrid {
    /// Builds a grid; `NaN` cells are recorded as missing.
    pub fn new(
        values: Matrix<f64>,
        section_ids: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        interval_minutes: u32,
    ) -> Result<Self> {
        let missing = values.map(|v| v.is_nan());
        Self::with_mask(values, missing, section_ids, timestamps, interval_minutes)
    }

    fn with_mask(
        values: Matrix<f64>,
        missing: Matrix<bool>,
        section_ids: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        interval_minutes: u32,
    ) -> Result<Self> {
        if values.rows() != section_ids.len() {
            return Err(Error::RowMismatch {
                expected: section_ids.len(),
                found: values.rows(),
            });
        }
        if values.cols() != timestamps.len() {
            return Err(Error::ShapeMismatch {
                left: values.shape(),
                right: (section_ids.len(), timestamps.len()),
            });
        }
        if interval_minutes == 0 {
            return Err(Error::NonMonotonicTime { column: 0 });
        }
        let step = Duration::minutes(interval_minutes.into());
        for (i, pair) in timestamps.windows(2).enumerate() {
            if pair[1] - pair[0] != step {
                return Err(Error::NonMonotonicTime { column: i + 1 });
            }
        }
        for (row, column, &v) in values.indexed() {
            if v.is_nan() {
                continue;
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeSpeed { row, column, value: v });
            }
        }
        Ok(SpeedGrid {
            values,
            missing,
            section_ids,
            timestamps,
            interval_minutes,
        })
    }

    /// Grid with timestamps `start, start + interval, ...`.
    pub fn from_values(
        values: Matrix<f64>,
        section_ids: Vec<String>,
        start: NaiveDateTime,
        interval_minutes: u32,
    ) -> Result<Self> {
        let timestamps = (0..values.cols())
            .map(|i| start + Duration::minutes(i as i64 * i64::from(interval_minutes)))
            .collect();
        Self::new(values, section_ids, timestamps, interval_minutes)
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Speed at a cell; `NaN` for a missing cell that has not been imputed.
    #[inline]
    pub fn speed(&self, row: usize, col: usize) -> f64 {
        *self.values.get(row, col)
    }

    #[inline]
    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        *self.missing.get(row, col)
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }

    pub fn missing_mask(&self) -> &Matrix<bool> {
        &self.missing
    }

    pub fn section_ids(&self) -> &[String] {
        &self.section_ids
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    /// Calendar date of the first interval, used to name daily outputs.
    pub fn date(&self) -> Option<chrono::NaiveDate> {
        self.timestamps.first().map(|t| t.date())
    }

    /// Every cell that currently holds a value.
    pub fn present_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|v| !v.is_nan())
    }

    /// Writes the speed CSV layout; cells without a value become empty fields.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("section_id");
        for t in &self.timestamps {
            out.push(',');
            out.push_str(&t.format(TIME_OUTPUT_FORMAT).to_string());
        }
        out.push('\n');
        for (r, id) in self.section_ids.iter().enumerate() {
            out.push_str(id);
            for &v in self.values.row(r) {
                out.push(',');
                if !v.is_nan() {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// A section × time table in the speed CSV layout, before interpretation.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub path: PathBuf,
    pub section_ids: Vec<String>,
    pub timestamps: Vec<NaiveDateTime>,
    pub interval_minutes: u32,
    /// `NaN` for empty fields.
    pub values: Matrix<f64>,
}

/// Reads any file in the speed CSV layout and checks it against `geometry`.
pub fn read_table(path: impl AsRef<Path>, geometry: &CorridorGeometry) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let malformed = |reason: String| Error::Malformed {
        path: path.into(),
        reason,
    };

    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_err)?,
        None => return Err(malformed("empty file".into())),
    };
    if header.is_empty() || &header[0] != "section_id" {
        return Err(malformed("header must start with section_id".into()));
    }
    let timestamps = header
        .iter()
        .skip(1)
        .map(parse_time)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| malformed("unparseable timestamp in header".into()))?;
    for (i, pair) in timestamps.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(Error::NonMonotonicTime { column: i + 1 });
        }
    }
    let interval_minutes = match timestamps.as_slice() {
        [a, b, ..] => {
            let d = *b - *a;
            if d.num_seconds() % 60 != 0 {
                return Err(Error::NonMonotonicTime { column: 1 });
            }
            u32::try_from(d.num_minutes()).map_err(|_| Error::NonMonotonicTime { column: 1 })?
        }
        _ => DEFAULT_INTERVAL_MINUTES,
    };

    let cols = timestamps.len();
    let mut section_ids = Vec::new();
    let mut data = Vec::new();
    for (row, record) in records.enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != cols + 1 {
            return Err(malformed(format!(
                "row {row}: expected {} fields, got {}",
                cols + 1,
                record.len()
            )));
        }
        section_ids.push(record[0].to_string());
        for (column, field) in record.iter().skip(1).enumerate() {
            if field.is_empty() {
                data.push(f64::NAN);
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| malformed(format!("row {row}, column {column}: bad number {field:?}")))?;
            if !v.is_finite() {
                return Err(malformed(format!("row {row}, column {column}: non-finite value")));
            }
            if v < 0.0 {
                return Err(Error::NegativeSpeed { row, column, value: v });
            }
            data.push(v);
        }
    }
    if section_ids.len() != geometry.len() {
        return Err(Error::RowMismatch {
            expected: geometry.len(),
            found: section_ids.len(),
        });
    }
    for (row, (found, s)) in section_ids.iter().zip(geometry.sections()).enumerate() {
        if *found != s.id {
            return Err(Error::SectionMismatch {
                row,
                expected: s.id.clone(),
                found: found.clone(),
            });
        }
    }
    let values = Matrix::from_vec(section_ids.len(), cols, data);
    Ok(RawTable {
        path: path.into(),
        section_ids,
        timestamps,
        interval_minutes,
        values,
    })
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    TIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Loads a speed CSV whose rows follow the geometry's section order.
pub fn load_speed_csv(path: impl AsRef<Path>, geometry: &CorridorGeometry) -> Result<SpeedGrid> {
    let table = read_table(path, geometry)?;
    SpeedGrid::new(
        table.values,
        table.section_ids,
        table.timestamps,
        table.interval_minutes,
    )
}

/// Averages consecutive windows of columns down to `target_minutes` spacing.
///
/// Each output cell is the arithmetic mean of the present cells in its window
/// and is missing only when the whole window is. A trailing partial window is
/// kept.
pub fn aggregate_time(grid: &SpeedGrid, target_minutes: u32) -> Result<SpeedGrid> {
    let src = grid.interval_minutes;
    if target_minutes == 0 || !target_minutes.is_multiple_of(src) {
        return Err(Error::NotAMultiple {
            target: target_minutes,
            source_interval: src,
        });
    }
    let factor = (target_minutes / src) as usize;
    if factor == 1 {
        return Ok(grid.clone());
    }
    let cols = grid.cols().div_ceil(factor);
    let values = Matrix::from_fn(grid.rows(), cols, |r, c| {
        let window = &grid.values.row(r)[c * factor..((c + 1) * factor).min(grid.cols())];
        let (sum, n) = window
            .iter()
            .filter(|v| !v.is_nan())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    });
    let timestamps = grid.timestamps.iter().step_by(factor).copied().collect();
    SpeedGrid::new(values, grid.section_ids.clone(), timestamps, target_minutes)
}

/// Fills every cell without a value by linear interpolation between the
/// nearest present cells of the same row. Cells before the first or after the
/// last present value copy it; a row with no data at all becomes `u_free`.
/// The missing mask is left untouched.
pub fn impute_missing(grid: &SpeedGrid, u_free: f64) -> SpeedGrid {
    let mut out = grid.clone();
    let cols = grid.cols();
    for r in 0..grid.rows() {
        let row = grid.values.row(r);
        let present: Vec<usize> = (0..cols).filter(|&c| !row[c].is_nan()).collect();
        if present.len() == cols {
            continue;
        }
        let Some((&first, &last)) = present.first().zip(present.last()) else {
            for c in 0..cols {
                out.values.set(r, c, u_free);
            }
            continue;
        };
        for c in 0..first {
            out.values.set(r, c, row[first]);
        }
        for c in last + 1..cols {
            out.values.set(r, c, row[last]);
        }
        for pair in present.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let span = (b - a) as f64;
            for c in a + 1..b {
                let w = (c - a) as f64 / span;
                out.values.set(r, c, row[a] * (1.0 - w) + row[b] * w);
            }
        }
    }
    out
}
