//! Baseline detector-pair classifier and cell-wise scoring against ground truth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::speed_grid::{read_table, CorridorGeometry, SpeedGrid};

/// Detector-pair rule: section `i` is congested at `t` when its speed is below
/// `u_max` and the next section downstream is at least `delta_u_min` faster.
/// The most downstream section has no pair and is never marked.
pub fn chen_classify(grid: &SpeedGrid, u_max: f64, delta_u_min: f64) -> Result<BinaryGrid> {
    if grid.rows() < 2 {
        return Err(Error::TooFewRows(grid.rows()));
    }
    Ok(BinaryGrid::from_fn(grid.rows(), grid.cols(), |r, c| {
        if r + 1 == grid.rows() {
            return false;
        }
        let upstream = grid.speed(r, c);
        let downstream = grid.speed(r + 1, c);
        upstream < u_max && downstream - upstream >= delta_u_min
    }))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: u64,
    pub false_positive: u64,
    pub true_negative: u64,
    pub false_negative: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }

    /// Share of truly congested cells that were flagged; 1 when there was nothing to find.
    pub fn success_rate(&self) -> f64 {
        let denom = self.true_positive + self.false_negative;
        if denom == 0 {
            1.0
        } else {
            self.true_positive as f64 / denom as f64
        }
    }

    /// Share of flagged cells that were not congested; 0 when nothing was flagged.
    pub fn false_alarm_rate(&self) -> f64 {
        let denom = self.true_positive + self.false_positive;
        if denom == 0 {
            0.0
        } else {
            self.false_positive as f64 / denom as f64
        }
    }
}

pub fn confusion(predicted: &BinaryGrid, truth: &BinaryGrid) -> Result<ConfusionCounts> {
    if predicted.shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            left: predicted.shape(),
            right: truth.shape(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &t) in predicted.as_slice().iter().zip(truth.as_slice()) {
        match (p, t) {
            (true, true) => counts.true_positive += 1,
            (true, false) => counts.false_positive += 1,
            (false, true) => counts.false_negative += 1,
            (false, false) => counts.true_negative += 1,
        }
    }
    Ok(counts)
}

/// `(success_rate, false_alarm_rate)`.
pub fn rates(counts: &ConfusionCounts) -> (f64, f64) {
    (counts.success_rate(), counts.false_alarm_rate())
}

/// A ground-truth grid, stored in the speed CSV layout with 0/1 cells.
#[derive(Debug, Clone)]
pub struct TruthGrid {
    pub date: Option<chrono::NaiveDate>,
    pub cells: BinaryGrid,
}

pub fn load_truth_csv(path: impl AsRef<Path>, geometry: &CorridorGeometry) -> Result<TruthGrid> {
    let path = path.as_ref();
    let table = read_table(path, geometry)?;
    let values = &table.values;
    for (row, column, &v) in values.indexed() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::Malformed {
                path: path.into(),
                reason: format!("row {row}, column {column}: truth cells must be 0 or 1"),
            });
        }
    }
    Ok(TruthGrid {
        date: table.timestamps.first().map(|t| t.date()),
        cells: BinaryGrid::from_fn(values.rows(), values.cols(), |r, c| *values.get(r, c) == 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Matrix;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn grid(rows: &[&[f64]]) -> SpeedGrid {
        let r = rows.len();
        let c = rows[0].len();
        SpeedGrid::from_values(
            Matrix::from_vec(r, c, rows.iter().flat_map(|x| x.iter().copied()).collect()),
            (0..r).map(|i| i.to_string()).collect(),
            NaiveDate::from_ymd_opt(2008, 2, 5).unwrap().and_hms_opt(5, 0, 0).unwrap(),
            5,
        )
        .unwrap()
    }

    #[test]
    fn detector_pair_rule_cases() {
        let g = grid(&[&[30.0, 40.0, 30.0], &[50.0, 60.0, 40.0]]);
        let out = chen_classify(&g, 35.0, 15.0).unwrap();
        assert!(out.get(0, 0));
        assert!(!out.get(0, 1));
        assert!(!out.get(0, 2));
        assert!((0..3).all(|c| !out.get(1, c)));
        assert!(matches!(chen_classify(&grid(&[&[30.0]]), 35.0, 15.0), Err(Error::TooFewRows(1))));
    }

    #[test]
    fn confusion_edge_cases() {
        let truth = BinaryGrid::from_ascii("0110\n1001");
        let c = confusion(&truth, &truth).unwrap();
        assert_eq!((c.false_positive, c.false_negative), (0, 0));
        assert_eq!(rates(&c), (1.0, 0.0));

        let all = BinaryGrid::from_fn(2, 5, |_, _| true);
        let none = BinaryGrid::new(2, 5);
        let c = confusion(&all, &none).unwrap();
        assert_eq!(c, ConfusionCounts { false_positive: 10, ..Default::default() });
        assert!(matches!(confusion(&all, &truth), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn rate_arithmetic() {
        let c = ConfusionCounts { true_positive: 8, false_negative: 2, false_positive: 2, true_negative: 5 };
        assert_eq!(c.success_rate(), 0.8);
        assert_eq!(c.false_alarm_rate(), 0.2);
        assert_eq!(ConfusionCounts::default().false_alarm_rate(), 0.0);
    }

    #[test]
    fn random_six_by_six_tally() {
        let p = BinaryGrid::from_ascii("101100\n010011\n111000\n000111\n100001\n011110");
        let t = BinaryGrid::from_ascii("100100\n011011\n101010\n010101\n100000\n111111");
        let c = confusion(&p, &t).unwrap();
        let mut hand = ConfusionCounts::default();
        for r in 0..6 {
            for col in 0..6 {
                match (p.get(r, col), t.get(r, col)) {
                    (true, true) => hand.true_positive += 1,
                    (true, false) => hand.false_positive += 1,
                    (false, true) => hand.false_negative += 1,
                    (false, false) => hand.true_negative += 1,
                }
            }
        }
        assert_eq!(c, hand);
        assert_eq!(c.total(), 36);
    }

    proptest! {
        #[test]
        fn rates_bounded_and_scale_free(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500, k in 1u64..20) {
            let c = ConfusionCounts { true_positive: tp, false_positive: fp, true_negative: tn, false_negative: fn_ };
            let (s, f) = rates(&c);
            prop_assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&f));
            let scaled = ConfusionCounts { true_positive: tp * k, false_positive: fp * k, true_negative: tn * k, false_negative: fn_ * k };
            let (s2, f2) = rates(&scaled);
            prop_assert!((s - s2).abs() < 1e-12 && (f - f2).abs() < 1e-12);
        }

        #[test]
        fn pair_rule_row_depends_on_its_pair_only(
            speeds in proptest::collection::vec(0.0f64..80.0, 5 * 4),
            swap in proptest::collection::vec(0.0f64..80.0, 4),
        ) {
            let base = SpeedGrid::from_values(
                Matrix::from_vec(5, 4, speeds.clone()),
                (0..5).map(|i| i.to_string()).collect(),
                NaiveDate::from_ymd_opt(2008, 2, 5).unwrap().and_hms_opt(5, 0, 0).unwrap(),
                5,
            ).unwrap();
            let mut altered = speeds;
            altered[16..].copy_from_slice(&swap);
            let other = SpeedGrid::from_values(
                Matrix::from_vec(5, 4, altered),
                (0..5).map(|i| i.to_string()).collect(),
                NaiveDate::from_ymd_opt(2008, 2, 5).unwrap().and_hms_opt(5, 0, 0).unwrap(),
                5,
            ).unwrap();
            let a = chen_classify(&base, 35.0, 15.0).unwrap();
            let b = chen_classify(&other, 35.0, 15.0).unwrap();
            for r in 0..3 {
                for c in 0..4 {
                    prop_assert_eq!(a.get(r, c), b.get(r, c));
                }
            }
        }
    }
}
