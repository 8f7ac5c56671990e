//! Congestion identification: Otsu threshold selection over the normalized
//! speed histogram, the out-of-band guard, and the speed → binary mapping.

mod mixture;

pub use mixture::{fit_speed_mixture, MixtureFit};

use serde::{Deserialize, Serialize};

use crate::config::DetectionConfig;
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::speed_grid::SpeedGrid;

/// Cuts whose within-class variance lies within this fraction of the total
/// variance of the minimum are treated as tied; the lowest one wins.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Probability mass over equal-width bins spanning normalized speed `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    probabilities: Vec<f64>,
}

impl Histogram {
    /// Normalizes raw (non-negative) counts. Returns `None` when the total is zero.
    pub fn from_counts(counts: &[f64]) -> Option<Self> {
        let total: f64 = counts.iter().sum();
        if counts.len() < 2 || !(total > 0.0) || counts.iter().any(|&c| c < 0.0) {
            return None;
        }
        Some(Histogram {
            probabilities: counts.iter().map(|c| c / total).collect(),
        })
    }

    /// Bins values already normalized to `[0, 1]`; anything outside is clamped.
    pub fn from_normalized(values: impl IntoIterator<Item = f64>, bin_count: usize) -> Option<Self> {
        let mut counts = vec![0.0; bin_count.max(2)];
        let l = counts.len();
        for v in values {
            counts[bin_index(v, l)] += 1.0;
        }
        Self::from_counts(&counts)
    }

    pub fn bin_count(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let l = self.bin_count() as f64;
        (0..=self.bin_count()).map(|i| i as f64 / l).collect()
    }

    /// Normalized speed at the centre of bin `i`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.bin_count() as f64
    }
}

#[inline]
fn bin_index(normalized: f64, bins: usize) -> usize {
    let x = normalized.clamp(0.0, 1.0);
    ((x * bins as f64) as usize).min(bins - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtsuResult {
    /// Class 1 holds bins `0..cut`, class 2 holds `cut..bin_count`.
    pub cut: usize,
    pub bin_count: usize,
    pub threshold_normalized: f64,
    pub threshold_mph: f64,
    pub within_class_variance: f64,
    pub q1: f64,
    pub q2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub var1: f64,
    pub var2: f64,
}

/// Picks the cut minimizing the weighted within-class variance of a histogram.
/// Means and variances are in normalized-speed units measured at bin centres.
pub fn otsu_from_histogram(hist: &Histogram, u_free: f64) -> Result<OtsuResult> {
    let p = hist.probabilities();
    let l = p.len();
    let (mut q_total, mut m_total, mut s_total) = (0.0, 0.0, 0.0);
    for (i, &pi) in p.iter().enumerate() {
        let x = hist.center(i);
        q_total += pi;
        m_total += x * pi;
        s_total += x * x * pi;
    }
    let total_var = (s_total - m_total * m_total / q_total).max(0.0);

    // (within, q1, m1, s1) for every admissible cut.
    let mut scores: Vec<(usize, f64, f64, f64, f64)> = Vec::with_capacity(l);
    let (mut q1, mut m1, mut s1) = (0.0, 0.0, 0.0);
    for cut in 1..l {
        let x = hist.center(cut - 1);
        q1 += p[cut - 1];
        m1 += x * p[cut - 1];
        s1 += x * x * p[cut - 1];
        let q2 = q_total - q1;
        if q1 <= 0.0 || q2 <= 0.0 {
            continue;
        }
        let (m2, s2) = (m_total - m1, s_total - s1);
        let within = (s1 - m1 * m1 / q1).max(0.0) + (s2 - m2 * m2 / q2).max(0.0);
        scores.push((cut, within, q1, m1, s1));
    }
    let best = scores
        .iter()
        .map(|s| s.1)
        .fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * total_var;
    let &(cut, within, q1, m1, s1) = scores
        .iter()
        .find(|s| s.1 <= best + tol)
        .ok_or(Error::DegenerateData)?;

    let q2 = q_total - q1;
    let (m2, s2) = (m_total - m1, s_total - s1);
    let (mu1, mu2) = (m1 / q1, m2 / q2);
    let threshold_normalized = cut as f64 / l as f64;
    Ok(OtsuResult {
        cut,
        bin_count: l,
        threshold_normalized,
        threshold_mph: threshold_normalized * u_free,
        within_class_variance: within,
        q1,
        q2,
        mu1,
        mu2,
        var1: (s1 / q1 - mu1 * mu1).max(0.0),
        var2: (s2 / q2 - mu2 * mu2).max(0.0),
    })
}

/// Otsu threshold of a day's speeds, normalized by `u_free` (values above it
/// clamp to 1). Cells without a value are ignored.
pub fn otsu_threshold(grid: &SpeedGrid, u_free: f64, bin_count: usize) -> Result<OtsuResult> {
    if bin_count < 2 {
        return Err(Error::InvalidConfig("bin_count must be at least 2".into()));
    }
    let hist = Histogram::from_normalized(grid.present_values().map(|v| v / u_free), bin_count)
        .ok_or(Error::DegenerateData)?;
    otsu_from_histogram(&hist, u_free)
}

/// The operative threshold, carried from day to day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub u_star: f64,
    pub u_pre: f64,
    pub guard_triggered: bool,
}

impl ThresholdState {
    pub fn seeded(u_pre: f64) -> Self {
        ThresholdState {
            u_star: u_pre,
            u_pre,
            guard_triggered: false,
        }
    }

    pub fn from_config(config: &DetectionConfig) -> Self {
        Self::seeded(config.u_pre_default)
    }
}

/// Accepts `candidate` when it lies in `[theta1·u_free, theta2·u_free]`,
/// otherwise falls back to the last accepted threshold. `None` stands for a
/// day whose histogram was degenerate.
pub fn guard_threshold(
    candidate: Option<f64>,
    state: &ThresholdState,
    config: &DetectionConfig,
) -> ThresholdState {
    let lo = config.theta1 * config.u_free;
    let hi = config.theta2 * config.u_free;
    match candidate {
        Some(u) if u >= lo && u <= hi => ThresholdState {
            u_star: u,
            u_pre: u,
            guard_triggered: false,
        },
        _ => ThresholdState {
            u_star: state.u_pre,
            u_pre: state.u_pre,
            guard_triggered: true,
        },
    }
}

/// Marks a cell congested iff its speed is strictly below `u_star`.
pub fn binarize_speed(grid: &SpeedGrid, u_star: f64) -> BinaryGrid {
    BinaryGrid::from_fn(grid.rows(), grid.cols(), |r, c| grid.speed(r, c) < u_star)
}
