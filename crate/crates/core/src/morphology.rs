//! Binary morphology with a solid rectangular structuring element.
//!
//! The element spans `height` sections by `width` intervals and is anchored
//! at its top-left cell, so its translate set is `{(dr, dc) : 0 <= dr < height,
//! 0 <= dc < width}`. Cells outside the grid are background for both
//! operators.
//!
//! Opening and closing evaluate the intermediate result on a canvas extended
//! past the bottom and right edges. Without that, the erosion half of a
//! closing would read the clipped dilation as background and eat congested
//! cells along those edges.

use crate::config::DetectionConfig;
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement {
    pub height: usize,
    pub width: usize,
}

impl StructuringElement {
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "structuring element must be non-empty");
        StructuringElement { height, width }
    }

    pub fn from_config(config: &DetectionConfig) -> Self {
        Self::new(config.alpha1, config.alpha2)
    }

    /// Translate offsets in row-major order.
    pub fn offsets(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |dr| (0..self.width).map(move |dc| (dr, dc)))
    }

    fn check_fits(&self, grid: &BinaryGrid) -> Result<()> {
        if self.height > grid.rows() || self.width > grid.cols() {
            return Err(Error::SeLargerThanGrid {
                se_rows: self.height,
                se_cols: self.width,
                rows: grid.rows(),
                cols: grid.cols(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

/// Cell `(r, c)` survives iff the element placed with its anchor there lies
/// entirely on congested cells.
fn erode_raw(grid: &BinaryGrid, se: StructuringElement) -> BinaryGrid {
    let (rows, cols) = grid.shape();
    // Horizontal pass: length of the run of ones starting at each cell.
    let mut horiz = BinaryGrid::new(rows, cols);
    for r in 0..rows {
        let mut run = 0usize;
        for c in (0..cols).rev() {
            run = if grid.get(r, c) { run + 1 } else { 0 };
            horiz.set(r, c, run >= se.width);
        }
    }
    let mut out = BinaryGrid::new(rows, cols);
    for c in 0..cols {
        let mut run = 0usize;
        for r in (0..rows).rev() {
            run = if horiz.get(r, c) { run + 1 } else { 0 };
            out.set(r, c, run >= se.height);
        }
    }
    out
}

/// Cell `(r, c)` is set iff some congested cell `(r - dr, c - dc)` exists.
fn dilate_raw(grid: &BinaryGrid, se: StructuringElement) -> BinaryGrid {
    let (rows, cols) = grid.shape();
    let mut horiz = BinaryGrid::new(rows, cols);
    for r in 0..rows {
        let mut last: Option<usize> = None;
        for c in 0..cols {
            if grid.get(r, c) {
                last = Some(c);
            }
            horiz.set(r, c, last.is_some_and(|l| c - l < se.width));
        }
    }
    let mut out = BinaryGrid::new(rows, cols);
    for c in 0..cols {
        let mut last: Option<usize> = None;
        for r in 0..rows {
            if horiz.get(r, c) {
                last = Some(r);
            }
            out.set(r, c, last.is_some_and(|l| r - l < se.height));
        }
    }
    out
}

fn pad(grid: &BinaryGrid, extra_rows: usize, extra_cols: usize) -> BinaryGrid {
    BinaryGrid::from_fn(grid.rows() + extra_rows, grid.cols() + extra_cols, |r, c| {
        r < grid.rows() && c < grid.cols() && grid.get(r, c)
    })
}

fn crop(grid: &BinaryGrid, rows: usize, cols: usize) -> BinaryGrid {
    BinaryGrid::from_fn(rows, cols, |r, c| grid.get(r, c))
}

pub fn erode(grid: &BinaryGrid, se: StructuringElement) -> Result<BinaryGrid> {
    se.check_fits(grid)?;
    Ok(erode_raw(grid, se))
}

pub fn dilate(grid: &BinaryGrid, se: StructuringElement) -> Result<BinaryGrid> {
    se.check_fits(grid)?;
    Ok(dilate_raw(grid, se))
}

/// Erosion followed by dilation; removes congested specks smaller than the element.
pub fn open(grid: &BinaryGrid, se: StructuringElement) -> Result<BinaryGrid> {
    se.check_fits(grid)?;
    let canvas = pad(grid, se.height - 1, se.width - 1);
    let opened = dilate_raw(&erode_raw(&canvas, se), se);
    Ok(crop(&opened, grid.rows(), grid.cols()))
}

/// Dilation followed by erosion; fills uncongested holes smaller than the element.
pub fn close(grid: &BinaryGrid, se: StructuringElement) -> Result<BinaryGrid> {
    se.check_fits(grid)?;
    let canvas = pad(grid, se.height - 1, se.width - 1);
    let closed = erode_raw(&dilate_raw(&canvas, se), se);
    Ok(crop(&closed, grid.rows(), grid.cols()))
}

pub fn morph_transform(grid: &BinaryGrid, se: StructuringElement, op: MorphOp) -> Result<BinaryGrid> {
    match op {
        MorphOp::Erode => erode(grid, se),
        MorphOp::Dilate => dilate(grid, se),
        MorphOp::Open => open(grid, se),
        MorphOp::Close => close(grid, se),
    }
}

/// Salt removal by opening, then pepper removal by closing.
pub fn denoise_grid(grid: &BinaryGrid, config: &DetectionConfig) -> Result<BinaryGrid> {
    let se = StructuringElement::from_config(config);
    close(&open(grid, se)?, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_erode(a: &BinaryGrid, se: StructuringElement) -> BinaryGrid {
        BinaryGrid::from_fn(a.rows(), a.cols(), |r, c| {
            se.offsets()
                .all(|(dr, dc)| a.get_or_background((r + dr) as isize, (c + dc) as isize))
        })
    }

    fn naive_dilate(a: &BinaryGrid, se: StructuringElement) -> BinaryGrid {
        BinaryGrid::from_fn(a.rows(), a.cols(), |r, c| {
            se.offsets().any(|(dr, dc)| {
                a.get_or_background(r as isize - dr as isize, c as isize - dc as isize)
            })
        })
    }

    fn arb_grid(rows: usize, cols: usize) -> impl Strategy<Value = BinaryGrid> {
        proptest::collection::vec(proptest::bool::weighted(0.45), rows * cols).prop_map(move |v| {
            BinaryGrid::from_fn(rows, cols, |r, c| v[r * cols + c])
        })
    }

    const SE: StructuringElement = StructuringElement { height: 2, width: 3 };

    #[test]
    fn dilating_a_point_gives_the_footprint() {
        let mut a = BinaryGrid::new(6, 8);
        a.set(2, 3, true);
        let d = dilate(&a, SE).unwrap();
        let expected = BinaryGrid::from_fn(6, 8, |r, c| (2..4).contains(&r) && (3..6).contains(&c));
        assert_eq!(d, expected);
        assert!(erode(&a, SE).unwrap().is_empty());
    }

    #[test]
    fn empty_grid_is_fixed() {
        let a = BinaryGrid::new(5, 5);
        for op in [MorphOp::Erode, MorphOp::Dilate, MorphOp::Open, MorphOp::Close] {
            assert!(morph_transform(&a, SE, op).unwrap().is_empty());
        }
    }

    #[test]
    fn oversized_element_rejected() {
        let a = BinaryGrid::new(1, 5);
        assert!(matches!(open(&a, SE), Err(Error::SeLargerThanGrid { .. })));
    }

    #[test]
    fn denoise_restores_block_and_drops_specks() {
        let mut a = BinaryGrid::new(20, 60);
        for r in 5..15 {
            for c in 10..50 {
                a.set(r, c, true);
            }
        }
        let clean = a.clone();
        for (r, c) in [(7, 20), (10, 33), (13, 41)] {
            a.set(r, c, false);
        }
        for (r, c) in [(0, 0), (2, 30), (18, 5), (19, 55), (17, 58)] {
            a.set(r, c, true);
        }
        let out = denoise_grid(&a, &DetectionConfig::default()).unwrap();
        assert_eq!(out, clean);
    }

    #[test]
    fn all_ones_survives() {
        let a = BinaryGrid::from_fn(8, 10, |_, _| true);
        assert_eq!(denoise_grid(&a, &DetectionConfig::default()).unwrap(), a);
    }

    #[test]
    fn fat_rectangle_touching_edges_unchanged() {
        let a = BinaryGrid::from_fn(8, 10, |r, c| r >= 3 && c >= 4);
        assert_eq!(open(&a, SE).unwrap(), a);
        assert_eq!(close(&a, SE).unwrap(), a);
    }

    proptest! {
        #[test]
        fn matches_translate_oracle(a in arb_grid(12, 15)) {
            prop_assert_eq!(erode(&a, SE).unwrap(), naive_erode(&a, SE));
            prop_assert_eq!(dilate(&a, SE).unwrap(), naive_dilate(&a, SE));
        }

        #[test]
        fn opening_closing_bounds_and_idempotence(a in arb_grid(12, 15)) {
            let o = open(&a, SE).unwrap();
            let c = close(&a, SE).unwrap();
            prop_assert!(o.is_subset_of(&a));
            prop_assert!(a.is_subset_of(&c));
            prop_assert_eq!(open(&o, SE).unwrap(), o);
            prop_assert_eq!(close(&c, SE).unwrap(), c);
        }

        #[test]
        fn erosion_dilation_duality_in_interior(a in arb_grid(12, 15)) {
            // Dilation of the complement by the reflected element, as a translate set.
            let e = erode(&a, SE).unwrap();
            let comp = a.complement();
            let (rows, cols) = a.shape();
            for r in 0..rows - (SE.height - 1) {
                for c in 0..cols - (SE.width - 1) {
                    let dual = SE.offsets().any(|(dr, dc)| comp.get(r + dr, c + dc));
                    prop_assert_eq!(e.get(r, c), !dual);
                }
            }
        }

        #[test]
        fn shape_preserved(a in arb_grid(7, 9)) {
            for op in [MorphOp::Erode, MorphOp::Dilate, MorphOp::Open, MorphOp::Close] {
                prop_assert_eq!(morph_transform(&a, SE, op).unwrap().shape(), a.shape());
            }
        }
    }
}
