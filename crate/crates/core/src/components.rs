//! Connected-component labeling (two-pass, union-find) and the small-region filter.

use crate::config::Connectivity;
use crate::grid::{BinaryGrid, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

/// One connected congested region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub label: u32,
    /// Cells in row-major order.
    pub cells: Vec<(usize, usize)>,
    pub bbox: BoundingBox,
}

impl Region {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The region alone, on a grid of the given shape.
    pub fn mask(&self, rows: usize, cols: usize) -> BinaryGrid {
        let mut m = BinaryGrid::new(rows, cols);
        for &(r, c) in &self.cells {
            m.set(r, c, true);
        }
        m
    }

    /// A region from explicit cells; `None` when `cells` is empty.
    pub fn from_cells(label: u32, mut cells: Vec<(usize, usize)>) -> Option<Region> {
        cells.sort_unstable();
        cells.dedup();
        let first = *cells.first()?;
        let mut bbox = BoundingBox {
            row_min: first.0,
            row_max: first.0,
            col_min: first.1,
            col_max: first.1,
        };
        for &(r, c) in &cells {
            bbox.row_min = bbox.row_min.min(r);
            bbox.row_max = bbox.row_max.max(r);
            bbox.col_min = bbox.col_min.min(c);
            bbox.col_max = bbox.col_max.max(c);
        }
        Some(Region { label, cells, bbox })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRegions {
    /// 0 is background; regions are numbered `1..=regions.len()`.
    pub labels: Matrix<u32>,
    pub regions: Vec<Region>,
}

impl LabeledRegions {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        DisjointSet { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels congested cells so that two cells share a label iff they are
/// connected under `connectivity`. Labels follow row-major discovery order.
pub fn label_regions(grid: &BinaryGrid, connectivity: Connectivity) -> LabeledRegions {
    let (rows, cols) = grid.shape();
    let backward: Vec<(isize, isize)> = connectivity
        .offsets()
        .iter()
        .copied()
        .filter(|&(dr, dc)| dr < 0 || (dr == 0 && dc < 0))
        .collect();

    let mut provisional = Matrix::filled(rows, cols, 0u32);
    let mut sets = DisjointSet::new();
    for r in 0..rows {
        for c in 0..cols {
            if !grid.get(r, c) {
                continue;
            }
            let mut label = 0;
            for &(dr, dc) in &backward {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nc as usize >= cols {
                    continue;
                }
                let n = *provisional.get(nr as usize, nc as usize);
                if n == 0 {
                    continue;
                }
                if label == 0 {
                    label = n;
                } else {
                    sets.union(label, n);
                }
            }
            if label == 0 {
                label = sets.make();
            }
            provisional.set(r, c, label);
        }
    }

    let mut final_of_root = vec![0u32; sets.parent.len()];
    let mut labels = Matrix::filled(rows, cols, 0u32);
    let mut cells: Vec<Vec<(usize, usize)>> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let p = *provisional.get(r, c);
            if p == 0 {
                continue;
            }
            let root = sets.find(p) as usize;
            if final_of_root[root] == 0 {
                cells.push(Vec::new());
                final_of_root[root] = cells.len() as u32;
            }
            let label = final_of_root[root];
            labels.set(r, c, label);
            cells[label as usize - 1].push((r, c));
        }
    }
    let regions = cells
        .into_iter()
        .enumerate()
        .filter_map(|(i, cells)| Region::from_cells(i as u32 + 1, cells))
        .collect();
    LabeledRegions { labels, regions }
}

/// Clears every component with fewer than `alpha3` cells.
pub fn filter_small_components(grid: &BinaryGrid, alpha3: usize, connectivity: Connectivity) -> BinaryGrid {
    let labeled = label_regions(grid, connectivity);
    let mut out = grid.clone();
    for region in labeled.regions.iter().filter(|r| r.len() < alpha3) {
        for &(r, c) in &region.cells {
            out.set(r, c, false);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    /// Independent BFS labeling in row-major seed order.
    fn flood_fill(grid: &BinaryGrid, connectivity: Connectivity) -> Matrix<u32> {
        let (rows, cols) = grid.shape();
        let mut labels = Matrix::filled(rows, cols, 0u32);
        let mut next = 0;
        for r in 0..rows {
            for c in 0..cols {
                if !grid.get(r, c) || *labels.get(r, c) != 0 {
                    continue;
                }
                next += 1;
                labels.set(r, c, next);
                let mut queue = VecDeque::from([(r, c)]);
                while let Some((qr, qc)) = queue.pop_front() {
                    for &(dr, dc) in connectivity.offsets() {
                        let (nr, nc) = (qr as isize + dr, qc as isize + dc);
                        if grid.get_or_background(nr, nc) && *labels.get(nr as usize, nc as usize) == 0 {
                            labels.set(nr as usize, nc as usize, next);
                            queue.push_back((nr as usize, nc as usize));
                        }
                    }
                }
            }
        }
        labels
    }

    #[test]
    fn diagonal_touch_depends_on_connectivity() {
        let g = BinaryGrid::from_ascii(
            "1100
             1100
             0011
             0011",
        );
        assert_eq!(label_regions(&g, Connectivity::Eight).region_count(), 1);
        assert_eq!(label_regions(&g, Connectivity::Four).region_count(), 2);
    }

    #[test]
    fn empty_grid_has_no_regions() {
        assert_eq!(label_regions(&BinaryGrid::new(4, 4), Connectivity::Eight).region_count(), 0);
    }

    #[test]
    fn u_shape_merges_in_second_pass() {
        let g = BinaryGrid::from_ascii(
            "10001
             10001
             11111",
        );
        let l = label_regions(&g, Connectivity::Four);
        assert_eq!(l.region_count(), 1);
        assert_eq!(l.regions[0].len(), 9);
        assert_eq!(l.regions[0].bbox, BoundingBox { row_min: 0, row_max: 2, col_min: 0, col_max: 4 });
    }

    #[test]
    fn strict_fewer_than_rule() {
        let mut g = BinaryGrid::new(30, 40);
        let mut put = |r0: usize, c0: usize, n: usize| {
            for i in 0..n {
                g.set(r0 + i / 10, c0 + i % 10, true);
            }
        };
        put(0, 0, 5);
        put(5, 0, 19);
        put(10, 0, 20);
        put(15, 0, 120);
        put(0, 20, 180);
        let out = filter_small_components(&g, 20, Connectivity::Eight);
        let mut sizes: Vec<usize> = label_regions(&out, Connectivity::Eight)
            .regions
            .iter()
            .map(Region::len)
            .collect();
        sizes.sort();
        assert_eq!(sizes, vec![20, 120, 180]);
        assert_eq!(filter_small_components(&g, 1, Connectivity::Eight), g);
    }

    fn arb_grid(rows: usize, cols: usize) -> impl Strategy<Value = BinaryGrid> {
        proptest::collection::vec(proptest::bool::weighted(0.4), rows * cols)
            .prop_map(move |v| BinaryGrid::from_fn(rows, cols, |r, c| v[r * cols + c]))
    }

    proptest! {
        #[test]
        fn labels_agree_with_flood_fill(g in arb_grid(30, 30), eight in any::<bool>()) {
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let l = label_regions(&g, conn);
            prop_assert_eq!(&l.labels, &flood_fill(&g, conn));
            let total: usize = l.regions.iter().map(Region::len).sum();
            prop_assert_eq!(total, g.count_ones());
            for (i, region) in l.regions.iter().enumerate() {
                prop_assert_eq!(region.label as usize, i + 1);
            }
        }

        #[test]
        fn filter_leaves_no_small_component(g in arb_grid(20, 25), alpha3 in 1usize..30) {
            let out = filter_small_components(&g, alpha3, Connectivity::Eight);
            prop_assert!(out.is_subset_of(&g));
            for region in label_regions(&out, Connectivity::Eight).regions {
                prop_assert!(region.len() >= alpha3);
            }
        }
    }
}
