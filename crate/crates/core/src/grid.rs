//! Dense row-major matrices shared by every stage of the pipeline.
//!
//! Rows are road sections ordered upstream to downstream, columns are time
//! intervals in chronological order.

use std::fmt;

/// A dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T> Matrix<T> {
    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.cols + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / cols, i % cols, v))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Congestion mask: `true` marks a congested cell.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryGrid {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(rows: usize, cols: usize) -> Self {
        BinaryGrid {
            rows,
            cols,
            cells: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut grid = BinaryGrid::new(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                grid.cells[r * cols + c] = f(r, c);
            }
        }
        grid
    }

    /// Parses rows of `0`/`1` characters; whitespace is ignored. Handy for fixtures.
    ///
    /// Panics on ragged rows or characters other than `0`, `1`, `.` and `#`.
    pub fn from_ascii(text: &str) -> Self {
        let lines: Vec<Vec<bool>> = text
            .lines()
            .map(|l| l.chars().filter(|c| !c.is_whitespace()).collect::<String>())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.chars()
                    .map(|c| match c {
                        '1' | '#' => true,
                        '0' | '.' => false,
                        other => panic!("unexpected fixture character {other:?}"),
                    })
                    .collect()
            })
            .collect();
        let rows = lines.len();
        let cols = lines.first().map_or(0, Vec::len);
        assert!(lines.iter().all(|l| l.len() == cols), "ragged fixture");
        BinaryGrid {
            rows,
            cols,
            cells: lines.into_iter().flatten().collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    /// Signed lookup; anything outside the grid reads as background.
    #[inline]
    pub fn get_or_background(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.rows || col as usize >= self.cols {
            false
        } else {
            self.cells[row as usize * self.cols + col as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.cells[row * self.cols + col] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Row-major iterator over congested cells.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| (i / cols, i % cols))
    }

    /// `true` when every congested cell of `self` is congested in `other`.
    pub fn is_subset_of(&self, other: &BinaryGrid) -> bool {
        self.shape() == other.shape()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(&a, &b)| !a || b)
    }

    pub fn complement(&self) -> BinaryGrid {
        BinaryGrid {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.cells
    }

    /// Multi-line `0`/`1` rendering, the inverse of [`BinaryGrid::from_ascii`].
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(if self.get(r, c) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for BinaryGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryGrid {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_round_trip() {
        let g = BinaryGrid::from_ascii("010\n111\n");
        assert_eq!(g.shape(), (2, 3));
        assert_eq!(g.count_ones(), 4);
        assert_eq!(BinaryGrid::from_ascii(&g.to_ascii()), g);
    }

    #[test]
    fn out_of_bounds_reads_background() {
        let g = BinaryGrid::from_ascii("11\n11");
        assert!(!g.get_or_background(-1, 0));
        assert!(!g.get_or_background(0, 2));
        assert!(g.get_or_background(1, 1));
    }

    #[test]
    fn subset_and_complement() {
        let a = BinaryGrid::from_ascii("100\n000");
        let b = BinaryGrid::from_ascii("110\n001");
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(a.complement().count_ones(), 5);
    }

    #[test]
    fn matrix_indexing() {
        let m = Matrix::from_fn(2, 3, |r, c| r * 10 + c);
        assert_eq!(*m.get(1, 2), 12);
        assert_eq!(m.row(1), &[10, 11, 12]);
        let idx: Vec<_> = m.indexed().map(|(r, c, v)| (r, c, *v)).collect();
        assert_eq!(idx[4], (1, 1, 11));
    }
}
