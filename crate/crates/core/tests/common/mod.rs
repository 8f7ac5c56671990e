#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};
use freeway_bottleneck::{BinaryGrid, CorridorGeometry, Matrix, SpeedGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ROWS: usize = 36;
pub const COLS: usize = 288;
/// Five-sixths of a mile per five-minute interval is 10 mph.
pub const SECTION_MILES: f64 = 5.0 / 6.0;

pub fn day_start(day: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2013, 6, day).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

pub fn speed_grid(values: Matrix<f64>, geometry: &CorridorGeometry, day: u32) -> SpeedGrid {
    SpeedGrid::from_values(values, geometry.ids(), day_start(day), 5).unwrap()
}

/// A queue whose front sits on row `front` from `c0` to `c1`. Moving upstream
/// every pair of rows starts two intervals later and ends two earlier, so its
/// rear edge travels upstream one section per interval.
#[derive(Debug, Clone, Copy)]
pub struct Trapezoid {
    pub front: usize,
    pub depth: usize,
    pub c0: usize,
    pub c1: usize,
}

impl Trapezoid {
    pub fn rear(&self) -> usize {
        self.front - self.depth
    }

    pub fn span(&self, row: usize) -> Option<(usize, usize)> {
        if row > self.front || row < self.rear() {
            return None;
        }
        let j = self.front - row;
        let shift = 2 * (j / 2);
        Some((self.c0 + shift, self.c1 - shift))
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.span(r).is_some_and(|(a, b)| (a..=b).contains(&c))
    }

    pub fn mask(&self, rows: usize, cols: usize) -> BinaryGrid {
        BinaryGrid::from_fn(rows, cols, |r, c| self.contains(r, c))
    }
}

/// Free-flow noise between 55 and 65 mph, seeded.
pub fn free_flow(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(55.0..65.0)
}

/// The planted day of the end-to-end recovery check: one queue at 15 mph
/// headed at ramp row 20, with a 30 mph acceleration tail in rows 21..=23.
pub struct PlantedDay {
    pub geometry: CorridorGeometry,
    pub grid: SpeedGrid,
    pub queue: Trapezoid,
    pub tail_rows: std::ops::RangeInclusive<usize>,
}

pub fn planted_day(day: u32, seed: u64) -> PlantedDay {
    let queue = Trapezoid {
        front: 20,
        depth: 8,
        c0: 80,
        c1: 160,
    };
    let tail_rows = 21..=23;
    let geometry = CorridorGeometry::uniform(ROWS, SECTION_MILES, 3, &[queue.front]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Matrix::from_fn(ROWS, COLS, |r, c| {
        let noise = free_flow(&mut rng);
        if queue.contains(r, c) {
            15.0
        } else if tail_rows.contains(&r) && (queue.c0..=queue.c1).contains(&c) {
            30.0
        } else {
            noise
        }
    });
    let grid = speed_grid(values, &geometry, day);
    PlantedDay {
        geometry,
        grid,
        queue,
        tail_rows,
    }
}

/// A synthetic day with planted congestion and `flip_rate` salt-and-pepper
/// corruption of the speeds. Returns the grid and the clean truth mask.
pub fn noisy_day(geometry: &CorridorGeometry, day: u32, seed: u64, flip_rate: f64) -> (SpeedGrid, BinaryGrid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=3);
    let queues: Vec<Trapezoid> = (0..count)
        .map(|i| {
            let depth = 2 * rng.gen_range(2..=5);
            let front = rng.gen_range(depth + 1..ROWS - 1);
            let band = COLS / count;
            let c0 = i * band + rng.gen_range(5..band / 4);
            let c1 = c0 + rng.gen_range(2 * depth + 20..band * 3 / 4);
            Trapezoid { front, depth, c0, c1 }
        })
        .collect();
    let truth = BinaryGrid::from_fn(ROWS, COLS, |r, c| queues.iter().any(|q| q.contains(r, c)));
    let values = Matrix::from_fn(ROWS, COLS, |r, c| {
        let congested = truth.get(r, c) ^ (rng.gen::<f64>() < flip_rate);
        if congested {
            rng.gen_range(10.0..30.0)
        } else {
            free_flow(&mut rng)
        }
    });
    (speed_grid(values, geometry, day), truth)
}

pub fn write_binary_csv(path: &Path, grid: &BinaryGrid, like: &SpeedGrid) {
    let mut out = String::from("section_id");
    for t in like.timestamps() {
        let _ = write!(out, ",{}", t.format("%Y-%m-%dT%H:%M:%S"));
    }
    out.push('\n');
    for (r, id) in like.section_ids().iter().enumerate() {
        out.push_str(id);
        for c in 0..grid.cols() {
            out.push_str(if grid.get(r, c) { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

/// Three planted days plus geometry and config, written under `dir`.
pub struct Corpus {
    pub geometry: PathBuf,
    pub config: PathBuf,
    pub speeds: Vec<PathBuf>,
}

pub fn write_corpus(dir: &Path) -> Corpus {
    let geometry_path = dir.join("corridor.csv");
    let config = dir.join("config.toml");
    let speed_dir = dir.join("speed");
    std::fs::create_dir_all(&speed_dir).unwrap();
    let mut speeds = Vec::new();
    let mut geometry = None;
    for (i, day) in [17u32, 18, 19].into_iter().enumerate() {
        let planted = planted_day(day, 100 + i as u64);
        let path = speed_dir.join(format!("speed-2013-06-{day}.csv"));
        planted.grid.write_csv(&path).unwrap();
        speeds.push(path);
        geometry = Some(planted.geometry);
    }
    geometry.unwrap().write_csv(&geometry_path).unwrap();
    std::fs::write(
        &config,
        "alpha1 = 2\nalpha2 = 3\nalpha3 = 20\nlambda1 = 1.3\ntheta1 = 0.3\ntheta2 = 0.85\nu_free = 60\n",
    )
    .unwrap();
    Corpus {
        geometry: geometry_path,
        config,
        speeds,
    }
}
