//! SVG heatmaps: sections run top (upstream) to bottom, time left to right.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::characteristics::{BottleneckReport, EdgePoint};
use crate::components::LabeledRegions;
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::speed_grid::SpeedGrid;

pub const CELL_WIDTH: usize = 4;
pub const CELL_HEIGHT: usize = 12;

pub const UNCONGESTED: &str = "#2c7bb6";
pub const CONGESTED: &str = "#d7191c";
const MISSING: &str = "#bdbdbd";
const BACKGROUND: &str = "#f0f0f0";

/// Red at standstill through yellow to green at free flow.
pub fn speed_color(speed: f64, u_free: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 3] = [
        (0.0, [215.0, 25.0, 28.0]),
        (0.5, [255.0, 255.0, 191.0]),
        (1.0, [26.0, 150.0, 65.0]),
    ];
    let x = (speed / u_free).clamp(0.0, 1.0);
    let (lo, hi) = if x <= 0.5 { (STOPS[0], STOPS[1]) } else { (STOPS[1], STOPS[2]) };
    let f = (x - lo.0) / (hi.0 - lo.0);
    let c: Vec<u8> = (0..3).map(|i| (lo.1[i] + f * (hi.1[i] - lo.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Golden-angle hues, so neighbouring labels never share a colour.
pub fn label_color(label: u32) -> String {
    let hue = (f64::from(label) * 137.507_764) % 360.0;
    format!("hsl({hue:.1},70%,50%)")
}

struct Canvas {
    body: String,
    rows: usize,
    cols: usize,
}

impl Canvas {
    fn new(rows: usize, cols: usize) -> Self {
        Canvas {
            body: String::new(),
            rows,
            cols,
        }
    }

    fn cell(&mut self, r: usize, c: usize, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{CELL_WIDTH}" height="{CELL_HEIGHT}" fill="{fill}"/>"#,
            c * CELL_WIDTH,
            r * CELL_HEIGHT
        );
    }

    fn center(p: &EdgePoint) -> (f64, f64) {
        (
            (p.column * CELL_WIDTH) as f64 + CELL_WIDTH as f64 / 2.0,
            (p.row * CELL_HEIGHT) as f64 + CELL_HEIGHT as f64 / 2.0,
        )
    }

    fn markers(&mut self, reports: &[BottleneckReport]) {
        for b in reports {
            let (fx, fy) = Self::center(&b.front_activation);
            let (rx, ry) = Self::center(&b.rear_activation);
            let _ = writeln!(
                self.body,
                r#"<line class="shockwave" data-index="{}" x1="{fx}" y1="{fy}" x2="{rx}" y2="{ry}" stroke="black" stroke-width="1.5"/>"#,
                b.index
            );
            for (class, p) in [
                ("activation", &b.front_activation),
                ("activation", &b.rear_activation),
                ("deactivation", &b.front_deactivation),
                ("deactivation", &b.rear_deactivation),
            ] {
                let (x, y) = Self::center(p);
                let fill = if class == "activation" { "black" } else { "white" };
                let _ = writeln!(
                    self.body,
                    r#"<circle class="{class}" data-index="{}" cx="{x}" cy="{y}" r="3" fill="{fill}" stroke="black"/>"#,
                    b.index
                );
            }
        }
    }

    fn finish(self, title: &str) -> String {
        let (w, h) = (self.cols * CELL_WIDTH, self.rows * CELL_HEIGHT);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" shape-rendering=\"crispEdges\">\n<title>{}</title>\n{}</svg>\n",
            escape(title),
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Speed contour, optionally with bottleneck markers on top.
pub fn speed_heatmap(grid: &SpeedGrid, u_free: f64, reports: &[BottleneckReport], title: &str) -> String {
    let mut canvas = Canvas::new(grid.rows(), grid.cols());
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            if grid.is_missing(r, c) {
                canvas.cell(r, c, MISSING);
            } else {
                canvas.cell(r, c, &speed_color(grid.speed(r, c), u_free));
            }
        }
    }
    canvas.markers(reports);
    canvas.finish(title)
}

/// Blue for uncongested cells, red for congested ones.
pub fn binary_heatmap(grid: &BinaryGrid, title: &str) -> String {
    let (rows, cols) = grid.shape();
    let mut canvas = Canvas::new(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            canvas.cell(r, c, if grid.get(r, c) { CONGESTED } else { UNCONGESTED });
        }
    }
    canvas.finish(title)
}

/// One colour per region label, with activation markers and the front-rear
/// segment of each reported bottleneck.
pub fn region_heatmap(regions: &LabeledRegions, reports: &[BottleneckReport], title: &str) -> String {
    let (rows, cols) = regions.labels.shape();
    let mut canvas = Canvas::new(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            match *regions.labels.get(r, c) {
                0 => canvas.cell(r, c, BACKGROUND),
                l => canvas.cell(r, c, &label_color(l)),
            }
        }
    }
    canvas.markers(reports);
    canvas.finish(title)
}

pub fn write_svg(path: impl AsRef<Path>, svg: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
