//! Binary feasibility raster: `true` where the user can possibly be located.
//!
//! File format (ASCII, hand-editable):
//!
//! ```text
//! MAPGRID
//! # comment lines start with '#'
//! <width> <height>
//! <origin_x> <origin_y> <cell_size>
//! 0110...   <- northernmost row (row index height-1)
//! ...
//! 0011...   <- row index 0, whose lower edge is origin_y
//! ```
//!
//! Row characters may be separated by whitespace.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;

const MAGIC: &str = "MAPGRID";

#[derive(Debug, Clone, PartialEq)]
pub struct MapGrid {
    /// Lower-left corner of cell (0, 0).
    pub origin: Point,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    cells: Vec<bool>,
    /// Per row, number of true cells strictly left of each column.
    prefix: Vec<u32>,
}

impl MapGrid {
    pub fn new(origin: Point, cell_size: f64, width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidParameter(format!("cell size {cell_size} must be positive")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidParameter("grid origin must be finite".into()));
        }
        if cells.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} cells given for a {width}x{height} grid",
                cells.len()
            )));
        }
        let mut prefix = Vec::with_capacity(height * (width + 1));
        for row in cells.chunks(width.max(1)).take(height) {
            let mut acc = 0u32;
            prefix.push(0);
            for &c in row {
                acc += c as u32;
                prefix.push(acc);
            }
        }
        if width == 0 {
            prefix = vec![0; height];
        }
        Ok(MapGrid { origin, cell_size, width, height, cells, prefix })
    }

    /// Grid with every cell set to `value`.
    pub fn filled(origin: Point, cell_size: f64, width: usize, height: usize, value: bool) -> Self {
        Self::new(origin, cell_size, width, height, vec![value; width * height]).expect("valid grid")
    }

    /// Grid whose cell `(col, row)` is `f(col, row)`.
    pub fn from_fn(
        origin: Point,
        cell_size: f64,
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                cells.push(f(c, r));
            }
        }
        Self::new(origin, cell_size, width, height, cells).expect("valid grid")
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.cells[row * self.width + col] = value;
        self.rebuild_row(row);
    }

    fn rebuild_row(&mut self, row: usize) {
        let base = row * (self.width + 1);
        let mut acc = 0;
        for c in 0..self.width {
            acc += self.cells[row * self.width + c] as u32;
            self.prefix[base + c + 1] = acc;
        }
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let c = ((p.x - self.origin.x) / self.cell_size).floor();
        let r = ((p.y - self.origin.y) / self.cell_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            return None;
        }
        Some((c as usize, r as usize))
    }

    /// Whether `p` lies in a true cell.
    pub fn is_feasible(&self, p: Point) -> bool {
        self.cell_of(p).is_some_and(|(c, r)| self.get(c, r))
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn true_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn true_area(&self) -> f64 {
        self.true_count() as f64 * self.cell_area()
    }

    /// Corners of the grid's extent.
    pub fn corners(&self) -> [Point; 4] {
        let w = self.width as f64 * self.cell_size;
        let h = self.height as f64 * self.cell_size;
        let o = self.origin;
        [o, Point::new(o.x + w, o.y), Point::new(o.x, o.y + h), Point::new(o.x + w, o.y + h)]
    }

    /// True cells in columns `c0..=c1` of `row`.
    pub(crate) fn count_true_in_row(&self, row: usize, c0: usize, c1: usize) -> u32 {
        let base = row * (self.width + 1);
        self.prefix[base + c1 + 1] - self.prefix[base + c0]
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let bad = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let (ln, magic) = lines.next().ok_or_else(|| bad(1, "empty map file"))?;
        if magic != MAGIC {
            return Err(bad(ln, "expected MAPGRID header"));
        }
        let (ln, dims) = lines.next().ok_or_else(|| bad(ln, "missing dimensions"))?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(ln, "dimensions must be two integers"))?;
        let [width, height] = dims[..] else {
            return Err(bad(ln, "dimensions must be two integers"));
        };
        let (ln, frame) = lines.next().ok_or_else(|| bad(ln, "missing origin and cell size"))?;
        let frame: Vec<f64> = frame
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(ln, "expected origin_x origin_y cell_size"))?;
        let [ox, oy, cell] = frame[..] else {
            return Err(bad(ln, "expected origin_x origin_y cell_size"));
        };

        let mut rows: Vec<Vec<bool>> = Vec::with_capacity(height);
        let mut last = ln;
        for (ln, line) in lines {
            last = ln;
            let row = line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(bad(ln, &format!("unexpected cell character {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != width {
                return Err(bad(ln, &format!("row has {} cells, expected {width}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != height {
            return Err(bad(last, &format!("found {} rows, expected {height}", rows.len())));
        }
        rows.reverse();
        let cells = rows.into_iter().flatten().collect();
        Self::new(Point::new(ox, oy), cell, width, height, cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "{} {}", self.width, self.height);
        let _ = writeln!(out, "{} {} {}", self.origin.x, self.origin.y, self.cell_size);
        for r in (0..self.height).rev() {
            for c in 0..self.width {
                out.push(if self.get(c, r) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}
