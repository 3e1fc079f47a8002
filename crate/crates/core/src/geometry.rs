//! Planar geometry shared by every share algorithm.
//!
//! Coordinates are meters on a local plane. Areas of circle intersections
//! are computed by counting raster cells whose centers fall inside every
//! circle (and, when a [`MapGrid`] is given, inside a true cell).

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MapGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Vector {
    pub const ZERO: Vector = Vector { dx: 0.0, dy: 0.0 };

    pub fn new(dx: f64, dy: f64) -> Self {
        Vector { dx, dy }
    }

    pub fn length(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite()
    }
}

impl Add<Vector> for Point {
    type Output = Point;
    fn add(self, v: Vector) -> Point {
        Point::new(self.x + v.dx, self.y + v.dy)
    }
}

impl Sub<Point> for Point {
    type Output = Vector;
    fn sub(self, o: Point) -> Vector {
        Vector::new(self.x - o.x, self.y - o.y)
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, o: Vector) -> Vector {
        Vector::new(self.dx + o.dx, self.dy + o.dy)
    }
}

impl std::iter::Sum for Vector {
    fn sum<I: Iterator<Item = Vector>>(iter: I) -> Vector {
        iter.fold(Vector::ZERO, |a, b| a + b)
    }
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative radius {radius}");
        Circle { center, radius }
    }

    pub fn area(&self) -> f64 {
        circle_area(self)
    }

    pub fn contains(&self, p: Point) -> bool {
        contains(self, p)
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

pub fn circle_area(c: &Circle) -> f64 {
    PI * c.radius * c.radius
}

/// Boundary inclusive.
pub fn contains(c: &Circle, p: Point) -> bool {
    distance(c.center, p) <= c.radius
}

/// Width of the band by which a rasterized disk of `radius` may miss its
/// exact area: one cell around the circumference.
pub fn raster_tolerance(radius: f64, cell_size: f64) -> f64 {
    2.0 * PI * radius * cell_size
}

/// Cell size used when no map grid is supplied.
pub const DEFAULT_CELL_SIZE: f64 = 1.0;

/// Area of the common intersection of `circles`, restricted to the true
/// cells of `grid` when one is given.
///
/// Without a grid the raster is a virtual all-true grid of
/// [`DEFAULT_CELL_SIZE`] cells aligned to integer meters and spanning the
/// circles' bounding box.
pub fn intersection_area(circles: &[Circle], grid: Option<&MapGrid>) -> Result<f64> {
    if circles.is_empty() {
        return Err(Error::EmptyCircleList);
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MIN, f64::MIN, f64::MAX, f64::MAX);
    for c in circles {
        x0 = x0.max(c.center.x - c.radius);
        y0 = y0.max(c.center.y - c.radius);
        x1 = x1.min(c.center.x + c.radius);
        y1 = y1.min(c.center.y + c.radius);
    }
    if x0 > x1 || y0 > y1 {
        return Ok(0.0);
    }

    let frame = match grid {
        Some(g) => {
            Frame { ox: g.origin.x, oy: g.origin.y, cell: g.cell_size, width: g.width, height: g.height }
        }
        None => {
            let ox = x0.floor();
            let oy = y0.floor();
            Frame {
                ox,
                oy,
                cell: DEFAULT_CELL_SIZE,
                width: ((x1 - ox) / DEFAULT_CELL_SIZE).ceil() as usize + 1,
                height: ((y1 - oy) / DEFAULT_CELL_SIZE).ceil() as usize + 1,
            }
        }
    };
    let Some((row_lo, row_hi)) = frame.index_range(y0, y1, frame.oy, frame.height) else {
        return Ok(0.0);
    };

    let mut count: u64 = 0;
    for row in row_lo..=row_hi {
        let y = frame.oy + (row as f64 + 0.5) * frame.cell;
        let mut lo = f64::MIN;
        let mut hi = f64::MAX;
        let mut empty = false;
        for c in circles {
            let dy = y - c.center.y;
            let rem = c.radius * c.radius - dy * dy;
            if rem < 0.0 {
                empty = true;
                break;
            }
            let half = rem.sqrt();
            lo = lo.max(c.center.x - half);
            hi = hi.min(c.center.x + half);
        }
        if empty || lo > hi {
            continue;
        }
        let Some((c0, c1)) = frame.index_range(lo, hi, frame.ox, frame.width) else {
            continue;
        };
        count += match grid {
            Some(g) => g.count_true_in_row(row, c0, c1) as u64,
            None => (c1 - c0 + 1) as u64,
        };
    }
    Ok(count as f64 * frame.cell * frame.cell)
}

struct Frame {
    ox: f64,
    oy: f64,
    cell: f64,
    width: usize,
    height: usize,
}

impl Frame {
    /// Indices of cells whose centers lie in `[lo, hi]` along one axis.
    fn index_range(&self, lo: f64, hi: f64, origin: f64, len: usize) -> Option<(usize, usize)> {
        if len == 0 {
            return None;
        }
        let first = ((lo - origin) / self.cell - 0.5).ceil().max(0.0);
        let last = ((hi - origin) / self.cell - 0.5).floor().min(len as f64 - 1.0);
        if first > last {
            return None;
        }
        Some((first as usize, last as usize))
    }
}

/// Uniform point in the disk of `radius` around `center` (rejection from the
/// bounding square).
pub fn random_point_in_disk<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    if radius == 0.0 {
        return center;
    }
    loop {
        let dx = rng.random_range(-radius..=radius);
        let dy = rng.random_range(-radius..=radius);
        if dx * dx + dy * dy <= radius * radius {
            return center + Vector::new(dx, dy);
        }
    }
}

/// Vector with length uniform in `[0, max_len]` and a uniform direction.
pub fn random_vector<R: Rng + ?Sized>(max_len: f64, rng: &mut R) -> Vector {
    let len = if max_len > 0.0 { rng.random_range(0.0..=max_len) } else { 0.0 };
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    Vector::new(len * angle.cos(), len * angle.sin())
}
