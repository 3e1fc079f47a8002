//! Constrained-space position sharing: shares whose obfuscation areas keep
//! their nominal size after intersection with a binary feasibility map.
//!
//! A circle of nominal radius `r` must leave at least `pi * r^2` of
//! feasible area (minus one raster band, see
//! [`raster_tolerance`](crate::geometry::raster_tolerance)) once intersected
//! with the map and every earlier circle of the chain. Circles that fall
//! short are grown and their centers re-randomized so that the ungrown
//! center cannot be recovered.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    distance, intersection_area, random_point_in_disk, random_vector, raster_tolerance, Circle, Point, Vector,
};
use crate::grid::MapGrid;
use crate::osps::fused_radius;
use crate::shares::{MasterShare, Mode, RefinementShare, ShareSet};

/// Maximum nesting of the grow/re-center procedure.
pub const MAX_GROWTH_DEPTH: usize = 64;
const RECENTER_ATTEMPTS: usize = 1_000;
const SHIFT_ATTEMPTS: usize = 10_000;

/// Result of a constrained-space fusion: the circles walked and the
/// feasible area they leave.
#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscationArea {
    pub circles: Vec<Circle>,
    pub area: f64,
}

/// Default growth step: a tenth of the nominal per-share precision gain.
pub fn default_growth_step(r0: f64, n: usize) -> f64 {
    r0 / (10 * n) as f64
}

/// Whether `area` meets the target of a disk with radius `nominal`.
pub fn meets_target(area: f64, nominal: f64, cell_size: f64) -> bool {
    area >= PI * nominal * nominal - raster_tolerance(nominal, cell_size)
}

pub fn fuse_csps(
    grid: &MapGrid,
    n: usize,
    c0: Circle,
    shares: &[RefinementShare],
) -> Result<ObfuscationArea> {
    if shares.len() > n {
        return Err(Error::TooManyShares { k: shares.len(), n });
    }
    let mut circles = Vec::with_capacity(shares.len() + 1);
    circles.push(c0);
    let mut p = c0.center;
    for (i, s) in shares.iter().enumerate() {
        let r = s.radius.ok_or(Error::MissingRadius(i + 1))?;
        p = p + s.shift;
        circles.push(Circle::new(p, r));
    }
    let area = intersection_area(&circles, Some(grid))?;
    Ok(ObfuscationArea { circles, area })
}

/// Inputs of one radius increase.
#[derive(Debug, Clone, Copy)]
pub struct Growth<'a> {
    /// Circles already fixed earlier in the chain (empty for the master).
    pub prior: &'a [Circle],
    pub grid: &'a MapGrid,
    /// Radius increment.
    pub step: f64,
    /// Point that must stay inside the adjusted circle.
    pub keep_inside: Point,
}

impl Growth<'_> {
    fn area(&self, center: Point, radius: f64) -> f64 {
        let mut circles = Vec::with_capacity(self.prior.len() + 1);
        circles.extend_from_slice(self.prior);
        circles.push(Circle::new(center, radius));
        intersection_area(&circles, Some(self.grid)).expect("non-empty circle list")
    }

    fn compliant(&self, center: Point, radius: f64, nominal: f64) -> bool {
        meets_target(self.area(center, radius), nominal, self.grid.cell_size)
    }

    /// Radius beyond which the circle covers the whole grid.
    fn radius_limit(&self, center: Point) -> f64 {
        self.grid.corners().iter().map(|&c| distance(c, center)).fold(0.0, f64::max) + self.step
    }

    /// Grows the radius at a fixed center, in whole steps, until the target
    /// of the `nominal` disk is met.
    pub fn grow(&self, center: Point, radius: f64, nominal: f64) -> Result<f64> {
        let limit = self.radius_limit(center);
        let mut r = radius;
        while !self.compliant(center, r, nominal) {
            r += self.step;
            if r > limit {
                return Err(Error::InfeasibleMap(format!(
                    "feasible area around ({:.3}, {:.3}) cannot reach {:.3} m^2",
                    center.x,
                    center.y,
                    PI * nominal * nominal
                )));
            }
        }
        Ok(r)
    }
}

/// Grows a circle of radius `radius` at `center` until the feasible area
/// left by the map and the prior circles reaches the area of the ungrown
/// circle, re-randomizing the center by at most the growth per axis.
///
/// Returns the adjusted center and the smallest compliant radius (in whole
/// steps, never below `radius`). Circles that already comply are returned
/// unchanged.
pub fn increase_radius<R: Rng + ?Sized>(
    radius: f64,
    center: Point,
    growth: &Growth,
    rng: &mut R,
) -> Result<(Point, f64)> {
    if !(growth.step > 0.0) {
        return Err(Error::InvalidParameter("growth step must be positive".into()));
    }
    if growth.compliant(center, radius, radius) {
        return Ok((center, radius));
    }
    adjust(radius, radius, center, growth, rng, 0)
}

fn adjust<R: Rng + ?Sized>(
    nominal: f64,
    entry: f64,
    center: Point,
    growth: &Growth,
    rng: &mut R,
    depth: usize,
) -> Result<(Point, f64)> {
    if depth >= MAX_GROWTH_DEPTH {
        return Err(Error::InfeasibleMap(format!(
            "radius increase did not settle within {MAX_GROWTH_DEPTH} re-centerings"
        )));
    }
    let mut r = growth.grow(center, entry, nominal)?;
    let center = center + random_recenter(center, entry, r, growth.keep_inside, rng);

    if !growth.compliant(center, r, nominal) {
        return adjust(nominal, r, center, growth, rng, depth + 1);
    }
    let floor = nominal.max(distance(center, growth.keep_inside));
    while r - growth.step >= floor && growth.compliant(center, r - growth.step, nominal) {
        r -= growth.step;
    }
    Ok((center, r))
}

/// Per-axis shift bounded by the growth `grown - entry`, redrawn while it
/// would push `keep` out of the circle; zero after too many failures.
fn random_recenter<R: Rng + ?Sized>(
    center: Point,
    entry: f64,
    grown: f64,
    keep: Point,
    rng: &mut R,
) -> Vector {
    let bound = grown - entry;
    if bound <= 0.0 {
        return Vector::ZERO;
    }
    for _ in 0..RECENTER_ATTEMPTS {
        let v = Vector::new(rng.random_range(-bound..=bound), rng.random_range(-bound..=bound));
        if distance(center + v, keep) <= grown {
            return v;
        }
    }
    Vector::ZERO
}

/// Generates a constrained-space share set for `pi` on `grid`.
pub fn generate_csps<R: Rng + ?Sized>(
    n: usize,
    grid: &MapGrid,
    r0: f64,
    pi: Point,
    rng: &mut R,
) -> Result<ShareSet> {
    generate_csps_with_step(n, grid, r0, pi, default_growth_step(r0, n.max(1)), rng)
}

pub fn generate_csps_with_step<R: Rng + ?Sized>(
    n: usize,
    grid: &MapGrid,
    r0: f64,
    pi: Point,
    step: f64,
    rng: &mut R,
) -> Result<ShareSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidParameter(format!("r0 = {r0} must be positive")));
    }
    if !grid.is_feasible(pi) {
        return Err(Error::InvalidParameter("position lies outside the feasible cells of the map".into()));
    }
    let required = PI * r0 * r0 - raster_tolerance(r0, grid.cell_size);
    if grid.true_area() < required {
        return Err(Error::InfeasibleMap(format!(
            "map has {:.3} m^2 of feasible area, {required:.3} m^2 needed",
            grid.true_area()
        )));
    }

    let p0 = random_point_in_disk(pi, r0, rng);
    let master = Growth { prior: &[], grid, step, keep_inside: pi };
    let (p0, r0_grown) = increase_radius(r0, p0, &master, rng)?;

    let mut circles = vec![Circle::new(p0, r0_grown)];
    let mut refinements = Vec::with_capacity(n);
    let mut p_prev = p0;
    for i in 1..n {
        let nominal = fused_radius(r0, n, i);
        let reach = 2.0 * circles[i - 1].radius;
        let shift = (0..SHIFT_ATTEMPTS)
            .map(|_| random_vector(reach, rng))
            .find(|s| distance(p_prev + *s, pi) <= nominal)
            .unwrap_or(pi - p_prev);
        let growth = Growth { prior: &circles, grid, step, keep_inside: pi };
        let (p, r) = increase_radius(nominal, p_prev + shift, &growth, rng)?;
        refinements.push(RefinementShare::constrained(p - p_prev, r));
        circles.push(Circle::new(p, r));
        p_prev = p;
    }
    refinements.push(RefinementShare::constrained(pi - p_prev, 0.0));

    Ok(ShareSet {
        mode: Mode::Csps,
        master: MasterShare::new(p0, r0_grown),
        refinements,
        delta_r: r0 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osps::{fuse_osps, generate_osps};
    use crate::seeded_rng;

    fn open_grid(half: f64, cell: f64) -> MapGrid {
        let cells = (2.0 * half / cell) as usize;
        MapGrid::filled(Point::new(-half, -half), cell, cells, cells, true)
    }

    #[test]
    fn fuse_without_shares_is_master_on_map() {
        let grid = open_grid(50.0, 1.0);
        let c0 = Circle::new(Point::new(3.0, -2.0), 20.0);
        let fused = fuse_csps(&grid, 3, c0, &[]).unwrap();
        assert_eq!(fused.circles, vec![c0]);
        assert_eq!(fused.area, intersection_area(&[c0], Some(&grid)).unwrap());
    }

    #[test]
    fn fuse_matches_open_space_on_open_map() {
        let grid = open_grid(200.0, 1.0);
        let pi = Point::new(4.2, -7.9);
        let set = generate_osps(pi, 4, 80.0, &mut seeded_rng(9)).unwrap();
        let radii: Vec<_> = set
            .refinements
            .iter()
            .enumerate()
            .map(|(i, s)| RefinementShare::constrained(s.shift, fused_radius(80.0, 4, i + 1)))
            .collect();
        for k in 0..=4 {
            let open = fuse_osps(4, &set.master, &set.refinements[..k]).unwrap();
            let area = fuse_csps(&grid, 4, set.master.circle, &radii[..k]).unwrap().area;
            assert!(
                (area - open.area()).abs() <= raster_tolerance(open.radius, 1.0).max(1.0),
                "k={k}: {area} vs {}",
                open.area()
            );
        }
    }

    #[test]
    fn single_feasible_cell_fuses_to_one_cell() {
        let mut grid = MapGrid::filled(Point::new(0.0, 0.0), 10.0, 20, 20, false);
        grid.set(7, 9, true);
        let pi = grid.cell_center(7, 9);
        let set = generate_osps(pi, 4, 60.0, &mut seeded_rng(1)).unwrap();
        let shares: Vec<_> = set
            .refinements
            .iter()
            .enumerate()
            .map(|(i, s)| RefinementShare::constrained(s.shift, fused_radius(60.0, 4, i + 1)))
            .collect();
        for k in 0..=4 {
            let fused = fuse_csps(&grid, 4, set.master.circle, &shares[..k]).unwrap();
            assert_eq!(fused.area, 100.0, "k={k}");
        }
    }

    #[test]
    fn fuse_requires_radii() {
        let grid = open_grid(10.0, 1.0);
        let err =
            fuse_csps(&grid, 2, Circle::new(Point::ORIGIN, 5.0), &[RefinementShare::open(Vector::ZERO)]);
        assert!(matches!(err, Err(Error::MissingRadius(1))));
    }

    #[test]
    fn open_map_master_keeps_nominal_radius() {
        let grid = open_grid(400.0, 1.0);
        for seed in 0..20 {
            let set = generate_csps(4, &grid, 100.0, Point::new(1.0, 2.0), &mut seeded_rng(seed)).unwrap();
            assert_eq!(set.master.radius(), 100.0);
            assert_eq!(set.refinements.last().unwrap().radius, Some(0.0));
        }
    }

    #[test]
    fn nested_circle_on_open_map_is_untouched() {
        let grid = open_grid(400.0, 1.0);
        let prior = [Circle::new(Point::ORIGIN, 100.0)];
        let growth = Growth { prior: &prior, grid: &grid, step: 2.5, keep_inside: Point::new(5.0, 5.0) };
        let out = increase_radius(50.0, Point::new(10.0, 0.0), &growth, &mut seeded_rng(0)).unwrap();
        assert_eq!(out, (Point::new(10.0, 0.0), 50.0));
    }

    #[test]
    fn half_plane_growth_needs_root_two() {
        // Cells with x >= 0 are feasible; the circle is centered on the edge.
        let grid = MapGrid::from_fn(Point::new(-500.0, -500.0), 1.0, 1000, 1000, |c, _| c >= 500);
        let growth = Growth { prior: &[], grid: &grid, step: 5.0, keep_inside: Point::new(1.0, 0.0) };
        let nominal = 200.0;
        let grown = growth.grow(Point::ORIGIN, nominal, nominal).unwrap();

        // Brute-force scan for the smallest radius (in whole steps) whose
        // feasible half-disk reaches the target.
        let target = PI * nominal * nominal - raster_tolerance(nominal, 1.0);
        let scan = |r: f64| {
            let mut count = 0u64;
            let reach = r.ceil() as i64 + 1;
            for iy in -reach..reach {
                for ix in 0..reach {
                    let (x, y) = (ix as f64 + 0.5, iy as f64 + 0.5);
                    if x * x + y * y <= r * r {
                        count += 1;
                    }
                }
            }
            count as f64
        };
        let mut expected = nominal;
        while scan(expected) < target {
            expected += 5.0;
        }
        assert_eq!(grown, expected);
        let root_two = 2f64.sqrt() * nominal;
        assert!((grown - root_two).abs() <= 5.0, "grown {grown} vs {root_two}");
    }

    #[test]
    fn increase_is_deterministic_per_seed() {
        let grid =
            MapGrid::from_fn(Point::new(-300.0, -300.0), 2.0, 300, 300, |c, r| (c / 10 + r / 10) % 2 == 0);
        let keep = Point::new(1.0, 1.0);
        let growth = Growth { prior: &[], grid: &grid, step: 2.0, keep_inside: keep };
        let a = increase_radius(60.0, Point::new(5.0, 5.0), &growth, &mut seeded_rng(77)).unwrap();
        let b = increase_radius(60.0, Point::new(5.0, 5.0), &growth, &mut seeded_rng(77)).unwrap();
        assert_eq!(a, b);
        assert!(a.1 > 60.0);
        assert!(distance(a.0, keep) <= a.1);
    }

    #[test]
    fn grown_centers_are_randomized() {
        let grid = MapGrid::from_fn(Point::new(-300.0, -300.0), 2.0, 300, 300, |c, _| c >= 150);
        let keep = Point::new(3.0, 0.0);
        let growth = Growth { prior: &[], grid: &grid, step: 2.0, keep_inside: keep };
        let mut centers = std::collections::BTreeSet::new();
        for seed in 0..1000 {
            let (c, r) = increase_radius(50.0, Point::ORIGIN, &growth, &mut seeded_rng(seed)).unwrap();
            assert!(r > 50.0);
            assert!(distance(c, keep) <= r);
            centers.insert((c.x.to_bits(), c.y.to_bits()));
        }
        assert!(centers.len() > 100, "only {} distinct centers", centers.len());
    }

    #[test]
    fn infeasible_map_is_reported() {
        let mut grid = MapGrid::filled(Point::ORIGIN, 10.0, 30, 30, false);
        grid.set(15, 15, true);
        let pi = grid.cell_center(15, 15);
        let err = generate_csps(3, &grid, 100.0, pi, &mut seeded_rng(0)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleMap(_)), "{err}");
    }

    #[test]
    fn position_must_be_feasible() {
        let grid = MapGrid::filled(Point::ORIGIN, 1.0, 10, 10, false);
        assert!(generate_csps(2, &grid, 3.0, Point::new(5.0, 5.0), &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn targets_strictly_decrease() {
        let n = 6;
        let targets: Vec<f64> = (0..n).map(|i| PI * fused_radius(90.0, n, i).powi(2)).collect();
        assert!(targets.windows(2).all(|w| w[1] < w[0]));
    }
}
