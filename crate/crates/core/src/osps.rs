//! Open-space position sharing: homogeneous shares, no map knowledge.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{random_point_in_disk, Circle, Point, Vector};
use crate::shares::{MasterShare, Mode, RefinementShare, ShareSet};

/// Envelope rejections before a shift length falls back to the envelope peak.
const LENGTH_ATTEMPTS: usize = 10_000;

/// Radius after fusing `k` of `n` homogeneous shares.
pub fn fused_radius(r0: f64, n: usize, k: usize) -> f64 {
    r0 * (n - k) as f64 / n as f64
}

/// Fuses the master share with `k <= n` refinement shares in the given order.
pub fn fuse_osps(n: usize, master: &MasterShare, shares: &[RefinementShare]) -> Result<Circle> {
    let k = shares.len();
    if k > n {
        return Err(Error::TooManyShares { k, n });
    }
    if n == 0 {
        return Ok(master.circle);
    }
    let center = shares.iter().fold(master.center(), |p, s| p + s.shift);
    Ok(Circle::new(center, fused_radius(master.radius(), n, k)))
}

/// Generates a master share and `n` shift vectors whose chain ends on `pi`.
///
/// Every intermediate circle `c_i` (radius `r0 - i * r0/n`) contains `pi`
/// and every shift is at most `r0/n` long.
pub fn generate_osps<R: Rng + ?Sized>(pi: Point, n: usize, r0: f64, rng: &mut R) -> Result<ShareSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidParameter(format!("r0 = {r0} must be positive")));
    }
    if !pi.is_finite() {
        return Err(Error::InvalidParameter("position must be finite".into()));
    }
    let delta_r = r0 / n as f64;

    let p0 = random_point_in_disk(pi, r0, rng);
    let mut refinements = Vec::with_capacity(n);
    let mut p = p0;
    for i in 1..n {
        let shift = feasible_shift(p, pi, fused_radius(r0, n, i), delta_r, rng);
        p = p + shift;
        refinements.push(RefinementShare::open(shift));
    }
    refinements.push(RefinementShare::open(pi - p));
    Ok(ShareSet { mode: Mode::Osps, master: MasterShare::new(p0, r0), refinements, delta_r })
}

/// Share of directions at which a step of length `len` from distance `d`
/// stays within `radius` of the target, together with the cosine bound on
/// the angle between the step and the outward direction.
fn feasible_arc(d: f64, radius: f64, len: f64) -> (f64, f64) {
    if len + d <= radius {
        return (1.0, 1.0);
    }
    if (d - len).abs() > radius {
        return (0.0, -1.0);
    }
    let cos_bound = ((radius * radius - d * d - len * len) / (2.0 * len * d)).clamp(-1.0, 1.0);
    (1.0 - cos_bound.acos() / std::f64::consts::PI, cos_bound)
}

/// Shift of length uniform in `[0, max_len]` and uniform direction,
/// conditioned on `p + shift` lying within `radius` of `pi`.
///
/// Requires `distance(p, pi) <= radius + max_len`. The length is drawn from
/// its conditional density (proportional to the feasible arc) by rejection
/// against the arc's peak, then the angle uniformly within the arc.
fn feasible_shift<R: Rng + ?Sized>(p: Point, pi: Point, radius: f64, max_len: f64, rng: &mut R) -> Vector {
    let outward = p - pi;
    let d = outward.length();
    let hi = max_len.min(d + radius);
    let lo = (d - radius).max(0.0).min(hi);
    // The arc is unimodal in the length and peaks at sqrt(d^2 - radius^2).
    let peak_len = (d * d - radius * radius).max(0.0).sqrt().clamp(lo, hi);
    let (peak, _) = feasible_arc(d, radius, peak_len);

    let mut len = peak_len;
    if hi > lo && peak > 0.0 {
        for _ in 0..LENGTH_ATTEMPTS {
            let candidate = rng.random_range(lo..=hi);
            if rng.random::<f64>() * peak < feasible_arc(d, radius, candidate).0 {
                len = candidate;
                break;
            }
        }
    }
    let (_, cos_bound) = feasible_arc(d, radius, len);
    let half = cos_bound.acos();
    let angle = rng.random_range(half..=std::f64::consts::TAU - half);
    let base = if d > 0.0 { outward.dy.atan2(outward.dx) } else { 0.0 };
    let theta = base + angle;
    Vector::new(len * theta.cos(), len * theta.sin())
}
