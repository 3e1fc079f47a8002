//! Master-only position updates.
//!
//! Refinement shares are relative shift vectors, so a new position can be
//! published by moving the master share alone whenever the new master
//! circle does not intersect the previous one. Otherwise every share is
//! regenerated.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Circle, Point};
use crate::osps::generate_osps;
use crate::shares::{MasterShare, Mode, RefinementShare, ShareSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UpdateKind {
    /// Full regeneration of all shares.
    Basic,
    /// New master share only.
    Optimized,
    /// Dropped by the speed guard.
    Suppressed,
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateKind::Basic => "basic",
            UpdateKind::Optimized => "optimized",
            UpdateKind::Suppressed => "suppressed",
        })
    }
}

impl std::str::FromStr for UpdateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(UpdateKind::Basic),
            "optimized" => Ok(UpdateKind::Optimized),
            "suppressed" => Ok(UpdateKind::Suppressed),
            other => Err(Error::InvalidParameter(format!("unknown update kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDecision {
    pub kind: UpdateKind,
    /// Messages from the mobile object to location servers.
    pub messages_mo_ls: usize,
    pub new_master: MasterShare,
    /// Present only for [`UpdateKind::Basic`].
    pub new_refinements: Option<Vec<RefinementShare>>,
}

impl UpdateDecision {
    /// Share set after applying this decision to `prev`.
    pub fn apply(&self, prev: &ShareSet) -> ShareSet {
        ShareSet {
            mode: prev.mode,
            master: self.new_master,
            refinements: self.new_refinements.clone().unwrap_or_else(|| prev.refinements.clone()),
            delta_r: prev.delta_r,
        }
    }
}

/// Whether two consecutive master circles of radius `r0` are disjoint.
/// Tangent circles intersect.
pub fn decide_update(prev_master: &MasterShare, new_master_center: Point, r0: f64) -> bool {
    distance(prev_master.center(), new_master_center) > 2.0 * r0
}

/// Publishes `pi_next` given the share set generated for `pi_prev`.
///
/// The only master that keeps the old refinement chain valid is the one
/// centered at `pi_next - sum(shifts)`; it is used when it is disjoint from
/// the previous master, otherwise all shares are regenerated.
pub fn update_shares<R: Rng + ?Sized>(
    pi_prev: Point,
    pi_next: Point,
    set_prev: &ShareSet,
    rng: &mut R,
) -> Result<UpdateDecision> {
    if set_prev.mode != Mode::Osps {
        return Err(Error::InvalidParameter("master-only updates need an open-space share set".into()));
    }
    debug_assert!(
        distance(set_prev.endpoint(), pi_prev) <= 1e-6 * (1.0 + pi_prev.x.abs() + pi_prev.y.abs()),
        "share set was not generated for the previous position"
    );
    let r0 = set_prev.master.radius();
    let n = set_prev.n();
    let shift = set_prev.total_shift();
    let closing = Point::new(pi_next.x - shift.dx, pi_next.y - shift.dy);

    if decide_update(&set_prev.master, closing, r0) && Circle::new(closing, r0).contains(pi_next) {
        return Ok(UpdateDecision {
            kind: UpdateKind::Optimized,
            messages_mo_ls: 1,
            new_master: MasterShare::new(closing, r0),
            new_refinements: None,
        });
    }
    let fresh = generate_osps(pi_next, n, r0, rng)?;
    Ok(UpdateDecision {
        kind: UpdateKind::Basic,
        messages_mo_ls: n,
        new_master: fresh.master,
        new_refinements: Some(fresh.refinements),
    })
}

/// Share of mobile-to-server messages saved by one master-only update.
pub fn reduction_rate(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (n - 1) as f64 / n as f64
}

/// Total messages charged per update, covering both the mobile-to-server
/// leg and the server-to-application fan-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCosts {
    pub basic: u64,
    pub optimized: u64,
}

impl Default for MessageCosts {
    fn default() -> Self {
        MessageCosts { basic: 20, optimized: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub update_index: usize,
    pub kind: UpdateKind,
    pub mo_ls: u64,
    pub ls_lba: u64,
}

impl LedgerEntry {
    pub fn total(&self) -> u64 {
        self.mo_ls + self.ls_lba
    }
}

/// Per-update message accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageLedger {
    pub n: usize,
    pub costs: MessageCosts,
    pub entries: Vec<LedgerEntry>,
}

impl MessageLedger {
    pub fn new(n: usize, costs: MessageCosts) -> Self {
        MessageLedger { n, costs, entries: Vec::new() }
    }

    pub fn record(&mut self, kind: UpdateKind) {
        let (mo_ls, cost) = match kind {
            UpdateKind::Basic => (self.n as u64, self.costs.basic),
            UpdateKind::Optimized => (1, self.costs.optimized),
            UpdateKind::Suppressed => (0, 0),
        };
        self.entries.push(LedgerEntry {
            update_index: self.entries.len(),
            kind,
            mo_ls,
            ls_lba: cost.saturating_sub(mo_ls),
        });
    }

    /// Appends the entries of `other`, renumbering them after ours.
    pub fn append(&mut self, other: &MessageLedger) {
        for e in &other.entries {
            self.entries.push(LedgerEntry { update_index: self.entries.len(), ..*e });
        }
    }

    pub fn count(&self, kind: UpdateKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(LedgerEntry::total).sum()
    }

    /// Messages had every update been a full regeneration.
    pub fn baseline_total(&self) -> u64 {
        self.entries.len() as u64 * self.costs.basic
    }

    pub fn reduction(&self) -> f64 {
        ratio_saved(self.total(), self.baseline_total())
    }

    pub fn mo_ls_total(&self) -> u64 {
        self.entries.iter().map(|e| e.mo_ls).sum()
    }

    pub fn mo_ls_baseline(&self) -> u64 {
        (self.entries.len() * self.n) as u64
    }

    pub fn mo_ls_reduction(&self) -> f64 {
        ratio_saved(self.mo_ls_total(), self.mo_ls_baseline())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("update_index,kind,mo_ls,ls_lba\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.update_index, e.kind, e.mo_ls, e.ls_lba));
        }
        out
    }

    /// Parses the CSV written by [`MessageLedger::to_csv`]; lines starting
    /// with `#` are skipped.
    pub fn entries_from_csv(text: &str) -> Result<Vec<LedgerEntry>> {
        let mut out = Vec::new();
        let mut header = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header {
                if line != "update_index,kind,mo_ls,ls_lba" {
                    return Err(Error::Parse { line: i + 1, msg: "expected ledger header".into() });
                }
                header = true;
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split(',').collect();
            let [idx, kind, mo, lba] = f[..] else {
                return Err(bad("expected 4 fields"));
            };
            out.push(LedgerEntry {
                update_index: idx.parse().map_err(|_| bad("bad update index"))?,
                kind: kind.parse().map_err(|_| bad("bad update kind"))?,
                mo_ls: mo.parse().map_err(|_| bad("bad mo_ls count"))?,
                ls_lba: lba.parse().map_err(|_| bad("bad ls_lba count"))?,
            });
        }
        if !header {
            return Err(Error::Parse { line: 1, msg: "empty ledger".into() });
        }
        Ok(out)
    }
}

fn ratio_saved(actual: u64, baseline: u64) -> f64 {
    if baseline == 0 {
        0.0
    } else {
        1.0 - actual as f64 / baseline as f64
    }
}

/// Drops updates that arrive faster than twice the travel time between the
/// two fixes at `max_speed` (m/s), which would let an attacker bound the
/// user's movement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedGuard {
    pub max_speed: f64,
}

impl SpeedGuard {
    pub fn suppresses(&self, elapsed: f64, travelled: f64) -> bool {
        elapsed < 2.0 * travelled / self.max_speed
    }
}

/// Per-user update state: the current share set and the last published fix.
#[derive(Debug, Clone)]
pub struct MobileObject {
    pub n: usize,
    pub r0: f64,
    pub guard: Option<SpeedGuard>,
    shares: Option<ShareSet>,
    last: Option<(f64, Point)>,
}

impl MobileObject {
    pub fn new(n: usize, r0: f64) -> Self {
        MobileObject { n, r0, guard: None, shares: None, last: None }
    }

    pub fn with_guard(mut self, guard: SpeedGuard) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn shares(&self) -> Option<&ShareSet> {
        self.shares.as_ref()
    }

    /// Processes a position fix taken at time `t` (seconds).
    pub fn update<R: Rng + ?Sized>(&mut self, t: f64, pi: Point, rng: &mut R) -> Result<UpdateDecision> {
        let (Some(prev), Some((t_prev, pi_prev))) = (&self.shares, self.last) else {
            let set = generate_osps(pi, self.n, self.r0, rng)?;
            let decision = UpdateDecision {
                kind: UpdateKind::Basic,
                messages_mo_ls: self.n,
                new_master: set.master,
                new_refinements: Some(set.refinements.clone()),
            };
            self.shares = Some(set);
            self.last = Some((t, pi));
            return Ok(decision);
        };
        if let Some(guard) = self.guard {
            if guard.suppresses(t - t_prev, distance(pi_prev, pi)) {
                return Ok(UpdateDecision {
                    kind: UpdateKind::Suppressed,
                    messages_mo_ls: 0,
                    new_master: prev.master,
                    new_refinements: None,
                });
            }
        }
        let decision = update_shares(pi_prev, pi, prev, rng)?;
        self.shares = Some(decision.apply(prev));
        self.last = Some((t, pi));
        Ok(decision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osps::{fuse_osps, fused_radius};
    use crate::seeded_rng;

    #[test]
    fn disjointness_test() {
        let m = MasterShare::new(Point::ORIGIN, 10.0);
        assert!(decide_update(&m, Point::new(25.0, 0.0), 10.0));
        assert!(!decide_update(&m, Point::new(20.0, 0.0), 10.0));
        assert!(!decide_update(&m, Point::ORIGIN, 10.0));
    }

    #[test]
    fn reduction_rates() {
        assert_eq!(reduction_rate(5), 0.8);
        assert_eq!(reduction_rate(1), 0.0);
        assert_eq!(reduction_rate(20), 0.95);
    }

    #[test]
    fn long_jump_moves_only_the_master() {
        let mut rng = seeded_rng(21);
        let r0 = 100.0;
        let pi = Point::new(10.0, -4.0);
        let set = generate_osps(pi, 5, r0, &mut rng).unwrap();
        let next = Point::new(pi.x + 10.0 * r0, pi.y);
        let d = update_shares(pi, next, &set, &mut rng).unwrap();
        assert_eq!(d.kind, UpdateKind::Optimized);
        assert_eq!(d.messages_mo_ls, 1);
        assert!(d.new_refinements.is_none());
        let after = d.apply(&set);
        let fused = fuse_osps(5, &after.master, &after.refinements).unwrap();
        assert!(distance(fused.center, next) < 1e-9);
        assert_eq!(fused.radius, 0.0);
    }

    #[test]
    fn short_step_regenerates() {
        let mut rng = seeded_rng(22);
        let pi = Point::new(0.0, 0.0);
        let set = generate_osps(pi, 5, 100.0, &mut rng).unwrap();
        let d = update_shares(pi, Point::new(10.0, 0.0), &set, &mut rng).unwrap();
        assert_eq!(d.kind, UpdateKind::Basic);
        assert_eq!(d.messages_mo_ls, 5);
        let after = d.apply(&set);
        assert!(distance(after.endpoint(), Point::new(10.0, 0.0)) < 1e-9);
    }

    #[test]
    fn optimized_updates_keep_every_precision_level() {
        let mut rng = seeded_rng(23);
        let pi = Point::new(-300.0, 800.0);
        let set = generate_osps(pi, 4, 50.0, &mut rng).unwrap();
        let next = Point::new(400.0, 800.0);
        let after = update_shares(pi, next, &set, &mut rng).unwrap().apply(&set);
        for k in 0..=4 {
            let before = fuse_osps(4, &set.master, &set.refinements[..k]).unwrap();
            let now = fuse_osps(4, &after.master, &after.refinements[..k]).unwrap();
            assert_eq!(before.radius, now.radius);
            assert_eq!(now.radius, fused_radius(50.0, 4, k));
        }
    }

    #[test]
    fn constrained_sets_are_rejected() {
        let mut set = generate_osps(Point::ORIGIN, 2, 10.0, &mut seeded_rng(0)).unwrap();
        set.mode = Mode::Csps;
        assert!(update_shares(Point::ORIGIN, Point::new(100.0, 0.0), &set, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn ledger_arithmetic() {
        let mut l = MessageLedger::new(5, MessageCosts::default());
        l.record(UpdateKind::Basic);
        l.record(UpdateKind::Optimized);
        l.record(UpdateKind::Optimized);
        assert_eq!(l.total(), 32);
        assert_eq!(l.baseline_total(), 60);
        assert_eq!(l.mo_ls_total(), 7);
        assert_eq!(l.mo_ls_baseline(), 15);
        assert!((l.reduction() - (1.0 - 32.0 / 60.0)).abs() < 1e-12);
        assert_eq!(
            l.entries[1],
            LedgerEntry { update_index: 1, kind: UpdateKind::Optimized, mo_ls: 1, ls_lba: 5 }
        );
        let csv = l.to_csv();
        assert_eq!(csv, "update_index,kind,mo_ls,ls_lba\n0,basic,5,15\n1,optimized,1,5\n2,optimized,1,5\n");
        assert_eq!(MessageLedger::entries_from_csv(&csv).unwrap(), l.entries);
    }

    #[test]
    fn speed_guard_suppresses_fast_updates() {
        let mut rng = seeded_rng(1);
        let mut mo = MobileObject::new(3, 10.0).with_guard(SpeedGuard { max_speed: 10.0 });
        assert_eq!(mo.update(0.0, Point::ORIGIN, &mut rng).unwrap().kind, UpdateKind::Basic);
        // 1000 m in 100 s: the user could have travelled it once, not twice.
        let d = mo.update(100.0, Point::new(1000.0, 0.0), &mut rng).unwrap();
        assert_eq!(d.kind, UpdateKind::Suppressed);
        assert_eq!(d.messages_mo_ls, 0);
        let d = mo.update(250.0, Point::new(1000.0, 0.0), &mut rng).unwrap();
        assert_eq!(d.kind, UpdateKind::Optimized);
    }
}
