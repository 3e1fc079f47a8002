//! Share-to-server placement under individual server trust levels.
//!
//! A placement maps each of the `n` refinement shares to one of the `m`
//! selected location servers. Its quality is the spread of risk-weighted
//! precision held per server,
//! `max_i(risk_i * gain_i) - min_i(risk_i * gain_i)`, where `gain_i` sums
//! the precision gains of the shares on server `i`. A balanced placement
//! lets trusted servers hold more precision than risky ones.

mod exhaustive;
mod genetic;

pub use exhaustive::{place_exhaustive, EXHAUSTIVE_LIMIT};
pub use genetic::{place_optimized, place_optimized_with, GeneticConfig, GeneticRun};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{
    attack_curve_dp, satisfies, AttackCurve, PrecisionModel, PrivacyRequirement, TrustRecord,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Selected servers, ascending by risk.
    pub servers: Vec<TrustRecord>,
    /// `assignment[j]` is the index into `servers` holding share `j`.
    pub assignment: Vec<usize>,
}

impl Placement {
    /// Builds a placement, sorting `servers` ascending by risk and
    /// remapping `assignment` accordingly.
    pub fn new(servers: Vec<TrustRecord>, assignment: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&a| a >= servers.len()) {
            return Err(Error::InvalidParameter(format!(
                "share assigned to server {bad} of {}",
                servers.len()
            )));
        }
        let order = risk_order(&servers);
        let mut rank = vec![0; servers.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let sorted = order.iter().map(|&i| servers[i].clone()).collect();
        let assignment = assignment.into_iter().map(|a| rank[a]).collect();
        Ok(Placement { servers: sorted, assignment })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn m(&self) -> usize {
        self.servers.len()
    }

    pub fn risks(&self) -> Vec<f64> {
        self.servers.iter().map(|s| s.risk).collect()
    }

    /// Number of shares held by each server.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.m()];
        for &a in &self.assignment {
            c[a] += 1;
        }
        c
    }

    /// Indices of the shares held by server `i`.
    pub fn shares_of(&self, i: usize) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|(_, &a)| a == i).map(|(j, _)| j).collect()
    }

    /// Risk-weighted precision held per server.
    pub fn loads(&self, model: &PrecisionModel) -> Vec<f64> {
        loads(&self.assignment, &self.risks(), model)
    }
}

/// Server indices ordered ascending by risk (stable).
fn risk_order(servers: &[TrustRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..servers.len()).collect();
    order.sort_by(|&a, &b| servers[a].risk.total_cmp(&servers[b].risk));
    order
}

fn sorted_by_risk(servers: &[TrustRecord]) -> Vec<TrustRecord> {
    risk_order(servers).into_iter().map(|i| servers[i].clone()).collect()
}

pub(crate) fn loads(assignment: &[usize], risks: &[f64], model: &PrecisionModel) -> Vec<f64> {
    let mut gain = vec![0.0; risks.len()];
    for (j, &a) in assignment.iter().enumerate() {
        gain[a] += model.gain(j);
    }
    gain.iter().zip(risks).map(|(g, r)| g * r).collect()
}

/// `(spread, max load)` of an assignment.
pub(crate) fn spread(assignment: &[usize], risks: &[f64], model: &PrecisionModel) -> (f64, f64) {
    let l = loads(assignment, risks, model);
    let max = l.iter().copied().fold(f64::MIN, f64::max);
    let min = l.iter().copied().fold(f64::MAX, f64::min);
    (max - min, max)
}

/// Spread between the most and least loaded server. Servers without shares
/// count with a load of zero.
pub fn objective(placement: &Placement, model: &PrecisionModel) -> f64 {
    spread(&placement.assignment, &placement.risks(), model).0
}

/// Round-robin placement over the servers sorted ascending by risk; share
/// counts differ by at most one.
pub fn uniform_placement(n: usize, servers: &[TrustRecord]) -> Placement {
    assert!(!servers.is_empty(), "uniform placement needs at least one server");
    Placement { servers: sorted_by_risk(servers), assignment: (0..n).map(|j| j % servers.len()).collect() }
}

/// Reassigns whole share groups so that lower-risk servers hold at least as
/// much precision as higher-risk ones. Never increases the objective.
pub(crate) fn balance_by_risk(assignment: &[usize], m: usize, model: &PrecisionModel) -> Vec<usize> {
    let mut gain = vec![0.0; m];
    for (j, &a) in assignment.iter().enumerate() {
        gain[a] += model.gain(j);
    }
    let mut groups: Vec<usize> = (0..m).collect();
    groups.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]).then(a.cmp(&b)));
    // groups[i] is the group that moves to server i (servers ascend by risk).
    let mut target = vec![0; m];
    for (server, &group) in groups.iter().enumerate() {
        target[group] = server;
    }
    assignment.iter().map(|&a| target[a]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementOutcome {
    pub placement: Placement,
    pub servers_used: usize,
    pub objective: f64,
    pub satisfied: bool,
    pub curve: AttackCurve,
    /// Whether the genetic optimizer produced the placement.
    pub optimized: bool,
}

impl Serialize for Placement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Placement", 2)?;
        st.serialize_field("servers", &self.servers.iter().map(|s| &s.server_id).collect::<Vec<_>>())?;
        st.serialize_field("assignment", &self.assignment)?;
        st.end()
    }
}

fn outcome(
    placement: Placement,
    model: &PrecisionModel,
    req: &PrivacyRequirement,
    optimized: bool,
) -> Result<PlacementOutcome> {
    let curve = attack_curve_dp(&placement, model)?;
    Ok(PlacementOutcome {
        servers_used: placement.m(),
        objective: objective(&placement, model),
        satisfied: satisfies(&curve, req),
        curve,
        placement,
        optimized,
    })
}

/// Grows the server set from `m_min` most trusted candidates until a
/// placement meets `req`, trying the uniform placement before the genetic
/// optimizer at every size.
///
/// When even all candidates fail, returns the better of the two placements
/// over all candidates with `satisfied == false`.
pub fn select_and_place<R: Rng + ?Sized>(
    req: &PrivacyRequirement,
    n: usize,
    candidates: &[TrustRecord],
    m_min: usize,
    model: &PrecisionModel,
    rng: &mut R,
) -> Result<PlacementOutcome> {
    let m0 = candidates.len();
    if m_min == 0 || m_min > m0 {
        return Err(Error::InvalidParameter(format!("m_min = {m_min} outside 1..={m0}")));
    }
    if n < m_min {
        return Err(Error::NotEnoughShares { shares: n, servers: m_min });
    }
    if model.n() != n {
        return Err(Error::InvalidParameter(format!(
            "precision model covers {} shares, expected {n}",
            model.n()
        )));
    }
    let ranked = sorted_by_risk(candidates);
    let mut last = None;
    for m in m_min..=m0 {
        let selected = &ranked[..m];
        let uniform = outcome(uniform_placement(n, selected), model, req, false)?;
        if uniform.satisfied {
            return Ok(uniform);
        }
        let optimized = place_optimized(n, selected, req, model, rng);
        let optimized = outcome(optimized, model, req, true)?;
        if optimized.satisfied {
            return Ok(optimized);
        }
        last = Some(if optimized.objective <= uniform.objective { optimized } else { uniform });
    }
    Ok(last.expect("at least one server size tried"))
}
