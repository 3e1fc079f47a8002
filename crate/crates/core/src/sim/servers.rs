//! In-memory location servers and the clients that query them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::csps::{fuse_csps, ObfuscationArea};
use crate::error::{Error, Result};
use crate::geometry::Circle;
use crate::grid::MapGrid;
use crate::metrics::TrustRecord;
use crate::osps::fuse_osps;
use crate::placement::Placement;
use crate::shares::{MasterShare, Mode, RefinementShare, ShareSet};
use crate::update::UpdateDecision;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationServerState {
    pub server_id: String,
    pub risk: f64,
    pub master: Option<MasterShare>,
    /// Refinement shares keyed by 1-based share index.
    pub refinements: BTreeMap<usize, RefinementShare>,
}

/// A set of location servers holding one user's shares.
///
/// Every server stores the master share; refinement share `j` lives on
/// server `assignment[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub mode: Mode,
    pub n: usize,
    pub assignment: Vec<usize>,
    pub servers: Vec<LocationServerState>,
    /// Messages delivered to servers so far.
    pub delivered: u64,
}

impl Deployment {
    /// Empty servers laid out according to `placement`.
    pub fn new(placement: &Placement, mode: Mode) -> Self {
        Deployment {
            mode,
            n: placement.n(),
            assignment: placement.assignment.clone(),
            servers: placement.servers.iter().map(empty_server).collect(),
            delivered: 0,
        }
    }

    /// Sends every share of `set` to its server.
    pub fn publish(&mut self, set: &ShareSet) -> Result<()> {
        self.check(set)?;
        for s in &mut self.servers {
            s.master = Some(set.master);
            s.refinements.clear();
        }
        for (j, share) in set.refinements.iter().enumerate() {
            self.servers[self.assignment[j]].refinements.insert(j + 1, *share);
            self.delivered += 1;
        }
        // The master share travels once and is replicated server-side.
        self.delivered += 1;
        Ok(())
    }

    /// Applies an update decision; only the master moves when no
    /// refinements are attached.
    pub fn apply(&mut self, decision: &UpdateDecision, current: &ShareSet) -> Result<()> {
        match &decision.new_refinements {
            Some(_) => self.publish(&decision.apply(current)),
            None => {
                for s in &mut self.servers {
                    s.master = Some(decision.new_master);
                }
                self.delivered += decision.messages_mo_ls as u64;
                Ok(())
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("deployment serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn check(&self, set: &ShareSet) -> Result<()> {
        if set.mode != self.mode || set.n() != self.n {
            return Err(Error::InvalidParameter(format!(
                "deployment holds {} {:?} shares, got {} {:?} shares",
                self.n,
                self.mode,
                set.n(),
                set.mode
            )));
        }
        Ok(())
    }
}

fn empty_server(t: &TrustRecord) -> LocationServerState {
    LocationServerState {
        server_id: t.server_id.clone(),
        risk: t.risk,
        master: None,
        refinements: BTreeMap::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FusedRegion {
    Circle(Circle),
    Area(ObfuscationArea),
}

/// What a client learns from the servers it can reach.
#[derive(Debug, Clone, PartialEq)]
pub struct LbaView {
    pub accessible: Vec<String>,
    pub shares_used: usize,
    pub region: FusedRegion,
}

/// Collects the master share and every refinement share held by the
/// `accessible` servers and fuses them in share-index order.
///
/// Constrained-space deployments need the map the shares were built on.
pub fn lba_query(
    servers: &[LocationServerState],
    accessible: &[&str],
    mode: Mode,
    n: usize,
    grid: Option<&MapGrid>,
) -> Result<LbaView> {
    let reachable: Vec<&LocationServerState> =
        servers.iter().filter(|s| accessible.contains(&s.server_id.as_str())).collect();
    let master = reachable.iter().find_map(|s| s.master).ok_or(Error::MasterUnavailable)?;
    let mut collected = BTreeMap::new();
    for s in &reachable {
        collected.extend(s.refinements.iter().map(|(&j, &r)| (j, r)));
    }
    let shares: Vec<RefinementShare> = collected.into_values().collect();
    let region = match mode {
        Mode::Osps => FusedRegion::Circle(fuse_osps(n, &master, &shares)?),
        Mode::Csps => {
            let grid =
                grid.ok_or_else(|| Error::InvalidParameter("constrained-space fusion needs the map".into()))?;
            FusedRegion::Area(fuse_csps(grid, n, master.circle, &shares)?)
        }
    };
    Ok(LbaView {
        accessible: reachable.iter().map(|s| s.server_id.clone()).collect(),
        shares_used: shares.len(),
        region,
    })
}
