//! Share types and their JSON document form.
//!
//! ```json
//! {"mode":"OSPS","n":2,"delta_r":50.0,
//!  "master":{"x":1.0,"y":2.0,"r":100.0},
//!  "shares":[{"dx":3.0,"dy":4.0},{"dx":-1.0,"dy":0.5}]}
//! ```
//!
//! Constrained-space sets add `"r"` to every share record.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Circle, Point, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "OSPS")]
    Osps,
    #[serde(rename = "CSPS")]
    Csps,
}

/// Public obfuscation circle anchoring the share chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "MasterDoc", from = "MasterDoc")]
pub struct MasterShare {
    pub circle: Circle,
}

impl MasterShare {
    pub fn new(center: Point, radius: f64) -> Self {
        MasterShare { circle: Circle::new(center, radius) }
    }

    pub fn center(&self) -> Point {
        self.circle.center
    }

    pub fn radius(&self) -> f64 {
        self.circle.radius
    }
}

/// Relative shift of the obfuscation circle's center. Constrained-space
/// shares also carry the radius of the circle they produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ShareDoc", from = "ShareDoc")]
pub struct RefinementShare {
    pub shift: Vector,
    pub radius: Option<f64>,
}

impl RefinementShare {
    pub fn open(shift: Vector) -> Self {
        RefinementShare { shift, radius: None }
    }

    pub fn constrained(shift: Vector, radius: f64) -> Self {
        RefinementShare { shift, radius: Some(radius) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShareSet {
    pub mode: Mode,
    pub master: MasterShare,
    pub refinements: Vec<RefinementShare>,
    /// Nominal precision gain per share, `r0 / n`.
    pub delta_r: f64,
}

impl ShareSet {
    pub fn n(&self) -> usize {
        self.refinements.len()
    }

    /// Sum of every refinement shift.
    pub fn total_shift(&self) -> Vector {
        self.refinements.iter().map(|s| s.shift).sum()
    }

    /// Position obtained by fusing every share.
    pub fn endpoint(&self) -> Point {
        self.refinements.iter().fold(self.master.center(), |p, s| p + s.shift)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ShareSetDoc::from(self)).expect("share set serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&ShareSetDoc::from(self)).expect("share set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ShareSetDoc>(text)?.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct MasterDoc {
    x: f64,
    y: f64,
    r: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct ShareDoc {
    dx: f64,
    dy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    r: Option<f64>,
}

impl From<MasterShare> for MasterDoc {
    fn from(m: MasterShare) -> Self {
        MasterDoc { x: m.center().x, y: m.center().y, r: m.radius() }
    }
}

impl From<MasterDoc> for MasterShare {
    fn from(d: MasterDoc) -> Self {
        MasterShare::new(Point::new(d.x, d.y), d.r)
    }
}

impl From<RefinementShare> for ShareDoc {
    fn from(s: RefinementShare) -> Self {
        ShareDoc { dx: s.shift.dx, dy: s.shift.dy, r: s.radius }
    }
}

impl From<ShareDoc> for RefinementShare {
    fn from(d: ShareDoc) -> Self {
        RefinementShare { shift: Vector::new(d.dx, d.dy), radius: d.r }
    }
}

/// Wire form; field order is part of the format.
#[derive(Serialize, Deserialize)]
pub(crate) struct ShareSetDoc {
    mode: Mode,
    n: usize,
    delta_r: f64,
    master: MasterDoc,
    shares: Vec<ShareDoc>,
}

impl From<&ShareSet> for ShareSetDoc {
    fn from(s: &ShareSet) -> Self {
        ShareSetDoc {
            mode: s.mode,
            n: s.n(),
            delta_r: s.delta_r,
            master: s.master.into(),
            shares: s.refinements.iter().map(|&r| r.into()).collect(),
        }
    }
}

impl TryFrom<ShareSetDoc> for ShareSet {
    type Error = Error;

    fn try_from(doc: ShareSetDoc) -> Result<Self> {
        if doc.n != doc.shares.len() {
            return Err(Error::InvalidParameter(format!(
                "share set declares n = {} but lists {} shares",
                doc.n,
                doc.shares.len()
            )));
        }
        if !(doc.master.r >= 0.0) {
            return Err(Error::InvalidParameter("master radius must be non-negative".into()));
        }
        for (i, s) in doc.shares.iter().enumerate() {
            match (doc.mode, s.r) {
                (Mode::Csps, None) => return Err(Error::MissingRadius(i + 1)),
                (Mode::Osps, Some(_)) => {
                    return Err(Error::InvalidParameter(format!(
                        "open-space share {} carries a radius",
                        i + 1
                    )))
                }
                _ => {}
            }
        }
        Ok(ShareSet {
            mode: doc.mode,
            master: doc.master.into(),
            refinements: doc.shares.into_iter().map(Into::into).collect(),
            delta_r: doc.delta_r,
        })
    }
}
