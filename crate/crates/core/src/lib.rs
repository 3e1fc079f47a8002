//! Position sharing for location privacy over non-trusted location servers.
//!
//! A mobile user's precise position is split into a public master share (a
//! coarse obfuscation circle) and `n` refinement shares (shift vectors).
//! Each location server stores some of the shares; a client fusing `k`
//! shares obtains a position whose precision grows with `k`. The crate
//! covers:
//!
//! * share generation and fusion in open space ([`osps`]) and on a binary
//!   feasibility map ([`csps`]),
//! * exact attacker success probabilities ([`metrics`]),
//! * trust-aware share placement with a genetic optimizer ([`placement`]),
//! * a master-only position update protocol ([`update`]),
//! * a deterministic replay harness for trajectories ([`sim`]).

pub mod csps;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod metrics;
pub mod osps;
pub mod placement;
pub mod shares;
pub mod sim;
pub mod update;

pub use error::{Error, Result};
pub use geometry::{Circle, Point, Vector};
pub use grid::MapGrid;
pub use shares::{MasterShare, Mode, RefinementShare, ShareSet};

/// Random source used throughout the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 0x5EED_2015;

pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
