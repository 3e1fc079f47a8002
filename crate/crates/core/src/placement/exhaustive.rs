use super::{sorted_by_risk, spread, Placement};
use crate::error::{Error, Result};
use crate::metrics::{PrecisionModel, TrustRecord};

/// Largest number of assignments `m^n` the exhaustive search will visit.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

/// Globally optimal placement by visiting every assignment; ties go to the
/// lexicographically smallest assignment. Meant as an oracle for small
/// instances.
pub fn place_exhaustive(n: usize, servers: &[TrustRecord], model: &PrecisionModel) -> Result<Placement> {
    if servers.is_empty() {
        return Err(Error::InvalidParameter("exhaustive placement needs at least one server".into()));
    }
    let m = servers.len();
    let combinations = (m as f64).powi(n as i32);
    if combinations > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge { combinations, limit: EXHAUSTIVE_LIMIT });
    }
    if model.n() != n {
        return Err(Error::InvalidParameter("precision model must cover every share".into()));
    }
    let servers = sorted_by_risk(servers);
    let risks: Vec<f64> = servers.iter().map(|s| s.risk).collect();

    let mut genes = vec![0usize; n];
    let mut best = genes.clone();
    let mut best_value = spread(&genes, &risks, model).0;
    // Odometer over assignments in lexicographic order.
    'outer: loop {
        let mut j = n;
        loop {
            if j == 0 {
                break 'outer;
            }
            j -= 1;
            genes[j] += 1;
            if genes[j] < m {
                break;
            }
            genes[j] = 0;
        }
        let value = spread(&genes, &risks, model).0;
        if value < best_value {
            best_value = value;
            best.copy_from_slice(&genes);
        }
    }
    Ok(Placement { servers, assignment: best })
}
