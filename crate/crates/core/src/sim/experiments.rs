use rand::Rng;

use crate::error::Result;
use crate::metrics::{attack_curve_dp, AttackCurve, PrecisionModel, PrivacyRequirement, TrustRecord};
use crate::placement::{objective, place_optimized, uniform_placement, Placement};
use crate::shares::Mode;
use crate::update::{MessageCosts, MessageLedger, MobileObject, SpeedGuard, UpdateKind};
use crate::{seeded_rng, Error};

use super::servers::Deployment;
use super::trajectory::Trajectory;

/// Replays `traj` through a mobile object publishing `n` open-space shares
/// of radius `r0` to `n` servers, one refinement share each.
pub fn run_update_experiment<R: Rng + ?Sized>(
    traj: &Trajectory,
    n: usize,
    r0: f64,
    costs: MessageCosts,
    rng: &mut R,
) -> Result<MessageLedger> {
    run_update_experiment_with(traj, n, r0, costs, None, rng)
}

pub fn run_update_experiment_with<R: Rng + ?Sized>(
    traj: &Trajectory,
    n: usize,
    r0: f64,
    costs: MessageCosts,
    guard: Option<SpeedGuard>,
    rng: &mut R,
) -> Result<MessageLedger> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one refinement share is required".into()));
    }
    let servers: Vec<TrustRecord> =
        (1..=n).map(|i| TrustRecord::new(format!("LS{i}"), 0.0)).collect::<Result<_>>()?;
    let mut deployment = Deployment::new(&uniform_placement(n, &servers), Mode::Osps);
    let mut mo = MobileObject::new(n, r0);
    mo.guard = guard;
    let mut ledger = MessageLedger::new(n, costs);
    for fix in traj.fixes() {
        let before = mo.shares().cloned();
        let decision = mo.update(fix.t, fix.position, rng)?;
        match &before {
            Some(prev) => deployment.apply(&decision, prev)?,
            None => deployment.publish(mo.shares().expect("first fix publishes"))?,
        }
        ledger.record(decision.kind);
    }
    Ok(ledger)
}

/// One row of the reduction-versus-radius table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub r0: f64,
    pub fixes: usize,
    pub optimized: usize,
    pub total: u64,
    pub baseline: u64,
    pub reduction: f64,
    pub mo_ls_reduction: f64,
}

impl SweepRow {
    pub fn from_ledger(r0: f64, ledger: &MessageLedger) -> Self {
        SweepRow {
            r0,
            fixes: ledger.entries.len(),
            optimized: ledger.count(UpdateKind::Optimized),
            total: ledger.total(),
            baseline: ledger.baseline_total(),
            reduction: ledger.reduction(),
            mo_ls_reduction: ledger.mo_ls_reduction(),
        }
    }
}

/// Runs the update experiment once per radius, each from a fresh generator
/// seeded with `seed`.
pub fn run_r0_sweep(
    traj: &Trajectory,
    n: usize,
    radii: &[f64],
    costs: MessageCosts,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    radii
        .iter()
        .map(|&r0| {
            let ledger = run_update_experiment(traj, n, r0, costs, &mut seeded_rng(seed))?;
            Ok(SweepRow::from_ledger(r0, &ledger))
        })
        .collect()
}

/// Six decimals without a negative zero.
fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("r0,fixes,optimized,total,baseline,reduction,mo_ls_reduction\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.r0,
            r.fixes,
            r.optimized,
            r.total,
            r.baseline,
            fixed6(r.reduction),
            fixed6(r.mo_ls_reduction)
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub phi: f64,
    pub p_uniform: f64,
    pub p_optimized: f64,
}

impl ComparisonRow {
    pub fn delta(&self) -> f64 {
        self.p_optimized - self.p_uniform
    }
}

/// Uniform versus optimized placement on the same servers.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementComparison {
    pub uniform: Placement,
    pub optimized: Placement,
    pub uniform_objective: f64,
    pub optimized_objective: f64,
    pub uniform_curve: AttackCurve,
    pub optimized_curve: AttackCurve,
    /// Attack probabilities at every precision level reached by either
    /// curve, finest first.
    pub rows: Vec<ComparisonRow>,
    /// Index into `rows` of the uniform curve's most likely outcome.
    pub peak: usize,
}

impl PlacementComparison {
    pub fn peak_row(&self) -> ComparisonRow {
        self.rows[self.peak]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,p_uniform,p_optimized,delta,peak\n");
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.phi,
                fixed6(r.p_uniform),
                fixed6(r.p_optimized),
                fixed6(r.delta()),
                u8::from(i == self.peak)
            ));
        }
        out
    }
}

pub fn run_placement_experiment<R: Rng + ?Sized>(
    servers: &[TrustRecord],
    n: usize,
    req: &PrivacyRequirement,
    model: &PrecisionModel,
    rng: &mut R,
) -> Result<PlacementComparison> {
    if servers.is_empty() {
        return Err(Error::InvalidParameter("placement needs at least one server".into()));
    }
    if n < servers.len() {
        return Err(Error::NotEnoughShares { shares: n, servers: servers.len() });
    }
    let uniform = uniform_placement(n, servers);
    let optimized = place_optimized(n, servers, req, model, rng);
    let uniform_curve = attack_curve_dp(&uniform, model)?;
    let optimized_curve = attack_curve_dp(&optimized, model)?;

    let mut levels: Vec<f64> =
        uniform_curve.points.iter().chain(&optimized_curve.points).map(|p| p.phi).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    let rows: Vec<ComparisonRow> = levels
        .into_iter()
        .map(|phi| ComparisonRow {
            phi,
            p_uniform: uniform_curve.prob_within(phi),
            p_optimized: optimized_curve.prob_within(phi),
        })
        .collect();
    let peak_phi = uniform_curve.peak().expect("at least one server").phi;
    let peak = rows
        .iter()
        .position(|r| (r.phi - peak_phi).abs() <= 1e-9 * peak_phi.abs().max(1.0))
        .expect("peak level is listed");
    Ok(PlacementComparison {
        uniform_objective: objective(&uniform, model),
        optimized_objective: objective(&optimized, model),
        uniform,
        optimized,
        uniform_curve,
        optimized_curve,
        rows,
        peak,
    })
}

/// Empirical distribution of the attacker's precision over `trials`
/// independent compromise draws, in the layout of
/// [`precision_distribution`](crate::metrics::precision_distribution).
pub fn sample_precision_distribution<R: Rng + ?Sized>(
    placement: &Placement,
    model: &PrecisionModel,
    trials: usize,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let n = model.n();
    let counts = placement.counts();
    let risks = placement.risks();
    let mut hist = vec![0u64; n + 1];
    for _ in 0..trials {
        let shares: usize =
            risks.iter().zip(&counts).filter(|(&p, _)| rng.random::<f64>() < p).map(|(_, &c)| c).sum();
        hist[shares.min(n)] += 1;
    }
    hist.iter().enumerate().map(|(s, &h)| (model.precision(s), h as f64 / trials as f64)).collect()
}
