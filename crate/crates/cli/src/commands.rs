use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use serde::{Deserialize, Serialize};

use possharing::csps::{fuse_csps, generate_csps};
use possharing::metrics::{
    load_trust_csv, PrecisionModel, PrivacyRequirement, RequirementLevel, TrustRecord,
};
use possharing::osps::{fuse_osps, generate_osps};
use possharing::placement::select_and_place;
use possharing::sim::{
    geolife_files, load_trajectory, run_placement_experiment, run_update_experiment_with, sweep_csv,
    SweepRow, Trajectory, TrajectoryFormat,
};
use possharing::update::{MessageCosts, MessageLedger, SpeedGuard, UpdateKind};
use possharing::{seeded_rng, Error, MapGrid, Mode, Point, ShareSet};

use crate::{
    Command, CompareArgs, CostArgs, FuseArgs, GenerateArgs, ModelArgs, PlaceArgs, ReportArgs, SimulateArgs,
    SweepArgs, TrajectoryArgs,
};

/// A failed run: exit code plus the one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    kind: &'static str,
    msg: String,
}

impl Failure {
    fn new(code: u8, kind: &'static str, msg: impl Into<String>) -> Self {
        Failure { code, kind, msg: msg.into() }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("{}", error_line(self.code, self.kind, &self.msg));
        ExitCode::from(self.code)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidParameter(_) | Error::TooManyShares { .. } => (1, "invalid-parameter"),
            Error::Io(_) => (1, "io"),
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) | Error::MissingRadius(_) => {
                (2, "bad-input")
            }
            Error::InfeasibleMap(_)
            | Error::EmptyCircleList
            | Error::NotEnoughShares { .. }
            | Error::TooManyServers { .. }
            | Error::InstanceTooLarge { .. }
            | Error::MasterUnavailable
            | Error::EmptyTrajectory => (2, "infeasible"),
        };
        Failure::new(code, kind, e.to_string())
    }
}

fn error_line(code: u8, kind: &str, msg: &str) -> String {
    let msg = serde_json::to_string(msg).expect("strings serialize");
    format!("error: code={code} kind={kind} msg={msg}")
}

/// Help and version go to stdout with status 0; anything else is a usage
/// error reported on one line, followed by clap's usage hint.
pub fn usage_failure(e: clap::Error) -> ExitCode {
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        let _ = e.print();
        return ExitCode::SUCCESS;
    }
    let rendered = e.render().to_string();
    let mut lines = rendered.lines();
    let first = lines.next().unwrap_or_default();
    eprintln!("{}", error_line(1, "usage", first.trim_start_matches("error: ").trim()));
    for line in lines {
        eprintln!("{line}");
    }
    ExitCode::from(1)
}

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Generate(a) => generate(a),
        Command::Fuse(a) => fuse(a),
        Command::Place(a) => place(a),
        Command::Simulate(a) => simulate(a),
        Command::Report(a) => report(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
    }
}

/// Appends `"seed"` as the last field of a compact JSON object.
fn json_with_seed(body: &str, seed: u64) -> String {
    let body = body.strip_suffix('}').expect("a JSON object");
    let sep = if body.ends_with('{') { "" } else { "," };
    format!("{body}{sep}\"seed\":{seed}}}\n")
}

fn csv_with_seed(body: &str, seed: u64) -> String {
    format!("# seed={seed}\n{body}")
}

fn write(path: &Path, contents: &str) -> Outcome {
    std::fs::write(path, contents)
        .map_err(|e| Failure::new(1, "io", format!("cannot write {}: {e}", path.display())))
}

fn in_file(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let f = Failure::from(e);
        Failure { msg: format!("{}: {}", path.display(), f.msg), ..f }
    }
}

fn generate(a: GenerateArgs) -> Outcome {
    let mut rng = seeded_rng(a.seed.seed);
    let pi = Point::new(a.x, a.y);
    let set = match &a.map {
        Some(path) => {
            let grid = MapGrid::load(path).map_err(in_file(path))?;
            generate_csps(a.n, &grid, a.r0, pi, &mut rng)?
        }
        None => generate_osps(pi, a.n, a.r0, &mut rng)?,
    };
    write(&a.out, &json_with_seed(&set.to_json(), a.seed.seed))
}

#[derive(Serialize)]
struct CircleDoc {
    x: f64,
    y: f64,
    r: f64,
}

#[derive(Serialize)]
struct OpenFusionDoc {
    mode: Mode,
    k: usize,
    x: f64,
    y: f64,
    r: f64,
}

#[derive(Serialize)]
struct ConstrainedFusionDoc {
    mode: Mode,
    k: usize,
    circles: Vec<CircleDoc>,
    area: f64,
}

fn fuse(a: FuseArgs) -> Outcome {
    let text = std::fs::read_to_string(&a.shares)
        .map_err(|e| Failure::new(1, "io", format!("{}: {e}", a.shares.display())))?;
    let set = ShareSet::from_json(&text).map_err(in_file(&a.shares))?;
    let recorded = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("seed").and_then(serde_json::Value::as_u64));
    let seed = a.seed.or(recorded).unwrap_or(possharing::DEFAULT_SEED);
    let k = a.k.unwrap_or(set.n());
    if k > set.n() {
        return Err(Error::TooManyShares { k, n: set.n() }.into());
    }
    let shares = &set.refinements[..k];
    let body = match set.mode {
        Mode::Osps => {
            let c = fuse_osps(set.n(), &set.master, shares)?;
            serde_json::to_string(&OpenFusionDoc {
                mode: set.mode,
                k,
                x: c.center.x,
                y: c.center.y,
                r: c.radius,
            })
        }
        Mode::Csps => {
            let path = a
                .map
                .as_ref()
                .ok_or_else(|| Failure::new(1, "usage", "constrained-space shares need --map"))?;
            let grid = MapGrid::load(path).map_err(in_file(path))?;
            let fused = fuse_csps(&grid, set.n(), set.master.circle, shares)?;
            serde_json::to_string(&ConstrainedFusionDoc {
                mode: set.mode,
                k,
                circles: fused
                    .circles
                    .iter()
                    .map(|c| CircleDoc { x: c.center.x, y: c.center.y, r: c.radius })
                    .collect(),
                area: fused.area,
            })
        }
    }
    .expect("fusion result serializes");
    write(&a.out, &json_with_seed(&body, seed))
}

fn model(args: &ModelArgs, n: usize) -> Result<PrecisionModel, Failure> {
    if let Some(path) = &args.model_shares {
        let set = ShareSet::load(path).map_err(in_file(path))?;
        if set.n() != n {
            return Err(Failure::new(
                1,
                "invalid-parameter",
                format!("{} holds {} shares but -n is {n}", path.display(), set.n()),
            ));
        }
        return Ok(PrecisionModel::for_share_set(&set));
    }
    match (args.r0, args.delta_phi) {
        (Some(r0), _) if r0 > 0.0 => Ok(PrecisionModel::homogeneous(r0, n)),
        (None, gain) if gain.unwrap_or(1.0) > 0.0 => Ok(PrecisionModel::uniform_gain(gain.unwrap_or(1.0), n)),
        _ => Err(Failure::new(1, "invalid-parameter", "precision model needs a positive scale")),
    }
}

fn trust(path: &Path) -> Result<Vec<TrustRecord>, Failure> {
    load_trust_csv(path).map_err(in_file(path))
}

#[derive(Serialize, Deserialize)]
struct CurveDoc {
    phi: f64,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct PlacementDoc {
    servers: Vec<String>,
    assignment: Vec<usize>,
    objective: f64,
    satisfied: bool,
    curve: Vec<CurveDoc>,
}

fn place(a: PlaceArgs) -> Outcome {
    let servers = trust(&a.trust)?;
    let req = PrivacyRequirement::load(&a.requirement).map_err(in_file(&a.requirement))?;
    let model = model(&a.model, a.n)?;
    let outcome = select_and_place(&req, a.n, &servers, a.m_min, &model, &mut seeded_rng(a.seed.seed))?;
    let doc = PlacementDoc {
        servers: outcome.placement.servers.iter().map(|s| s.server_id.clone()).collect(),
        assignment: outcome.placement.assignment.clone(),
        objective: outcome.objective,
        satisfied: outcome.satisfied,
        curve: outcome.curve.points.iter().map(|p| CurveDoc { phi: p.phi, p: p.p }).collect(),
    };
    let body = serde_json::to_string(&doc).expect("placement serializes");
    write(&a.out, &json_with_seed(&body, a.seed.seed))?;
    if !outcome.satisfied {
        return Err(Failure::new(
            2,
            "unsatisfiable",
            format!("no placement on up to {} servers meets the requirement", servers.len()),
        ));
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Outcome {
    let servers = trust(&a.trust)?;
    let req = match &a.requirement {
        Some(path) => PrivacyRequirement::load(path).map_err(in_file(path))?,
        // Unreachable target: the optimizer runs every generation.
        None => PrivacyRequirement::new(vec![RequirementLevel { phi: f64::MAX, p: 0.0 }])?,
    };
    let model = model(&a.model, a.n)?;
    let cmp = run_placement_experiment(&servers, a.n, &req, &model, &mut seeded_rng(a.seed.seed))?;
    write(&a.out, &csv_with_seed(&cmp.to_csv(), a.seed.seed))
}

fn trips(input: &TrajectoryArgs) -> Result<Vec<Trajectory>, Failure> {
    let files: Vec<PathBuf> = match (&input.trajectory, &input.geolife_dir) {
        (Some(path), _) => vec![path.clone()],
        (None, Some(dir)) => {
            let files = geolife_files(dir).map_err(in_file(dir))?;
            if files.is_empty() {
                return Err(Failure::new(2, "infeasible", format!("{}: no .plt files", dir.display())));
            }
            files
        }
        (None, None) => return Err(Failure::new(1, "usage", "give --trajectory or --geolife-dir")),
    };
    files
        .iter()
        .map(|path| {
            let format = match input.format.as_deref() {
                Some(f) => f.parse()?,
                None => TrajectoryFormat::from_path(path),
            };
            load_trajectory(path, format).map_err(in_file(path))
        })
        .collect()
}

fn costs(c: &CostArgs) -> MessageCosts {
    MessageCosts { basic: c.basic_cost, optimized: c.optimized_cost }
}

/// One ledger over every trip, all drawing from a single generator.
fn replay(
    trips: &[Trajectory],
    n: usize,
    r0: f64,
    costs: MessageCosts,
    guard: Option<SpeedGuard>,
    seed: u64,
) -> Result<MessageLedger, Failure> {
    let mut rng = seeded_rng(seed);
    let mut ledger = MessageLedger::new(n, costs);
    for trip in trips {
        ledger.append(&run_update_experiment_with(trip, n, r0, costs, guard, &mut rng)?);
    }
    Ok(ledger)
}

fn simulate(a: SimulateArgs) -> Outcome {
    let trips = trips(&a.input)?;
    let guard = match a.max_speed {
        Some(v) if v > 0.0 => Some(SpeedGuard { max_speed: v }),
        Some(_) => return Err(Failure::new(1, "invalid-parameter", "--max-speed must be positive")),
        None => None,
    };
    let ledger = replay(&trips, a.n, a.r0, costs(&a.costs), guard, a.seed.seed)?;
    write(&a.out, &csv_with_seed(&ledger.to_csv(), a.seed.seed))?;
    println!(
        "fixes={} optimized={} total={} baseline={} reduction={:.4}",
        ledger.entries.len(),
        ledger.count(UpdateKind::Optimized),
        ledger.total(),
        ledger.baseline_total(),
        ledger.reduction()
    );
    Ok(())
}

fn sweep(a: SweepArgs) -> Outcome {
    let trips = trips(&a.input)?;
    let rows =
        a.r0.iter()
            .map(|&r0| {
                Ok(SweepRow::from_ledger(r0, &replay(&trips, a.n, r0, costs(&a.costs), None, a.seed.seed)?))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
    write(&a.out, &csv_with_seed(&sweep_csv(&rows), a.seed.seed))
}

fn report(a: ReportArgs) -> Outcome {
    if a.ledger.is_empty() && a.placement.is_empty() {
        return Err(Failure::new(1, "usage", "give at least one --ledger or --placement"));
    }
    let mut out = String::from("source,kind,metric,value\n");
    let mut row = |source: &Path, kind: &str, metric: &str, value: String| {
        let _ = writeln!(out, "{},{kind},{metric},{value}", source.display());
    };
    for path in &a.ledger {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(1, "io", format!("{}: {e}", path.display())))?;
        let entries = MessageLedger::entries_from_csv(&text).map_err(in_file(path))?;
        // Shares per user: the message count of a full regeneration.
        let n = entries
            .iter()
            .filter(|e| e.kind == UpdateKind::Basic)
            .map(|e| e.mo_ls as usize)
            .max()
            .unwrap_or(1);
        let ledger = MessageLedger {
            n,
            costs: MessageCosts { basic: a.basic_cost, ..MessageCosts::default() },
            entries,
        };
        row(path, "ledger", "fixes", ledger.entries.len().to_string());
        for kind in [UpdateKind::Basic, UpdateKind::Optimized, UpdateKind::Suppressed] {
            row(path, "ledger", &kind.to_string(), ledger.count(kind).to_string());
        }
        row(path, "ledger", "total", ledger.total().to_string());
        row(path, "ledger", "baseline", ledger.baseline_total().to_string());
        row(path, "ledger", "reduction", format!("{:.6}", ledger.reduction()));
        row(path, "ledger", "mo_ls_total", ledger.mo_ls_total().to_string());
        row(path, "ledger", "mo_ls_baseline", ledger.mo_ls_baseline().to_string());
        row(path, "ledger", "mo_ls_reduction", format!("{:.6}", ledger.mo_ls_reduction()));
    }
    for path in &a.placement {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(1, "io", format!("{}: {e}", path.display())))?;
        let doc: PlacementDoc = serde_json::from_str(&text).map_err(|e| in_file(path)(e.into()))?;
        row(path, "placement", "servers", doc.servers.len().to_string());
        row(path, "placement", "shares", doc.assignment.len().to_string());
        row(path, "placement", "objective", doc.objective.to_string());
        row(path, "placement", "satisfied", u8::from(doc.satisfied).to_string());
        for pt in &doc.curve {
            row(path, "placement", &format!("p_within_{}", pt.phi), format!("{:.6}", pt.p));
        }
    }
    write(&a.out, &csv_with_seed(&out, a.seed.seed))
}
