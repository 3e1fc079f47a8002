//! `possharing`: generate, fuse and place position shares, and replay
//! trajectories through the update protocol.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when the input is
//! infeasible. Failures print a single line to stderr:
//!
//! ```text
//! error: code=2 kind=infeasible msg="..."
//! ```

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use possharing::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "possharing", version, about = "Position sharing over non-trusted location servers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a position into a master share and n refinement shares.
    Generate(GenerateArgs),
    /// Fuse the master share with the first k refinement shares.
    Fuse(FuseArgs),
    /// Place shares on location servers according to their trust.
    Place(PlaceArgs),
    /// Replay a trajectory through the update protocol and write its message ledger.
    Simulate(SimulateArgs),
    /// Summarize ledgers and placements as a long-format CSV.
    Report(ReportArgs),
    /// Compare uniform and optimized placements attack probability per precision level.
    Compare(CompareArgs),
    /// Message reduction of one trajectory across master radii.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Random seed, echoed into the output.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Easting of the precise position (meters).
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    /// Northing of the precise position (meters).
    #[arg(long, allow_hyphen_values = true)]
    y: f64,
    /// Number of refinement shares.
    #[arg(short)]
    n: usize,
    /// Master share radius (meters).
    #[arg(long)]
    r0: f64,
    /// Feasibility map; switches to constrained-space shares.
    #[arg(long)]
    map: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FuseArgs {
    /// Share set JSON.
    #[arg(long)]
    shares: PathBuf,
    /// Refinement shares to fuse [default: all].
    #[arg(short)]
    k: Option<usize>,
    /// Feasibility map the constrained-space shares were built on.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Seed to echo [default: the share set's seed].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Shares of a share set: precision model follows its radii.
    #[arg(long, conflicts_with_all = ["r0", "delta_phi"])]
    model_shares: Option<PathBuf>,
    /// Open-space master radius: every share is worth r0 / n.
    #[arg(long, conflicts_with = "delta_phi")]
    r0: Option<f64>,
    /// Precision gain of every share [default: 1].
    #[arg(long)]
    delta_phi: Option<f64>,
}

#[derive(Debug, Args)]
struct PlaceArgs {
    /// Trust CSV with header `server_id,risk`.
    #[arg(long)]
    trust: PathBuf,
    /// Requirement JSON `{"levels":[{"phi":..,"p":..}]}`.
    #[arg(long)]
    requirement: PathBuf,
    /// Number of refinement shares.
    #[arg(short)]
    n: usize,
    /// Smallest number of servers to try.
    #[arg(long, default_value_t = 1)]
    m_min: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Trust CSV with header `server_id,risk`.
    #[arg(long)]
    trust: PathBuf,
    /// Requirement JSON; the optimizer stops early once it holds [default: none].
    #[arg(long)]
    requirement: Option<PathBuf>,
    /// Number of refinement shares.
    #[arg(short)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    /// Trajectory file: `t,lat,lon` CSV or GeoLife `.plt`.
    #[arg(long, required_unless_present = "geolife_dir", conflicts_with = "geolife_dir")]
    trajectory: Option<PathBuf>,
    /// Format of --trajectory [default: from the extension].
    #[arg(long, value_parser = ["csv", "plt"])]
    format: Option<String>,
    /// GeoLife directory; every `.plt` trip below it is replayed in path order.
    #[arg(long)]
    geolife_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// Messages charged per full regeneration.
    #[arg(long, default_value_t = 20)]
    basic_cost: u64,
    /// Messages charged per master-only update.
    #[arg(long, default_value_t = 6)]
    optimized_cost: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: TrajectoryArgs,
    /// Number of refinement shares.
    #[arg(short)]
    n: usize,
    /// Master share radius (meters).
    #[arg(long)]
    r0: f64,
    #[command(flatten)]
    costs: CostArgs,
    /// Drop updates faster than twice the travel time at this speed (m/s).
    #[arg(long)]
    max_speed: Option<f64>,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    input: TrajectoryArgs,
    /// Number of refinement shares.
    #[arg(short)]
    n: usize,
    /// Master radii to try, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    r0: Vec<f64>,
    #[command(flatten)]
    costs: CostArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Ledger CSV written by `simulate` (repeatable).
    #[arg(long)]
    ledger: Vec<PathBuf>,
    /// Placement JSON written by `place` (repeatable).
    #[arg(long)]
    placement: Vec<PathBuf>,
    /// Cost of a full regeneration, for the ledger baseline.
    #[arg(long, default_value_t = 20)]
    basic_cost: u64,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return commands::usage_failure(e),
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
