//! Deterministic replay of trajectories through a mobile object, in-memory
//! location servers and querying clients.

mod experiments;
mod servers;
mod trajectory;

pub use experiments::{
    run_placement_experiment, run_r0_sweep, run_update_experiment, run_update_experiment_with,
    sample_precision_distribution, sweep_csv, ComparisonRow, PlacementComparison, SweepRow,
};
pub use servers::{lba_query, Deployment, FusedRegion, LbaView, LocationServerState};
pub use trajectory::{
    geolife_files, load_trajectory, parse_trajectory, project, Fix, Trajectory, TrajectoryFormat,
    EARTH_RADIUS,
};
