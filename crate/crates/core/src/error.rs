use thiserror::Error;

/// Errors raised anywhere in the position sharing library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("intersection of an empty circle list")]
    EmptyCircleList,

    #[error("fusing {k} refinement shares but the share set only has {n}")]
    TooManyShares { k: usize, n: usize },

    #[error("refinement share {0} carries no radius (constrained-space fusion needs one)")]
    MissingRadius(usize),

    #[error("infeasible map: {0}")]
    InfeasibleMap(String),

    #[error("{servers} servers exceed the subset enumeration bound of {limit}")]
    TooManyServers { servers: usize, limit: usize },

    #[error("exhaustive search over {combinations} placements exceeds the limit of {limit}")]
    InstanceTooLarge { combinations: f64, limit: f64 },

    #[error("{shares} shares cannot cover {servers} selected servers")]
    NotEnoughShares { shares: usize, servers: usize },

    #[error("master share unavailable: no accessible location server")]
    MasterUnavailable,

    #[error("trajectory has no fixes")]
    EmptyTrajectory,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
