use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("declination {0} is outside [-90, 90]")]
    DecOutOfRange(f64),

    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid zone height {0} deg: must be positive and at most 180")]
    InvalidZoneHeight(f64),

    #[error("invalid radius {radius} deg: {reason}")]
    InvalidRadius { radius: f64, reason: &'static str },

    #[error("invalid magnitude filter [{lo}, {hi}]: lower bound exceeds upper bound")]
    InvalidFilter { lo: f64, hi: f64 },

    #[error("invalid angle {0:?}: expected <number>deg, <number>arcmin or <number>arcsec")]
    InvalidAngle(String),

    #[error("invalid footprint {0:?}")]
    InvalidFootprint(String),

    #[error("worker count must be at least 1")]
    NoWorkers,

    #[error("zone configuration mismatch: {left} zones of {left_h} deg vs {right} zones of {right_h} deg")]
    ZoneConfigMismatch {
        left: u32,
        left_h: f64,
        right: u32,
        right_h: f64,
    },

    #[error("partition plan covers {plan} zones but the index has {index}")]
    PlanMismatch { plan: u32, index: u32 },

    #[error("unknown band {0:?}")]
    UnknownBand(String),

    #[error("duplicate object id {0}")]
    DuplicateId(u64),

    #[error("brute-force comparison of {left} x {right} objects exceeds the {limit} pair guard")]
    OracleTooLarge {
        left: usize,
        right: usize,
        limit: u64,
    },

    #[error("cannot aggregate an empty set of worker statistics")]
    EmptyStats,

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error(
        "{rejected} of {total} rows rejected (limit 1%); first: line {first_line}: {first_reason}"
    )]
    TooManyRejections {
        rejected: usize,
        total: usize,
        first_line: u64,
        first_reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("invalid index snapshot: {0}")]
    BadSnapshot(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
