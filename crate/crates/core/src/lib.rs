//! Zone-partitioned spatial queries over point catalogs on the celestial
//! sphere.
//!
//! Objects are bucketed into declination zones of fixed height and sorted by
//! right ascension inside each zone. Cone searches and radius cross-matches
//! then touch only the zones within reach of the query and, inside each
//! zone, only a binary-searched RA window; an exact great-circle distance
//! check decides membership. Zones are the unit of work distribution: a
//! [`partition::PartitionPlan`] hands each worker a set of zones and the
//! [`executor`] runs them concurrently, merging results into a canonical
//! order that does not depend on the worker count.

pub mod bench;
pub mod catalog;
pub mod error;
pub mod executor;
pub mod geometry;
pub mod output;
pub mod partition;
pub mod query;
pub mod synth;
pub mod units;

pub use catalog::{CatalogObject, Ingested, Rejection, ZoneHistogram, ZoneIndex, ZoneSlice};
pub use error::{Error, Result};
pub use executor::{
    aggregate, run_cone, run_scan, run_xmatch, ExecutionReport, StatsRow, WorkerStats,
};
pub use geometry::{
    angular_separation, ra_halfwidth, ra_window, RaWindow, SkyPoint, ZoneConfig, ZoneId, ZoneRange,
};
pub use partition::{
    plan, plan_contiguous, plan_density, plan_round_robin, report, PartitionPlan, Strategy,
    WorkloadReport,
};
pub use query::{
    brute_force_crossmatch, cone_search, scan_filter, zone_crossmatch, ConeHit, ConeQuery,
    MatchPair, MatchSpec, ScanFilter, ScanHit,
};
