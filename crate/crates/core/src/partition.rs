//! Zone-to-worker assignment and workload skew reporting.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::ZoneHistogram;
use crate::error::{Error, Result};
use crate::geometry::ZoneId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Contiguous,
    RoundRobin,
    Density,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Contiguous,
        Strategy::RoundRobin,
        Strategy::Density,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Contiguous => "contiguous",
            Strategy::RoundRobin => "round-robin",
            Strategy::Density => "density",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "contiguous" => Ok(Strategy::Contiguous),
            "round-robin" | "round_robin" => Ok(Strategy::RoundRobin),
            "density" => Ok(Strategy::Density),
            other => Err(format!(
                "unknown strategy {other:?} (expected contiguous, round-robin or density)"
            )),
        }
    }
}

/// Total assignment of zones `0..zone_count` to workers `0..worker_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    worker_count: u32,
    strategy: Strategy,
    assignment: Vec<u32>,
}

impl PartitionPlan {
    pub fn worker_count(&self) -> u32 {
        self.worker_count
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn zone_count(&self) -> u32 {
        self.assignment.len() as u32
    }

    pub fn worker_of(&self, zone: ZoneId) -> u32 {
        self.assignment[zone.0 as usize]
    }

    /// Worker index for each zone, indexed by zone id.
    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Zones owned by `worker`, ascending.
    pub fn zones_of(&self, worker: u32) -> Vec<ZoneId> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &w)| w == worker)
            .map(|(z, _)| ZoneId(z as u32))
            .collect()
    }

    /// Run-length form: `(first_zone, end_zone_exclusive, worker)`.
    pub fn runs(&self) -> Vec<(u32, u32, u32)> {
        let mut runs: Vec<(u32, u32, u32)> = Vec::new();
        for (z, &w) in self.assignment.iter().enumerate() {
            match runs.last_mut() {
                Some(run) if run.2 == w => run.1 = z as u32 + 1,
                _ => runs.push((z as u32, z as u32 + 1, w)),
            }
        }
        runs
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PlanDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// JSON shape: contiguous plans are written as runs, the others as an
/// explicit per-zone map.
#[derive(Serialize, Deserialize)]
struct PlanDoc {
    strategy: Strategy,
    worker_count: u32,
    zone_count: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    runs: Option<Vec<RunDoc>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    assignment: Option<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct RunDoc {
    worker: u32,
    first_zone: u32,
    last_zone: u32,
}

impl From<&PartitionPlan> for PlanDoc {
    fn from(plan: &PartitionPlan) -> Self {
        let (runs, assignment) = if plan.strategy == Strategy::Contiguous {
            let runs = plan
                .runs()
                .into_iter()
                .map(|(first, end, worker)| RunDoc {
                    worker,
                    first_zone: first,
                    last_zone: end - 1,
                })
                .collect();
            (Some(runs), None)
        } else {
            (None, Some(plan.assignment.clone()))
        };
        PlanDoc {
            strategy: plan.strategy,
            worker_count: plan.worker_count,
            zone_count: plan.zone_count(),
            runs,
            assignment,
        }
    }
}

impl TryFrom<PlanDoc> for PartitionPlan {
    type Error = Error;

    fn try_from(doc: PlanDoc) -> Result<Self> {
        let bad = |msg: &str| Error::Json(serde::de::Error::custom(msg));
        if doc.worker_count == 0 {
            return Err(Error::NoWorkers);
        }
        let assignment = match (doc.runs, doc.assignment) {
            (Some(runs), None) => {
                let mut a = Vec::with_capacity(doc.zone_count as usize);
                for run in runs {
                    if run.first_zone as usize != a.len() || run.last_zone < run.first_zone {
                        return Err(bad("runs must tile the zone range in order"));
                    }
                    a.extend(std::iter::repeat_n(
                        run.worker,
                        (run.last_zone - run.first_zone + 1) as usize,
                    ));
                }
                a
            }
            (None, Some(a)) => a,
            _ => return Err(bad("plan needs exactly one of `runs` or `assignment`")),
        };
        if assignment.len() != doc.zone_count as usize {
            return Err(bad("plan does not cover every zone"));
        }
        if assignment.iter().any(|&w| w >= doc.worker_count) {
            return Err(bad("worker index out of range"));
        }
        Ok(PartitionPlan {
            worker_count: doc.worker_count,
            strategy: doc.strategy,
            assignment,
        })
    }
}

fn check_workers(worker_count: u32) -> Result<()> {
    if worker_count < 1 {
        Err(Error::NoWorkers)
    } else {
        Ok(())
    }
}

/// Splits the zones into `worker_count` contiguous runs whose sizes differ
/// by at most one; the leading workers take the extra zones.
pub fn plan_contiguous(zone_count: u32, worker_count: u32) -> Result<PartitionPlan> {
    check_workers(worker_count)?;
    let base = zone_count / worker_count;
    let extra = zone_count % worker_count;
    let mut assignment = Vec::with_capacity(zone_count as usize);
    for w in 0..worker_count {
        let size = base + u32::from(w < extra);
        assignment.extend(std::iter::repeat_n(w, size as usize));
    }
    Ok(PartitionPlan {
        worker_count,
        strategy: Strategy::Contiguous,
        assignment,
    })
}

pub fn plan_round_robin(zone_count: u32, worker_count: u32) -> Result<PartitionPlan> {
    check_workers(worker_count)?;
    Ok(PartitionPlan {
        worker_count,
        strategy: Strategy::RoundRobin,
        assignment: (0..zone_count).map(|z| z % worker_count).collect(),
    })
}

/// Longest-processing-time greedy: zones by descending count (lower zone id
/// first on ties), each to the currently lightest worker (lower index first
/// on ties).
pub fn plan_density(hist: &ZoneHistogram, worker_count: u32) -> Result<PartitionPlan> {
    check_workers(worker_count)?;
    let mut order: Vec<(u64, u32)> = hist
        .counts()
        .iter()
        .enumerate()
        .map(|(z, &c)| (c, z as u32))
        .collect();
    order.sort_by_key(|&(c, z)| (Reverse(c), z));

    let mut heap: BinaryHeap<Reverse<(u64, u32)>> =
        (0..worker_count).map(|w| Reverse((0, w))).collect();
    let mut assignment = vec![0u32; order.len()];
    for (count, zone) in order {
        let Reverse((load, worker)) = heap.pop().expect("at least one worker");
        assignment[zone as usize] = worker;
        heap.push(Reverse((load + count, worker)));
    }
    Ok(PartitionPlan {
        worker_count,
        strategy: Strategy::Density,
        assignment,
    })
}

/// Builds a plan of the given strategy; `hist` supplies zone count and, for
/// the density strategy, the weights.
pub fn plan(strategy: Strategy, hist: &ZoneHistogram, worker_count: u32) -> Result<PartitionPlan> {
    match strategy {
        Strategy::Contiguous => plan_contiguous(hist.zone_count(), worker_count),
        Strategy::RoundRobin => plan_round_robin(hist.zone_count(), worker_count),
        Strategy::Density => plan_density(hist, worker_count),
    }
}

/// Per-worker object counts under a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadReport {
    pub strategy: Strategy,
    pub counts: Vec<u64>,
    pub max_count: u64,
    pub avg_count: f64,
    /// `max_count / avg_count`, or 1 when the catalog is empty.
    pub imbalance: f64,
}

pub fn report(plan: &PartitionPlan, hist: &ZoneHistogram) -> Result<WorkloadReport> {
    if plan.zone_count() != hist.zone_count() {
        return Err(Error::PlanMismatch {
            plan: plan.zone_count(),
            index: hist.zone_count(),
        });
    }
    let mut counts = vec![0u64; plan.worker_count as usize];
    for (z, &c) in hist.counts().iter().enumerate() {
        counts[plan.assignment[z] as usize] += c;
    }
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let avg_count = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    let imbalance = if avg_count == 0.0 {
        1.0
    } else {
        max_count as f64 / avg_count
    };
    Ok(WorkloadReport {
        strategy: plan.strategy,
        counts,
        max_count,
        avg_count,
        imbalance,
    })
}

impl WorkloadReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text table, one row per worker plus MAX and AVG.
    pub fn to_table(&self) -> String {
        let mut out = format!("strategy: {}\n", self.strategy);
        out.push_str(&format!("{:>8}  {:>14}\n", "Worker", "Objects"));
        for (w, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{w:>8}  {c:>14}\n"));
        }
        out.push_str(&format!("{:>8}  {:>14}\n", "MAX", self.max_count));
        out.push_str(&format!("{:>8}  {:>14.1}\n", "AVG", self.avg_count));
        out.push_str(&format!("imbalance: {:.3}\n", self.imbalance));
        out
    }
}
