//! Fans queries out over in-process workers according to a
//! [`PartitionPlan`], merges results canonically and records per-worker
//! statistics with MAX and AVG aggregate rows.
//!
//! Every worker reads only the leading zones it owns; the other catalog of
//! a cross-match is shared read-only by all of them.

use std::fmt::Write as _;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::ZoneIndex;
use crate::error::{Error, Result};
use crate::geometry::ZoneId;
use crate::partition::{PartitionPlan, Strategy};
use crate::query::{
    cone_search_zones, scan_filter, sort_pairs, zone_crossmatch, ConeHit, ConeQuery, MatchPair,
    MatchSpec, ScanFilter, ScanHit,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerStats {
    pub worker: u32,
    pub elapsed_s: f64,
    /// Thread CPU time, where the platform reports it.
    pub cpu_s: Option<f64>,
    pub rows_scanned: u64,
    pub rows_returned: u64,
    pub bytes_read: u64,
}

/// One aggregate row over workers (MAX or AVG).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub elapsed_s: f64,
    pub cpu_s: Option<f64>,
    pub rows_scanned: f64,
    pub rows_returned: f64,
    pub bytes_read: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub query: String,
    pub strategy: Strategy,
    pub worker_count: u32,
    pub workers: Vec<WorkerStats>,
    pub max: StatsRow,
    pub avg: StatsRow,
    /// Coordinator wall clock, including dispatch and merge.
    pub total_elapsed_s: f64,
}

/// Component-wise maximum and arithmetic mean of the worker rows. The CPU
/// column is only aggregated when every worker reported it.
pub fn aggregate(stats: &[WorkerStats]) -> Result<(StatsRow, StatsRow)> {
    if stats.is_empty() {
        return Err(Error::EmptyStats);
    }
    let n = stats.len() as f64;
    let cpu: Option<Vec<f64>> = stats.iter().map(|s| s.cpu_s).collect();
    let max_of = |f: fn(&WorkerStats) -> f64| stats.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let mean_of = |f: fn(&WorkerStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
    let max = StatsRow {
        elapsed_s: max_of(|s| s.elapsed_s),
        cpu_s: cpu
            .as_ref()
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        rows_scanned: max_of(|s| s.rows_scanned as f64),
        rows_returned: max_of(|s| s.rows_returned as f64),
        bytes_read: max_of(|s| s.bytes_read as f64),
    };
    let avg = StatsRow {
        elapsed_s: mean_of(|s| s.elapsed_s),
        cpu_s: cpu.as_ref().map(|c| c.iter().sum::<f64>() / n),
        rows_scanned: mean_of(|s| s.rows_scanned as f64),
        rows_returned: mean_of(|s| s.rows_returned as f64),
        bytes_read: mean_of(|s| s.bytes_read as f64),
    };
    Ok((max, avg))
}

impl ExecutionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Ratio of the slowest worker's elapsed time to the mean.
    pub fn elapsed_imbalance(&self) -> f64 {
        if self.avg.elapsed_s > 0.0 {
            self.max.elapsed_s / self.avg.elapsed_s
        } else {
            1.0
        }
    }

    /// Aligned text table: one row per worker, then MAX and AVG.
    pub fn to_table(&self) -> String {
        fn cpu(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_string(), |c| format!("{c:.3}"))
        }
        let mb = |b: f64| b / (1024.0 * 1024.0);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} | workers: {} | strategy: {}",
            self.query, self.worker_count, self.strategy
        );
        let _ = writeln!(
            out,
            "{:>8}  {:>12}  {:>10}  {:>14}  {:>14}  {:>10}",
            "Server", "Elapsed (s)", "CPU (s)", "Rows scanned", "Rows returned", "I/O (MB)"
        );
        for w in &self.workers {
            let _ = writeln!(
                out,
                "{:>8}  {:>12.4}  {:>10}  {:>14}  {:>14}  {:>10.2}",
                w.worker,
                w.elapsed_s,
                cpu(w.cpu_s),
                w.rows_scanned,
                w.rows_returned,
                mb(w.bytes_read as f64)
            );
        }
        for (label, row) in [("MAX", &self.max), ("AVG", &self.avg)] {
            let _ = writeln!(
                out,
                "{:>8}  {:>12.4}  {:>10}  {:>14.1}  {:>14.1}  {:>10.2}",
                label,
                row.elapsed_s,
                cpu(row.cpu_s),
                row.rows_scanned,
                row.rows_returned,
                mb(row.bytes_read)
            );
        }
        let _ = writeln!(out, "total elapsed (s): {:.4}", self.total_elapsed_s);
        out
    }
}

/// Per-thread CPU clock.
#[cfg(target_os = "linux")]
fn thread_cpu_seconds() -> Option<f64> {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    (rc == 0).then_some(ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9)
}

#[cfg(not(target_os = "linux"))]
fn thread_cpu_seconds() -> Option<f64> {
    None
}

#[derive(Default)]
struct Counters {
    rows_scanned: u64,
    rows_returned: u64,
    bytes_read: u64,
}

/// Runs `work` once per worker on its own thread, handing it the zones the
/// plan assigns to that worker.
fn fan_out<T, F>(query: &str, plan: &PartitionPlan, work: F) -> (Vec<T>, ExecutionReport)
where
    T: Send,
    F: Fn(u32, &[ZoneId]) -> (T, Counters) + Sync,
{
    let mut zones: Vec<Vec<ZoneId>> = vec![Vec::new(); plan.worker_count() as usize];
    for (z, &w) in plan.assignment().iter().enumerate() {
        zones[w as usize].push(ZoneId(z as u32));
    }

    let work = &work;
    let results: Vec<(T, WorkerStats)> = thread::scope(|scope| {
        let handles: Vec<_> = zones
            .iter()
            .enumerate()
            .map(|(w, owned)| {
                scope.spawn(move || {
                    let t0 = Instant::now();
                    let cpu0 = thread_cpu_seconds();
                    let (out, c) = work(w as u32, owned);
                    let cpu = cpu0
                        .zip(thread_cpu_seconds())
                        .map(|(a, b)| (b - a).max(0.0));
                    let stats = WorkerStats {
                        worker: w as u32,
                        elapsed_s: t0.elapsed().as_secs_f64(),
                        cpu_s: cpu,
                        rows_scanned: c.rows_scanned,
                        rows_returned: c.rows_returned,
                        bytes_read: c.bytes_read,
                    };
                    (out, stats)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });

    let (outputs, workers): (Vec<T>, Vec<WorkerStats>) = results.into_iter().unzip();
    let (max, avg) = aggregate(&workers).expect("plans have at least one worker");
    let report = ExecutionReport {
        query: query.to_string(),
        strategy: plan.strategy(),
        worker_count: plan.worker_count(),
        workers,
        max,
        avg,
        total_elapsed_s: 0.0,
    };
    (outputs, report)
}

fn check_plan(plan: &PartitionPlan, index: &ZoneIndex) -> Result<()> {
    if plan.zone_count() != index.cfg().zone_count() {
        return Err(Error::PlanMismatch {
            plan: plan.zone_count(),
            index: index.cfg().zone_count(),
        });
    }
    Ok(())
}

/// Parallel full-scan filter. Hits are returned ascending by id.
pub fn run_scan(
    index: &ZoneIndex,
    filter: &ScanFilter,
    plan: &PartitionPlan,
) -> Result<(Vec<ScanHit>, ExecutionReport)> {
    check_plan(plan, index)?;
    index.band_index(&filter.band)?;
    let started = Instant::now();
    let (outputs, mut report) = fan_out("scan", plan, |_, zones| {
        let slices = zones.iter().filter_map(|&z| index.slice(z));
        let out = scan_filter(index.bands(), slices, filter).expect("band checked before dispatch");
        let c = Counters {
            rows_scanned: out.rows_scanned,
            rows_returned: out.hits.len() as u64,
            bytes_read: out.bytes_read,
        };
        (out.hits, c)
    });
    let mut hits: Vec<ScanHit> = outputs.into_iter().flatten().collect();
    hits.sort_unstable_by_key(|h| h.id);
    report.total_elapsed_s = started.elapsed().as_secs_f64();
    Ok((hits, report))
}

/// Parallel cone search. Hits are returned ascending by id.
pub fn run_cone(
    index: &ZoneIndex,
    q: &ConeQuery,
    plan: &PartitionPlan,
) -> Result<(Vec<ConeHit>, ExecutionReport)> {
    check_plan(plan, index)?;
    let started = Instant::now();
    let per_object = 24 + 8 * index.bands().len() as u64;
    let (outputs, mut report) = fan_out("cone", plan, |w, _| {
        let out = cone_search_zones(index, q, |z| plan.worker_of(z) == w);
        let c = Counters {
            rows_scanned: out.rows_scanned,
            rows_returned: out.hits.len() as u64,
            bytes_read: out.rows_scanned * per_object,
        };
        (out.hits, c)
    });
    let mut hits: Vec<ConeHit> = outputs.into_iter().flatten().collect();
    hits.sort_unstable_by_key(|h| h.id);
    report.total_elapsed_s = started.elapsed().as_secs_f64();
    Ok((hits, report))
}

/// Parallel zone-join cross-match; the plan partitions the leading
/// catalog. Pairs are returned in canonical order.
pub fn run_xmatch(
    leading: &ZoneIndex,
    other: &ZoneIndex,
    spec: &MatchSpec,
    plan: &PartitionPlan,
) -> Result<(Vec<MatchPair>, ExecutionReport)> {
    check_plan(plan, leading)?;
    leading.cfg().check_same(other.cfg())?;
    let started = Instant::now();
    let per_other = 24 + 8 * other.bands().len() as u64;
    let (outputs, mut report) = fan_out("xmatch", plan, |_, zones| {
        let slices: Vec<_> = zones.iter().filter_map(|&z| leading.slice(z)).collect();
        let leading_bytes: u64 = slices.iter().map(|s| s.approx_bytes()).sum();
        let out = zone_crossmatch(leading.cfg(), slices, other, spec)
            .expect("configs checked before dispatch");
        let c = Counters {
            rows_scanned: out.rows_scanned,
            rows_returned: out.pairs.len() as u64,
            bytes_read: leading_bytes + out.candidates * per_other,
        };
        (out.pairs, c)
    });
    let mut pairs: Vec<MatchPair> = outputs.into_iter().flatten().collect();
    sort_pairs(&mut pairs);
    report.total_elapsed_s = started.elapsed().as_secs_f64();
    Ok((pairs, report))
}
