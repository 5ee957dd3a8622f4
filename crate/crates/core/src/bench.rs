//! Cross-match scaling benchmark: repeated runs per worker count, median
//! elapsed time and speedup relative to the single-worker run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::catalog::ZoneIndex;
use crate::error::{Error, Result};
use crate::executor::run_xmatch;
use crate::partition::{plan, Strategy};
use crate::query::MatchSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub workers: u32,
    pub elapsed_s: Vec<f64>,
    pub median_s: f64,
    /// Baseline median over this run's median.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Match radius in degrees.
    pub radius: f64,
    pub worker_counts: Vec<u32>,
    pub runs: Vec<BenchRun>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Times `run_xmatch` `repeat` times for each worker count. The speedup
/// baseline is the single-worker run when present, else the first entry.
pub fn bench_xmatch(
    leading: &ZoneIndex,
    other: &ZoneIndex,
    spec: &MatchSpec,
    strategy: Strategy,
    worker_counts: &[u32],
    repeat: usize,
) -> Result<BenchReport> {
    if worker_counts.is_empty() || worker_counts.contains(&0) {
        return Err(Error::NoWorkers);
    }
    let hist = leading.histogram();
    let mut timed = Vec::with_capacity(worker_counts.len());
    for &w in worker_counts {
        let p = plan(strategy, &hist, w)?;
        let mut elapsed = Vec::with_capacity(repeat.max(1));
        for _ in 0..repeat.max(1) {
            let (_, report) = run_xmatch(leading, other, spec, &p)?;
            elapsed.push(report.total_elapsed_s);
        }
        timed.push((w, elapsed));
    }
    Ok(BenchReport::from_timings(spec.radius, timed))
}

impl BenchReport {
    pub fn from_timings(radius: f64, timed: Vec<(u32, Vec<f64>)>) -> Self {
        let medians: Vec<f64> = timed.iter().map(|(_, e)| median(e)).collect();
        let base = timed
            .iter()
            .position(|(w, _)| *w == 1)
            .map_or(medians[0], |i| medians[i]);
        let runs = timed
            .into_iter()
            .zip(&medians)
            .map(|((workers, elapsed_s), &median_s)| BenchRun {
                workers,
                elapsed_s,
                median_s,
                speedup: base / median_s,
            })
            .collect::<Vec<_>>();
        BenchReport {
            radius,
            worker_counts: runs.iter().map(|r| r.workers).collect(),
            runs,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:>8}  {:>12}  {:>8}\n", "Workers", "Median (s)", "Speedup");
        for r in &self.runs {
            out.push_str(&format!(
                "{:>8}  {:>12.4}  {:>8.2}\n",
                r.workers, r.median_s, r.speedup
            ));
        }
        out
    }

    /// Plot-ready `worker_count,elapsed,speedup` rows.
    pub fn write_plot_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["worker_count", "elapsed", "speedup"])?;
        for r in &self.runs {
            w.write_record([
                r.workers.to_string(),
                r.median_s.to_string(),
                r.speedup.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<plot csv>", e))
    }
}
