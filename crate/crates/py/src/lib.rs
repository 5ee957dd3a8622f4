//! Python bindings: catalogs, zone arithmetic, cone search, partition plans
//! and parallel cross-match.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use zonematch::catalog::{ingest_csv, CatalogObject};
use zonematch::query::best_matches;
use zonematch::synth::SyntheticSpec;
use zonematch::units;
use zonematch::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for zonematch::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn strategy(name: &str) -> PyResult<zonematch::Strategy> {
    name.parse().map_err(|e: String| PyValueError::new_err(e))
}

/// A position on the sky in degrees.
#[pyclass(frozen, skip_from_py_object, module = "zonematch")]
#[derive(Clone, Copy)]
struct SkyPoint(zonematch::SkyPoint);

#[pymethods]
impl SkyPoint {
    #[new]
    fn new(ra: f64, dec: f64) -> PyResult<Self> {
        Ok(SkyPoint(zonematch::SkyPoint::new(ra, dec).or_py()?))
    }

    #[getter]
    fn ra(&self) -> f64 {
        self.0.ra()
    }

    #[getter]
    fn dec(&self) -> f64 {
        self.0.dec()
    }

    /// Great-circle distance to `other` in degrees.
    fn separation(&self, other: &SkyPoint) -> f64 {
        zonematch::angular_separation(&self.0, &other.0)
    }

    fn __repr__(&self) -> String {
        format!("SkyPoint(ra={}, dec={})", self.0.ra(), self.0.dec())
    }
}

/// Great-circle distance between two points, degrees.
#[pyfunction]
fn angular_separation(p: &SkyPoint, q: &SkyPoint) -> f64 {
    zonematch::angular_separation(&p.0, &q.0)
}

/// Converts `"<x>deg"`, `"<x>arcmin"` or `"<x>arcsec"` to degrees.
#[pyfunction]
fn parse_angle(text: &str) -> PyResult<f64> {
    units::parse_angle(text).or_py()
}

/// Zone id of a declination for the given zone height.
#[pyfunction]
#[pyo3(signature = (dec, zone_height = "4arcmin"))]
fn zone_of(dec: f64, zone_height: &str) -> PyResult<u32> {
    let cfg = zonematch::ZoneConfig::new(units::parse_angle(zone_height).or_py()?).or_py()?;
    Ok(cfg.zone_of(dec).or_py()?.0)
}

/// RA half-width in degrees of the search window for radius `r` at `dec`.
#[pyfunction]
fn ra_halfwidth(radius: f64, dec: f64) -> f64 {
    zonematch::ra_halfwidth(radius, dec)
}

/// Writes a seeded synthetic catalog CSV.
#[pyfunction]
#[pyo3(signature = (path, count, footprint = "full-sky", seed = 0, first_id = 0))]
fn generate(path: PathBuf, count: u64, footprint: &str, seed: u64, first_id: u64) -> PyResult<()> {
    let spec = SyntheticSpec {
        first_id,
        ..SyntheticSpec::new(count, footprint.parse().or_py()?, seed)
    };
    spec.write_csv_file(&path).or_py()
}

/// An in-memory zone index over one catalog.
#[pyclass(frozen, module = "zonematch")]
struct ZoneIndex(zonematch::ZoneIndex);

#[pymethods]
impl ZoneIndex {
    /// Ingests a CSV with header `id,ra,dec,<bands...>`. Returns the index
    /// and the rejected rows as `"line n: reason"` strings.
    #[staticmethod]
    #[pyo3(signature = (path, zone_height = "4arcmin"))]
    fn from_csv(path: PathBuf, zone_height: &str) -> PyResult<(ZoneIndex, Vec<String>)> {
        let cfg = zonematch::ZoneConfig::new(units::parse_angle(zone_height).or_py()?).or_py()?;
        let ingested = ingest_csv(&path, None, cfg).or_py()?;
        let rejected = ingested
            .rejections
            .iter()
            .map(ToString::to_string)
            .collect();
        Ok((ZoneIndex(ingested.index), rejected))
    }

    /// Builds an index from parallel sequences of ids and coordinates.
    #[staticmethod]
    #[pyo3(signature = (name, ids, ra, dec, zone_height = "4arcmin"))]
    fn from_points(
        name: &str,
        ids: Vec<u64>,
        ra: Vec<f64>,
        dec: Vec<f64>,
        zone_height: &str,
    ) -> PyResult<Self> {
        if ids.len() != ra.len() || ids.len() != dec.len() {
            return Err(PyValueError::new_err(
                "ids, ra and dec must have equal length",
            ));
        }
        let cfg = zonematch::ZoneConfig::new(units::parse_angle(zone_height).or_py()?).or_py()?;
        let objects = ids
            .iter()
            .zip(ra.iter().zip(&dec))
            .map(|(&id, (&r, &d))| {
                Ok(CatalogObject::new(
                    id,
                    zonematch::SkyPoint::new(r, d)?,
                    vec![],
                ))
            })
            .collect::<zonematch::Result<Vec<_>>>()
            .or_py()?;
        Ok(ZoneIndex(
            zonematch::ZoneIndex::build(name, vec![], cfg, objects).or_py()?,
        ))
    }

    /// Reads a binary snapshot written by `save`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(ZoneIndex(
            zonematch::ZoneIndex::read_snapshot(&path).or_py()?,
        ))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.write_snapshot(&path).or_py()
    }

    #[getter]
    fn name(&self) -> &str {
        self.0.name()
    }

    #[getter]
    fn bands(&self) -> Vec<String> {
        self.0.bands().to_vec()
    }

    #[getter]
    fn zone_count(&self) -> u32 {
        self.0.cfg().zone_count()
    }

    fn __len__(&self) -> usize {
        self.0.total_count()
    }

    /// Object count per zone, indexed by zone id.
    fn histogram(&self) -> Vec<u64> {
        self.0.histogram().counts().to_vec()
    }

    /// `[(id, separation_deg)]` within `radius` degrees, sorted by id.
    fn cone_search(
        &self,
        py: Python<'_>,
        ra: f64,
        dec: f64,
        radius: f64,
    ) -> PyResult<Vec<(u64, f64)>> {
        let q = zonematch::ConeQuery::new(zonematch::SkyPoint::new(ra, dec).or_py()?, radius)
            .or_py()?;
        let hits = py.detach(|| zonematch::cone_search(&self.0, &q));
        Ok(hits.into_iter().map(|h| (h.id, h.separation)).collect())
    }

    /// Parallel inclusive magnitude-range scan. Returns `([(id, mag)],
    /// report_json)`.
    #[pyo3(signature = (band, lo, hi, workers = 1, strategy = "density"))]
    fn scan(
        &self,
        py: Python<'_>,
        band: &str,
        lo: f64,
        hi: f64,
        workers: u32,
        strategy: &str,
    ) -> PyResult<(Vec<(u64, f64)>, String)> {
        let filter = zonematch::ScanFilter::new(band, lo, hi).or_py()?;
        let p = zonematch::plan(self::strategy(strategy)?, &self.0.histogram(), workers).or_py()?;
        let (hits, report) = py
            .detach(|| zonematch::run_scan(&self.0, &filter, &p))
            .or_py()?;
        Ok((
            hits.into_iter().map(|h| (h.id, h.mag)).collect(),
            report.to_json().or_py()?,
        ))
    }
}

/// Zone-to-worker assignment.
#[pyclass(frozen, module = "zonematch")]
struct PartitionPlan(zonematch::PartitionPlan);

#[pymethods]
impl PartitionPlan {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PartitionPlan(
            zonematch::PartitionPlan::from_json(text).or_py()?,
        ))
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().or_py()
    }

    #[getter]
    fn worker_count(&self) -> u32 {
        self.0.worker_count()
    }

    #[getter]
    fn strategy(&self) -> &'static str {
        self.0.strategy().as_str()
    }

    /// Worker of every zone, indexed by zone id.
    fn assignment(&self) -> Vec<u32> {
        self.0.assignment().to_vec()
    }

    /// Per-worker object counts and imbalance for `index`, as JSON.
    fn workload_report(&self, index: &ZoneIndex) -> PyResult<String> {
        zonematch::report(&self.0, &index.0.histogram())
            .or_py()?
            .to_json()
            .or_py()
    }
}

type PairRow = (u64, u64, f64);

/// Plans `index` over `workers` with `contiguous`, `round-robin` or
/// `density`.
#[pyfunction]
#[pyo3(signature = (index, workers, strategy = "density"))]
fn plan(index: &ZoneIndex, workers: u32, strategy: &str) -> PyResult<PartitionPlan> {
    Ok(PartitionPlan(
        zonematch::plan(self::strategy(strategy)?, &index.0.histogram(), workers).or_py()?,
    ))
}

/// Parallel all-pairs cross-match within `radius` degrees. Returns
/// `([(leading_id, other_id, separation_deg)], report_json)` in ascending
/// id order.
#[pyfunction]
#[pyo3(signature = (leading, other, radius, workers = 1, strategy = "density", exclude_self = false, best_match = false))]
#[allow(clippy::too_many_arguments)]
fn crossmatch(
    py: Python<'_>,
    leading: &ZoneIndex,
    other: &ZoneIndex,
    radius: f64,
    workers: u32,
    strategy: &str,
    exclude_self: bool,
    best_match: bool,
) -> PyResult<(Vec<PairRow>, String)> {
    let spec = zonematch::MatchSpec::new(radius)
        .or_py()?
        .exclude_self(exclude_self);
    let p = zonematch::plan(self::strategy(strategy)?, &leading.0.histogram(), workers).or_py()?;
    let (mut pairs, report) = py
        .detach(|| zonematch::run_xmatch(&leading.0, &other.0, &spec, &p))
        .or_py()?;
    if best_match {
        pairs = best_matches(&pairs);
    }
    let rows = pairs
        .into_iter()
        .map(|m| (m.leading_id, m.other_id, m.separation))
        .collect();
    Ok((rows, report.to_json().or_py()?))
}

#[pymodule]
#[pyo3(name = "zonematch")]
fn zonematch_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SkyPoint>()?;
    m.add_class::<ZoneIndex>()?;
    m.add_class::<PartitionPlan>()?;
    m.add_function(wrap_pyfunction!(angular_separation, m)?)?;
    m.add_function(wrap_pyfunction!(parse_angle, m)?)?;
    m.add_function(wrap_pyfunction!(zone_of, m)?)?;
    m.add_function(wrap_pyfunction!(ra_halfwidth, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(crossmatch, m)?)?;
    Ok(())
}
