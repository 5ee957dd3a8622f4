//! Catalog ingestion and the zone index.
//!
//! A [`ZoneIndex`] keeps one [`ZoneSlice`] per populated zone, each sorted by
//! right ascension (ties by id), so that every spatial query reduces to a
//! handful of binary searches per zone.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RaWindow, SkyPoint, ZoneConfig, ZoneId, ZoneRange};

/// Identified sky position with per-band magnitudes (`None` = missing).
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogObject {
    pub id: u64,
    pub pos: SkyPoint,
    pub mags: Vec<Option<f64>>,
}

impl CatalogObject {
    pub fn new(id: u64, pos: SkyPoint, mags: Vec<Option<f64>>) -> Self {
        CatalogObject { id, pos, mags }
    }

    /// In-memory footprint used for I/O accounting: id, ra, dec, one f64 per band.
    pub fn approx_bytes(&self) -> u64 {
        24 + 8 * self.mags.len() as u64
    }
}

/// Objects of one zone, sorted ascending by ra then id.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSlice {
    zone: ZoneId,
    objects: Vec<CatalogObject>,
}

impl ZoneSlice {
    fn new(zone: ZoneId, mut objects: Vec<CatalogObject>) -> Self {
        objects.sort_by(|a, b| {
            a.pos
                .ra()
                .total_cmp(&b.pos.ra())
                .then_with(|| a.id.cmp(&b.id))
        });
        ZoneSlice { zone, objects }
    }

    pub fn zone(&self) -> ZoneId {
        self.zone
    }

    pub fn objects(&self) -> &[CatalogObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Objects whose ra lies inside `window`, located by binary search on
    /// each interval.
    pub fn ra_scan<'a>(
        &'a self,
        window: &RaWindow,
    ) -> impl Iterator<Item = &'a CatalogObject> + 'a {
        let mut runs: [&'a [CatalogObject]; 2] = [&[], &[]];
        for (slot, (lo, hi)) in runs.iter_mut().zip(window.intervals()) {
            let start = self.objects.partition_point(|o| o.pos.ra() < lo);
            let end = self.objects.partition_point(|o| o.pos.ra() < hi);
            *slot = &self.objects[start..end.max(start)];
        }
        runs.into_iter().flatten()
    }

    pub fn approx_bytes(&self) -> u64 {
        self.objects.iter().map(CatalogObject::approx_bytes).sum()
    }
}

/// Per-zone object counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneHistogram {
    counts: Vec<u64>,
}

impl ZoneHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        ZoneHistogram { counts }
    }

    pub fn zone_count(&self) -> u32 {
        self.counts.len() as u32
    }

    pub fn count(&self, zone: ZoneId) -> u64 {
        self.counts.get(zone.0 as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Zones holding at least one object.
    pub fn occupied(&self) -> impl Iterator<Item = ZoneId> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(z, _)| ZoneId(z as u32))
    }
}

/// A catalog reorganized into declination zones.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneIndex {
    cfg: ZoneConfig,
    name: String,
    bands: Vec<String>,
    slices: BTreeMap<ZoneId, ZoneSlice>,
    total_count: usize,
}

impl ZoneIndex {
    /// Builds the index from loose objects. Ids must be unique and every
    /// object must carry one magnitude slot per band.
    pub fn build(
        name: impl Into<String>,
        bands: Vec<String>,
        cfg: ZoneConfig,
        objects: Vec<CatalogObject>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(objects.len());
        let mut by_zone: BTreeMap<ZoneId, Vec<CatalogObject>> = BTreeMap::new();
        let total_count = objects.len();
        for mut obj in objects {
            if !seen.insert(obj.id) {
                return Err(Error::DuplicateId(obj.id));
            }
            obj.mags.resize(bands.len(), None);
            let zone = cfg.zone_of(obj.pos.dec())?;
            by_zone.entry(zone).or_default().push(obj);
        }
        let slices = by_zone
            .into_iter()
            .map(|(zone, objs)| (zone, ZoneSlice::new(zone, objs)))
            .collect();
        Ok(ZoneIndex {
            cfg,
            name: name.into(),
            bands,
            slices,
            total_count,
        })
    }

    pub fn cfg(&self) -> &ZoneConfig {
        &self.cfg
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bands(&self) -> &[String] {
        &self.bands
    }

    pub fn band_index(&self, band: &str) -> Result<usize> {
        self.bands
            .iter()
            .position(|b| b == band)
            .ok_or_else(|| Error::UnknownBand(band.to_string()))
    }

    pub fn total_count(&self) -> usize {
        self.total_count
    }

    pub fn slice(&self, zone: ZoneId) -> Option<&ZoneSlice> {
        self.slices.get(&zone)
    }

    /// Non-empty slices in zone order.
    pub fn slices(&self) -> impl Iterator<Item = &ZoneSlice> {
        self.slices.values()
    }

    /// Non-empty slices whose zone falls in `zones`, in zone order.
    pub fn slice_range(&self, zones: ZoneRange) -> impl Iterator<Item = &ZoneSlice> {
        let range = if zones.is_empty() {
            ZoneId(0)..ZoneId(0)
        } else {
            ZoneId(zones.start)..ZoneId(zones.end)
        };
        self.slices.range(range).map(|(_, s)| s)
    }

    /// Every object, zone by zone.
    pub fn objects(&self) -> impl Iterator<Item = &CatalogObject> {
        self.slices.values().flat_map(|s| s.objects.iter())
    }

    pub fn histogram(&self) -> ZoneHistogram {
        let mut counts = vec![0u64; self.cfg.zone_count() as usize];
        for (zone, slice) in &self.slices {
            counts[zone.0 as usize] = slice.len() as u64;
        }
        ZoneHistogram { counts }
    }

    pub fn approx_bytes(&self) -> u64 {
        self.slices.values().map(ZoneSlice::approx_bytes).sum()
    }

    /// Loads either a binary snapshot or, failing the magic check, a CSV
    /// catalog indexed with `cfg`.
    pub fn open(path: &Path, cfg: ZoneConfig) -> Result<Ingested> {
        let mut head = [0u8; 4];
        let is_snapshot = File::open(path)
            .and_then(|mut f| f.read_exact(&mut head))
            .map(|_| &head == SNAPSHOT_MAGIC)
            .unwrap_or(false);
        if is_snapshot {
            Ok(Ingested {
                index: Self::read_snapshot(path)?,
                rejections: Vec::new(),
            })
        } else {
            ingest_csv(path, None, cfg)
        }
    }
}

/// A row dropped during ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub index: ZoneIndex,
    pub rejections: Vec<Rejection>,
}

/// Rejected rows above this fraction abort ingestion.
pub const MAX_REJECTED_FRACTION: f64 = 0.01;

/// Reads a catalog CSV with header `id,ra,dec,<band>...`.
///
/// When `bands` is given the header's band columns must match it exactly.
/// The catalog is named after the file stem.
pub fn ingest_csv(path: &Path, bands: Option<&[String]>, cfg: ZoneConfig) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ingest_reader(BufReader::new(file), name, bands, cfg)
}

pub fn ingest_reader<R: Read>(
    reader: R,
    name: impl Into<String>,
    bands: Option<&[String]>,
    cfg: ZoneConfig,
) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let first = cols.first().map(|c| c.trim_start_matches('\u{feff}'));
    if cols.len() < 3 || first != Some("id") || cols[1] != "ra" || cols[2] != "dec" {
        return Err(Error::MalformedHeader(format!(
            "expected `id,ra,dec,<bands...>`, found `{}`",
            cols.join(",")
        )));
    }
    let header_bands: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    let mut uniq = HashSet::new();
    for b in &header_bands {
        if b.is_empty() || !uniq.insert(b.as_str()) {
            return Err(Error::MalformedHeader(format!(
                "bad or repeated band name {b:?}"
            )));
        }
    }
    if let Some(expected) = bands {
        if expected != header_bands.as_slice() {
            return Err(Error::MalformedHeader(format!(
                "bands {header_bands:?} do not match schema {expected:?}"
            )));
        }
    }

    let mut objects = Vec::new();
    let mut ids = HashSet::new();
    let mut rejections = Vec::new();
    let mut rows = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                // Invalid UTF-8 and similar: reject the row, keep reading.
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                rows += 1;
                rejections.push(Rejection {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        }
        rows += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, header_bands.len()) {
            Ok(obj) => {
                if ids.insert(obj.id) {
                    objects.push(obj);
                } else {
                    rejections.push(Rejection {
                        line,
                        reason: format!("duplicate id {}", obj.id),
                    });
                }
            }
            Err(reason) => rejections.push(Rejection { line, reason }),
        }
    }

    if rows > 0 && rejections.len() as f64 > MAX_REJECTED_FRACTION * rows as f64 {
        let first = &rejections[0];
        return Err(Error::TooManyRejections {
            rejected: rejections.len(),
            total: rows,
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }

    let index = ZoneIndex::build(name, header_bands, cfg, objects)?;
    Ok(Ingested { index, rejections })
}

fn parse_row(
    record: &csv::StringRecord,
    band_count: usize,
) -> std::result::Result<CatalogObject, String> {
    if record.len() != 3 + band_count {
        return Err(format!(
            "expected {} fields, found {}",
            3 + band_count,
            record.len()
        ));
    }
    let id: u64 = record[0]
        .trim()
        .parse()
        .map_err(|_| format!("invalid id {:?}", &record[0]))?;
    let coord = |i: usize, what: &str| -> std::result::Result<f64, String> {
        let v: f64 = record[i]
            .trim()
            .parse()
            .map_err(|_| format!("unparseable {what} {:?}", &record[i]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite {what} {:?}", &record[i]))
        }
    };
    let ra = coord(1, "ra")?;
    let dec = coord(2, "dec")?;
    let pos = SkyPoint::new(ra, dec).map_err(|e| e.to_string())?;
    let mut mags = Vec::with_capacity(band_count);
    for i in 3..3 + band_count {
        let field = record[i].trim();
        if field.is_empty() {
            mags.push(None);
        } else {
            mags.push(Some(coord(i, "magnitude")?));
        }
    }
    Ok(CatalogObject { id, pos, mags })
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"ZIDX";
const SNAPSHOT_VERSION: u32 = 1;

impl ZoneIndex {
    /// Writes a versioned little-endian snapshot of the whole index.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.encode(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn encode<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        fn put_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
            w.write_all(&(s.len() as u32).to_le_bytes())?;
            w.write_all(s.as_bytes())
        }
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&self.cfg.height_deg().to_le_bytes())?;
        w.write_all(&self.cfg.zone_count().to_le_bytes())?;
        put_str(w, &self.name)?;
        w.write_all(&(self.bands.len() as u32).to_le_bytes())?;
        for b in &self.bands {
            put_str(w, b)?;
        }
        w.write_all(&(self.total_count as u64).to_le_bytes())?;
        for obj in self.objects() {
            w.write_all(&obj.id.to_le_bytes())?;
            w.write_all(&obj.pos.ra().to_le_bytes())?;
            w.write_all(&obj.pos.dec().to_le_bytes())?;
            for m in &obj.mags {
                match m {
                    Some(v) => {
                        w.write_all(&[1])?;
                        w.write_all(&v.to_le_bytes())?;
                    }
                    None => w.write_all(&[0; 9])?,
                }
            }
        }
        Ok(())
    }

    pub fn read_snapshot(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = SnapshotReader(BufReader::new(file));
        let name_hint = path.display().to_string();
        r.decode().map_err(|e| match e {
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::UnexpectedEof => {
                Error::BadSnapshot(format!("{name_hint}: truncated"))
            }
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}

struct SnapshotReader<R>(R);

impl<R: Read> SnapshotReader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0.read_exact(&mut buf).map_err(|e| Error::io("", e))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.0.read_exact(&mut buf).map_err(|e| Error::io("", e))?;
        String::from_utf8(buf).map_err(|_| Error::BadSnapshot("non-UTF-8 string".into()))
    }

    fn decode(&mut self) -> Result<ZoneIndex> {
        if &self.bytes::<4>()? != SNAPSHOT_MAGIC {
            return Err(Error::BadSnapshot("bad magic".into()));
        }
        let version = self.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::BadSnapshot(format!("unsupported version {version}")));
        }
        let cfg = ZoneConfig::new(self.f64()?)?;
        if self.u32()? != cfg.zone_count() {
            return Err(Error::BadSnapshot(
                "zone count disagrees with height".into(),
            ));
        }
        let name = self.string()?;
        let band_count = self.u32()? as usize;
        let bands = (0..band_count)
            .map(|_| self.string())
            .collect::<Result<Vec<_>>>()?;
        let total = self.u64()? as usize;
        let mut objects = Vec::with_capacity(total.min(1 << 24));
        for _ in 0..total {
            let id = self.u64()?;
            let pos = SkyPoint::new(self.f64()?, self.f64()?)?;
            let mut mags = Vec::with_capacity(band_count);
            for _ in 0..band_count {
                let [flag] = self.bytes::<1>()?;
                let v = self.f64()?;
                mags.push((flag != 0).then_some(v));
            }
            objects.push(CatalogObject { id, pos, mags });
        }
        ZoneIndex::build(name, bands, cfg, objects)
    }
}
