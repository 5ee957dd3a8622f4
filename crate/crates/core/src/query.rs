//! Scan filter, cone search and zone-join cross-match over zone slices,
//! plus the exhaustive cross-match used to verify them.

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogObject, ZoneIndex, ZoneSlice};
use crate::error::{Error, Result};
use crate::geometry::{angular_separation, ra_halfwidth, ra_window, SkyPoint, ZoneConfig, ZoneId};

/// Inclusive magnitude range on one band (`BETWEEN lo AND hi`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFilter {
    pub band: String,
    pub lo: f64,
    pub hi: f64,
}

impl ScanFilter {
    pub fn new(band: impl Into<String>, lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidFilter { lo, hi });
        }
        Ok(ScanFilter {
            band: band.into(),
            lo,
            hi,
        })
    }

    #[inline]
    fn accepts(&self, mag: Option<f64>) -> bool {
        matches!(mag, Some(m) if self.lo <= m && m <= self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanHit {
    pub id: u64,
    pub mag: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanOutput {
    pub hits: Vec<ScanHit>,
    pub rows_scanned: u64,
    pub bytes_read: u64,
}

/// Full scan: visits every object of every slice, keeping those whose
/// magnitude in `filter.band` is present and inside the bounds. Hits come
/// back in slice order.
pub fn scan_filter<'a>(
    bands: &[String],
    slices: impl IntoIterator<Item = &'a ZoneSlice>,
    filter: &ScanFilter,
) -> Result<ScanOutput> {
    let band = bands
        .iter()
        .position(|b| *b == filter.band)
        .ok_or_else(|| Error::UnknownBand(filter.band.clone()))?;
    let mut out = ScanOutput::default();
    for slice in slices {
        out.rows_scanned += slice.len() as u64;
        out.bytes_read += slice.approx_bytes();
        out.hits.extend(slice.objects().iter().filter_map(|o| {
            let mag = o.mags[band];
            filter.accepts(mag).then(|| ScanHit {
                id: o.id,
                mag: mag.unwrap_or_default(),
            })
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeQuery {
    pub center: SkyPoint,
    pub radius: f64,
}

impl ConeQuery {
    pub fn new(center: SkyPoint, radius: f64) -> Result<Self> {
        if !(0.0..=180.0).contains(&radius) {
            return Err(Error::InvalidRadius {
                radius,
                reason: "cone radius must lie in [0, 180]",
            });
        }
        Ok(ConeQuery { center, radius })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeHit {
    pub id: u64,
    pub separation: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConeOutput {
    pub hits: Vec<ConeHit>,
    /// Objects inside the candidate RA windows, i.e. distance evaluations.
    pub rows_scanned: u64,
}

/// All objects within `q.radius` of `q.center`, ascending by id.
pub fn cone_search(index: &ZoneIndex, q: &ConeQuery) -> Vec<ConeHit> {
    let mut out = cone_search_zones(index, q, |_| true);
    out.hits.sort_by_key(|h| h.id);
    out.hits
}

/// Cone search restricted to the zones accepted by `owns`. Only zones
/// within the cone's declination band are visited, and within each only the
/// objects of the RA window.
pub fn cone_search_zones(
    index: &ZoneIndex,
    q: &ConeQuery,
    owns: impl Fn(ZoneId) -> bool,
) -> ConeOutput {
    let (ra, dec) = (q.center.ra(), q.center.dec());
    let zones = index.cfg().zones_within(dec, q.radius);
    let window = ra_window(ra, ra_halfwidth(q.radius, dec));
    let mut out = ConeOutput::default();
    for slice in index.slice_range(zones).filter(|s| owns(s.zone())) {
        for obj in slice.ra_scan(&window) {
            out.rows_scanned += 1;
            let sep = angular_separation(&q.center, &obj.pos);
            if sep <= q.radius {
                out.hits.push(ConeHit {
                    id: obj.id,
                    separation: sep,
                });
            }
        }
    }
    out
}

/// Largest match radius accepted unless overridden.
pub const DEFAULT_MAX_MATCH_RADIUS_DEG: f64 = 10.0;

/// Cross-match parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchSpec {
    pub radius: f64,
    /// Drop pairs whose two ids are equal (self-joins).
    pub exclude_self: bool,
    /// Keep only the closest partner of each leading object (ties: lower id).
    pub best_match: bool,
}

impl MatchSpec {
    pub fn new(radius: f64) -> Result<Self> {
        Self::with_cap(radius, DEFAULT_MAX_MATCH_RADIUS_DEG)
    }

    pub fn with_cap(radius: f64, max_radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::InvalidRadius {
                radius,
                reason: "match radius must be positive",
            });
        }
        if radius > max_radius {
            return Err(Error::InvalidRadius {
                radius,
                reason: "match radius exceeds the configured cap",
            });
        }
        Ok(MatchSpec {
            radius,
            exclude_self: false,
            best_match: false,
        })
    }

    pub fn exclude_self(mut self, yes: bool) -> Self {
        self.exclude_self = yes;
        self
    }

    pub fn best_match(mut self, yes: bool) -> Self {
        self.best_match = yes;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub leading_id: u64,
    pub other_id: u64,
    pub separation: f64,
}

impl MatchPair {
    fn key(&self) -> (u64, u64) {
        (self.leading_id, self.other_id)
    }
}

/// Sorts pairs ascending by `(leading_id, other_id)`.
pub fn sort_pairs(pairs: &mut [MatchPair]) {
    pairs.sort_unstable_by_key(MatchPair::key);
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchOutput {
    pub pairs: Vec<MatchPair>,
    /// Leading objects processed.
    pub rows_scanned: u64,
    /// Other-catalog objects that reached the exact-distance filter.
    pub candidates: u64,
}

/// Zone join of the leading slices against the full `other` index. Output
/// is in canonical order.
pub fn zone_crossmatch<'a>(
    leading_cfg: &ZoneConfig,
    leading_slices: impl IntoIterator<Item = &'a ZoneSlice>,
    other: &ZoneIndex,
    spec: &MatchSpec,
) -> Result<MatchOutput> {
    zone_crossmatch_inspect(leading_cfg, leading_slices, other, spec, |_, _| {})
}

/// [`zone_crossmatch`] that also reports every candidate pair, before the
/// exact-distance filter, to `on_candidate`.
pub fn zone_crossmatch_inspect<'a>(
    leading_cfg: &ZoneConfig,
    leading_slices: impl IntoIterator<Item = &'a ZoneSlice>,
    other: &ZoneIndex,
    spec: &MatchSpec,
    mut on_candidate: impl FnMut(&CatalogObject, &CatalogObject),
) -> Result<MatchOutput> {
    leading_cfg.check_same(other.cfg())?;
    let r = spec.radius;
    let mut out = MatchOutput::default();
    let mut found: Vec<MatchPair> = Vec::new();
    for slice in leading_slices {
        for lead in slice.objects() {
            out.rows_scanned += 1;
            let (ra, dec) = (lead.pos.ra(), lead.pos.dec());
            let zones = other.cfg().zones_within(dec, r);
            let window = ra_window(ra, ra_halfwidth(r, dec));
            found.clear();
            for cand_slice in other.slice_range(zones) {
                for cand in cand_slice.ra_scan(&window) {
                    out.candidates += 1;
                    on_candidate(lead, cand);
                    if spec.exclude_self && cand.id == lead.id {
                        continue;
                    }
                    let sep = angular_separation(&lead.pos, &cand.pos);
                    if sep <= r {
                        found.push(MatchPair {
                            leading_id: lead.id,
                            other_id: cand.id,
                            separation: sep,
                        });
                    }
                }
            }
            if spec.best_match {
                out.pairs.extend(closest(&found));
            } else {
                out.pairs.extend_from_slice(&found);
            }
        }
    }
    sort_pairs(&mut out.pairs);
    Ok(out)
}

fn closest(pairs: &[MatchPair]) -> Option<MatchPair> {
    pairs.iter().copied().min_by(|a, b| {
        a.separation
            .total_cmp(&b.separation)
            .then(a.other_id.cmp(&b.other_id))
    })
}

/// Keeps, for each leading id, the pair with the smallest separation (lower
/// other id on ties). Output is in canonical order.
pub fn best_matches(pairs: &[MatchPair]) -> Vec<MatchPair> {
    let mut sorted = pairs.to_vec();
    sort_pairs(&mut sorted);
    sorted
        .chunk_by(|a, b| a.leading_id == b.leading_id)
        .filter_map(closest)
        .collect()
}

/// Largest `|a| * |b|` the exhaustive cross-match accepts.
pub const BRUTE_FORCE_PAIR_LIMIT: u64 = 100_000_000;

/// Every pair within `radius` by exhaustive comparison, in canonical order.
pub fn brute_force_crossmatch(
    a: &[CatalogObject],
    b: &[CatalogObject],
    radius: f64,
) -> Result<Vec<MatchPair>> {
    let work = a.len() as u64 * b.len() as u64;
    if work > BRUTE_FORCE_PAIR_LIMIT {
        return Err(Error::OracleTooLarge {
            left: a.len(),
            right: b.len(),
            limit: BRUTE_FORCE_PAIR_LIMIT,
        });
    }
    let mut pairs = Vec::new();
    for p in a {
        for q in b {
            let sep = angular_separation(&p.pos, &q.pos);
            if sep <= radius {
                pairs.push(MatchPair {
                    leading_id: p.id,
                    other_id: q.id,
                    separation: sep,
                });
            }
        }
    }
    sort_pairs(&mut pairs);
    Ok(pairs)
}

/// Every object within the cone by exhaustive comparison, ascending by id.
pub fn brute_force_cone<'a>(
    objects: impl IntoIterator<Item = &'a CatalogObject>,
    q: &ConeQuery,
) -> Vec<ConeHit> {
    let mut hits: Vec<ConeHit> = objects
        .into_iter()
        .filter_map(|o| {
            let sep = angular_separation(&q.center, &o.pos);
            (sep <= q.radius).then_some(ConeHit {
                id: o.id,
                separation: sep,
            })
        })
        .collect();
    hits.sort_by_key(|h| h.id);
    hits
}
