//! Spherical primitives: sky positions, declination zones, angular
//! separation and the right-ascension search window used by the zone join.
//!
//! All angles are in degrees.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default zone height: 4 arcminutes.
pub const DEFAULT_ZONE_HEIGHT_DEG: f64 = 4.0 / 60.0;

/// Slack added to every declination band and RA half-width used for
/// candidate selection, so rounding in the bounds can never cut a pair that
/// the exact-distance filter would accept.
pub const SEARCH_PAD_DEG: f64 = 1e-9;

/// Zone coordinates this close to an integer are snapped onto it, so that
/// `zone_of(z * h - 90) == z` despite `h` not being representable.
const ZONE_SNAP: f64 = 1e-9;

/// Wraps an arbitrary right ascension into `[0, 360)`.
pub fn normalize_ra(ra: f64) -> f64 {
    let r = ra.rem_euclid(360.0);
    // rem_euclid rounds tiny negative inputs up to exactly 360
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Cosine of an angle in degrees, exact at the poles.
fn cos_deg(deg: f64) -> f64 {
    if deg.abs() == 90.0 {
        0.0
    } else {
        deg.to_radians().cos()
    }
}

/// A position on the celestial sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkyPoint {
    ra: f64,
    dec: f64,
}

impl SkyPoint {
    /// Builds a point, wrapping `ra` into `[0, 360)`. Declinations outside
    /// `[-90, 90]` are rejected rather than wrapped.
    pub fn new(ra: f64, dec: f64) -> Result<Self> {
        if !ra.is_finite() {
            return Err(Error::NonFinite {
                what: "right ascension",
                value: ra,
            });
        }
        if !dec.is_finite() {
            return Err(Error::NonFinite {
                what: "declination",
                value: dec,
            });
        }
        if !(-90.0..=90.0).contains(&dec) {
            return Err(Error::DecOutOfRange(dec));
        }
        Ok(SkyPoint {
            ra: normalize_ra(ra),
            dec,
        })
    }

    #[inline]
    pub fn ra(&self) -> f64 {
        self.ra
    }

    #[inline]
    pub fn dec(&self) -> f64 {
        self.dec
    }
}

impl fmt::Display for SkyPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.ra, self.dec)
    }
}

/// Great-circle distance between two points, in degrees within `[0, 180]`.
///
/// Haversine form evaluated through `atan2`, which stays accurate both for
/// arcsecond separations and for nearly antipodal points. The result is
/// bitwise symmetric in its arguments.
pub fn angular_separation(p: &SkyPoint, q: &SkyPoint) -> f64 {
    let half_ddec = (q.dec - p.dec).to_radians() * 0.5;
    let half_dra = (q.ra - p.ra).to_radians() * 0.5;
    let s_dec = half_ddec.sin();
    let s_ra = half_dra.sin();
    let a = s_dec * s_dec + cos_deg(p.dec) * cos_deg(q.dec) * (s_ra * s_ra);
    let a = a.clamp(0.0, 1.0);
    (2.0 * a.sqrt().atan2((1.0 - a).sqrt())).to_degrees()
}

/// RA half-width `alpha` such that every point within `radius` of a point at
/// declination `dec` lies within `alpha` in right ascension.
///
/// Uses the over-estimate `radius / cos(|dec| + radius)`; any cap touching a
/// pole needs the full circle and yields 180.
pub fn ra_halfwidth(radius: f64, dec: f64) -> f64 {
    let edge = dec.abs() + radius;
    if edge >= 90.0 {
        return 180.0;
    }
    let alpha = radius / edge.to_radians().cos() + SEARCH_PAD_DEG;
    alpha.min(180.0)
}

/// Set of right ascensions, stored as one or two disjoint half-open
/// intervals in `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaWindow {
    first: (f64, f64),
    second: Option<(f64, f64)>,
}

impl RaWindow {
    pub const FULL: RaWindow = RaWindow {
        first: (0.0, 360.0),
        second: None,
    };

    /// The window `[center - halfwidth, center + halfwidth]`, split at 0/360
    /// when it wraps. A half-width of 180 or more covers the full circle.
    pub fn around(center_ra: f64, halfwidth: f64) -> Self {
        if halfwidth >= 180.0 {
            return Self::FULL;
        }
        let center = normalize_ra(center_ra);
        let lo = center - halfwidth;
        let hi = center + halfwidth;
        if lo < 0.0 {
            RaWindow {
                first: (lo + 360.0, 360.0),
                second: Some((0.0, hi)),
            }
        } else if hi > 360.0 {
            RaWindow {
                first: (lo, 360.0),
                second: Some((0.0, hi - 360.0)),
            }
        } else {
            RaWindow {
                first: (lo, hi),
                second: None,
            }
        }
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once(self.first).chain(self.second)
    }

    pub fn is_full(&self) -> bool {
        self.first == (0.0, 360.0)
    }

    pub fn width(&self) -> f64 {
        self.intervals().map(|(lo, hi)| hi - lo).sum()
    }

    /// Membership test; `ra` is wrapped into `[0, 360)` first.
    pub fn contains(&self, ra: f64) -> bool {
        let ra = normalize_ra(ra);
        self.intervals().any(|(lo, hi)| lo <= ra && ra < hi)
    }
}

/// Shorthand for [`RaWindow::around`].
pub fn ra_window(center_ra: f64, halfwidth: f64) -> RaWindow {
    RaWindow::around(center_ra, halfwidth)
}

/// Index of a declination zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub u32);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Half-open range of zone indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZoneRange {
    pub start: u32,
    pub end: u32,
}

impl ZoneRange {
    pub fn new(start: u32, end: u32) -> Self {
        ZoneRange {
            start,
            end: end.max(start),
        }
    }

    pub fn empty() -> Self {
        ZoneRange { start: 0, end: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn contains(&self, zone: ZoneId) -> bool {
        self.start <= zone.0 && zone.0 < self.end
    }

    pub fn iter(&self) -> impl Iterator<Item = ZoneId> {
        (self.start..self.end).map(ZoneId)
    }
}

/// Zone height and the derived number of zones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    height_deg: f64,
    zone_count: u32,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        ZoneConfig::new(DEFAULT_ZONE_HEIGHT_DEG).expect("default zone height is valid")
    }
}

impl ZoneConfig {
    pub fn new(height_deg: f64) -> Result<Self> {
        if !height_deg.is_finite() || height_deg <= 0.0 || height_deg > 180.0 {
            return Err(Error::InvalidZoneHeight(height_deg));
        }
        let zones = snap(180.0 / height_deg).ceil();
        if zones > u32::MAX as f64 {
            return Err(Error::InvalidZoneHeight(height_deg));
        }
        Ok(ZoneConfig {
            height_deg,
            zone_count: (zones as u32).max(1),
        })
    }

    #[inline]
    pub fn height_deg(&self) -> f64 {
        self.height_deg
    }

    #[inline]
    pub fn zone_count(&self) -> u32 {
        self.zone_count
    }

    pub fn all_zones(&self) -> ZoneRange {
        ZoneRange::new(0, self.zone_count)
    }

    /// `floor((dec + 90) / h)`, with `dec = +90` folded into the last zone.
    pub fn zone_of(&self, dec: f64) -> Result<ZoneId> {
        if !(-90.0..=90.0).contains(&dec) {
            return Err(Error::DecOutOfRange(dec));
        }
        Ok(self.zone_of_clamped(dec))
    }

    /// Zone of `dec` after clamping it into `[-90, 90]`.
    pub(crate) fn zone_of_clamped(&self, dec: f64) -> ZoneId {
        let dec = dec.clamp(-90.0, 90.0);
        let z = snap((dec + 90.0) / self.height_deg).floor();
        ZoneId((z.max(0.0) as u32).min(self.zone_count - 1))
    }

    /// Declination bounds `[lo, hi)` of a zone; the last zone is closed at +90.
    pub fn zone_dec_range(&self, zone: ZoneId) -> (f64, f64) {
        let lo = zone.0 as f64 * self.height_deg - 90.0;
        let hi = if zone.0 + 1 >= self.zone_count {
            90.0
        } else {
            ((zone.0 + 1) as f64 * self.height_deg - 90.0).min(90.0)
        };
        (lo, hi)
    }

    /// Smallest contiguous run of zones whose ranges meet `[dec_lo, dec_hi]`.
    /// Bounds are clamped into `[-90, 90]`.
    pub fn zones_overlapping(&self, dec_lo: f64, dec_hi: f64) -> ZoneRange {
        let (lo, hi) = if dec_lo <= dec_hi {
            (dec_lo, dec_hi)
        } else {
            (dec_hi, dec_lo)
        };
        let first = self.zone_of_clamped(lo);
        let last = self.zone_of_clamped(hi);
        ZoneRange::new(first.0, last.0 + 1)
    }

    /// Zones that can hold a point within `radius` of declination `dec`.
    pub fn zones_within(&self, dec: f64, radius: f64) -> ZoneRange {
        self.zones_overlapping(dec - radius - SEARCH_PAD_DEG, dec + radius + SEARCH_PAD_DEG)
    }

    pub fn same_layout(&self, other: &ZoneConfig) -> bool {
        self.zone_count == other.zone_count && self.height_deg == other.height_deg
    }

    pub(crate) fn check_same(&self, other: &ZoneConfig) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::ZoneConfigMismatch {
                left: self.zone_count,
                left_h: self.height_deg,
                right: other.zone_count,
                right_h: other.height_deg,
            })
        }
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < ZONE_SNAP {
        r
    } else {
        x
    }
}
