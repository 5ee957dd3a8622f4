//! Seeded synthetic catalogs with full-sky, declination-band or clustered
//! (multi-stripe, possibly non-contiguous) footprints.
//!
//! Positions are uniform on the sphere within the footprint: ra uniform,
//! sin(dec) uniform.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::CatalogObject;
use crate::error::{Error, Result};
use crate::geometry::{normalize_ra, SkyPoint};

/// A box in (ra, dec). `ra_lo > ra_hi` wraps through 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stripe {
    pub ra_lo: f64,
    pub ra_hi: f64,
    pub dec_lo: f64,
    pub dec_hi: f64,
}

impl Stripe {
    pub fn new(ra_lo: f64, ra_hi: f64, dec_lo: f64, dec_hi: f64) -> Result<Self> {
        let ok = [ra_lo, ra_hi, dec_lo, dec_hi].iter().all(|v| v.is_finite())
            && (-90.0..=90.0).contains(&dec_lo)
            && (-90.0..=90.0).contains(&dec_hi)
            && dec_lo < dec_hi;
        if !ok {
            return Err(Error::InvalidFootprint(format!(
                "stripe ra [{ra_lo}, {ra_hi}) dec [{dec_lo}, {dec_hi}]"
            )));
        }
        Ok(Stripe {
            ra_lo,
            ra_hi,
            dec_lo,
            dec_hi,
        })
    }

    fn ra_width(&self) -> f64 {
        let w = self.ra_hi - self.ra_lo;
        if w > 0.0 {
            w.min(360.0)
        } else {
            w + 360.0
        }
    }

    /// Solid angle up to a constant factor.
    fn weight(&self) -> f64 {
        self.ra_width() * (self.dec_hi.to_radians().sin() - self.dec_lo.to_radians().sin())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> SkyPoint {
        let ra = normalize_ra(self.ra_lo + rng.random::<f64>() * self.ra_width());
        let (s0, s1) = (
            self.dec_lo.to_radians().sin(),
            self.dec_hi.to_radians().sin(),
        );
        let dec = (s0 + rng.random::<f64>() * (s1 - s0))
            .clamp(-1.0, 1.0)
            .asin()
            .to_degrees();
        SkyPoint::new(ra, dec.clamp(self.dec_lo, self.dec_hi)).expect("sampled inside the stripe")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Footprint {
    FullSky,
    DecBand { lo: f64, hi: f64 },
    Clustered(Vec<Stripe>),
}

impl Footprint {
    /// Two disjoint stripes: a large northern block and a thin equatorial
    /// strip across ra = 0, loosely shaped like an imaging survey footprint.
    pub fn default_clustered() -> Self {
        Footprint::Clustered(vec![
            Stripe {
                ra_lo: 120.0,
                ra_hi: 240.0,
                dec_lo: 0.0,
                dec_hi: 60.0,
            },
            Stripe {
                ra_lo: 330.0,
                ra_hi: 30.0,
                dec_lo: -10.0,
                dec_hi: 5.0,
            },
        ])
    }

    fn stripes(&self) -> Vec<Stripe> {
        match self {
            Footprint::FullSky => vec![Stripe {
                ra_lo: 0.0,
                ra_hi: 360.0,
                dec_lo: -90.0,
                dec_hi: 90.0,
            }],
            Footprint::DecBand { lo, hi } => vec![Stripe {
                ra_lo: 0.0,
                ra_hi: 360.0,
                dec_lo: *lo,
                dec_hi: *hi,
            }],
            Footprint::Clustered(s) => s.clone(),
        }
    }
}

impl fmt::Display for Footprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Footprint::FullSky => f.write_str("full-sky"),
            Footprint::DecBand { lo, hi } => write!(f, "dec-band:{lo}:{hi}"),
            Footprint::Clustered(stripes) => {
                f.write_str("clustered:")?;
                for (i, s) in stripes.iter().enumerate() {
                    if i > 0 {
                        f.write_str("/")?;
                    }
                    write!(f, "{},{},{},{}", s.ra_lo, s.ra_hi, s.dec_lo, s.dec_hi)?;
                }
                Ok(())
            }
        }
    }
}

/// Accepts `full-sky`, `dec-band:LO:HI`, `clustered` (the default two
/// stripes) and `clustered:RA0,RA1,DEC0,DEC1/...`, all in degrees.
impl FromStr for Footprint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidFootprint(s.to_string());
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        match s.trim() {
            "full-sky" => return Ok(Footprint::FullSky),
            "clustered" => return Ok(Footprint::default_clustered()),
            _ => {}
        }
        if let Some(rest) = s.trim().strip_prefix("dec-band:") {
            let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
            let stripe = Stripe::new(0.0, 360.0, num(lo)?, num(hi)?)?;
            return Ok(Footprint::DecBand {
                lo: stripe.dec_lo,
                hi: stripe.dec_hi,
            });
        }
        if let Some(rest) = s.trim().strip_prefix("clustered:") {
            let stripes = rest
                .split('/')
                .map(|part| {
                    let v: Vec<f64> = part.split(',').map(num).collect::<Result<_>>()?;
                    match v.as_slice() {
                        &[a, b, c, d] => Stripe::new(a, b, c, d),
                        _ => Err(bad()),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Footprint::Clustered(stripes));
        }
        Err(bad())
    }
}

/// Magnitude column drawn uniformly from `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for BandRange {
    type Err = Error;

    /// `name:lo:hi`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidFootprint(format!("band spec {s:?}, expected name:lo:hi"));
        let mut it = s.split(':');
        let (Some(name), Some(lo), Some(hi), None) = (it.next(), it.next(), it.next(), it.next())
        else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if name.trim().is_empty() || !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(bad());
        }
        Ok(BandRange {
            name: name.trim().to_string(),
            lo,
            hi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub count: u64,
    pub footprint: Footprint,
    pub bands: Vec<BandRange>,
    pub seed: u64,
    /// First id; ids are consecutive from here.
    pub first_id: u64,
}

impl SyntheticSpec {
    pub fn new(count: u64, footprint: Footprint, seed: u64) -> Self {
        SyntheticSpec {
            count,
            footprint,
            bands: vec![BandRange {
                name: "r".into(),
                lo: 5.0,
                hi: 15.0,
            }],
            seed,
            first_id: 0,
        }
    }

    pub fn band_names(&self) -> Vec<String> {
        self.bands.iter().map(|b| b.name.clone()).collect()
    }

    /// Lazily generated objects; the same spec always yields the same
    /// sequence.
    pub fn objects(&self) -> impl Iterator<Item = CatalogObject> + '_ {
        let stripes = self.footprint.stripes();
        let weights: Vec<f64> = stripes.iter().map(Stripe::weight).collect();
        let total: f64 = weights.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count).map(move |i| {
            let mut pick = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < stripes.len() && pick >= weights[k] {
                pick -= weights[k];
                k += 1;
            }
            let pos = stripes[k].sample(&mut rng);
            let mags = self
                .bands
                .iter()
                .map(|b| Some(b.lo + rng.random::<f64>() * (b.hi - b.lo)))
                .collect();
            CatalogObject::new(self.first_id + i, pos, mags)
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string(), "ra".into(), "dec".into()];
        header.extend(self.band_names());
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for obj in self.objects() {
            row.clear();
            row.push(obj.id.to_string());
            row.push(obj.pos.ra().to_string());
            row.push(obj.pos.dec().to_string());
            row.extend(
                obj.mags
                    .iter()
                    .map(|m| m.map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_csv(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }
}
