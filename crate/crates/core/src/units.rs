//! Angle strings with mandatory unit suffixes.

use crate::error::{Error, Result};

/// Parses `<x>deg`, `<x>arcmin` or `<x>arcsec` into degrees. Bare numbers
/// are rejected.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s = text.trim();
    let (number, per_degree) = if let Some(n) = s.strip_suffix("arcmin") {
        (n, 60.0)
    } else if let Some(n) = s.strip_suffix("arcsec") {
        (n, 3600.0)
    } else if let Some(n) = s.strip_suffix("deg") {
        (n, 1.0)
    } else {
        return Err(Error::InvalidAngle(text.to_string()));
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::InvalidAngle(text.to_string()))?;
    if !value.is_finite() {
        return Err(Error::InvalidAngle(text.to_string()));
    }
    Ok(value / per_degree)
}
