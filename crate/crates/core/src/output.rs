//! Result files: `leading_id,other_id,separation_deg`, `id,mag` and
//! `id,separation_deg`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::query::{ConeHit, MatchPair, ScanHit};

/// `printf("%.12g")`: 12 significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-4, 1e12)`.
pub fn format_sig12(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIG).contains(&exp) {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn write_pairs<W: Write>(out: W, pairs: &[MatchPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["leading_id", "other_id", "separation_deg"])?;
    for p in pairs {
        w.write_record([
            p.leading_id.to_string(),
            p.other_id.to_string(),
            format_sig12(p.separation),
        ])?;
    }
    flush(w)
}

pub fn read_pairs<R: Read>(input: R) -> Result<Vec<MatchPair>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["leading_id", "other_id", "separation_deg"])?;
    r.deserialize::<(u64, u64, f64)>()
        .map(|row| {
            let (leading_id, other_id, separation) = row?;
            Ok(MatchPair {
                leading_id,
                other_id,
                separation,
            })
        })
        .collect()
}

pub fn write_scan<W: Write>(out: W, hits: &[ScanHit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "mag"])?;
    for h in hits {
        w.write_record([h.id.to_string(), h.mag.to_string()])?;
    }
    flush(w)
}

pub fn read_scan<R: Read>(input: R) -> Result<Vec<ScanHit>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["id", "mag"])?;
    r.deserialize::<(u64, f64)>()
        .map(|row| {
            let (id, mag) = row?;
            Ok(ScanHit { id, mag })
        })
        .collect()
}

pub fn write_cone<W: Write>(out: W, hits: &[ConeHit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "separation_deg"])?;
    for h in hits {
        w.write_record([h.id.to_string(), format_sig12(h.separation)])?;
    }
    flush(w)
}

pub fn read_cone<R: Read>(input: R) -> Result<Vec<ConeHit>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["id", "separation_deg"])?;
    r.deserialize::<(u64, f64)>()
        .map(|row| {
            let (id, separation) = row?;
            Ok(ConeHit { id, separation })
        })
        .collect()
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::MalformedHeader(format!(
            "expected `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig12_matches_printf() {
        let cases = [
            (0.0, "0"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (1.0 / 3600.0, "0.000277777777778"),
            (2.0 / 3.0 * 1e-5, "6.66666666667e-06"),
            (180.0, "180"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (0.00001, "1e-05"),
            (0.0001, "0.0001"),
            (9.9999999999999e-5, "0.0001"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig12(x), want, "{x:e}");
        }
    }

    #[test]
    fn pairs_file_layout() {
        let pairs = [MatchPair {
            leading_id: 1,
            other_id: 2,
            separation: 0.1,
        }];
        let mut buf = Vec::new();
        write_pairs(&mut buf, &pairs).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "leading_id,other_id,separation_deg\n1,2,0.1\n"
        );
        assert!(read_pairs("a,b,c\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn result_files_reserialize_identically(
            rows in proptest::collection::vec((any::<u64>(), any::<u64>(), 0.0..180.0f64), 0..50),
        ) {
            let pairs: Vec<MatchPair> = rows.iter().map(|&(a, b, s)| MatchPair { leading_id: a, other_id: b, separation: s }).collect();
            let mut first = Vec::new();
            write_pairs(&mut first, &pairs).unwrap();
            let mut second = Vec::new();
            write_pairs(&mut second, &read_pairs(first.as_slice()).unwrap()).unwrap();
            prop_assert_eq!(&first, &second);

            let hits: Vec<ScanHit> = rows.iter().map(|&(id, _, m)| ScanHit { id, mag: m }).collect();
            let mut a = Vec::new();
            write_scan(&mut a, &hits).unwrap();
            prop_assert_eq!(read_scan(a.as_slice()).unwrap(), hits);

            let cone: Vec<ConeHit> = rows.iter().map(|&(id, _, s)| ConeHit { id, separation: s }).collect();
            let mut c1 = Vec::new();
            write_cone(&mut c1, &cone).unwrap();
            let mut c2 = Vec::new();
            write_cone(&mut c2, &read_cone(c1.as_slice()).unwrap()).unwrap();
            prop_assert_eq!(c1, c2);
        }
    }
}
