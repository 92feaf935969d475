//! Sample files, histogram JSON and number formatting.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::histogram::{HistogramDensity, HistogramJson};
use crate::{Error, Result};

/// `%.17g`-style formatting: 17 significant digits, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: '{}' is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite value {v}")));
    }
    Ok(v)
}

/// One number per line. Blank lines and lines starting with `#` are skipped.
pub fn read_samples_lines<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_value(t, i + 1)?);
    }
    Ok(out)
}

/// The named column of a CSV file with a header row.
pub fn read_samples_csv<R: Read>(reader: R, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Parse(format!("no column named '{column}'")))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec
            .get(idx)
            .ok_or_else(|| Error::Parse(format!("row {} has no column '{column}'", i + 1)))?;
        out.push(parse_value(field, i + 2)?);
    }
    Ok(out)
}

/// Reads a sample file: a CSV column when `column` is given, else one
/// number per line.
pub fn read_samples(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let file = fs::File::open(path)?;
    match column {
        Some(c) => read_samples_csv(file, c),
        None => read_samples_lines(file),
    }
}

pub fn write_samples<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(w, "{}", format_g17(*v))?;
    }
    Ok(())
}

pub fn histogram_to_json(h: &HistogramDensity) -> Result<String> {
    Ok(serde_json::to_string_pretty(&HistogramJson::from(h))?)
}

pub fn histogram_from_json(s: &str) -> Result<HistogramDensity> {
    let j: HistogramJson = serde_json::from_str(s)?;
    HistogramDensity::try_from(j)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Support;
    use crate::histogram::HistogramModel;

    #[test]
    fn g17_format() {
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.25), "-2.25");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(f64::INFINITY), "inf");
        for x in [std::f64::consts::PI, 1.0 / 3.0, 0.999_999_999_999, 123456.789, 2.5e-5] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn read_lines_and_csv() {
        let text = "# header\n0.25\n\n 0.5 \n1\n";
        assert_eq!(read_samples_lines(text.as_bytes()).unwrap(), vec![0.25, 0.5, 1.0]);
        let err = read_samples_lines("0.1\nabc\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(read_samples_lines("nan\n".as_bytes()).is_err());

        let csv = "id,x\n1,0.1\n2,0.7\n";
        assert_eq!(read_samples_csv(csv.as_bytes(), "x").unwrap(), vec![0.1, 0.7]);
        assert!(read_samples_csv(csv.as_bytes(), "y").is_err());
    }

    #[test]
    fn samples_round_trip() {
        let xs = vec![0.1, 1.0 / 3.0, 0.999_999_999_999_9, 1e-300];
        let mut buf = Vec::new();
        write_samples(&mut buf, &xs).unwrap();
        assert_eq!(read_samples_lines(buf.as_slice()).unwrap(), xs);
    }

    #[test]
    fn histogram_json() {
        let m = HistogramModel::regular(Support::unit(), 4).unwrap();
        let h = HistogramDensity::new(m, vec![0.5, 1.5, 1.0, 1.0]).unwrap();
        let s = histogram_to_json(&h).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["support"], serde_json::json!([0.0, 1.0]));
        assert_eq!(histogram_from_json(&s).unwrap(), h);
        assert!(histogram_from_json(r#"{"support":[0,1],"breakpoints":[0,1],"heights":[2]}"#).is_err());
    }
}
