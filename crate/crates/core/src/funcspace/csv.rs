use std::io::Read;
use std::path::Path;

use super::{Func, Interval, LocalPoly, PiecewisePoly};
use crate::error::{Error, Result};

/// Linear interpolant of `(x, value)` samples; zero outside the sampled
/// range. Flagged inexact.
#[derive(Clone, Debug)]
pub struct SampledFunc {
    name: String,
    poly: PiecewisePoly,
}

impl SampledFunc {
    pub fn from_samples(name: impl Into<String>, xs: &[f64], vs: &[f64]) -> Result<Self> {
        if xs.len() != vs.len() || xs.len() < 2 {
            return Err(Error::Parse { line: 0, detail: "need at least two samples".into() });
        }
        let pieces = xs
            .windows(2)
            .zip(vs.windows(2))
            .map(|(x, v)| LocalPoly::new(x[0], x[1], vec![0.5 * (v[0] + v[1]), 0.5 * (v[1] - v[0])]))
            .collect();
        Ok(Self { name: name.into(), poly: PiecewisePoly::new(pieces)? })
    }
}

impl Func for SampledFunc {
    fn eval(&self, x: f64) -> f64 {
        self.poly.value(x)
    }
    fn support(&self) -> Interval {
        self.poly.domain()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.poly.breaks().to_vec()
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn as_piecewise(&self) -> Option<&PiecewisePoly> {
        Some(&self.poly)
    }
    fn is_exact(&self) -> bool {
        false
    }
}

/// Parse CSV with header `x,value` and strictly increasing `x`.
pub fn parse_samples_csv(name: &str, input: impl Read) -> Result<SampledFunc> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| csv_error(1, e))?.clone();
    if header.len() != 2 || &header[0] != "x" || &header[1] != "value" {
        return Err(Error::Parse {
            line: 1,
            detail: format!("expected header `x,value`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            csv_error(line, e)
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize, what: &str| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, detail: format!("invalid {what} `{s}`") })
        };
        let x = field(0, "x")?;
        let v = field(1, "value")?;
        if let Some(&prev) = xs.last() {
            if x <= prev {
                return Err(Error::Parse {
                    line,
                    detail: format!("x must be strictly increasing ({x} after {prev})"),
                });
            }
        }
        xs.push(x);
        vs.push(v);
    }
    if xs.len() < 2 {
        return Err(Error::Parse { line: xs.len() + 1, detail: "need at least two samples".into() });
    }
    SampledFunc::from_samples(name, &xs, &vs)
}

pub fn read_samples_csv(path: &Path) -> Result<SampledFunc> {
    let file = std::fs::File::open(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("csv");
    parse_samples_csv(name, file)
}

fn csv_error(line: usize, e: csv::Error) -> Error {
    Error::Parse { line, detail: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_interpolates() {
        let f = parse_samples_csv("t", "x,value\n0,0\n0.5,1\n1,0\n".as_bytes()).unwrap();
        assert!(!f.is_exact());
        assert!((f.eval(0.25) - 0.5).abs() < 1e-15);
        assert_eq!(f.eval(1.5), 0.0);
        assert_eq!(f.support(), Interval::new(0.0, 1.0));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_samples_csv("t", "x,value\n0,0\n0.5,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_samples_csv("t", "x,value\n0,0\n0.5,1\n0.5,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse_samples_csv("t", "t,v\n0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }
}
