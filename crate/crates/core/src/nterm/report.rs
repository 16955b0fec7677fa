use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares; `None` with fewer than two points, a constant
/// `x` or non-finite input.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit { slope, intercept: my - slope * mx, r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub error: f64,
    pub normalized: f64,
}

/// `(n, error)` table with a log-log fit.
///
/// For Jackson runs `error` is the greedy residual and `normalized` is
/// `error·n^α / ‖f‖_B`; for Bernstein runs `error` is the largest observed
/// ratio `‖g‖_B / (n^α ‖g‖_BMO)` and `normalized` equals it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub experiment: String,
    pub function: String,
    pub alpha: f64,
    pub k: usize,
    pub q: f64,
    pub rows: Vec<RateRow>,
    /// Rows before this index are left out of the fit.
    pub fit_from: usize,
    /// `None` when the fit is undefined (e.g. a zero error).
    pub fit: Option<LineFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl RateReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        function: &str,
        alpha: f64,
        k: usize,
        q: f64,
        rows: Vec<RateRow>,
        fit_from: usize,
        reference_norm: Option<f64>,
    ) -> Result<Self> {
        if rows.windows(2).any(|w| w[1].n <= w[0].n) {
            return Err(invalid("n_grid", "n values must be strictly increasing"));
        }
        if let Some(r) = rows.iter().find(|r| !(r.error >= 0.0)) {
            return Err(invalid("error", format!("negative or undefined error {} at n = {}", r.error, r.n)));
        }
        let fitted = rows.get(fit_from..).unwrap_or(&[]);
        let fit = if fitted.iter().any(|r| r.error <= 0.0) {
            None
        } else {
            let x: Vec<f64> = fitted.iter().map(|r| (r.n as f64).ln()).collect();
            let y: Vec<f64> = fitted.iter().map(|r| r.error.ln()).collect();
            fit_line(&x, &y)
        };
        Ok(Self {
            experiment: experiment.to_string(),
            function: function.to_string(),
            alpha,
            k,
            q,
            rows,
            fit_from,
            fit,
            reference_norm,
            config_hash: None,
        })
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn max_normalized(&self) -> f64 {
        self.rows.iter().fold(0.0f64, |a, r| a.max(r.normalized))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.config_hash {
            let _ = writeln!(out, "# config_hash={h}");
        }
        out.push_str("n,error,normalized\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e},{:e}", r.n, r.error, r.normalized);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Log-log plot of the rows with the fitted line.
    pub fn to_svg(&self) -> String {
        let pts: Vec<(f64, f64)> =
            self.rows.iter().filter(|r| r.error > 0.0).map(|r| ((r.n as f64).log10(), r.error.log10())).collect();
        let (w, h, pad) = (480.0, 320.0, 48.0);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
        );
        if let Some(hash) = &self.config_hash {
            let _ = writeln!(out, "<!-- config_hash={hash} -->");
        }
        let _ = writeln!(
            out,
            "<text x=\"{pad}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">{} {} (alpha={})</text>",
            self.experiment, self.function, self.alpha
        );
        if pts.is_empty() {
            out.push_str("</svg>\n");
            return out;
        }
        let bounds = |sel: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(sel).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        let _ = writeln!(
            out,
            "<path d=\"M{pad} {pad} V{} H{}\" stroke=\"black\" fill=\"none\"/>",
            h - pad,
            w - pad
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">log10 n</text>",
            w / 2.0,
            h - 12.0
        );
        let _ = writeln!(
            out,
            "<text x=\"6\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">log10 error</text>",
            pad - 8.0
        );
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, "<polyline points=\"{}\" stroke=\"steelblue\" fill=\"none\"/>", path.join(" "));
        for &(x, y) in &pts {
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>", sx(x), sy(y));
        }
        if let Some(f) = self.fit {
            // the fit is in natural logs; ln-ln and log10-log10 slopes agree
            let line = |x: f64| f.slope * x + f.intercept / std::f64::consts::LN_10;
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"firebrick\" stroke-dasharray=\"4 3\"/>",
                sx(x0),
                sy(line(x0)),
                sx(x1),
                sy(line(x1))
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"firebrick\">slope {:.3}</text>",
                w - pad - 90.0,
                pad,
                f.slope
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(errs: &[(usize, f64)]) -> Vec<RateRow> {
        errs.iter().map(|&(n, e)| RateRow { n, error: e, normalized: e }).collect()
    }

    #[test]
    fn exact_power_law() {
        let r: Vec<(usize, f64)> = [4usize, 8, 16, 32].iter().map(|&n| (n, 3.0 * (n as f64).powf(-0.75))).collect();
        let rep = RateReport::new("jackson", "f", 0.75, 2, 2.0, rows(&r), 1, None).unwrap();
        let f = rep.fit.unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12);
        assert!((f.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_error_leaves_fit_undefined() {
        let rep = RateReport::new("jackson", "f", 1.0, 2, 2.0, rows(&[(4, 1e-3), (8, 0.0)]), 0, None).unwrap();
        assert!(rep.fit.is_none());
        assert!(rep.to_svg().contains("<circle"));
    }

    #[test]
    fn rejects_unsorted_or_negative() {
        assert!(RateReport::new("j", "f", 1.0, 2, 2.0, rows(&[(8, 1.0), (4, 1.0)]), 0, None).is_err());
        assert!(RateReport::new("j", "f", 1.0, 2, 2.0, rows(&[(4, -1.0)]), 0, None).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut rep = RateReport::new("j", "f", 1.0, 2, 2.0, rows(&[(4, 0.5), (8, 0.25)]), 0, None).unwrap();
        rep.config_hash = Some("abc".into());
        assert_eq!(rep.to_csv(), "# config_hash=abc\nn,error,normalized\n4,5e-1,5e-1\n8,2.5e-1,2.5e-1\n");
    }

    #[test]
    fn r_squared_of_noisy_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.1, 1.9, 3.0];
        let f = fit_line(&x, &y).unwrap();
        assert!(f.r_squared > 0.98 && f.r_squared < 1.0);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}
