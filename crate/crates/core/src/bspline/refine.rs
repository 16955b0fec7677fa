use super::{level_mismatch, BSplineBasis};
use crate::error::{invalid, Result};
use crate::partition::MultilevelPartition;

/// Level-`m` knots padded with `k` knots on each side at the edge-cell
/// spacing.
fn extended_knots(p: &MultilevelPartition, m: usize) -> Vec<f64> {
    let k = p.k();
    let kn = p.knots(m);
    let n = kn.len();
    let left = kn[1] - kn[0];
    let right = kn[n - 1] - kn[n - 2];
    let mut ext = Vec::with_capacity(n + 2 * k);
    ext.extend((1..=k).rev().map(|s| kn[0] - s as f64 * left));
    ext.extend_from_slice(kn);
    ext.extend((1..=k).map(|s| kn[n - 1] + s as f64 * right));
    ext
}

/// Express a level-`(m−1)` spline in the level-`m` basis by knot insertion.
///
/// Each fine coefficient is the polar form of the coarse polynomial piece on
/// the cell holding the fine B-spline's first knot, evaluated at its interior
/// knots with de Boor's triangular scheme. Coarse B-splines that would reach
/// outside the window carry coefficient zero.
pub fn refine_coefficients(p: &MultilevelPartition, m: usize, coarse: &[f64]) -> Result<Vec<f64>> {
    if m == 0 || m > p.max_level() {
        return Err(invalid("m", format!("refinement target level must lie in 1..={}", p.max_level())));
    }
    let k = p.k();
    let ncoarse = p.support_count(m - 1);
    if coarse.len() != ncoarse {
        return Err(level_mismatch(m - 1, ncoarse, coarse.len()));
    }
    let ext = extended_knots(p, m - 1);
    let fine = p.knots(m);
    let nfine = p.support_count(m);
    let coef = |e: usize| -> f64 {
        // extended B-spline e has knots ext[e..=e+k], i.e. support j = e − k
        e.checked_sub(k).filter(|&j| j < ncoarse).map_or(0.0, |j| coarse[j])
    };
    let mut out = Vec::with_capacity(nfine);
    let mut d = [0.0f64; super::MAX_ORDER];
    for jf in 0..nfine {
        let l = p.locate(m - 1, fine[jf]) + k;
        for (s, dv) in d.iter_mut().enumerate().take(k) {
            *dv = coef(l + 1 + s - k);
        }
        // d[s] holds the coefficient of extended B-spline l − k + 1 + s
        for r in 1..k {
            let u = fine[jf + r];
            for s in (r..k).rev() {
                let e = l + 1 + s - k;
                let alpha = (u - ext[e]) / (ext[e + k - r] - ext[e]);
                d[s] = alpha * d[s] + (1.0 - alpha) * d[s - 1];
            }
        }
        out.push(d[k - 1]);
    }
    Ok(out)
}

/// Same result as [`refine_coefficients`], computed by applying the level-`m`
/// de Boor–Fix functionals to the piecewise form of the coarse spline.
pub fn refine_coefficients_direct(p: &MultilevelPartition, m: usize, coarse: &[f64]) -> Result<Vec<f64>> {
    if m == 0 || m > p.max_level() {
        return Err(invalid("m", format!("refinement target level must lie in 1..={}", p.max_level())));
    }
    let s = BSplineBasis::new(p, m - 1)?.to_piecewise(coarse)?;
    BSplineBasis::new(p, m)?.quasi_interp_spline(&s)
}
