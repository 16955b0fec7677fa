use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sequence::ltau_norm;
use crate::bspline::SplineDecomposition;
use crate::error::{invalid, Result};
use crate::funcspace::{check_exponent, Func, GridSamples, Interval};
use crate::localpoly::{delta_norm, lq_error_nodes, project_nodes};
use crate::partition::MultilevelPartition;

/// Which Besov (quasi-)norm a value refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesovVariant {
    /// Local polynomial errors on the neighbourhoods `Ω_I`.
    E,
    /// `ℓ^τ` norm of the canonical decomposition coefficients; also an upper
    /// bound of the infimum over B-spline representations.
    Q,
    /// Dyadic sum of global moduli of smoothness (`τ ≥ 1`).
    Modulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub alpha: f64,
    pub tau: f64,
    pub k: usize,
    pub q: f64,
    pub variant: BesovVariant,
    pub value: f64,
}

fn tau_of(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be positive and finite, got {alpha}")));
    }
    Ok(1.0 / alpha)
}

/// `|I|^{−1/q} ‖f − P_{Ω_I} f‖_{L^q(Ω_I)}` for every cell `I` of every
/// level, where `P_{Ω_I}` is the near-best projector of order `k`.
pub fn local_errors_sampled(s: &GridSamples, p: &MultilevelPartition, k: usize, q: f64) -> Result<Vec<Vec<f64>>> {
    check_exponent(q)?;
    if k == 0 {
        return Err(invalid("k", "polynomial order must be at least 1"));
    }
    Ok((0..=p.max_level())
        .into_par_iter()
        .map(|m| {
            (0..p.cell_count(m))
                .map(|i| {
                    let cells = p.omega_cells(m, i);
                    let omega = Interval::new(p.knots(m)[cells.start], p.knots(m)[cells.end]);
                    let r = s.range(p.fine_index(m, cells.start), p.fine_index(m, cells.end));
                    let (x, w, v) = (&s.x[r.clone()], &s.w[r.clone()], &s.v[r]);
                    let poly = project_nodes(x, w, v, omega, k);
                    p.cell(m, i).len().powf(-1.0 / q) * lq_error_nodes(x, w, v, &poly, q)
                })
                .collect()
        })
        .collect())
}

/// `max_I |I|^{−1/q} E(f, Ω_I)_q` over all cells of all levels.
pub fn bmo_qk_norm(f: &dyn Func, p: &MultilevelPartition, q: f64, k: usize) -> Result<f64> {
    let s = GridSamples::new(f, p.rule());
    let e = local_errors_sampled(&s, p, k, q)?;
    Ok(e.iter().flatten().fold(0.0, |a, &b| a.max(b)))
}

/// `(Σ_I (|I|^{−1/q} E(f, Ω_I)_q)^τ)^{1/τ}` with `τ = 1/α`.
pub fn besov_norm_e_sampled(s: &GridSamples, p: &MultilevelPartition, alpha: f64, k: usize, q: f64) -> Result<BesovNorm> {
    let tau = tau_of(alpha)?;
    let e = local_errors_sampled(s, p, k, q)?;
    let flat: Vec<f64> = e.into_iter().flatten().collect();
    Ok(BesovNorm { alpha, tau, k, q, variant: BesovVariant::E, value: ltau_norm(&flat, tau)? })
}

pub fn besov_norm_e(f: &dyn Func, p: &MultilevelPartition, alpha: f64, k: usize, q: f64) -> Result<BesovNorm> {
    check_exponent(q)?;
    besov_norm_e_sampled(&GridSamples::new(f, p.rule()), p, alpha, k, q)
}

/// `(Σ |b|^τ)^{1/τ}` over base and detail coefficients, `τ = 1/α`.
pub fn besov_norm_q(dec: &SplineDecomposition, alpha: f64) -> Result<BesovNorm> {
    let tau = tau_of(alpha)?;
    let all: Vec<f64> = dec.iter().map(|(_, c)| c).collect();
    Ok(BesovNorm { alpha, tau, k: dec.k, q: dec.q, variant: BesovVariant::Q, value: ltau_norm(&all, tau)? })
}

/// Dyadic scale range `ν_min..=ν_max` of the modulus form: from the first
/// power of two at least the window length down to the finest cell.
pub fn modulus_scales(p: &MultilevelPartition) -> (i32, i32) {
    let w = p.window().len();
    let finest = p
        .finest_knots()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    (-(w.log2().ceil() as i32), (-finest.log2()).ceil() as i32)
}

/// `(Σ_ν (2^{αν} ω_k(f, 2^{−ν})_τ)^τ)^{1/τ}` with `τ = 1/α ≥ 1`, where the
/// modulus is taken over all of ℝ (`f` vanishes outside its support) and
/// approximated by the maximum over step sizes `h = 2^{−ν_min − i/4} ≤ t`.
pub fn besov_norm_modulus(f: &dyn Func, p: &MultilevelPartition, alpha: f64, k: usize) -> Result<BesovNorm> {
    let tau = tau_of(alpha)?;
    if tau < 1.0 {
        return Err(invalid(
            "alpha",
            format!("the modulus form requires tau = 1/alpha >= 1, got tau = {tau}"),
        ));
    }
    if k == 0 {
        return Err(invalid("k", "difference order must be at least 1"));
    }
    let (nu_min, nu_max) = modulus_scales(p);
    let top = (-nu_min as f64).exp2();
    let steps: Vec<f64> = (0..=4 * (nu_max - nu_min) as usize).map(|i| top * (-(i as f64) / 4.0).exp2()).collect();
    let support = f.support();
    let norms: Vec<f64> = steps
        .par_iter()
        .map(|&h| {
            let kh = k as f64 * h;
            delta_norm(f, Interval::new(support.lo - kh, support.hi + kh), k, tau, h, p.rule())
        })
        .collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity((nu_max - nu_min + 1) as usize);
    for (idx, nu) in (nu_min..=nu_max).enumerate() {
        // steps[4·idx..] are exactly the h ≤ 2^{−ν}
        let omega = norms[4 * idx..].iter().fold(0.0f64, |a, &b| a.max(b));
        terms.push((alpha * nu as f64).exp2() * omega);
    }
    Ok(BesovNorm { alpha, tau, k, q: tau, variant: BesovVariant::Modulus, value: ltau_norm(&terms, tau)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::{decompose, BSplineBasis};
    use crate::funcspace::FnFunc;

    fn part() -> MultilevelPartition {
        MultilevelPartition::build_dyadic(Interval::new(-1.0, 2.0), 6, 2).unwrap()
    }

    #[test]
    fn polynomials_have_zero_norms() {
        let p = part();
        let lin = FnFunc::new("lin", Interval::new(-1.0, 2.0), vec![], |x| 2.0 * x - 1.0);
        assert!(besov_norm_e(&lin, &p, 0.5, 2, 1.0).unwrap().value < 1e-12);
        assert!(bmo_qk_norm(&lin, &p, 2.0, 2).unwrap() < 1e-12);
        let zero = FnFunc::new("0", Interval::new(0.0, 1.0), vec![], |_| 0.0);
        assert_eq!(besov_norm_modulus(&zero, &p, 1.0, 2).unwrap().value, 0.0);
    }

    #[test]
    fn scales_linearly() {
        let p = part();
        let phi = BSplineBasis::new(&p, 2).unwrap().bspline_piecewise(9);
        let e1 = besov_norm_e(&phi, &p, 1.0, 2, 2.0).unwrap().value;
        let e3 = besov_norm_e(&phi.scaled(3.0), &p, 1.0, 2, 2.0).unwrap().value;
        assert!(e1 > 0.0 && (e3 - 3.0 * e1).abs() < 1e-12 * e3);
        let m1 = besov_norm_modulus(&phi, &p, 1.0, 2).unwrap().value;
        let m3 = besov_norm_modulus(&phi.scaled(3.0), &p, 1.0, 2).unwrap().value;
        assert!(m1 > 0.0 && (m3 - 3.0 * m1).abs() < 1e-12 * m3);
        let q1 = bmo_qk_norm(&phi, &p, 1.0, 2).unwrap();
        let q3 = bmo_qk_norm(&phi.scaled(3.0), &p, 1.0, 2).unwrap();
        assert!((q3 - 3.0 * q1).abs() < 1e-12 * q3);
    }

    #[test]
    fn q_form_of_unit_coefficient() {
        let p = part();
        let mut dec = crate::bspline::SplineDecomposition::zeros(&p, 2.0);
        assert_eq!(besov_norm_q(&dec, 0.5).unwrap().value, 0.0);
        dec.details[2][5] = 1.0;
        for alpha in [0.25, 0.5, 1.0, 2.0] {
            assert!((besov_norm_q(&dec, alpha).unwrap().value - 1.0).abs() < 1e-15);
        }
        let phi = BSplineBasis::new(&p, 0).unwrap().bspline_piecewise(1);
        let d = decompose(&phi, &p, 2.0).unwrap();
        assert!((besov_norm_q(&d, 1.0).unwrap().value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn modulus_rejects_small_tau() {
        let p = part();
        let f = FnFunc::new("f", Interval::new(0.0, 1.0), vec![], |x| x);
        assert!(besov_norm_modulus(&f, &p, 2.0, 2).is_err());
    }

    #[test]
    fn scale_range() {
        let p = part();
        // window length 3 ≤ 4 = 2^2; finest cell 3/320 > 2^{-7}
        assert_eq!(modulus_scales(&p), (-2, 7));
    }
}
