//! Local polynomial approximation: the near-best projector onto `Π_k` on an
//! interval, a numerical best-approximation oracle, moduli of smoothness and
//! the level-wise piecewise projector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::funcspace::{check_exponent, Func, GridSamples, Interval, LocalPoly, PiecewisePoly, QuadratureRule};
use crate::partition::MultilevelPartition;

/// Bound on `‖f − P_J f‖_q / E_k(f, J)_q` asserted on the test corpus.
pub const NEAR_BEST_BOUND: f64 = 6.0;

/// Default number of step sizes sampled by [`modulus`].
pub const DEFAULT_H_SAMPLES: usize = 64;

const IRLS_ITERATIONS: usize = 50;

/// Result of [`near_best_poly`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyApprox {
    pub interval: Interval,
    pub k: usize,
    pub q: f64,
    pub poly: LocalPoly,
    /// `‖f − poly‖_{L^q(J)}`.
    pub err: f64,
    /// Asserted near-best constant `A`.
    pub near_best_constant: f64,
}

/// Result of [`best_poly_error_oracle`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleResult {
    pub err: f64,
    pub poly: LocalPoly,
    pub converged: bool,
    pub iterations: usize,
}

/// `P_0(t), …, P_{n−1}(t)`.
pub fn legendre_values(t: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = t;
    }
    for i in 2..n {
        let fi = i as f64;
        out[i] = ((2.0 * fi - 1.0) * t * out[i - 1] - (fi - 1.0) * out[i - 2]) / fi;
    }
}

/// Converts Legendre coefficients to monomial coefficients in `t`.
pub fn legendre_to_monomial(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n.max(1)];
    let mut prev: Vec<f64> = vec![1.0];
    let mut cur: Vec<f64> = vec![0.0, 1.0];
    for (i, &ci) in c.iter().enumerate() {
        let p = match i {
            0 => &prev,
            1 => &cur,
            _ => {
                let fi = i as f64;
                let mut next = vec![0.0; i + 1];
                for (d, &v) in cur.iter().enumerate() {
                    next[d + 1] += (2.0 * fi - 1.0) / fi * v;
                }
                for (d, &v) in prev.iter().enumerate() {
                    next[d] -= (fi - 1.0) / fi * v;
                }
                prev = std::mem::replace(&mut cur, next);
                &cur
            }
        };
        for (d, &v) in p.iter().enumerate() {
            out[d] += ci * v;
        }
    }
    out
}

fn check_order(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "polynomial order must be at least 1"));
    }
    Ok(())
}

fn local_t(j: Interval, x: f64) -> f64 {
    (2.0 * x - j.lo - j.hi) / (j.hi - j.lo)
}

/// L²(J) projection onto `Π_k` from quadrature nodes covering `J`.
pub(crate) fn project_nodes(x: &[f64], w: &[f64], v: &[f64], j: Interval, k: usize) -> LocalPoly {
    let mut c = vec![0.0; k];
    let mut p = vec![0.0; k];
    for ((&xi, &wi), &vi) in x.iter().zip(w).zip(v) {
        legendre_values(local_t(j, xi), &mut p);
        for (cn, pn) in c.iter_mut().zip(&p) {
            *cn += wi * vi * pn;
        }
    }
    for (n, cn) in c.iter_mut().enumerate() {
        *cn *= (2.0 * n as f64 + 1.0) / j.len();
    }
    LocalPoly::new(j.lo, j.hi, legendre_to_monomial(&c))
}

/// `‖v − poly‖_q` over the nodes.
pub(crate) fn lq_error_nodes(x: &[f64], w: &[f64], v: &[f64], poly: &LocalPoly, q: f64) -> f64 {
    let s: f64 = x
        .iter()
        .zip(w)
        .zip(v)
        .map(|((&xi, &wi), &vi)| wi * (vi - poly.eval(xi)).abs().powf(q))
        .sum();
    s.powf(1.0 / q)
}

/// The L²(J)-orthogonal projection of `f` onto polynomials of order `k`
/// (degree `< k`), used as the near-best `L^q` projector for every `q`.
pub fn near_best_poly(f: &dyn Func, j: Interval, k: usize, q: f64, rule: &QuadratureRule) -> Result<PolyApprox> {
    check_order(k)?;
    check_exponent(q)?;
    let j = Interval::checked(j.lo, j.hi)?;
    let nodes = rule.node_set(j, &f.breakpoints())?;
    let v: Vec<f64> = nodes.x.iter().map(|&x| f.eval(x)).collect();
    let poly = project_nodes(&nodes.x, &nodes.w, &v, j, k);
    let err = lq_error_nodes(&nodes.x, &nodes.w, &v, &poly, q);
    Ok(PolyApprox { interval: j, k, q, poly, err, near_best_constant: NEAR_BEST_BOUND })
}

/// Numerical `E_k(f, J)_q`: exact projection for `q = 2`, otherwise
/// iteratively reweighted least squares started from the L² solution.
/// Returns the best polynomial seen; `converged` is false when the error was
/// still moving after the iteration budget.
pub fn best_poly_error_oracle(
    f: &dyn Func,
    j: Interval,
    k: usize,
    q: f64,
    rule: &QuadratureRule,
) -> Result<OracleResult> {
    check_order(k)?;
    check_exponent(q)?;
    let j = Interval::checked(j.lo, j.hi)?;
    let nodes = rule.node_set(j, &f.breakpoints())?;
    let v: Vec<f64> = nodes.x.iter().map(|&x| f.eval(x)).collect();
    Ok(irls(&nodes.x, &nodes.w, &v, j, k, q))
}

pub(crate) fn irls(x: &[f64], w: &[f64], v: &[f64], j: Interval, k: usize, q: f64) -> OracleResult {
    let l2 = project_nodes(x, w, v, j, k);
    let l2_err = lq_error_nodes(x, w, v, &l2, q);
    if q == 2.0 || l2_err == 0.0 {
        return OracleResult { err: l2_err, poly: l2, converged: true, iterations: 0 };
    }
    let n = x.len();
    let mut basis = DMatrix::<f64>::zeros(n, k);
    let mut p = vec![0.0; k];
    for (i, &xi) in x.iter().enumerate() {
        legendre_values(local_t(j, xi), &mut p);
        for (c, &pc) in p.iter().enumerate() {
            basis[(i, c)] = pc;
        }
    }
    let vv = DVector::from_column_slice(v);
    let mut best = (l2_err, l2.clone());
    let mut cur = l2;
    let scale = l2_err / j.len().powf(1.0 / q);
    let delta = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let mut last = l2_err;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=IRLS_ITERATIONS {
        iterations = it;
        let mut a = DMatrix::<f64>::zeros(k, k);
        let mut b = DVector::<f64>::zeros(k);
        for i in 0..n {
            let r = (v[i] - cur.eval(x[i])).abs().max(delta);
            let wt = w[i] * r.powf(q - 2.0);
            let row = basis.row(i);
            for c1 in 0..k {
                b[c1] += wt * row[c1] * vv[i];
                for c2 in 0..k {
                    a[(c1, c2)] += wt * row[c1] * row[c2];
                }
            }
        }
        let Some(sol) = a.lu().solve(&b) else {
            break;
        };
        cur = LocalPoly::new(j.lo, j.hi, legendre_to_monomial(sol.as_slice()));
        let err = lq_error_nodes(x, w, v, &cur, q);
        if err < best.0 {
            best = (err, cur.clone());
        }
        if (last - err).abs() <= 1e-10 * best.0.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        last = err;
    }
    OracleResult { err: best.0, poly: best.1, converged, iterations }
}

/// Integration points for `x ↦ Δ_h^k f(x)` on `[J.lo, J.hi − k h]`: the
/// grid and breakpoints shifted by `−i h`, `i = 0..=k`.
fn delta_pieces(grid: &[f64], breaks: &[f64], j: Interval, k: usize, h: f64) -> Vec<f64> {
    let b = j.hi - k as f64 * h;
    let mut pts = vec![j.lo, b];
    let lo_g = grid.partition_point(|&g| g <= j.lo);
    let hi_g = grid.partition_point(|&g| g < j.hi);
    for i in 0..=k {
        let s = i as f64 * h;
        pts.extend(grid[lo_g..hi_g].iter().map(|g| g - s).filter(|&p| p > j.lo && p < b));
        pts.extend(breaks.iter().map(|g| g - s).filter(|&p| p > j.lo && p < b));
    }
    pts.sort_by(f64::total_cmp);
    let tiny = 1e-14 * (j.len()).max(1.0);
    pts.dedup_by(|a, b| (*a - *b).abs() <= tiny);
    pts
}

/// `k`-th forward difference `Δ_h^k f(x)`.
pub fn forward_difference(f: &dyn Func, x: f64, h: f64, k: usize) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for i in 0..=k {
        let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f.eval(x + i as f64 * h);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `‖Δ_h^k f‖_{L^q}` over `{x : [x, x + k h] ⊆ J}`.
pub fn delta_norm(f: &dyn Func, j: Interval, k: usize, q: f64, h: f64, rule: &QuadratureRule) -> Result<f64> {
    check_exponent(q)?;
    let j = Interval::checked(j.lo, j.hi)?;
    if j.hi - k as f64 * h <= j.lo {
        return Ok(0.0);
    }
    let pts = delta_pieces(rule.grid(), &f.breakpoints(), j, k, h);
    let nodes = rule.nodes_on_pieces(&pts);
    Ok(nodes.integrate(|x| forward_difference(f, x, h, k).abs().powf(q)).powf(1.0 / q))
}

/// Step sizes `(|J|/k)·2^{−i/4}`, `i = 1..=n`.
pub fn modulus_steps(j: Interval, k: usize, n: usize) -> Vec<f64> {
    let top = j.len() / k as f64;
    (1..=n).map(|i| top * (-(i as f64) / 4.0).exp2()).collect()
}

/// `ω_k(f, J)_q ≈ max_h ‖Δ_h^k f‖_{L^q}` over [`modulus_steps`]; a lower
/// bound for the supremum.
pub fn modulus(f: &dyn Func, j: Interval, k: usize, q: f64, h_samples: usize, rule: &QuadratureRule) -> Result<f64> {
    check_order(k)?;
    if h_samples < 16 {
        return Err(invalid("h_samples", format!("at least 16 step sizes required, got {h_samples}")));
    }
    let j = Interval::checked(j.lo, j.hi)?;
    let mut best: f64 = 0.0;
    for h in modulus_steps(j, k, h_samples) {
        best = best.max(delta_norm(f, j, k, q, h, rule)?);
    }
    Ok(best)
}

/// Near-best polynomial on every cell of level `m`, from window samples.
pub fn piecewise_projector_sampled(s: &GridSamples, p: &MultilevelPartition, m: usize) -> PiecewisePoly {
    let pieces = (0..p.cell_count(m))
        .map(|i| {
            let r = s.range(p.fine_index(m, i), p.fine_index(m, i + 1));
            project_nodes(&s.x[r.clone()], &s.w[r.clone()], &s.v[r], p.cell(m, i), p.k())
        })
        .collect();
    PiecewisePoly::new(pieces).expect("cells tile the window")
}

/// `𝒫_{m,q} f`: on each level-`m` cell the near-best polynomial of order
/// `k`. The same linear projector serves every `q`.
pub fn piecewise_projector(f: &dyn Func, p: &MultilevelPartition, m: usize, q: f64) -> Result<PiecewisePoly> {
    p.check_level(m)?;
    check_exponent(q)?;
    let s = GridSamples::new(f, p.rule());
    Ok(piecewise_projector_sampled(&s, p, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::FnFunc;
    use proptest::prelude::*;

    fn rule() -> QuadratureRule {
        let grid: Vec<f64> = (0..=192).map(|i| -1.0 + 3.0 * i as f64 / 192.0).collect();
        QuadratureRule::new(grid, 4).unwrap()
    }

    fn unit() -> Interval {
        Interval::new(0.0, 1.0)
    }

    fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> FnFunc<impl Fn(f64) -> f64 + Send + Sync> {
        FnFunc::new("f", Interval::new(-1.0, 2.0), vec![0.5], f)
    }

    #[test]
    fn legendre_monomials() {
        let m = legendre_to_monomial(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(m, vec![0.0, -1.5, 0.0, 2.5]);
        let m = legendre_to_monomial(&[1.0, 2.0, 2.0]);
        assert_eq!(m, vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn reproduces_polynomials() {
        let f = func(|x| 1.0 - 2.0 * x + 0.5 * x * x * x);
        let a = near_best_poly(&f, Interval::new(0.1, 0.8), 4, 1.0, &rule()).unwrap();
        assert!(a.err < 1e-13);
        assert!((a.poly.eval(0.3) - f.eval(0.3)).abs() < 1e-13);
        let o = best_poly_error_oracle(&f, Interval::new(0.1, 0.8), 4, 1.5, &rule()).unwrap();
        assert!(o.err < 1e-13);
        assert_eq!(modulus(&f, Interval::new(0.1, 0.8), 4, 1.0, 16, &rule()).unwrap() < 1e-12, true);
    }

    #[test]
    fn projection_of_identity() {
        let f = func(|x| x);
        let a = near_best_poly(&f, unit(), 1, 2.0, &rule()).unwrap();
        assert!((a.poly.eval(0.2) - 0.5).abs() < 1e-15);
        assert!((a.err - 1.0 / 12f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn oracle_examples() {
        let r = rule();
        let x = func(|x| x);
        let o = best_poly_error_oracle(&x, unit(), 1, 1.0, &r).unwrap();
        assert!((o.err - 0.25).abs() < 1e-6, "{}", o.err);
        assert!((o.poly.eval(0.0) - 0.5).abs() < 1e-6);
        let sq = func(|x| x * x);
        let o = best_poly_error_oracle(&sq, unit(), 2, 2.0, &r).unwrap();
        assert!((o.err - 1.0 / (6.0 * 5f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn absolute_value_kink() {
        // the L1 minimiser of |x − 1/2| over constants is the median 1/4,
        // with error ∫|y − 1/4| over y uniform on [0, 1/2] = 1/8
        let r = rule();
        let f = func(|x| (x - 0.5).abs());
        let o = best_poly_error_oracle(&f, unit(), 1, 1.0, &r).unwrap();
        assert!((o.err - 0.125).abs() < 1e-6, "{}", o.err);
        let a = near_best_poly(&f, unit(), 1, 1.0, &r).unwrap();
        assert!(a.err <= NEAR_BEST_BOUND * o.err);
        assert!((a.err - 0.125).abs() < 1e-12);
    }

    #[test]
    fn modulus_of_identity() {
        // ‖Δ_h x‖_{L1(0,1)} = h(1 − h), maximal at h = 1/2
        let f = func(|x| x);
        let w = modulus(&f, unit(), 1, 1.0, DEFAULT_H_SAMPLES, &rule()).unwrap();
        assert!((w - 0.25).abs() < 1e-14);
        let d = delta_norm(&f, unit(), 1, 1.0, 0.3, &rule()).unwrap();
        assert!((d - 0.21).abs() < 1e-14);
    }

    #[test]
    fn modulus_rejects_few_samples() {
        let f = func(|x| x);
        assert!(modulus(&f, unit(), 1, 1.0, 8, &rule()).is_err());
    }

    #[test]
    fn step_projector() {
        let p = MultilevelPartition::build_dyadic(Interval::new(-1.0, 2.0), 3, 2).unwrap();
        let step = FnFunc::new("step", Interval::new(0.0, 0.5), vec![0.0, 0.5], |x| {
            if x < 0.5 {
                1.0
            } else {
                0.0
            }
        });
        let pp = piecewise_projector(&step, &p, 3, 1.0).unwrap();
        let i = p.locate(3, 0.2);
        assert!(p.cell(3, i).lo >= 0.0 && p.cell(3, i).hi <= 0.5);
        assert!((pp.value(0.2) - 1.0).abs() < 1e-14);
        assert!(pp.value(-0.5).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn projector_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, lo in -0.9f64..0.5, len in 0.05f64..1.0) {
            let r = rule();
            let j = Interval::new(lo, lo + len);
            let f = func(|x| (5.0 * x).sin());
            let g = func(|x| (x - 0.5).abs().sqrt());
            let h = FnFunc::new("h", Interval::new(-1.0, 2.0), vec![0.5], move |x| {
                a * (5.0 * x).sin() + b * (x - 0.5).abs().sqrt()
            });
            let pf = near_best_poly(&f, j, 3, 2.0, &r).unwrap().poly;
            let pg = near_best_poly(&g, j, 3, 2.0, &r).unwrap().poly;
            let ph = near_best_poly(&h, j, 3, 2.0, &r).unwrap().poly;
            for (i, c) in ph.coeffs.iter().enumerate() {
                prop_assert!((c - (a * pf.coeffs[i] + b * pg.coeffs[i])).abs() < 1e-10);
            }
        }

        #[test]
        fn modulus_below_two_to_k_times_best_error(lo in -0.9f64..0.6, len in 0.1f64..1.2, k in 1usize..=3) {
            let r = rule();
            let j = Interval::new(lo, (lo + len).min(2.0));
            let f = func(|x| (x - 0.5).abs().powf(0.5) + x * x);
            let w = modulus(&f, j, k, 1.0, 16, &r).unwrap();
            let e = best_poly_error_oracle(&f, j, k, 1.0, &r).unwrap().err;
            prop_assert!(w <= (1u32 << k) as f64 * e + 1e-8);
        }
    }
}
