use serde::{Deserialize, Serialize};

use super::{Func, Interval};
use crate::error::{invalid, Error, Result};

/// A polynomial on `[lo, hi]` in the local variable
/// `t = (2x − lo − hi) / (hi − lo) ∈ [−1, 1]`: `p(x) = Σ c_i t^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalPoly {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl LocalPoly {
    pub fn new(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        debug_assert!(hi > lo);
        Self { lo, hi, coeffs }
    }

    pub fn zero(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, vec![0.0])
    }

    pub fn constant(lo: f64, hi: f64, c: f64) -> Self {
        Self::new(lo, hi, vec![c])
    }

    /// Build from ordinary monomial coefficients `p(x) = Σ m_i x^i`.
    pub fn from_monomials(lo: f64, hi: f64, m: &[f64]) -> Self {
        // x = mid + half * t
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let coeffs = compose_affine(m, mid, half);
        Self::new(lo, hi, coeffs)
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    #[inline]
    pub fn local(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / (self.hi - self.lo)
    }

    /// Value at `x`, extrapolating outside `[lo, hi]`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, self.local(x))
    }

    /// `ν`-th derivative in `x`.
    pub fn derivative(&self, x: f64, nu: usize) -> f64 {
        if nu == 0 {
            return self.eval(x);
        }
        if nu >= self.coeffs.len() {
            return 0.0;
        }
        let t = self.local(x);
        let mut acc = 0.0;
        for i in (nu..self.coeffs.len()).rev() {
            let fall: f64 = (i + 1 - nu..=i).map(|v| v as f64).product();
            acc = acc * t + self.coeffs[i] * fall;
        }
        acc * (2.0 / (self.hi - self.lo)).powi(nu as i32)
    }

    /// `∫_a^b p(x) dx` (any `a`, `b`).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let ta = self.local(a);
        let tb = self.local(b);
        let anti = |t: f64| {
            let mut acc = 0.0;
            for (i, c) in self.coeffs.iter().enumerate().rev() {
                acc = acc * t + c / (i as f64 + 1.0);
            }
            acc * t
        };
        0.5 * (self.hi - self.lo) * (anti(tb) - anti(ta))
    }

    /// The same polynomial expressed on `[lo, hi]` (any interval).
    pub fn reexpand(&self, lo: f64, hi: f64) -> LocalPoly {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let alpha = self.local(mid);
        let beta = 2.0 * half / (self.hi - self.lo);
        LocalPoly::new(lo, hi, compose_affine(&self.coeffs, alpha, beta))
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    /// `self + s * other` on `self`'s interval.
    pub fn add_scaled(&mut self, s: f64, other: &LocalPoly) {
        let o = if other.lo == self.lo && other.hi == self.hi {
            other.clone()
        } else {
            other.reexpand(self.lo, self.hi)
        };
        if o.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(o.coeffs.len(), 0.0);
        }
        for (c, oc) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *c += s * oc;
        }
    }
}

#[inline]
fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

/// Coefficients of `p(α + β s)` in `s`.
fn compose_affine(c: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n.max(1)];
    // Horner in polynomial arithmetic: out = out * (α + β s) + c_i
    let mut len = 0usize;
    for &ci in c.iter().rev() {
        let mut next = vec![0.0; len + 1];
        for d in 0..len {
            next[d] += out[d] * alpha;
            next[d + 1] += out[d] * beta;
        }
        next[0] += ci;
        len += 1;
        out[..len].copy_from_slice(&next);
    }
    out
}

/// Piecewise polynomial over strictly increasing breakpoints; right
/// continuous at interior breakpoints, zero outside `[breaks[0], breaks[n]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    pieces: Vec<LocalPoly>,
}

impl PiecewisePoly {
    pub fn new(pieces: Vec<LocalPoly>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(invalid("pieces", "at least one piece is required"));
        }
        let mut breaks = Vec::with_capacity(pieces.len() + 1);
        breaks.push(pieces[0].lo);
        for (i, p) in pieces.iter().enumerate() {
            if p.hi <= p.lo {
                return Err(Error::DegenerateInterval { lo: p.lo, hi: p.hi });
            }
            if i > 0 && p.lo != pieces[i - 1].hi {
                return Err(invalid(
                    "pieces",
                    format!("piece {i} starts at {} but piece {} ends at {}", p.lo, i - 1, pieces[i - 1].hi),
                ));
            }
            breaks.push(p.hi);
        }
        Ok(Self { breaks, pieces })
    }

    /// The zero function on the given breakpoints.
    pub fn zeros(breaks: &[f64]) -> Self {
        let pieces = breaks.windows(2).map(|w| LocalPoly::zero(w[0], w[1])).collect();
        Self::new(pieces).expect("breakpoints must be strictly increasing")
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[LocalPoly] {
        &self.pieces
    }

    pub fn pieces_mut(&mut self) -> &mut [LocalPoly] {
        &mut self.pieces
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(LocalPoly::degree).max().unwrap_or(0)
    }

    /// Index of the piece used for `x` under right continuity; the last
    /// piece also covers the right endpoint.
    pub fn piece_index(&self, x: f64) -> Option<usize> {
        let n = self.pieces.len();
        if x < self.breaks[0] || x > self.breaks[n] {
            return None;
        }
        let i = self.breaks.partition_point(|&b| b <= x);
        Some(i.saturating_sub(1).min(n - 1))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.piece_index(x) {
            Some(i) => self.pieces[i].eval(x),
            None => 0.0,
        }
    }

    /// `ν`-th derivative taken from the piece containing `x`; fails when `x`
    /// is an interior breakpoint, where the choice of piece is ambiguous.
    pub fn derivative(&self, x: f64, nu: usize) -> Result<f64> {
        let i = self.piece_index(x).ok_or(Error::OutsideWindow {
            lo: x,
            hi: x,
            a: self.breaks[0],
            b: self.breaks[self.breaks.len() - 1],
        })?;
        let interior = &self.breaks[1..self.breaks.len() - 1];
        if interior.binary_search_by(|b| b.total_cmp(&x)).is_ok() {
            return Err(Error::PointOnBreakpoint { x });
        }
        Ok(self.pieces[i].derivative(x, nu))
    }

    /// Exact `∫_a^b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integral(b, a);
        }
        let mut total = 0.0;
        for p in &self.pieces {
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            if hi > lo {
                total += p.integral(lo, hi);
            }
        }
        total
    }

    /// Re-expressed over the union of its breakpoints with `extra` (points
    /// outside the domain are ignored).
    pub fn refined(&self, extra: &[f64]) -> PiecewisePoly {
        let d = self.domain();
        let mut pts: Vec<f64> = self.breaks.clone();
        pts.extend(extra.iter().copied().filter(|&x| x > d.lo && x < d.hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() == self.breaks.len() {
            return self.clone();
        }
        let mut pieces = Vec::with_capacity(pts.len() - 1);
        let mut src = 0;
        for w in pts.windows(2) {
            while self.pieces[src].hi <= w[0] {
                src += 1;
            }
            let p = &self.pieces[src];
            if p.lo == w[0] && p.hi == w[1] {
                pieces.push(p.clone());
            } else {
                pieces.push(p.reexpand(w[0], w[1]));
            }
        }
        PiecewisePoly::new(pieces).expect("refinement keeps breakpoints increasing")
    }

    /// `self + s * other`; both must share the same domain.
    pub fn add_scaled(&self, s: f64, other: &PiecewisePoly) -> Result<PiecewisePoly> {
        if self.domain() != other.domain() {
            return Err(invalid(
                "other",
                format!("domain {} differs from {}", other.domain(), self.domain()),
            ));
        }
        let mut out = if self.breaks == other.breaks {
            self.clone()
        } else {
            self.refined(&other.breaks)
        };
        let o = if out.breaks == other.breaks {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.refined(&out.breaks))
        };
        for (p, q) in out.pieces.iter_mut().zip(&o.pieces) {
            p.add_scaled(s, q);
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> PiecewisePoly {
        let mut out = self.clone();
        out.pieces.iter_mut().for_each(|p| p.scale(s));
        out
    }

    /// Largest `|value|` over `per_piece` equally spaced points per piece,
    /// endpoints included (left limits at right endpoints).
    pub fn sampled_sup(&self, per_piece: usize) -> f64 {
        let n = per_piece.max(2);
        let mut best = 0.0f64;
        for p in &self.pieces {
            for i in 0..n {
                let x = p.lo + (p.hi - p.lo) * i as f64 / (n - 1) as f64;
                best = best.max(p.eval(x).abs());
            }
        }
        best
    }
}

impl Func for PiecewisePoly {
    fn eval(&self, x: f64) -> f64 {
        self.value(x)
    }

    fn support(&self) -> Interval {
        self.domain()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }

    fn name(&self) -> &str {
        "piecewise"
    }

    fn as_piecewise(&self) -> Option<&PiecewisePoly> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{integrate, lq_norm, QuadratureRule};
    use proptest::prelude::*;

    fn cubic() -> LocalPoly {
        // x^3 - 2x + 1 on [0.2, 1.1]
        LocalPoly::from_monomials(0.2, 1.1, &[1.0, -2.0, 0.0, 1.0])
    }

    #[test]
    fn monomial_conversion_and_derivatives() {
        let p = cubic();
        for &x in &[0.2, 0.5, 0.77, 1.1, 2.0] {
            let e = x * x * x - 2.0 * x + 1.0;
            assert!((p.eval(x) - e).abs() < 1e-13);
            assert!((p.derivative(x, 1) - (3.0 * x * x - 2.0)).abs() < 1e-12);
            assert!((p.derivative(x, 2) - 6.0 * x).abs() < 1e-11);
            assert!((p.derivative(x, 3) - 6.0).abs() < 1e-10);
            assert_eq!(p.derivative(x, 4), 0.0);
        }
    }

    #[test]
    fn integral_matches_antiderivative() {
        let p = cubic();
        let anti = |x: f64| x.powi(4) / 4.0 - x * x + x;
        assert!((p.integral(0.3, 0.9) - (anti(0.9) - anti(0.3))).abs() < 1e-14);
    }

    #[test]
    fn reexpansion_preserves_values() {
        let p = cubic();
        let q = p.reexpand(-0.5, 0.35);
        for i in 0..=20 {
            let x = -0.5 + 0.85 * i as f64 / 20.0;
            assert!((p.eval(x) - q.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn right_continuous_and_zero_outside() {
        let pp = PiecewisePoly::new(vec![
            LocalPoly::constant(0.0, 0.5, 1.0),
            LocalPoly::constant(0.5, 1.0, 2.0),
        ])
        .unwrap();
        assert_eq!(pp.value(0.5), 2.0);
        assert_eq!(pp.value(1.0), 2.0);
        assert_eq!(pp.value(-0.1), 0.0);
        assert_eq!(pp.value(1.1), 0.0);
        assert!(matches!(pp.derivative(0.5, 0), Err(Error::PointOnBreakpoint { .. })));
        assert!((pp.integral(0.25, 0.75) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_gaps() {
        let r = PiecewisePoly::new(vec![LocalPoly::zero(0.0, 0.5), LocalPoly::zero(0.6, 1.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn quadrature_is_exact_on_piecewise_cubics() {
        let breaks: Vec<f64> = vec![-1.0, -0.3, 0.1, 0.45, 1.2, 2.0];
        let pieces = breaks
            .windows(2)
            .enumerate()
            .map(|(i, w)| LocalPoly::new(w[0], w[1], vec![1.0 - i as f64, 0.5, -2.0 * i as f64, 0.3]))
            .collect();
        let pp = PiecewisePoly::new(pieces).unwrap();
        let grid: Vec<f64> = (0..=30).map(|i| -1.0 + 3.0 * i as f64 / 30.0).collect();
        let rule = QuadratureRule::new(grid, 4).unwrap();
        for &(a, b) in &[(-1.0, 2.0), (-0.77, 0.9), (0.1, 0.45)] {
            let exact = pp.integral(a, b);
            let quad = integrate(&pp, Interval::new(a, b), &rule).unwrap();
            assert!((exact - quad).abs() <= 1e-12 * exact.abs().max(1.0), "{a} {b}");
        }
        // absolute-value invariance
        let neg = pp.scaled(-1.0);
        let j = Interval::new(-1.0, 2.0);
        let a = lq_norm(&pp, j, 1.5, &rule).unwrap();
        let b = lq_norm(&neg, j, 1.5, &rule).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn add_scaled_is_pointwise(
            c1 in prop::collection::vec(-3.0f64..3.0, 4),
            c2 in prop::collection::vec(-3.0f64..3.0, 3),
            s in -2.0f64..2.0,
            x in 0.0f64..1.0,
        ) {
            let a = PiecewisePoly::new(vec![
                LocalPoly::new(0.0, 0.4, c1.clone()),
                LocalPoly::new(0.4, 1.0, c2.clone()),
            ]).unwrap();
            let b = PiecewisePoly::new(vec![
                LocalPoly::new(0.0, 0.7, c2),
                LocalPoly::new(0.7, 1.0, c1),
            ]).unwrap();
            let sum = a.add_scaled(s, &b).unwrap();
            prop_assert_eq!(sum.breaks(), &[0.0, 0.4, 0.7, 1.0][..]);
            let expect = a.value(x) + s * b.value(x);
            prop_assert!((sum.value(x) - expect).abs() < 1e-11);
        }
    }
}
