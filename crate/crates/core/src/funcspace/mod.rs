//! Function representations over the window, composite Gauss quadrature and
//! exact piecewise-polynomial arithmetic.
//!
//! Everything that integrates goes through [`QuadratureRule`]: the window is
//! cut at the finest-level knots and at the breakpoints a function declares,
//! and a fixed-order Gauss–Legendre rule is applied on every piece. A function
//! whose pieces are polynomials of degree below `2 * order` is therefore
//! integrated exactly.

mod csv;
mod piecewise;
mod quadrature;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use self::csv::{parse_samples_csv, read_samples_csv, SampledFunc};
pub use self::piecewise::{LocalPoly, PiecewisePoly};
pub use self::quadrature::{gauss_legendre, GridSamples, NodeSet, QuadratureRule, Samples, DEFAULT_GAUSS_ORDER};

/// A closed interval `[lo, hi]` of the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Like [`Interval::new`] but rejects empty or reversed intervals.
    pub fn checked(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::DegenerateInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then_some(Interval { lo, hi })
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A real function on the window.
///
/// `eval` must be deterministic and vanish outside `support`. Points where
/// the function or one of its derivatives jumps should be listed by
/// `breakpoints`; quadrature splits there.
pub trait Func: Send + Sync {
    fn eval(&self, x: f64) -> f64;

    fn support(&self) -> Interval;

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn name(&self) -> &str {
        "anonymous"
    }

    /// Exact piecewise-polynomial form, when there is one.
    fn as_piecewise(&self) -> Option<&PiecewisePoly> {
        None
    }

    /// `false` for functions reconstructed from samples.
    fn is_exact(&self) -> bool {
        true
    }
}

impl<F: Func + ?Sized> Func for Arc<F> {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> Interval {
        (**self).support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn as_piecewise(&self) -> Option<&PiecewisePoly> {
        (**self).as_piecewise()
    }
    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
}

impl<F: Func + ?Sized> Func for &F {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> Interval {
        (**self).support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn as_piecewise(&self) -> Option<&PiecewisePoly> {
        (**self).as_piecewise()
    }
    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
}

/// A closure with metadata.
pub struct FnFunc<F> {
    name: String,
    support: Interval,
    breakpoints: Vec<f64>,
    f: F,
}

impl<F> FnFunc<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, support: Interval, breakpoints: Vec<f64>, f: F) -> Self {
        Self { name: name.into(), support, breakpoints, f }
    }
}

impl<F> Func for FnFunc<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64) -> f64 {
        if self.support.contains(x) {
            (self.f)(x)
        } else {
            0.0
        }
    }
    fn support(&self) -> Interval {
        self.support
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
    fn name(&self) -> &str {
        &self.name
    }
}

/// `a * f + b * g`.
pub struct LinearCombination<A, B> {
    pub a: f64,
    pub f: A,
    pub b: f64,
    pub g: B,
}

impl<A: Func, B: Func> LinearCombination<A, B> {
    pub fn difference(f: A, g: B) -> Self {
        Self { a: 1.0, f, b: -1.0, g }
    }
}

impl<A: Func, B: Func> Func for LinearCombination<A, B> {
    fn eval(&self, x: f64) -> f64 {
        self.a * self.f.eval(x) + self.b * self.g.eval(x)
    }
    fn support(&self) -> Interval {
        let s = self.f.support();
        let t = self.g.support();
        Interval::new(s.lo.min(t.lo), s.hi.max(t.hi))
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.f.breakpoints();
        b.extend(self.g.breakpoints());
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
    fn is_exact(&self) -> bool {
        self.f.is_exact() && self.g.is_exact()
    }
}

/// `∫_J f` with the composite rule.
pub fn integrate(f: &dyn Func, j: Interval, rule: &QuadratureRule) -> Result<f64> {
    let nodes = rule.node_set(j, &f.breakpoints())?;
    Ok(nodes.integrate(|x| f.eval(x)))
}

/// `(∫_J |f|^q)^{1/q}`, `q >= 1`.
pub fn lq_norm(f: &dyn Func, j: Interval, q: f64, rule: &QuadratureRule) -> Result<f64> {
    check_exponent(q)?;
    let nodes = rule.node_set(j, &f.breakpoints())?;
    Ok(nodes.integrate(|x| f.eval(x).abs().powf(q)).powf(1.0 / q))
}

/// `(1/|J|) ∫_J f`.
pub fn average(f: &dyn Func, j: Interval, rule: &QuadratureRule) -> Result<f64> {
    let j = Interval::checked(j.lo, j.hi)?;
    Ok(integrate(f, j, rule)? / j.len())
}

pub(crate) fn check_exponent(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        return Err(invalid("q", format!("exponent must be >= 1, got {q}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule() -> QuadratureRule {
        let grid: Vec<f64> = (0..=300).map(|i| -1.0 + 3.0 * i as f64 / 300.0).collect();
        QuadratureRule::new(grid, DEFAULT_GAUSS_ORDER).unwrap()
    }

    fn unit() -> Interval {
        Interval::new(0.0, 1.0)
    }

    #[test]
    fn integrates_constants_and_squares() {
        let r = rule();
        let one = FnFunc::new("one", Interval::new(-1.0, 2.0), vec![], |_| 1.0);
        let sq = FnFunc::new("sq", Interval::new(-1.0, 2.0), vec![], |x| x * x);
        assert!((integrate(&one, unit(), &r).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate(&sq, unit(), &r).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn bump_matches_refined_reference() {
        let bump = FnFunc::new("bump", unit(), vec![0.0, 1.0], |x: f64| {
            let t = 2.0 * x - 1.0;
            if t.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - t * t)).exp()
            }
        });
        let coarse = integrate(&bump, unit(), &rule()).unwrap();
        // refine-and-compare: 16x finer grid, higher order
        let fine_grid: Vec<f64> = (0..=4800).map(|i| -1.0 + 3.0 * i as f64 / 4800.0).collect();
        let fine = QuadratureRule::new(fine_grid, 8).unwrap();
        let reference = integrate(&bump, unit(), &fine).unwrap();
        assert!((coarse - reference).abs() < 1e-9, "{coarse} vs {reference}");
    }

    #[test]
    fn norms_and_averages() {
        let r = rule();
        let one = FnFunc::new("one", Interval::new(-1.0, 2.0), vec![], |_| 1.0);
        let id = FnFunc::new("x", Interval::new(-1.0, 2.0), vec![], |x| x);
        assert!((lq_norm(&one, unit(), 2.0, &r).unwrap() - 1.0).abs() < 1e-14);
        assert!((lq_norm(&id, unit(), 1.0, &r).unwrap() - 0.5).abs() < 1e-14);
        assert!((average(&id, unit(), &r).unwrap() - 0.5).abs() < 1e-14);
        let c = FnFunc::new("c", Interval::new(-1.0, 2.0), vec![], |_| -3.25);
        assert!((average(&c, Interval::new(-0.3, 1.7), &r).unwrap() + 3.25).abs() < 1e-13);
        let step = FnFunc::new("step", Interval::new(0.0, 0.5), vec![0.0, 0.5], |x| {
            if (0.0..0.5).contains(&x) {
                1.0
            } else {
                0.0
            }
        });
        let avg = average(&step, Interval::new(-1.0, 2.0), &r).unwrap();
        assert!((avg - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_exponent_and_outside_window() {
        let r = rule();
        let one = FnFunc::new("one", Interval::new(-1.0, 2.0), vec![], |_| 1.0);
        assert!(lq_norm(&one, unit(), 0.5, &r).is_err());
        assert!(integrate(&one, Interval::new(-2.0, 0.0), &r).is_err());
        assert!(average(&one, Interval::new(0.3, 0.3), &r).is_err());
    }

    #[test]
    fn additivity_and_monotonicity() {
        let r = rule();
        let f = FnFunc::new("f", Interval::new(-1.0, 2.0), vec![], |x: f64| (3.0 * x).sin() + x);
        let whole = integrate(&f, Interval::new(-0.37, 1.61), &r).unwrap();
        let left = integrate(&f, Interval::new(-0.37, 0.52), &r).unwrap();
        let right = integrate(&f, Interval::new(0.52, 1.61), &r).unwrap();
        assert!((whole - left - right).abs() <= 1e-12 * whole.abs().max(1.0));
        let small = lq_norm(&f, Interval::new(0.1, 0.6), 1.5, &r).unwrap();
        let big = lq_norm(&f, Interval::new(0.0, 0.9), 1.5, &r).unwrap();
        assert!(small <= big);
    }
}
