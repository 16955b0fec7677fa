use std::f64::consts::PI;

use super::{Func, Interval};
use crate::error::{invalid, Error, Result};

/// Gauss points per piece; exact through degree 7.
pub const DEFAULT_GAUSS_ORDER: usize = 4;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre order must be positive");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss rule over the finest grid of a partition.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    grid: Vec<f64>,
    order: usize,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(grid: Vec<f64>, order: usize) -> Result<Self> {
        if grid.len() < 2 {
            return Err(invalid("grid", "needs at least two knots"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid", "knots must be strictly increasing"));
        }
        if order == 0 {
            return Err(invalid("order", "must be positive"));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(order);
        Ok(Self { grid, order, ref_nodes, ref_weights })
    }

    pub fn window(&self) -> Interval {
        Interval::new(self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of nodes of the plain rule over the whole window.
    pub fn node_count(&self) -> usize {
        (self.grid.len() - 1) * self.order
    }

    fn check_inside(&self, j: Interval) -> Result<Interval> {
        let w = self.window();
        let slack = 1e-12 * w.len();
        if !(j.lo.is_finite() && j.hi.is_finite()) || j.hi < j.lo {
            return Err(Error::DegenerateInterval { lo: j.lo, hi: j.hi });
        }
        if j.lo < w.lo - slack || j.hi > w.hi + slack {
            return Err(Error::OutsideWindow { lo: j.lo, hi: j.hi, a: w.lo, b: w.hi });
        }
        Ok(Interval::new(j.lo.max(w.lo), j.hi.min(w.hi)))
    }

    /// Sorted split points of `J`: its endpoints, the grid knots and the
    /// extra breakpoints lying strictly inside.
    pub fn split_points(&self, j: Interval, extra: &[f64]) -> Result<Vec<f64>> {
        let j = self.check_inside(j)?;
        let mut pts = Vec::with_capacity(16);
        pts.push(j.lo);
        let start = self.grid.partition_point(|&g| g <= j.lo);
        let end = self.grid.partition_point(|&g| g < j.hi);
        pts.extend_from_slice(&self.grid[start..end.max(start)]);
        pts.extend(extra.iter().copied().filter(|&b| b > j.lo && b < j.hi));
        pts.push(j.hi);
        pts.sort_by(f64::total_cmp);
        let tiny = 1e-14 * self.window().len();
        let mut out: Vec<f64> = Vec::with_capacity(pts.len());
        for p in pts {
            match out.last() {
                Some(&last) if p - last <= tiny => {
                    // keep the exact endpoint of J
                    if p == j.hi {
                        *out.last_mut().unwrap() = p;
                    }
                }
                _ => out.push(p),
            }
        }
        if out.len() == 1 {
            out.push(j.hi);
        }
        Ok(out)
    }

    /// Nodes and weights for `∫_J`, split at grid knots and `extra`.
    pub fn node_set(&self, j: Interval, extra: &[f64]) -> Result<NodeSet> {
        let pts = self.split_points(j, extra)?;
        Ok(self.nodes_on_pieces(&pts))
    }

    /// Nodes for consecutive pieces `[pts[i], pts[i+1]]`.
    pub fn nodes_on_pieces(&self, pts: &[f64]) -> NodeSet {
        let pieces = pts.len().saturating_sub(1);
        let mut x = Vec::with_capacity(pieces * self.order);
        let mut w = Vec::with_capacity(pieces * self.order);
        for p in pts.windows(2) {
            let half = 0.5 * (p[1] - p[0]);
            if half <= 0.0 {
                continue;
            }
            let mid = 0.5 * (p[0] + p[1]);
            for (t, wt) in self.ref_nodes.iter().zip(&self.ref_weights) {
                x.push(mid + half * t);
                w.push(half * wt);
            }
        }
        NodeSet { x, w }
    }

    /// Nodes over the whole window split at `extra`, with an index from each
    /// grid knot to the first node at or after it.
    pub fn window_samples(&self, extra: &[f64]) -> Samples {
        let pts = self
            .split_points(self.window(), extra)
            .expect("window is inside itself");
        let nodes = self.nodes_on_pieces(&pts);
        let knot_index = self
            .grid
            .iter()
            .map(|&g| nodes.x.partition_point(|&x| x < g))
            .collect();
        Samples { nodes, knot_index }
    }
}

/// Quadrature nodes `x` with weights `w`.
#[derive(Clone, Debug, Default)]
pub struct NodeSet {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Window-wide node set plus, for each grid knot `i`, the index of the first
/// node to its right; nodes of `[grid[i], grid[j]]` are
/// `knot_index[i]..knot_index[j]`.
#[derive(Clone, Debug)]
pub struct Samples {
    pub nodes: NodeSet,
    pub knot_index: Vec<usize>,
}

/// Values of a function at the window-wide nodes of a rule.
#[derive(Clone, Debug)]
pub struct GridSamples {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    knot_index: Vec<usize>,
}

impl GridSamples {
    pub fn new(f: &dyn Func, rule: &QuadratureRule) -> Self {
        let s = rule.window_samples(&f.breakpoints());
        let v = s.nodes.x.iter().map(|&x| f.eval(x)).collect();
        Self { x: s.nodes.x, w: s.nodes.w, v, knot_index: s.knot_index }
    }

    /// Same nodes with each value `v` at `x` replaced by `map(x, v)`.
    pub fn map_values(&self, map: impl Fn(f64, f64) -> f64) -> Self {
        let v = self.x.iter().zip(&self.v).map(|(&x, &v)| map(x, v)).collect();
        Self { x: self.x.clone(), w: self.w.clone(), v, knot_index: self.knot_index.clone() }
    }

    /// Node indices inside `[grid[i0], grid[i1]]`.
    pub fn range(&self, i0: usize, i1: usize) -> std::ops::Range<usize> {
        self.knot_index[i0]..self.knot_index[i1]
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}
