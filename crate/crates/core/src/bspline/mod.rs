//! Normalized B-splines over a partition level, de Boor–Fix dual functionals,
//! quasi-interpolants and the multilevel spline decomposition.

mod decompose;
mod refine;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::funcspace::{Func, GridSamples, Interval, LocalPoly, PiecewisePoly};
use crate::localpoly::piecewise_projector_sampled;
use crate::partition::{MultilevelPartition, SupportIndex};

pub use self::decompose::{
    decompose, decompose_both_paths, detail_coefficients_direct, reconstruct, synthesize, synthesize_finest,
    SplineDecomposition,
};
pub use self::refine::{refine_coefficients, refine_coefficients_direct};

/// Largest spline order supported.
pub const MAX_ORDER: usize = 8;

/// `ν`-th derivative of the normalized B-spline with knots `t[0] ≤ … ≤ t[k]`
/// (order `k = t.len() − 1`), right-continuous, zero outside `[t[0], t[k])`.
pub fn bspline_derivative(t: &[f64], x: f64, nu: usize) -> f64 {
    let k = t.len() - 1;
    if x < t[0] || x >= t[k] {
        return 0.0;
    }
    if nu >= k {
        return 0.0;
    }
    if nu == 0 {
        return bspline_value(t, x);
    }
    let kf = (k - 1) as f64;
    let mut acc = 0.0;
    let dl = t[k - 1] - t[0];
    if dl > 0.0 {
        acc += bspline_derivative(&t[..k], x, nu - 1) / dl;
    }
    let dr = t[k] - t[1];
    if dr > 0.0 {
        acc -= bspline_derivative(&t[1..], x, nu - 1) / dr;
    }
    kf * acc
}

/// Cox–de Boor value of the normalized B-spline with knots `t`.
pub fn bspline_value(t: &[f64], x: f64) -> f64 {
    let k = t.len() - 1;
    assert!(k >= 1 && k <= MAX_ORDER, "unsupported spline order {k}");
    if x < t[0] || x >= t[k] {
        return 0.0;
    }
    let mut n = [0.0f64; MAX_ORDER];
    for i in 0..k {
        n[i] = if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
    }
    for r in 2..=k {
        for i in 0..=k - r {
            let mut v = 0.0;
            let dl = t[i + r - 1] - t[i];
            if dl > 0.0 {
                v += (x - t[i]) / dl * n[i];
            }
            let dr = t[i + r] - t[i + 1];
            if dr > 0.0 {
                v += (t[i + r] - x) / dr * n[i + 1];
            }
            n[i] = v;
        }
    }
    n[0]
}

/// B-splines of one partition level, indexed by the left knot `j` of their
/// support.
#[derive(Clone, Copy, Debug)]
pub struct BSplineBasis<'a> {
    partition: &'a MultilevelPartition,
    m: usize,
}

impl<'a> BSplineBasis<'a> {
    pub fn new(partition: &'a MultilevelPartition, m: usize) -> Result<Self> {
        partition.check_level(m)?;
        if partition.k() > MAX_ORDER {
            return Err(invalid("k", format!("spline order {} exceeds {MAX_ORDER}", partition.k())));
        }
        Ok(Self { partition, m })
    }

    pub fn partition(&self) -> &'a MultilevelPartition {
        self.partition
    }

    pub fn level(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn len(&self) -> usize {
        self.partition.support_count(self.m)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn knots(&self, j: usize) -> &'a [f64] {
        self.partition.support_knots(SupportIndex { m: self.m, j })
    }

    pub fn support(&self, j: usize) -> Interval {
        self.partition.support_interval(SupportIndex { m: self.m, j })
    }

    pub fn eval(&self, j: usize, x: f64) -> f64 {
        bspline_value(self.knots(j), x)
    }

    pub fn derivative(&self, j: usize, x: f64, nu: usize) -> f64 {
        bspline_derivative(self.knots(j), x, nu)
    }

    /// Cell of `Q_j` holding the evaluation point of the dual functional.
    pub fn xi_cell(&self, j: usize) -> usize {
        j + self.k() / 2
    }

    /// Evaluation point `ξ_Q`: midpoint of [`xi_cell`](Self::xi_cell).
    pub fn xi(&self, j: usize) -> f64 {
        self.partition.cell(self.m, self.xi_cell(j)).mid()
    }

    /// Taylor coefficients of `φ_j` on level cell `i` in that cell's local
    /// variable.
    fn local_piece(&self, j: usize, i: usize, out: &mut [f64]) {
        let cell = self.partition.cell(self.m, i);
        let c = cell.mid();
        let h = 0.5 * cell.len();
        let t = self.knots(j);
        let mut scale = 1.0;
        for (nu, o) in out.iter_mut().enumerate() {
            if nu > 0 {
                scale *= h / nu as f64;
            }
            *o = bspline_derivative(t, c, nu) * scale;
        }
    }

    /// `Σ_j coeffs[j] φ_j` as a piecewise polynomial on the level's knots.
    pub fn to_piecewise(&self, coeffs: &[f64]) -> Result<PiecewisePoly> {
        if coeffs.len() != self.len() {
            return Err(invalid(
                "coeffs",
                format!("level {} has {} B-splines, got {} coefficients", self.m, self.len(), coeffs.len()),
            ));
        }
        let k = self.k();
        let cells = self.partition.cell_count(self.m);
        let mut buf = vec![0.0; k];
        let mut pieces = Vec::with_capacity(cells);
        for i in 0..cells {
            let cell = self.partition.cell(self.m, i);
            let mut c = vec![0.0; k];
            let first = (i + 1).saturating_sub(k);
            let last = i.min(self.len().saturating_sub(1));
            for j in first..=last {
                if coeffs[j] == 0.0 {
                    continue;
                }
                self.local_piece(j, i, &mut buf);
                for (cv, b) in c.iter_mut().zip(&buf) {
                    *cv += coeffs[j] * b;
                }
            }
            pieces.push(LocalPoly::new(cell.lo, cell.hi, c));
        }
        PiecewisePoly::new(pieces)
    }

    /// The single B-spline `φ_j` as a piecewise polynomial.
    pub fn bspline_piecewise(&self, j: usize) -> PiecewisePoly {
        let mut c = vec![0.0; self.len()];
        c[j] = 1.0;
        self.to_piecewise(&c).expect("coefficient count matches")
    }

    /// `ϖ_Q^{(n)}(ξ_Q)` for `n = 0..k`, with
    /// `ϖ_Q(x) = Π_{ν=j+1}^{j+k−1}(x − x_{m,ν}) / (k−1)!`.
    fn dual_weights(&self, j: usize) -> Vec<f64> {
        let k = self.k();
        let xi = self.xi(j);
        let t = self.knots(j);
        // coefficients of Π (y + ξ − t_ν) in powers of y = x − ξ
        let mut c = vec![0.0; k];
        c[0] = 1.0;
        for &tv in &t[1..k] {
            let shift = xi - tv;
            for d in (0..k).rev() {
                let lower = if d > 0 { c[d - 1] } else { 0.0 };
                c[d] = c[d] * shift + lower;
            }
        }
        let kfact: f64 = (1..k).map(|v| v as f64).product();
        let mut fact = 1.0;
        c.iter()
            .enumerate()
            .map(|(n, &cn)| {
                if n > 0 {
                    fact *= n as f64;
                }
                cn * fact / kfact
            })
            .collect()
    }

    /// de Boor–Fix functional
    /// `a_Q(S) = Σ_{ν<k} (−1)^ν ϖ_Q^{(k−ν−1)}(ξ_Q) S^{(ν)}(ξ_Q)`.
    pub fn deboor_fix(&self, j: usize, s: &PiecewisePoly) -> Result<f64> {
        let k = self.k();
        let xi = self.xi(j);
        let w = self.dual_weights(j);
        let mut acc = 0.0;
        for nu in 0..k {
            let d = s.derivative(xi, nu)?;
            let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * w[k - nu - 1] * d;
        }
        Ok(acc)
    }

    /// Coefficients of `T_m S = Σ_Q a_Q(S) φ_Q`.
    pub fn quasi_interp_spline(&self, s: &PiecewisePoly) -> Result<Vec<f64>> {
        (0..self.len()).map(|j| self.deboor_fix(j, s)).collect()
    }

    /// Both sides of the stable-basis equivalence for a coefficient vector.
    pub fn stable_basis_check(&self, coeffs: &[f64], p: f64, tau: f64) -> Result<StableBasisReport> {
        crate::funcspace::check_exponent(p)?;
        if !(tau > 0.0) {
            return Err(invalid("tau", format!("must be positive, got {tau}")));
        }
        let s = self.to_piecewise(coeffs)?;
        let rule = self.partition.rule();
        let mut lhs = 0.0;
        for i in 0..self.partition.cell_count(self.m) {
            let nodes = rule.node_set(self.partition.cell(self.m, i), &[])?;
            let v = nodes.integrate(|x| s.value(x).abs().powf(p)).powf(1.0 / p);
            lhs += v.powf(tau);
        }
        let mut rhs = 0.0;
        for (j, &b) in coeffs.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            let phi = self.bspline_piecewise(j);
            let nodes = rule.node_set(self.support(j), &[])?;
            let norm = nodes.integrate(|x| phi.value(x).abs().powf(p)).powf(1.0 / p);
            rhs += (b.abs() * norm).powf(tau);
        }
        let lhs = lhs.powf(1.0 / tau);
        let rhs = rhs.powf(1.0 / tau);
        let degenerate = rhs == 0.0;
        Ok(StableBasisReport { lhs, rhs, ratio: if degenerate { f64::NAN } else { lhs / rhs }, degenerate })
    }
}

/// Result of [`BSplineBasis::stable_basis_check`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StableBasisReport {
    /// `(Σ_I ‖S‖_{L^p(I)}^τ)^{1/τ}`.
    pub lhs: f64,
    /// `(Σ_Q ‖b_Q φ_Q‖_p^τ)^{1/τ}`.
    pub rhs: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

/// Coefficients of `T_m(𝒫_{m,q} f)` from window samples of `f`.
pub fn quasi_interp_sampled(s: &GridSamples, p: &MultilevelPartition, m: usize) -> Result<Vec<f64>> {
    let proj = piecewise_projector_sampled(s, p, m);
    BSplineBasis::new(p, m)?.quasi_interp_spline(&proj)
}

/// Coefficients of `T_{m,q} f = T_m(𝒫_{m,q} f)`.
pub fn quasi_interp(f: &dyn Func, p: &MultilevelPartition, m: usize, q: f64) -> Result<Vec<f64>> {
    p.check_level(m)?;
    crate::funcspace::check_exponent(q)?;
    let s = GridSamples::new(f, p.rule());
    quasi_interp_sampled(&s, p, m)
}

pub(crate) fn level_mismatch(m: usize, expected: usize, got: usize) -> Error {
    Error::InvalidDecomposition(format!("level {m} expects {expected} coefficients, found {got}"))
}
