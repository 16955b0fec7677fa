//! Nonlinear n-term approximation: greedy thresholding of decomposition
//! coefficients, the sequence-space analogue with an exhaustive oracle, and
//! rate experiments.

mod experiments;
mod report;
mod sequence;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::{synthesize, SplineDecomposition};
use crate::error::{invalid, Result};
use crate::funcspace::{Func, GridSamples, PiecewisePoly};
use crate::norms::bmo_norm_sampled;
use crate::partition::{MultilevelPartition, SupportIndex};

pub use self::experiments::{
    bernstein_experiment, counterexample_growth, jackson_rate_experiment, linf_comparison, CounterexampleReport,
    CounterexampleRow, DEFAULT_EPS_GRID, DEFAULT_N_GRID,
};
pub use self::report::{fit_line, LineFit, RateReport, RateRow};
pub use self::sequence::{
    greedy_indices, sigma_n_gq_greedy, sigma_n_gq_oracle, GqBenchReport, GqBenchRow, MAX_ORACLE_NODES,
};

/// Norm in which an n-term residual is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualNorm {
    /// Mean-oscillation estimate over the partition's interval family.
    Bmo,
    /// Maximum over the quadrature nodes.
    Sup,
}

/// `g = Σ_{Q∈Λ} b_Q φ_Q` from at most `n` decomposition coefficients.
#[derive(Clone, Debug)]
pub struct NTermApproximant {
    pub n: usize,
    pub selected: Vec<SupportIndex>,
    pub coefficients: Vec<f64>,
    pub spline: PiecewisePoly,
    pub error: f64,
    pub norm: ResidualNorm,
    /// `n` exceeded the coefficient count; `spline` is the full
    /// reconstruction.
    pub exhausted: bool,
}

/// Nonzero coefficients by decreasing magnitude, ties broken by level then
/// position.
pub fn greedy_order(dec: &SplineDecomposition) -> Vec<(SupportIndex, f64)> {
    let mut all: Vec<(SupportIndex, f64)> = dec.iter().filter(|(_, c)| *c != 0.0).collect();
    // `iter` yields level-then-position order and the sort is stable
    all.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    all
}

/// Greedy n-term approximation of one function, reusing its samples and
/// coefficient ordering across `n`.
pub struct GreedyApproximator<'a> {
    p: &'a MultilevelPartition,
    order: Vec<(SupportIndex, f64)>,
    total: usize,
    samples: GridSamples,
    q: f64,
}

impl<'a> GreedyApproximator<'a> {
    pub fn new(f: &dyn Func, dec: &SplineDecomposition, p: &'a MultilevelPartition) -> Result<Self> {
        dec.validate(p)?;
        Ok(Self { p, order: greedy_order(dec), total: dec.count(), samples: GridSamples::new(f, p.rule()), q: dec.q })
    }

    /// Number of nonzero coefficients available for selection.
    pub fn available(&self) -> usize {
        self.order.len()
    }

    pub fn approximant(&self, n: usize, norm: ResidualNorm) -> Result<NTermApproximant> {
        if n == 0 {
            return Err(invalid("n", "number of terms must be at least 1"));
        }
        let chosen = &self.order[..n.min(self.order.len())];
        let mut levels: Vec<Vec<f64>> =
            (0..=self.p.max_level()).map(|m| vec![0.0; self.p.support_count(m)]).collect();
        for &(q, c) in chosen {
            levels[q.m][q.j] = c;
        }
        let spline = synthesize(self.p, &levels)?;
        let residual = self.samples.map_values(|x, v| v - spline.value(x));
        let error = match norm {
            ResidualNorm::Bmo => bmo_norm_sampled(&residual, self.p, self.q)?.value,
            ResidualNorm::Sup => residual.v.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        };
        Ok(NTermApproximant {
            n,
            selected: chosen.iter().map(|&(q, _)| q).collect(),
            coefficients: chosen.iter().map(|&(_, c)| c).collect(),
            spline,
            error,
            norm,
            exhausted: n > self.total,
        })
    }

    /// Residual errors for every `n` in `ns`, in order.
    pub fn errors(&self, ns: &[usize], norm: ResidualNorm) -> Result<Vec<f64>> {
        ns.par_iter().map(|&n| Ok(self.approximant(n, norm)?.error)).collect()
    }
}

/// Keep the `n` largest coefficients of `dec` and measure `f − g` in BMO
/// (order `dec.q`).
pub fn greedy_nterm(
    f: &dyn Func,
    dec: &SplineDecomposition,
    p: &MultilevelPartition,
    n: usize,
) -> Result<NTermApproximant> {
    GreedyApproximator::new(f, dec, p)?.approximant(n, ResidualNorm::Bmo)
}

/// Same selection as [`greedy_nterm`], residual measured in the sup norm.
pub fn linf_nterm(f: &dyn Func, dec: &SplineDecomposition, p: &MultilevelPartition, n: usize) -> Result<NTermApproximant> {
    GreedyApproximator::new(f, dec, p)?.approximant(n, ResidualNorm::Sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::{decompose, reconstruct, BSplineBasis};
    use crate::corpus::resolve;
    use crate::funcspace::Interval;

    fn part(l: usize, k: usize) -> MultilevelPartition {
        MultilevelPartition::build_dyadic(Interval::new(-1.0, 2.0), l, k).unwrap()
    }

    #[test]
    fn single_base_bspline_is_recovered_with_one_term() {
        let p = part(5, 2);
        for (m, j) in [(0, 2), (0, 3)] {
            let phi = BSplineBasis::new(&p, m).unwrap().bspline_piecewise(j);
            let dec = decompose(&phi, &p, 2.0).unwrap();
            let a = greedy_nterm(&phi, &dec, &p, 1).unwrap();
            assert!(a.error <= 1e-8, "m={m} j={j} error {}", a.error);
            assert_eq!(a.selected, vec![SupportIndex { m, j }]);
        }
        // a finer B-spline spreads over coarser levels but is recovered in full
        let phi = BSplineBasis::new(&p, 3).unwrap().bspline_piecewise(20);
        let dec = decompose(&phi, &p, 2.0).unwrap();
        let a = greedy_nterm(&phi, &dec, &p, dec.count()).unwrap();
        assert!(a.error <= 1e-8);
    }

    #[test]
    fn full_selection_matches_reconstruction() {
        let p = part(5, 2);
        let f = resolve("cusp05", &p).unwrap().func;
        let dec = decompose(&f, &p, 2.0).unwrap();
        let g = GreedyApproximator::new(&f, &dec, &p).unwrap();
        let full = g.approximant(dec.count() + 1, ResidualNorm::Bmo).unwrap();
        assert!(full.exhausted);
        let r = reconstruct(&dec, &p).unwrap();
        let s = GridSamples::new(&f, p.rule()).map_values(|x, v| v - r.value(x));
        let direct = bmo_norm_sampled(&s, &p, 2.0).unwrap().value;
        assert!((full.error - direct).abs() < 1e-14);
        assert!(!g.approximant(dec.count(), ResidualNorm::Bmo).unwrap().exhausted);
    }

    #[test]
    fn selection_is_scale_invariant_and_errors_homogeneous() {
        let p = part(5, 2);
        let f = resolve("cusp05", &p).unwrap().func;
        let f2 = crate::funcspace::LinearCombination { a: -2.5, f: f.clone(), b: 0.0, g: f.clone() };
        let d1 = decompose(&f, &p, 2.0).unwrap();
        let d2 = decompose(&f2, &p, 2.0).unwrap();
        for n in [3, 10, 40] {
            let a = greedy_nterm(&f, &d1, &p, n).unwrap();
            let b = greedy_nterm(&f2, &d2, &p, n).unwrap();
            assert_eq!(a.selected, b.selected);
            assert!((b.error - 2.5 * a.error).abs() < 1e-12 * b.error);
        }
    }

    #[test]
    fn oscillation_is_at_most_twice_the_sup() {
        let p = part(5, 2);
        let f = resolve("smoothstep", &p).unwrap().func;
        let dec = decompose(&f, &p, 1.0).unwrap();
        let g = GreedyApproximator::new(&f, &dec, &p).unwrap();
        for n in [1, 4, 16, 64] {
            let b = g.approximant(n, ResidualNorm::Bmo).unwrap().error;
            let s = g.approximant(n, ResidualNorm::Sup).unwrap().error;
            assert!(b <= 2.0 * s + 1e-15, "n={n}: {b} vs {s}");
        }
    }

    #[test]
    fn ties_break_by_level_then_position() {
        let p = part(2, 2);
        let mut dec = SplineDecomposition::zeros(&p, 2.0);
        dec.details[1][3] = -1.0;
        dec.details[0][7] = 1.0;
        dec.base[2] = 1.0;
        dec.details[0][2] = 0.5;
        let o: Vec<SupportIndex> = greedy_order(&dec).into_iter().map(|(q, _)| q).collect();
        let idx = |m, j| SupportIndex { m, j };
        assert_eq!(o, vec![idx(0, 2), idx(1, 7), idx(2, 3), idx(1, 2)]);
    }
}
