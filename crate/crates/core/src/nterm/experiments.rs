use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{fit_line, LineFit, RateReport, RateRow};
use super::{GreedyApproximator, ResidualNorm};
use crate::bspline::{decompose, synthesize};
use crate::corpus::smoothed_indicator;
use crate::error::{invalid, Result};
use crate::funcspace::{Func, GridSamples, Interval};
use crate::norms::{besov_norm_e, besov_norm_e_sampled, bmo_norm_sampled};
use crate::partition::MultilevelPartition;

pub const DEFAULT_N_GRID: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];

/// `ε = 2^{−3}, …, 2^{−9}`.
pub const DEFAULT_EPS_GRID: [f64; 7] = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125];

fn check_order(p: &MultilevelPartition, k: usize) -> Result<()> {
    if p.k() != k {
        return Err(invalid("k", format!("partition carries order {}, requested {k}", p.k())));
    }
    Ok(())
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_grid", "must be a nonempty strictly increasing list of positive integers"));
    }
    Ok(())
}

/// Greedy BMO error of `f` over `n_grid`, normalised by the E-form Besov
/// norm. The fit skips the first grid point.
pub fn jackson_rate_experiment(
    f: &dyn Func,
    p: &MultilevelPartition,
    alpha: f64,
    k: usize,
    q: f64,
    n_grid: &[usize],
) -> Result<RateReport> {
    check_order(p, k)?;
    check_grid(n_grid)?;
    let besov = besov_norm_e(f, p, alpha, k, q)?.value;
    let dec = decompose(f, p, q)?;
    let errors = GreedyApproximator::new(f, &dec, p)?.errors(n_grid, ResidualNorm::Bmo)?;
    let rows = n_grid
        .iter()
        .zip(errors)
        .map(|(&n, error)| RateRow { n, error, normalized: error * (n as f64).powf(alpha) / besov })
        .collect();
    RateReport::new("jackson", f.name(), alpha, k, q, rows, 1, Some(besov))
}

/// Greedy residuals of `f` in BMO and in the sup norm over `n_grid`.
pub fn linf_comparison(
    f: &dyn Func,
    p: &MultilevelPartition,
    alpha: f64,
    q: f64,
    n_grid: &[usize],
) -> Result<(RateReport, RateReport)> {
    check_grid(n_grid)?;
    let dec = decompose(f, p, q)?;
    let g = GreedyApproximator::new(f, &dec, p)?;
    let report = |norm: ResidualNorm, name: &str| -> Result<RateReport> {
        let errors = g.errors(n_grid, norm)?;
        let rows = n_grid
            .iter()
            .zip(errors)
            .map(|(&n, error)| RateRow { n, error, normalized: error * (n as f64).powf(alpha) })
            .collect();
        RateReport::new(name, f.name(), alpha, p.k(), q, rows, 1, None)
    };
    Ok((report(ResidualNorm::Bmo, "greedy_bmo")?, report(ResidualNorm::Sup, "greedy_sup")?))
}

/// Largest ratio `‖g‖_{B(E,q)} / (n^α ‖g‖_BMO)` over `trials` random
/// `n`-term splines per grid point: `n` distinct supports drawn uniformly
/// from all levels, standard normal coefficients. Every `(n, trial)` pair
/// has its own random stream, so the report does not depend on scheduling.
pub fn bernstein_experiment(
    p: &MultilevelPartition,
    alpha: f64,
    q: f64,
    trials: usize,
    n_grid: &[usize],
    seed: u64,
) -> Result<RateReport> {
    check_grid(n_grid)?;
    if trials == 0 {
        return Err(invalid("trials", "at least one trial is required"));
    }
    let offsets: Vec<usize> = (0..=p.max_level())
        .scan(0, |acc, m| {
            let o = *acc;
            *acc += p.support_count(m);
            Some(o)
        })
        .collect();
    let total: usize = (0..=p.max_level()).map(|m| p.support_count(m)).sum();
    if let Some(&n) = n_grid.iter().find(|&&n| n > total) {
        return Err(invalid("n_grid", format!("n = {n} exceeds the {total} available supports")));
    }
    let tasks: Vec<(usize, usize)> = (0..n_grid.len()).flat_map(|i| (0..trials).map(move |t| (i, t))).collect();
    let ratios: Vec<f64> = tasks
        .par_iter()
        .map(|&(i, t)| {
            let n = n_grid[i];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((i as u64) << 32) | t as u64);
            let mut levels: Vec<Vec<f64>> = (0..=p.max_level()).map(|m| vec![0.0; p.support_count(m)]).collect();
            for flat in sample(&mut rng, total, n) {
                let m = offsets.partition_point(|&o| o <= flat) - 1;
                levels[m][flat - offsets[m]] = StandardNormal.sample(&mut rng);
            }
            let g = synthesize(p, &levels)?;
            let s = GridSamples::new(&g, p.rule());
            let b = besov_norm_e_sampled(&s, p, alpha, p.k(), q)?.value;
            let o = bmo_norm_sampled(&s, p, q)?.value;
            Ok(b / ((n as f64).powf(alpha) * o))
        })
        .collect::<Result<_>>()?;
    let rows = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let worst = ratios[i * trials..(i + 1) * trials].iter().fold(0.0f64, |a, &r| a.max(r));
            RateRow { n, error: worst, normalized: worst }
        })
        .collect();
    let name = format!("random_{}_term_k{}", trials, p.k());
    RateReport::new("bernstein", &name, alpha, p.k(), q, rows, 0, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub eps: f64,
    pub ln_inv_eps: f64,
    pub value: f64,
}

/// E-form Besov value (`α = 1`, `k = 2`, `q = 1`) of the indicator of
/// `[0, 1]` with linear ramps of width `ε`, against `ln(1/ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub rows: Vec<CounterexampleRow>,
    pub fit: Option<LineFit>,
    pub increasing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl CounterexampleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.config_hash {
            out.push_str(&format!("# config_hash={h}\n"));
        }
        out.push_str("eps,ln_inv_eps,value\n");
        for r in &self.rows {
            out.push_str(&format!("{:e},{:e},{:e}\n", r.eps, r.ln_inv_eps, r.value));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn counterexample_growth(p: &MultilevelPartition, eps_grid: &[f64]) -> Result<CounterexampleReport> {
    check_order(p, 2)?;
    let finest = p.finest_knots().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let plateau = Interval::new(0.0, 1.0);
    for &eps in eps_grid {
        if !(eps >= finest) {
            return Err(invalid("eps", format!("{eps} is below the finest cell length {finest}")));
        }
        if !p.window().contains_interval(&Interval::new(-eps, 1.0 + eps)) {
            return Err(invalid("eps", format!("ramps of width {eps} leave the window {}", p.window())));
        }
    }
    let rows: Vec<CounterexampleRow> = eps_grid
        .par_iter()
        .map(|&eps| {
            let s = smoothed_indicator(plateau, eps);
            let value = besov_norm_e(&s, p, 1.0, 2, 1.0)?.value;
            Ok(CounterexampleRow { eps, ln_inv_eps: -eps.ln(), value })
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.ln_inv_eps).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let increasing = sorted.windows(2).all(|w| w[1].value > w[0].value);
    Ok(CounterexampleReport { fit: fit_line(&x, &y), rows, increasing, config_hash: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::resolve;

    fn part(l: usize, k: usize) -> MultilevelPartition {
        MultilevelPartition::build_dyadic(Interval::new(-1.0, 2.0), l, k).unwrap()
    }

    #[test]
    fn spline_targets_are_exact_from_the_start() {
        let p = part(6, 2);
        let mut levels: Vec<Vec<f64>> = (0..=6).map(|m| vec![0.0; p.support_count(m)]).collect();
        levels[0][..4].copy_from_slice(&[0.5, -1.0, 2.0, 0.25]);
        let f = synthesize(&p, &levels).unwrap();
        let r = jackson_rate_experiment(&f, &p, 1.0, 2, 2.0, &[4, 8, 16]).unwrap();
        assert!(r.rows.iter().all(|row| row.error <= 1e-8), "{:?}", r.rows);
    }

    #[test]
    fn doubling_doubles_errors() {
        let p = part(6, 2);
        let f = resolve("cusp05", &p).unwrap().func;
        let g = crate::funcspace::LinearCombination { a: 2.0, f: f.clone(), b: 0.0, g: f.clone() };
        let a = jackson_rate_experiment(&f, &p, 0.5, 2, 2.0, &[4, 16]).unwrap();
        let b = jackson_rate_experiment(&g, &p, 0.5, 2, 2.0, &[4, 16]).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((y.error - 2.0 * x.error).abs() < 1e-12 * y.error);
            assert!((y.normalized - x.normalized).abs() < 1e-12 * y.normalized);
        }
    }

    #[test]
    fn bernstein_single_term_is_scale_free_and_deterministic() {
        let p = part(4, 2);
        let a = bernstein_experiment(&p, 1.0, 2.0, 3, &[1, 2, 4], 11).unwrap();
        let b = bernstein_experiment(&p, 1.0, 2.0, 3, &[1, 2, 4], 11).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| r.error.is_finite() && r.error > 0.0));
    }

    #[test]
    fn counterexample_rejects_sub_grid_eps() {
        let p = part(4, 2);
        assert!(counterexample_growth(&p, &[1e-4]).is_err());
        assert!(counterexample_growth(&part(4, 3), &[0.125]).is_err());
    }
}
