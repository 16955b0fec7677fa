//! Seeded measurement runs behind the frozen equivalence constants.
//!
//! Each routine is deterministic for a given argument list; [`calibrate`]
//! runs all of them at the v1 settings and collects the constants that
//! [`crate::constants`] freezes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::{decompose, synthesize, BSplineBasis};
use crate::constants::{Constants, TauConstant, CONSTANTS_VERSION, HEADROOM};
use crate::corpus::{default_corpus, resolve, CORPUS_IDS};
use crate::error::Result;
use crate::funcspace::{gauss_legendre, Func, GridSamples, Interval, LocalPoly};
use crate::localpoly::{best_poly_error_oracle, modulus, DEFAULT_H_SAMPLES};
use crate::norms::{besov_norm_e, besov_norm_modulus, besov_norm_q, bmo_norm, gq_norm, ltau_norm, CoeffSequence};
use crate::nterm::{
    bernstein_experiment, jackson_rate_experiment, sigma_n_gq_greedy, GqBenchReport, RateReport, DEFAULT_N_GRID,
};
use crate::partition::{MultilevelPartition, NestedStructure};

pub const WINDOW: Interval = Interval { lo: -1.0, hi: 2.0 };

/// Jackson targets: corpus id and smoothness.
pub const JACKSON_TARGETS: [(&str, f64); 3] = [("cusp05", 0.5), ("sawtooth_2", 1.0), ("sawtooth_3", 1.0)];
pub const JACKSON_LEVELS: usize = 10;
pub const JACKSON_Q: f64 = 2.0;

pub const BERNSTEIN_N_GRID: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];
pub const BERNSTEIN_LEVELS: usize = 8;
pub const BERNSTEIN_ALPHA: f64 = 0.5;
pub const BERNSTEIN_Q: f64 = 2.0;

pub const EMBEDDING_TAUS: [f64; 3] = [0.5, 1.0, 2.0];

pub fn dyadic(levels: usize, k: usize) -> Result<MultilevelPartition> {
    MultilevelPartition::build_dyadic(WINDOW, levels, k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyRow {
    pub id: String,
    pub k: usize,
    pub q: f64,
    pub interval: Interval,
    pub modulus: f64,
    pub best_error: f64,
}

impl WhitneyRow {
    /// `ω_k − 2^k E_k`; nonpositive up to quadrature error.
    pub fn upper_margin(&self) -> f64 {
        self.modulus - (self.k as f64).exp2() * self.best_error
    }

    /// `E_k / ω_k`, `None` when both vanish.
    pub fn reverse_ratio(&self) -> Option<f64> {
        (self.modulus > 1e-12).then(|| self.best_error / self.modulus)
    }
}

/// Corpus × `k ∈ {2, 3}` × `q ∈ {1, 2}` × `count` random intervals inside
/// `[−1/4, 5/4]`.
pub fn whitney_rows(levels: usize, count: usize, seed: u64) -> Result<Vec<WhitneyRow>> {
    let p = dyadic(levels, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intervals: Vec<Interval> = (0..count)
        .map(|_| {
            let lo = rng.random_range(-0.25..0.9);
            let len = rng.random_range(0.05..0.6);
            Interval::new(lo, (lo + len).min(1.25))
        })
        .collect();
    let corpus = default_corpus(&p)?;
    let mut tasks = Vec::new();
    for c in &corpus {
        for k in [2usize, 3] {
            for q in [1.0, 2.0] {
                for &j in &intervals {
                    tasks.push((c, k, q, j));
                }
            }
        }
    }
    tasks
        .par_iter()
        .map(|&(c, k, q, j)| {
            let f: &dyn Func = &c.func;
            Ok(WhitneyRow {
                id: c.entry.id.clone(),
                k,
                q,
                interval: j,
                modulus: modulus(f, j, k, q, DEFAULT_H_SAMPLES, p.rule())?,
                best_error: best_poly_error_oracle(f, j, k, q, p.rule())?.err,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovRatioRow {
    pub id: String,
    pub k: usize,
    pub levels: usize,
    pub alpha: f64,
    pub q: f64,
    pub e_form: f64,
    pub q_over_e: f64,
    /// Present when `τ = 1/α ≥ 1`.
    pub modulus_over_e: Option<f64>,
}

/// Q-form and modulus-form Besov norms relative to the E-form for every
/// corpus entry except `const1` (whose E-form vanishes), `α ∈ {1/2, 1}`,
/// `q ∈ {1, 2}`.
pub fn besov_ratio_rows(levels: usize, k: usize) -> Result<Vec<BesovRatioRow>> {
    let p = dyadic(levels, k)?;
    let ids: Vec<&str> = CORPUS_IDS.iter().copied().filter(|id| *id != "const1").collect();
    let per_fn: Vec<Vec<BesovRatioRow>> = ids
        .par_iter()
        .map(|id| {
            let f = resolve(id, &p)?.func;
            let mut rows = Vec::new();
            let decs = [decompose(&f, &p, 1.0)?, decompose(&f, &p, 2.0)?];
            for alpha in [0.5, 1.0] {
                let modulus = if alpha <= 1.0 { Some(besov_norm_modulus(&f, &p, alpha, k)?.value) } else { None };
                for (dec, q) in decs.iter().zip([1.0, 2.0]) {
                    let e = besov_norm_e(&f, &p, alpha, k, q)?.value;
                    rows.push(BesovRatioRow {
                        id: id.to_string(),
                        k,
                        levels,
                        alpha,
                        q,
                        e_form: e,
                        q_over_e: besov_norm_q(dec, alpha)?.value / e,
                        modulus_over_e: modulus.map(|m| m / e),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_fn.into_iter().flatten().collect())
}

/// Greedy BMO rates of [`JACKSON_TARGETS`] with `k = 2`.
pub fn jackson_reports(levels: usize) -> Result<Vec<RateReport>> {
    let p = dyadic(levels, 2)?;
    JACKSON_TARGETS
        .iter()
        .map(|&(id, alpha)| {
            let f = resolve(id, &p)?.func;
            jackson_rate_experiment(&f, &p, alpha, 2, JACKSON_Q, &DEFAULT_N_GRID)
        })
        .collect()
}

/// Bernstein ratios for `k = 3` (continuously differentiable splines) and
/// `k = 2` (merely continuous ones).
pub fn bernstein_reports(trials: usize, seed: u64) -> Result<Vec<RateReport>> {
    [3usize, 2]
        .iter()
        .map(|&k| {
            let p = dyadic(BERNSTEIN_LEVELS, k)?;
            bernstein_experiment(&p, BERNSTEIN_ALPHA, BERNSTEIN_Q, trials, &BERNSTEIN_N_GRID, seed)
        })
        .collect()
}

/// Random sequence on a structure: standard normal entries damped by
/// `2^{−s·level}`, `s` uniform in `[0, 1]` per sequence.
pub fn random_sequence(structure: &NestedStructure, rng: &mut ChaCha8Rng) -> CoeffSequence {
    let s: f64 = rng.random_range(0.0..1.0);
    let values = structure
        .nodes()
        .iter()
        .map(|n| {
            let z: f64 = StandardNormal.sample(rng);
            z * (-s * n.level as f64).exp2()
        })
        .collect();
    CoeffSequence { values }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceJacksonRow {
    pub tau: f64,
    pub trial: usize,
    /// `max_n σ_n^{greedy}(h)_{g^1} n^{1/τ} / ‖h‖_{ℓ^τ}`.
    pub worst: f64,
}

/// `count` random sequences per `τ ∈ {1/2, 1}` on the depth-`depth` dyadic
/// structure, every `n` from 1 to the node count.
pub fn sequence_jackson_rows(depth: usize, count: usize, seed: u64) -> Result<Vec<SequenceJacksonRow>> {
    let s = NestedStructure::dyadic(depth);
    let mut rows = Vec::new();
    for (ti, tau) in [0.5, 1.0].into_iter().enumerate() {
        for trial in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((ti as u64) << 32) | trial as u64);
            let h = random_sequence(&s, &mut rng);
            let norm = ltau_norm(&h.values, tau)?;
            let mut worst: f64 = 0.0;
            for n in 1..=s.len() {
                let r = sigma_n_gq_greedy(&s, &h, n, 1.0)?.1;
                worst = worst.max(r * (n as f64).powf(1.0 / tau) / norm);
            }
            rows.push(SequenceJacksonRow { tau, trial, worst });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub terms: usize,
    pub bmo: f64,
    /// `ℓ^τ` norms of the coefficients, one per [`EMBEDDING_TAUS`] entry.
    pub ltau: Vec<f64>,
    pub gq1: f64,
}

/// `count` random finite combinations `Σ c_Q φ_Q` (1 to 32 supports drawn
/// from all levels, standard normal coefficients), BMO with `q = 1`.
pub fn embedding_rows(levels: usize, count: usize, seed: u64) -> Result<Vec<EmbeddingRow>> {
    let p = dyadic(levels, 2)?;
    let structure = p.nested_structure();
    let total = structure.len();
    (0..count)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let terms = rng.random_range(1..=32usize);
            let mut flat = vec![0.0; total];
            for i in rand::seq::index::sample(&mut rng, total, terms) {
                flat[i] = StandardNormal.sample(&mut rng);
            }
            let mut levels_c = Vec::with_capacity(p.max_level() + 1);
            for m in 0..=p.max_level() {
                levels_c.push(flat[structure.level_range(m)].to_vec());
            }
            let g = synthesize(&p, &levels_c)?;
            let h = CoeffSequence::new(&structure, flat)?;
            Ok(EmbeddingRow {
                terms,
                bmo: bmo_norm(&g, &p, 1.0)?.value,
                ltau: EMBEDDING_TAUS.iter().map(|&t| ltau_norm(&h.values, t)).collect::<Result<_>>()?,
                gq1: gq_norm(&structure, &h, 1.0)?,
            })
        })
        .collect()
}

/// `(id, bmo_2 / bmo_1)` over the corpus, skipping functions without
/// oscillation.
pub fn john_nirenberg_rows(levels: usize) -> Result<Vec<(String, f64)>> {
    let p = dyadic(levels, 2)?;
    let mut out = Vec::new();
    for c in default_corpus(&p)? {
        let b1 = bmo_norm(&c.func, &p, 1.0)?.value;
        if b1 < 1e-12 {
            continue;
        }
        out.push((c.entry.id.clone(), bmo_norm(&c.func, &p, 2.0)?.value / b1));
    }
    Ok(out)
}

/// `|I|^{−1}‖f‖_{L^1(I)} / ‖f‖_BMO` for functions vanishing outside
/// `I = [0, 1]`: corpus entries supported there plus `count` random splines
/// with supports inside `I`.
pub fn l1_bmo_rows(levels: usize, count: usize, seed: u64) -> Result<Vec<(String, f64)>> {
    let p = dyadic(levels, 2)?;
    let unit = Interval::new(0.0, 1.0);
    let mut funcs: Vec<(String, std::sync::Arc<dyn Func>)> = default_corpus(&p)?
        .into_iter()
        .filter(|c| c.entry.id != "const1")
        .map(|c| (c.entry.id.clone(), c.func))
        .collect();
    for i in 0..count {
        let terms = 1 + (i % 12);
        let s = crate::corpus::random_spline(&p, terms, seed.wrapping_add(i as u64))?;
        funcs.push((format!("random_spline_{i}"), std::sync::Arc::new(s)));
    }
    funcs
        .par_iter()
        .map(|(id, f)| {
            let s = GridSamples::new(f, p.rule());
            let l1: f64 = s.x.iter().zip(&s.w).zip(&s.v).filter(|((x, _), _)| unit.contains(**x)).map(|((_, w), v)| w * v.abs()).sum();
            Ok((id.clone(), l1 / unit.len() / bmo_norm(f, &p, 1.0)?.value))
        })
        .collect()
}

/// Ratios `(Σ_I ‖S‖_{L^2(I)}²)^{1/2} / (Σ_Q ‖b_Q φ_Q‖_2²)^{1/2}` for random
/// `±1` coefficient vectors at every level.
pub fn stable_basis_ratios(levels: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    let p = dyadic(levels, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for m in 0..=p.max_level() {
        let basis = BSplineBasis::new(&p, m)?;
        for _ in 0..4 {
            let c: Vec<f64> = (0..basis.len()).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            out.push(basis.stable_basis_check(&c, 2.0, 2.0)?.ratio);
        }
    }
    Ok(out)
}

/// `(|J|^{−1} ∫_J |g|^p)^{1/p}` by composite Gauss–Legendre on 64 panels;
/// for `p = ∞` the maximum over 4097 equispaced points.
pub fn mean_norm(g: impl Fn(f64) -> f64, j: Interval, p: f64) -> f64 {
    if p.is_infinite() {
        return (0..=4096).map(|i| g(j.lo + j.len() * i as f64 / 4096.0).abs()).fold(0.0, f64::max);
    }
    let (t, w) = gauss_legendre(8);
    let panels = 64;
    let h = j.len() / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let mid = j.lo + (i as f64 + 0.5) * h;
        for (t, w) in t.iter().zip(&w) {
            acc += 0.5 * h * w * g(mid + 0.5 * h * t).abs().powf(p);
        }
    }
    (acc / j.len()).powf(1.0 / p)
}

/// Polynomial of order `k` on a random `J ⊂ [−1, 2]` with standard normal
/// coefficients in the local variable.
pub fn random_poly(rng: &mut ChaCha8Rng, k: usize) -> LocalPoly {
    let lo = rng.random_range(-1.0..1.5);
    let len = rng.random_range(0.01..(2.0 - lo));
    LocalPoly::new(lo, lo + len, (0..k).map(|_| StandardNormal.sample(rng)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyNormRow {
    pub poly: LocalPoly,
    /// Normalized `L^1`, `L^2`, `L^∞` norms.
    pub norms: [f64; 3],
    /// Same for `|J| P′`.
    pub derivative_norms: [f64; 3],
}

/// `count` random polynomials of order `1 + i mod 4`.
pub fn poly_norm_rows(count: usize, seed: u64) -> Vec<PolyNormRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let poly = random_poly(&mut rng, 1 + i % 4);
            let j = poly.interval();
            let norms = [1.0, 2.0, f64::INFINITY].map(|p| mean_norm(|x| poly.eval(x), j, p));
            let derivative_norms = [1.0, 2.0, f64::INFINITY].map(|p| mean_norm(|x| j.len() * poly.derivative(x, 1), j, p));
            PolyNormRow { poly, norms, derivative_norms }
        })
        .collect()
}

/// v1 calibration settings.
pub const WHITNEY_INTERVALS: usize = 10;
pub const WHITNEY_SEED: u64 = 2;
pub const CORPUS_LEVELS: usize = 8;
pub const BERNSTEIN_TRIALS: usize = 20;
pub const BERNSTEIN_SEED: u64 = 1;
pub const SEQUENCE_DEPTH: usize = 6;
pub const SEQUENCE_COUNT: usize = 100;
pub const SEQUENCE_SEED: u64 = 5;
pub const GQ_BENCH_DEPTH: usize = 4;
pub const GQ_BENCH_TRIALS: usize = 100;
pub const GQ_BENCH_SEED: u64 = 7;
pub const EMBEDDING_COUNT: usize = 100;
pub const EMBEDDING_SEED: u64 = 3;
pub const L1_BMO_COUNT: usize = 24;
pub const L1_BMO_SEED: u64 = 4;
pub const STABLE_BASIS_SEED: u64 = 6;
pub const POLY_COUNT: usize = 200;
pub const POLY_SEED: u64 = 8;

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn range_of(v: impl IntoIterator<Item = f64>) -> [f64; 2] {
    v.into_iter().fold([f64::INFINITY, 0.0], |[lo, hi], x| [lo.min(x), hi.max(x)])
}

/// Measure every frozen constant at the v1 settings.
pub fn calibrate() -> Result<Constants> {
    let whitney = whitney_rows(CORPUS_LEVELS, WHITNEY_INTERVALS, WHITNEY_SEED)?;
    let besov: Vec<BesovRatioRow> =
        [2usize, 3].iter().map(|&k| besov_ratio_rows(CORPUS_LEVELS, k)).collect::<Result<Vec<_>>>()?.concat();
    let jackson = jackson_reports(JACKSON_LEVELS)?;
    let bernstein = bernstein_reports(BERNSTEIN_TRIALS, BERNSTEIN_SEED)?;
    let seq = sequence_jackson_rows(SEQUENCE_DEPTH, SEQUENCE_COUNT, SEQUENCE_SEED)?;
    let bench = GqBenchReport::run(GQ_BENCH_DEPTH, GQ_BENCH_TRIALS, GQ_BENCH_SEED, 1.0)?;
    let emb = embedding_rows(CORPUS_LEVELS, EMBEDDING_COUNT, EMBEDDING_SEED)?;
    let jn = john_nirenberg_rows(CORPUS_LEVELS)?;
    let l1 = l1_bmo_rows(CORPUS_LEVELS, L1_BMO_COUNT, L1_BMO_SEED)?;
    let stable = stable_basis_ratios(CORPUS_LEVELS, 2, STABLE_BASIS_SEED)?;
    let polys = poly_norm_rows(POLY_COUNT, POLY_SEED);
    Ok(Constants {
        version: CONSTANTS_VERSION,
        headroom: HEADROOM,
        whitney_reverse: max_of(whitney.iter().filter_map(WhitneyRow::reverse_ratio)),
        besov_q_over_e: range_of(besov.iter().map(|r| r.q_over_e)),
        besov_modulus_over_e: range_of(besov.iter().filter_map(|r| r.modulus_over_e)),
        jackson_normalized: max_of(jackson.iter().map(RateReport::max_normalized)),
        bernstein_ratio: max_of(bernstein.iter().map(RateReport::max_normalized)),
        sequence_jackson: max_of(seq.iter().map(|r| r.worst)),
        greedy_oracle_factor: 8.0f64.max(bench.max_ratio),
        greedy_oracle_measured: bench.max_ratio,
        embedding_ltau: EMBEDDING_TAUS
            .iter()
            .enumerate()
            .map(|(i, &tau)| TauConstant { tau, value: max_of(emb.iter().map(|r| r.bmo / r.ltau[i])) })
            .collect(),
        embedding_gq: max_of(emb.iter().map(|r| r.bmo / r.gq1)),
        john_nirenberg: max_of(jn.iter().map(|r| r.1)),
        l1_bmo: max_of(l1.iter().map(|r| r.1)),
        stable_basis: range_of(stable),
        poly_norm: max_of(polys.iter().map(|r| r.norms[2] / r.norms[0])),
        markov_l1: max_of(polys.iter().map(|r| r.derivative_norms[0] / r.norms[0])),
        config_hash: None,
    })
}
