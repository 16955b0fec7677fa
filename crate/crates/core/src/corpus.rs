//! Builtin test functions.
//!
//! Ids are `const1`, `bump`, `cusp05`, `cusp025`, `step`, `smoothstep[_<eps>]`,
//! `sawtooth[_<j>]`, `randspline[_<n>]` and `logsing`. Apart from `const1`,
//! which is identically one on the window, every function vanishes outside
//! `[0, 1]`.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bspline::synthesize;
use crate::error::{Error, Result};
use crate::funcspace::{FnFunc, Func, Interval, PiecewisePoly};
use crate::partition::MultilevelPartition;

pub const CORPUS_IDS: &[&str] =
    &["const1", "bump", "cusp05", "cusp025", "step", "smoothstep", "sawtooth", "randspline", "logsing"];

pub const DEFAULT_SMOOTHSTEP_EPS: f64 = 1.0 / 16.0;
pub const DEFAULT_SAWTOOTH_LEVEL: u32 = 3;
pub const DEFAULT_RANDSPLINE_TERMS: usize = 8;

/// Coarsest level `randspline_<n>` draws supports from, so that the
/// function does not change with the partition depth.
pub const RANDSPLINE_MAX_LEVEL: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub smoothness: Smoothness,
    pub note: String,
}

/// Besov smoothness annotation (`τ = 1/α`) of a corpus entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// Bounded for every `α` the spline order supports.
    Smooth,
    /// Bounded at this `α`; the rate experiments use it.
    Alpha(f64),
    /// Grows with the partition depth for every `α > 0`.
    Rough,
}

#[derive(Clone)]
pub struct CorpusFunc {
    pub entry: CorpusEntry,
    pub func: Arc<dyn Func>,
}

impl std::fmt::Debug for CorpusFunc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorpusFunc").field("entry", &self.entry).finish_non_exhaustive()
    }
}

/// Smooth bump `exp(1 − 1/(1 − (2x − 1)²))` on `(0, 1)`, peak 1 at `x = 1/2`.
pub fn bump(x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let d = 1.0 - t * t;
    if d <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / d).exp()
    }
}

/// Triangle wave `2^{−j} dist(2^j x, ℤ)` on `[0, 1]`.
pub fn sawtooth(j: u32, x: f64) -> f64 {
    let s = (j as f64).exp2();
    let y = s * x;
    (y - y.round()).abs() / s
}

/// One on `plateau`, linear ramps of width `eps` on both sides, zero beyond.
pub fn smoothed_indicator(plateau: Interval, eps: f64) -> FnFunc<impl Fn(f64) -> f64 + Send + Sync> {
    let (a, b) = (plateau.lo, plateau.hi);
    FnFunc::new(
        format!("smoothed_indicator({eps})"),
        Interval::new(a - eps, b + eps),
        vec![a - eps, a, b, b + eps],
        move |x| {
            if x < a {
                (x - (a - eps)) / eps
            } else if x <= b {
                1.0
            } else {
                ((b + eps) - x) / eps
            }
        },
    )
}

struct Named<F> {
    name: String,
    inner: F,
}

impl<F: Func> Func for Named<F> {
    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }
    fn support(&self) -> Interval {
        self.inner.support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn as_piecewise(&self) -> Option<&PiecewisePoly> {
        self.inner.as_piecewise()
    }
    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }
}

fn named<F: Func + 'static>(name: &str, f: F) -> Arc<dyn Func> {
    Arc::new(Named { name: name.to_string(), inner: f })
}

fn unknown(id: &str) -> Error {
    Error::UnknownFunction { id: id.to_string(), available: CORPUS_IDS.join(", ") }
}

/// Random member of `Σ_n`: `n` distinct supports inside `[0, 1]` from levels
/// `0..=min(L, 4)` with standard normal coefficients, seeded by `n`.
pub fn random_spline(p: &MultilevelPartition, n: usize, seed: u64) -> Result<PiecewisePoly> {
    let unit = Interval::new(0.0, 1.0);
    let top = p.max_level().min(RANDSPLINE_MAX_LEVEL);
    let mut pool = Vec::new();
    for m in 0..=top {
        for q in p.supports(m)? {
            if unit.contains_interval(&p.support_interval(q)) {
                pool.push(q);
            }
        }
    }
    if n == 0 || n > pool.len() {
        return Err(crate::error::invalid(
            "n",
            format!("need 1..={} terms for supports inside [0, 1] up to level {top}", pool.len()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels: Vec<Vec<f64>> = (0..=p.max_level()).map(|m| vec![0.0; p.support_count(m)]).collect();
    for i in sample(&mut rng, pool.len(), n) {
        let q = pool[i];
        levels[q.m][q.j] = StandardNormal.sample(&mut rng);
    }
    synthesize(p, &levels)
}

fn parse_suffix<T: std::str::FromStr>(id: &str, base: &str, default: T) -> Result<T> {
    match id.strip_prefix(base) {
        Some("") => Ok(default),
        Some(rest) => rest.strip_prefix('_').and_then(|s| s.parse().ok()).ok_or_else(|| unknown(id)),
        None => Err(unknown(id)),
    }
}

/// Resolve a corpus id against a partition (`const1` covers its window,
/// `randspline` uses its supports).
pub fn resolve(id: &str, p: &MultilevelPartition) -> Result<CorpusFunc> {
    let unit = Interval::new(0.0, 1.0);
    let entry = |smoothness: Smoothness, note: &str| CorpusEntry {
        id: id.to_string(),
        smoothness,
        note: note.to_string(),
    };
    let (entry, func): (CorpusEntry, Arc<dyn Func>) = match id {
        "const1" => (
            entry(Smoothness::Smooth, "identically one on the window; zero oscillation"),
            named(id, FnFunc::new(id, p.window(), vec![], |_| 1.0)),
        ),
        "bump" => (entry(Smoothness::Smooth, "C-infinity bump supported in [0, 1]"), named(id, FnFunc::new(id, unit, vec![], bump))),
        "cusp05" => (
            entry(Smoothness::Alpha(0.5), "|x - 1/2|^(1/2) times bump"),
            named(id, FnFunc::new(id, unit, vec![0.5], |x: f64| (x - 0.5).abs().sqrt() * bump(x))),
        ),
        "cusp025" => (
            entry(Smoothness::Alpha(0.25), "|x - 1/2|^(1/4) times bump"),
            named(id, FnFunc::new(id, unit, vec![0.5], |x: f64| (x - 0.5).abs().powf(0.25) * bump(x))),
        ),
        "step" => (
            entry(Smoothness::Rough, "indicator of [0, 1/2)"),
            named(id, FnFunc::new(id, Interval::new(0.0, 0.5), vec![0.0, 0.5], |x| if x < 0.5 { 1.0 } else { 0.0 })),
        ),
        "logsing" => (
            entry(Smoothness::Rough, "log|x - 1/2| times bump; unbounded but of bounded mean oscillation"),
            named(id, FnFunc::new(id, unit, vec![0.5], |x: f64| (x - 0.5).abs().ln() * bump(x))),
        ),
        _ if id.starts_with("smoothstep") => {
            let eps: f64 = parse_suffix(id, "smoothstep", DEFAULT_SMOOTHSTEP_EPS)?;
            if !(eps > 0.0 && eps < 0.5) {
                return Err(crate::error::invalid("eps", format!("smoothstep ramp width must lie in (0, 1/2), got {eps}")));
            }
            (
                entry(Smoothness::Alpha(1.0), "one on [eps, 1 - eps] with linear ramps of width eps"),
                named(id, smoothed_indicator(Interval::new(eps, 1.0 - eps), eps)),
            )
        }
        _ if id.starts_with("sawtooth") => {
            let j: u32 = parse_suffix(id, "sawtooth", DEFAULT_SAWTOOTH_LEVEL)?;
            if j > 20 {
                return Err(crate::error::invalid("j", format!("sawtooth level must be at most 20, got {j}")));
            }
            let breaks = (0..=(2u64 << j)).map(|i| i as f64 / (2u64 << j) as f64).collect();
            (
                entry(Smoothness::Alpha(1.0), "triangle wave 2^-j dist(2^j x, Z) on [0, 1]"),
                named(id, FnFunc::new(id, unit, breaks, move |x| sawtooth(j, x))),
            )
        }
        _ if id.starts_with("randspline") => {
            let n: usize = parse_suffix(id, "randspline", DEFAULT_RANDSPLINE_TERMS)?;
            let s = random_spline(p, n, 0x5eed_0000 + n as u64)?;
            (entry(Smoothness::Smooth, "seeded random n-term spline inside [0, 1]"), named(id, s))
        }
        _ => return Err(unknown(id)),
    };
    Ok(CorpusFunc { entry, func })
}

/// The v1 corpus with default parameters.
pub fn default_corpus(p: &MultilevelPartition) -> Result<Vec<CorpusFunc>> {
    CORPUS_IDS.iter().map(|id| resolve(id, p)).collect()
}
