use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::norms::{gq_norm, CoeffSequence};
use crate::partition::NestedStructure;

/// Largest structure [`sigma_n_gq_oracle`] enumerates.
pub const MAX_ORACLE_NODES: usize = 20;

/// Indices of the `n` largest `|h_ξ|` (nonzero only), ties broken by index.
pub fn greedy_indices(h: &CoeffSequence, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..h.len()).filter(|&i| h.values[i] != 0.0).collect();
    idx.sort_by(|&a, &b| h.values[b].abs().total_cmp(&h.values[a].abs()));
    idx.truncate(n);
    idx
}

/// Keep the `n` largest entries; returns them and the `g^q` norm of what
/// remains.
pub fn sigma_n_gq_greedy(structure: &NestedStructure, h: &CoeffSequence, n: usize, q: f64) -> Result<(Vec<usize>, f64)> {
    let kept = greedy_indices(h, n);
    let mut rest = h.clone();
    for &i in &kept {
        rest.values[i] = 0.0;
    }
    Ok((kept, gq_norm(structure, &rest, q)?))
}

struct Tree {
    parent: Vec<Option<usize>>,
    len: Vec<f64>,
}

impl Tree {
    // residual norm when the entries in `kept` (bit i = index i) are removed
    fn residual(&self, mass: &[f64], kept: u32, q: f64, acc: &mut [f64]) -> f64 {
        for (i, a) in acc.iter_mut().enumerate() {
            *a = if kept >> i & 1 == 1 { 0.0 } else { mass[i] };
        }
        for i in (0..acc.len()).rev() {
            if let Some(p) = self.parent[i] {
                acc[p] += acc[i];
            }
        }
        let best = acc.iter().zip(&self.len).fold(0.0f64, |b, (a, l)| b.max(a / l));
        best.powf(1.0 / q)
    }
}

/// Exact `σ_n(h)_{g^q}` by enumerating every set of at most `n` kept entries.
/// Kept entries are matched exactly, which is optimal because the norm is
/// monotone in each `|h_ξ|`.
pub fn sigma_n_gq_oracle(structure: &NestedStructure, h: &CoeffSequence, n: usize, q: f64) -> Result<f64> {
    let len = structure.len();
    if len > MAX_ORACLE_NODES {
        return Err(Error::StructureTooLarge { size: len, max: MAX_ORACLE_NODES });
    }
    if h.len() != len {
        return Err(invalid("h", format!("structure has {len} indices, got {}", h.len())));
    }
    if !(q > 0.0) {
        return Err(invalid("q", format!("must be positive, got {q}")));
    }
    if q.is_infinite() {
        // g^∞ is the sup norm: drop the n largest
        return sigma_n_gq_greedy(structure, h, n, q).map(|r| r.1);
    }
    let nodes = structure.nodes();
    let tree = Tree { parent: nodes.iter().map(|n| n.parent).collect(), len: nodes.iter().map(|n| n.u.len()).collect() };
    let mass: Vec<f64> = nodes.iter().zip(&h.values).map(|(n, v)| v.abs().powf(q) * n.u.len()).collect();
    let nonzero = h.values.iter().filter(|v| **v != 0.0).count();
    if n >= nonzero {
        return Ok(0.0);
    }
    let zero_mask: u32 = (0..len).filter(|&i| h.values[i] == 0.0).fold(0, |m, i| m | 1 << i);
    let best = (0u32..1 << len)
        .into_par_iter()
        .filter(|m| m & zero_mask == 0 && m.count_ones() as usize <= n)
        .map_init(|| vec![0.0; len], |acc, m| tree.residual(&mass, m, q, acc))
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GqBenchRow {
    pub trial: usize,
    pub n: usize,
    pub greedy: f64,
    pub oracle: f64,
    /// `greedy / oracle`; 1 when both vanish.
    pub ratio: f64,
}

/// Greedy against exhaustive `σ_n` in `g^q` on random sequences over a
/// dyadic structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GqBenchReport {
    pub depth: usize,
    pub trials: usize,
    pub seed: u64,
    pub q: f64,
    pub rows: Vec<GqBenchRow>,
    pub max_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl GqBenchReport {
    /// Standard normal entries; every `n` from 1 to the node count minus 1.
    pub fn run(depth: usize, trials: usize, seed: u64, q: f64) -> Result<Self> {
        let s = NestedStructure::dyadic(depth);
        if s.len() > MAX_ORACLE_NODES {
            return Err(Error::StructureTooLarge { size: s.len(), max: MAX_ORACLE_NODES });
        }
        let mut rows = Vec::new();
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let h = CoeffSequence::new(&s, (0..s.len()).map(|_| StandardNormal.sample(&mut rng)).collect())?;
            for n in 1..s.len() {
                let greedy = sigma_n_gq_greedy(&s, &h, n, q)?.1;
                let oracle = sigma_n_gq_oracle(&s, &h, n, q)?;
                let ratio = if greedy == 0.0 { 1.0 } else { greedy / oracle };
                rows.push(GqBenchRow { trial, n, greedy, oracle, ratio });
            }
        }
        let max_ratio = rows.iter().fold(0.0f64, |a, r| a.max(r.ratio));
        Ok(Self { depth, trials, seed, q, rows, max_ratio, config_hash: None })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.config_hash {
            out.push_str(&format!("# config_hash={h}\n"));
        }
        out.push_str("trial,n,greedy,oracle,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:e},{:e},{:e}\n", r.trial, r.n, r.greedy, r.oracle, r.ratio));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
