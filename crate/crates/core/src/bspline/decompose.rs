use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{level_mismatch, quasi_interp_sampled, refine_coefficients, BSplineBasis};
use crate::error::{invalid, Error, Result};
use crate::funcspace::{check_exponent, Func, GridSamples, PiecewisePoly};
use crate::partition::{MultilevelPartition, SupportIndex};

/// Multilevel spline decomposition `f ≈ Σ_Q base_Q φ_Q + Σ_{m≥1} Σ_Q b_Q φ_Q`
/// of a function over a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineDecomposition {
    /// `label#fingerprint` of the partition the coefficients refer to.
    pub partition_ref: String,
    pub k: usize,
    pub q: f64,
    /// Level-0 coefficients of `T_{0,q} f`.
    pub base: Vec<f64>,
    /// `details[m − 1]`: level-`m` coefficients of `T_{m,q} f − T_{m−1,q} f`.
    pub details: Vec<Vec<f64>>,
    pub config_hash: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct BaseEntry {
    j: usize,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct DetailEntry {
    m: usize,
    j: usize,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct DecompositionFile {
    partition_ref: String,
    k: usize,
    q: f64,
    base: Vec<BaseEntry>,
    details: Vec<DetailEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
}

pub(crate) fn partition_ref(p: &MultilevelPartition) -> String {
    format!("{}#{}", p.label(), p.fingerprint())
}

impl SplineDecomposition {
    /// All-zero decomposition over `p`.
    pub fn zeros(p: &MultilevelPartition, q: f64) -> Self {
        Self {
            partition_ref: partition_ref(p),
            k: p.k(),
            q,
            base: vec![0.0; p.support_count(0)],
            details: (1..=p.max_level()).map(|m| vec![0.0; p.support_count(m)]).collect(),
            config_hash: None,
        }
    }

    pub fn max_level(&self) -> usize {
        self.details.len()
    }

    /// Coefficients of level `m` (the base for `m = 0`).
    pub fn level(&self, m: usize) -> &[f64] {
        if m == 0 {
            &self.base
        } else {
            &self.details[m - 1]
        }
    }

    pub fn level_mut(&mut self, m: usize) -> &mut [f64] {
        if m == 0 {
            &mut self.base
        } else {
            &mut self.details[m - 1]
        }
    }

    pub fn coefficient(&self, q: SupportIndex) -> f64 {
        self.level(q.m)[q.j]
    }

    /// Total number of coefficients, base included.
    pub fn count(&self) -> usize {
        self.base.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    /// `(index, coefficient)` pairs in level-then-position order.
    pub fn iter(&self) -> impl Iterator<Item = (SupportIndex, f64)> + '_ {
        (0..=self.max_level())
            .flat_map(move |m| self.level(m).iter().enumerate().map(move |(j, &c)| (SupportIndex { m, j }, c)))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.base.iter_mut().for_each(|c| *c *= s);
        out.details.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    /// Check that the coefficient layout matches `p`.
    pub fn validate(&self, p: &MultilevelPartition) -> Result<()> {
        let expected = partition_ref(p);
        if self.partition_ref != expected {
            return Err(Error::InvalidDecomposition(format!(
                "partition_ref `{}` does not match `{expected}`",
                self.partition_ref
            )));
        }
        if self.k != p.k() {
            return Err(Error::InvalidDecomposition(format!("order k = {} but partition has k = {}", self.k, p.k())));
        }
        if self.max_level() != p.max_level() {
            return Err(Error::InvalidDecomposition(format!(
                "{} detail levels but partition has L = {}",
                self.max_level(),
                p.max_level()
            )));
        }
        for m in 0..=p.max_level() {
            if self.level(m).len() != p.support_count(m) {
                return Err(level_mismatch(m, p.support_count(m), self.level(m).len()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DecompositionFile {
            partition_ref: self.partition_ref.clone(),
            k: self.k,
            q: self.q,
            base: self.base.iter().enumerate().map(|(j, &coef)| BaseEntry { j, coef }).collect(),
            details: (1..=self.max_level())
                .flat_map(|m| self.level(m).iter().enumerate().map(move |(j, &coef)| DetailEntry { m, j, coef }))
                .collect(),
            config_hash: self.config_hash.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parse a decomposition file and validate its indices against `p`;
    /// entries not listed are zero.
    pub fn from_json(text: &str, p: &MultilevelPartition) -> Result<Self> {
        let file: DecompositionFile = serde_json::from_str(text)?;
        let mut dec = Self::zeros(p, file.q);
        dec.partition_ref = file.partition_ref;
        dec.k = file.k;
        dec.config_hash = file.config_hash;
        dec.validate(p)?;
        check_exponent(file.q)?;
        let mut seen = std::collections::HashSet::new();
        let entries = file
            .base
            .iter()
            .map(|b| (0, b.j, b.coef))
            .chain(file.details.iter().map(|d| (d.m, d.j, d.coef)));
        for (m, j, coef) in entries {
            if !seen.insert((m, j)) {
                return Err(Error::InvalidDecomposition(format!("duplicate entry m={m} j={j}")));
            }
            if m > p.max_level() {
                return Err(Error::InvalidDecomposition(format!("level {m} exceeds L = {}", p.max_level())));
            }
            if j >= p.support_count(m) {
                return Err(Error::InvalidDecomposition(format!(
                    "index j={j} out of range at level {m} (count {})",
                    p.support_count(m)
                )));
            }
            if !coef.is_finite() {
                return Err(Error::InvalidDecomposition(format!("non-finite coefficient at m={m} j={j}")));
            }
            dec.level_mut(m)[j] = coef;
        }
        Ok(dec)
    }
}

fn per_level_coefficients(s: &GridSamples, p: &MultilevelPartition) -> Result<Vec<Vec<f64>>> {
    (0..=p.max_level())
        .into_par_iter()
        .map(|m| quasi_interp_sampled(s, p, m))
        .collect()
}

/// Decompose `f`: base = `T_{0,q} f`, level-`m` details =
/// `T_{m,q} f − T_{m−1,q} f` in the level-`m` basis (knot insertion then
/// subtraction).
pub fn decompose(f: &dyn Func, p: &MultilevelPartition, q: f64) -> Result<SplineDecomposition> {
    check_exponent(q)?;
    let s = GridSamples::new(f, p.rule());
    let coeffs = per_level_coefficients(&s, p)?;
    let details = (1..=p.max_level())
        .into_par_iter()
        .map(|m| {
            let refined = refine_coefficients(p, m, &coeffs[m - 1])?;
            Ok(coeffs[m].iter().zip(&refined).map(|(a, b)| a - b).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut base = coeffs;
    base.truncate(1);
    Ok(SplineDecomposition {
        partition_ref: partition_ref(p),
        k: p.k(),
        q,
        base: base.pop().unwrap_or_default(),
        details,
        config_hash: None,
    })
}

/// Level-`m` coefficients of `S_m − S_{m−1}` by de Boor–Fix functionals
/// applied to the piecewise-polynomial difference.
pub fn detail_coefficients_direct(
    p: &MultilevelPartition,
    m: usize,
    coarse: &[f64],
    fine: &[f64],
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid("m", "details start at level 1"));
    }
    let sc = BSplineBasis::new(p, m - 1)?.to_piecewise(coarse)?;
    let fine_basis = BSplineBasis::new(p, m)?;
    let sf = fine_basis.to_piecewise(fine)?;
    let diff = sf.add_scaled(-1.0, &sc)?;
    fine_basis.quasi_interp_spline(&diff)
}

/// Decompose by both detail paths; returns the knot-insertion
/// decomposition and the largest coefficient discrepancy to the direct path.
pub fn decompose_both_paths(f: &dyn Func, p: &MultilevelPartition, q: f64) -> Result<(SplineDecomposition, f64)> {
    let dec = decompose(f, p, q)?;
    let s = GridSamples::new(f, p.rule());
    let coeffs = per_level_coefficients(&s, p)?;
    let mut worst: f64 = 0.0;
    for m in 1..=p.max_level() {
        let direct = detail_coefficients_direct(p, m, &coeffs[m - 1], &coeffs[m])?;
        for (a, b) in direct.iter().zip(dec.level(m)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok((dec, worst))
}

/// Finest-level coefficients of `Σ_m Σ_j levels[m][j] φ_{m,j}`.
pub fn synthesize_finest(p: &MultilevelPartition, levels: &[Vec<f64>]) -> Result<Vec<f64>> {
    if levels.is_empty() || levels.len() > p.max_level() + 1 {
        return Err(invalid(
            "levels",
            format!("expected 1..={} coefficient levels, got {}", p.max_level() + 1, levels.len()),
        ));
    }
    for (m, lv) in levels.iter().enumerate() {
        if lv.len() != p.support_count(m) {
            return Err(level_mismatch(m, p.support_count(m), lv.len()));
        }
    }
    let mut acc = levels[0].clone();
    for m in 1..=p.max_level() {
        acc = refine_coefficients(p, m, &acc)?;
        if let Some(lv) = levels.get(m) {
            acc.iter_mut().zip(lv).for_each(|(a, b)| *a += b);
        }
    }
    Ok(acc)
}

/// `Σ_m Σ_j levels[m][j] φ_{m,j}` as a piecewise polynomial on the finest
/// knots.
pub fn synthesize(p: &MultilevelPartition, levels: &[Vec<f64>]) -> Result<PiecewisePoly> {
    let finest = synthesize_finest(p, levels)?;
    BSplineBasis::new(p, p.max_level())?.to_piecewise(&finest)
}

/// Base plus all details, as a piecewise polynomial on the finest knots.
pub fn reconstruct(dec: &SplineDecomposition, p: &MultilevelPartition) -> Result<PiecewisePoly> {
    dec.validate(p)?;
    let levels: Vec<Vec<f64>> = (0..=dec.max_level()).map(|m| dec.level(m).to_vec()).collect();
    synthesize(p, &levels)
}
