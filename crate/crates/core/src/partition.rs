//! Regular multilevel partitions of a compact window, their B-spline
//! supports, neighbourhoods and the associated nested structure.

use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::funcspace::{Interval, QuadratureRule, DEFAULT_GAUSS_ORDER};

/// Largest number of finest-level cells a builder will produce.
pub const MAX_FINEST_CELLS: usize = 1 << 22;

/// Largest branching factor accepted from external partition files.
pub const MAX_BRANCHING: usize = 8;

const REL_TOL: f64 = 1e-9;

/// Identifies the support `Q = [x_{m,j}, x_{m,j+k}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SupportIndex {
    pub m: usize,
    pub j: usize,
}

/// A nested hierarchy of knot vectors `x_{m,·}`, `m = 0..=L`, over a window.
#[derive(Clone, Debug)]
pub struct MultilevelPartition {
    window: Interval,
    k: usize,
    lambda: f64,
    levels: Vec<Vec<f64>>,
    // first_child[m][i]: index of the first level-(m+1) cell inside cell (m, i);
    // one extra trailing entry equal to the level-(m+1) cell count
    first_child: Vec<Vec<usize>>,
    // parent[m][i]: level-(m-1) cell containing cell (m, i); empty for m = 0
    parent: Vec<Vec<usize>>,
    // fine_index[m][i]: position of knot x_{m,i} in the finest knot vector
    fine_index: Vec<Vec<usize>>,
    label: String,
    rule: OnceLock<QuadratureRule>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    window: Interval,
    k: usize,
    levels: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

fn violated(condition: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidPartition { condition, detail: detail.into() }
}

impl MultilevelPartition {
    /// Validate knot vectors and build the partition. `lambda = None`
    /// declares the measured level-wise length ratio.
    pub fn from_levels(
        window: Interval,
        k: usize,
        levels: Vec<Vec<f64>>,
        lambda: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(window.lo.is_finite() && window.hi.is_finite()) || window.hi <= window.lo {
            return Err(violated("window", format!("{window} must have positive finite length")));
        }
        if k < 2 {
            return Err(violated("order", format!("k = {k} must be at least 2")));
        }
        if levels.is_empty() {
            return Err(violated("levels", "at least one level is required"));
        }
        for (m, lv) in levels.iter().enumerate() {
            if lv.len() < 2 {
                return Err(violated("levels", format!("level {m} has fewer than two knots")));
            }
            if lv[0] != window.lo || lv[lv.len() - 1] != window.hi {
                return Err(violated(
                    "window",
                    format!("level {m} spans [{}, {}] instead of {window}", lv[0], lv[lv.len() - 1]),
                ));
            }
            if let Some(i) = lv.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(violated(
                    "increasing",
                    format!("level {m} knots {i} and {} are not strictly increasing", i + 1),
                ));
            }
        }
        let cells0 = levels[0].len() - 1;
        if cells0 < 2 * k + 1 {
            return Err(violated(
                "level0-cells",
                format!("level 0 has {cells0} cells, at least 2k+1 = {} required", 2 * k + 1),
            ));
        }

        let mut first_child = Vec::with_capacity(levels.len());
        let mut parent = vec![Vec::new()];
        for m in 0..levels.len() - 1 {
            let (coarse, fine) = (&levels[m], &levels[m + 1]);
            let mut fc = Vec::with_capacity(coarse.len());
            let mut par = Vec::with_capacity(fine.len() - 1);
            let mut pos = 0usize;
            for (i, &x) in coarse.iter().enumerate() {
                while pos < fine.len() && fine[pos] < x {
                    pos += 1;
                }
                if pos == fine.len() || fine[pos] != x {
                    return Err(violated(
                        "nested",
                        format!("knot x_{{{m},{i}}} = {x} is missing from level {}", m + 1),
                    ));
                }
                fc.push(pos);
            }
            for i in 0..coarse.len() - 1 {
                let children = fc[i + 1] - fc[i];
                if !(2..=MAX_BRANCHING).contains(&children) {
                    return Err(violated(
                        "branching",
                        format!(
                            "cell {i} of level {m} has {children} children, allowed 2..={MAX_BRANCHING}"
                        ),
                    ));
                }
                par.extend(std::iter::repeat(i).take(children));
            }
            first_child.push(fc);
            parent.push(par);
        }
        first_child.push(Vec::new());

        let measured = measured_lambda(&levels);
        let lambda = lambda.unwrap_or(measured);
        if !(lambda >= 1.0) {
            return Err(violated("lambda", format!("declared lambda = {lambda} must be >= 1")));
        }
        for (m, lv) in levels.iter().enumerate() {
            let (lo, hi) = min_max_len(lv);
            if hi > lambda * lo * (1.0 + REL_TOL) {
                return Err(violated(
                    "cond-rho",
                    format!("level {m}: max/min cell length {} exceeds lambda = {lambda}", hi / lo),
                ));
            }
        }
        let m0 = first_child
            .iter()
            .flat_map(|fc| fc.windows(2).map(|w| w[1] - w[0]))
            .max()
            .unwrap_or(2)
            .max(2);
        let (r, rho) = r_rho(lambda, m0);
        for m in 1..levels.len() {
            for (i, &p) in parent[m].iter().enumerate() {
                let ratio = (levels[m][i + 1] - levels[m][i]) / (levels[m - 1][p + 1] - levels[m - 1][p]);
                if ratio < r * (1.0 - REL_TOL) || ratio > rho * (1.0 + REL_TOL) {
                    return Err(violated(
                        "r-rho",
                        format!("cell {i} of level {m}: child/parent ratio {ratio} outside [{r}, {rho}]"),
                    ));
                }
            }
        }

        let finest = &levels[levels.len() - 1];
        let fine_index = levels
            .iter()
            .map(|lv| {
                let mut pos = 0;
                lv.iter()
                    .map(|&x| {
                        while finest[pos] < x {
                            pos += 1;
                        }
                        pos
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            window,
            k,
            lambda,
            levels,
            first_child,
            parent,
            fine_index,
            label: label.into(),
            rule: OnceLock::new(),
        })
    }

    /// Uniform level 0 with `2k + 1` cells, each later level halving every
    /// cell.
    pub fn build_dyadic(window: Interval, levels: usize, k: usize) -> Result<Self> {
        let parts = Self::refine_levels(window, levels, k, |lo, hi| 0.5 * (lo + hi))?;
        Self::from_levels(
            window,
            k,
            parts,
            Some(1.0),
            format!("dyadic window={window} k={k} L={levels}"),
        )
    }

    /// Like [`build_dyadic`](Self::build_dyadic) but every new knot sits at a
    /// seeded pseudorandom position near the middle of its parent cell.
    ///
    /// The split fraction `t` is drawn uniformly from `[1/2 − jitter,
    /// 1/2 + jitter]`, narrowed so that every child stays within a factor
    /// `Λ = (1 + 2·jitter)/(1 − 2·jitter)` of the nominal dyadic length. The
    /// declared regularity constant is `Λ²`.
    pub fn build_perturbed(window: Interval, levels: usize, k: usize, jitter: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.25).contains(&jitter) {
            return Err(invalid("jitter", format!("must lie in [0, 0.25), got {jitter}")));
        }
        let big = (1.0 + 2.0 * jitter) / (1.0 - 2.0 * jitter);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells0 = 2 * k + 1;
        let mut nominal = window.len() / cells0 as f64;
        let mut cells_seen = 0usize;
        let mut cells_in_level = cells0;
        let parts = Self::refine_levels(window, levels, k, |lo, hi| {
            if cells_seen == cells_in_level {
                cells_seen = 0;
                cells_in_level *= 2;
                nominal *= 0.5;
            }
            cells_seen += 1;
            if jitter == 0.0 {
                return 0.5 * (lo + hi);
            }
            let child = 0.5 * nominal;
            let len = hi - lo;
            let t_lo = (0.5 - jitter).max(child / big / len).max(1.0 - child * big / len);
            let t_hi = (0.5 + jitter).min(child * big / len).min(1.0 - child / big / len);
            let t = if t_hi > t_lo { rng.random_range(t_lo..=t_hi) } else { 0.5 };
            lo + t * len
        })?;
        Self::from_levels(
            window,
            k,
            parts,
            Some(big * big),
            format!("perturbed window={window} k={k} L={levels} jitter={jitter} seed={seed}"),
        )
    }

    fn refine_levels(
        window: Interval,
        levels: usize,
        k: usize,
        mut split: impl FnMut(f64, f64) -> f64,
    ) -> Result<Vec<Vec<f64>>> {
        Interval::checked(window.lo, window.hi)?;
        if k < 2 {
            return Err(invalid("k", format!("spline order must be at least 2, got {k}")));
        }
        let cells0 = 2 * k + 1;
        let finest = levels
            .try_into()
            .ok()
            .and_then(|l: u32| 1usize.checked_shl(l))
            .and_then(|p| p.checked_mul(cells0));
        match finest {
            Some(n) if n <= MAX_FINEST_CELLS => {}
            _ => {
                return Err(invalid(
                    "L",
                    format!(
                        "{cells0}·2^{levels} finest cells exceed the quadrature resolution limit of {MAX_FINEST_CELLS}"
                    ),
                ))
            }
        }
        let mut out = Vec::with_capacity(levels + 1);
        let mut lv: Vec<f64> = (0..=cells0)
            .map(|i| window.lo + window.len() * i as f64 / cells0 as f64)
            .collect();
        lv[cells0] = window.hi;
        out.push(lv);
        for _ in 0..levels {
            let prev = out.last().unwrap();
            let mut next = Vec::with_capacity(2 * prev.len() - 1);
            for w in prev.windows(2) {
                next.push(w[0]);
                next.push(split(w[0], w[1]));
            }
            next.push(window.hi);
            out.push(next);
        }
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PartitionFile = serde_json::from_str(text)?;
        let label = file.label.unwrap_or_else(|| "loaded".to_string());
        Self::from_levels(file.window, file.k, file.levels, file.lambda, label)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PartitionFile {
            window: self.window,
            k: self.k,
            levels: self.levels.clone(),
            lambda: Some(self.lambda),
            label: Some(self.label.clone()),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Finest level `L`.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn knots(&self, m: usize) -> &[f64] {
        &self.levels[m]
    }

    pub fn finest_knots(&self) -> &[f64] {
        &self.levels[self.max_level()]
    }

    pub fn cell_count(&self, m: usize) -> usize {
        self.levels[m].len() - 1
    }

    pub fn cell(&self, m: usize, i: usize) -> Interval {
        Interval::new(self.levels[m][i], self.levels[m][i + 1])
    }

    /// Index of the level-`m` cell containing `x` (right-continuous; the
    /// right window endpoint belongs to the last cell).
    pub fn locate(&self, m: usize, x: f64) -> usize {
        let lv = &self.levels[m];
        lv.partition_point(|&k| k <= x).clamp(1, lv.len() - 1) - 1
    }

    /// Level-`(m+1)` cells inside cell `(m, i)`.
    pub fn children(&self, m: usize, i: usize) -> std::ops::Range<usize> {
        self.first_child[m][i]..self.first_child[m][i + 1]
    }

    pub fn parent(&self, m: usize, i: usize) -> Option<usize> {
        (m > 0).then(|| self.parent[m][i])
    }

    /// Position of knot `x_{m,i}` in the finest knot vector.
    pub fn fine_index(&self, m: usize, i: usize) -> usize {
        self.fine_index[m][i]
    }

    /// Measured `max |I'| / min |I''|` over all levels.
    pub fn measured_lambda(&self) -> f64 {
        measured_lambda(&self.levels)
    }

    /// Largest number of children of any cell (2 for builder output).
    pub fn branching(&self) -> usize {
        self.first_child
            .iter()
            .flat_map(|fc| fc.windows(2).map(|w| w[1] - w[0]))
            .max()
            .unwrap_or(2)
    }

    /// `(r, ρ)` bounds for child/parent length ratios.
    pub fn ratio_bounds(&self) -> (f64, f64) {
        r_rho(self.lambda, self.branching().max(2))
    }

    pub fn check_level(&self, m: usize) -> Result<()> {
        if m > self.max_level() {
            return Err(Error::LevelOutOfRange { level: m, max: self.max_level() });
        }
        Ok(())
    }

    /// Number of supports at level `m`.
    pub fn support_count(&self, m: usize) -> usize {
        self.cell_count(m) + 1 - self.k
    }

    /// All supports `[x_{m,j}, x_{m,j+k}]` inside the window, increasing `j`.
    pub fn supports(&self, m: usize) -> Result<Vec<SupportIndex>> {
        self.check_level(m)?;
        Ok((0..self.support_count(m)).map(|j| SupportIndex { m, j }).collect())
    }

    pub fn support_interval(&self, q: SupportIndex) -> Interval {
        Interval::new(self.levels[q.m][q.j], self.levels[q.m][q.j + self.k])
    }

    /// Knots `x_{m,j..=j+k}` of the B-spline on `Q`.
    pub fn support_knots(&self, q: SupportIndex) -> &[f64] {
        &self.levels[q.m][q.j..=q.j + self.k]
    }

    /// Cell indices `i` of level `m` for which `Ω_{(m,i)}` is the union of
    /// supports containing the cell, clipped to the window.
    pub fn omega_cells(&self, m: usize, i: usize) -> std::ops::Range<usize> {
        let lo = (i + 1).saturating_sub(self.k);
        let hi = (i + self.k).min(self.cell_count(m));
        lo..hi
    }

    /// `Ω_I = [x_{m,i+1−k}, x_{m,i+k}]` clipped to the window.
    pub fn omega_neighborhood(&self, m: usize, i: usize) -> Interval {
        let r = self.omega_cells(m, i);
        Interval::new(self.levels[m][r.start], self.levels[m][r.end])
    }

    /// Largest level with at most one knot strictly inside `J`, clamped to
    /// `[0, L]`.
    pub fn interval_level(&self, j: Interval) -> Result<usize> {
        let j = Interval::checked(j.lo, j.hi)?;
        if !self.window.contains_interval(&j) {
            return Err(Error::OutsideWindow { lo: j.lo, hi: j.hi, a: self.window.lo, b: self.window.hi });
        }
        let interior = |m: usize| {
            let lv = &self.levels[m];
            lv.partition_point(|&x| x < j.hi) - lv.partition_point(|&x| x <= j.lo)
        };
        let mut best = 0;
        for m in 0..=self.max_level() {
            if interior(m) <= 1 {
                best = m;
            } else {
                break;
            }
        }
        Ok(best)
    }

    /// Composite Gauss rule on the finest grid.
    pub fn rule(&self) -> &QuadratureRule {
        self.rule.get_or_init(|| {
            QuadratureRule::new(self.finest_knots().to_vec(), DEFAULT_GAUSS_ORDER)
                .expect("validated knots are strictly increasing")
        })
    }

    /// Stable content digest of the knot hierarchy and order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.k as u64).to_le_bytes());
        for lv in &self.levels {
            h.update((lv.len() as u64).to_le_bytes());
            for x in lv {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn nested_structure(&self) -> NestedStructure {
        NestedStructure::from_partition(self)
    }
}

fn min_max_len(lv: &[f64]) -> (f64, f64) {
    lv.windows(2)
        .map(|w| w[1] - w[0])
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| (lo.min(l), hi.max(l)))
}

fn measured_lambda(levels: &[Vec<f64>]) -> f64 {
    levels
        .iter()
        .map(|lv| {
            let (lo, hi) = min_max_len(lv);
            hi / lo
        })
        .fold(1.0, f64::max)
}

/// `r = 1/(M0·λ − λ + 1)`, `ρ = λ/(λ + 1)`.
pub fn r_rho(lambda: f64, m0: usize) -> (f64, f64) {
    let m0 = m0 as f64;
    (1.0 / (m0 * lambda - lambda + 1.0), lambda / (lambda + 1.0))
}

/// One index `ξ` of a nested structure with its interval `U_ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureNode {
    pub level: usize,
    /// Position within the level (the support's left-knot index `j` for
    /// partition-derived structures).
    pub pos: usize,
    pub u: Interval,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Finite tree of intervals `U_ξ`, stored level by level so that parents
/// precede children.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedStructure {
    nodes: Vec<StructureNode>,
    level_start: Vec<usize>,
}

impl NestedStructure {
    /// `U_Q` is the leftmost cell of `Q`; cells too close to the right edge
    /// to start a support are not indices, and their descendants become
    /// roots.
    pub fn from_partition(p: &MultilevelPartition) -> Self {
        let mut nodes = Vec::new();
        let mut level_start = Vec::with_capacity(p.max_level() + 2);
        for m in 0..=p.max_level() {
            level_start.push(nodes.len());
            let count = p.support_count(m);
            for j in 0..count {
                let parent = p.parent(m, j).and_then(|pj| {
                    (pj < p.support_count(m - 1)).then(|| level_start[m - 1] + pj)
                });
                nodes.push(StructureNode { level: m, pos: j, u: p.cell(m, j), parent, children: Vec::new() });
            }
        }
        level_start.push(nodes.len());
        Self::link(nodes, level_start)
    }

    /// Complete binary tree on `[0, 1]` with `depth` levels
    /// (`2^depth − 1` indices).
    pub fn dyadic(depth: usize) -> Self {
        let mut nodes = Vec::new();
        let mut level_start = Vec::with_capacity(depth + 1);
        for m in 0..depth {
            level_start.push(nodes.len());
            let n = 1usize << m;
            for j in 0..n {
                let parent = (m > 0).then(|| level_start[m - 1] + j / 2);
                let u = Interval::new(j as f64 / n as f64, (j + 1) as f64 / n as f64);
                nodes.push(StructureNode { level: m, pos: j, u, parent, children: Vec::new() });
            }
        }
        level_start.push(nodes.len());
        Self::link(nodes, level_start)
    }

    fn link(mut nodes: Vec<StructureNode>, level_start: Vec<usize>) -> Self {
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent {
                nodes[p].children.push(i);
            }
        }
        Self { nodes, level_start }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[StructureNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &StructureNode {
        &self.nodes[i]
    }

    pub fn levels(&self) -> usize {
        self.level_start.len() - 1
    }

    /// Node indices of level `m`.
    pub fn level_range(&self, m: usize) -> std::ops::Range<usize> {
        self.level_start[m]..self.level_start[m + 1]
    }

    /// Index of the node at `(level, pos)`.
    pub fn index_of(&self, level: usize, pos: usize) -> Option<usize> {
        let r = self.level_range(level);
        let i = r.start + pos;
        (i < r.end).then_some(i)
    }

    /// `Σ_{ξ ∈ X_m} |U_ξ|`.
    pub fn level_cover(&self, m: usize) -> f64 {
        self.level_range(m).map(|i| self.nodes[i].u.len()).sum()
    }

    /// Check the nested-structure axioms: disjoint level-wise cover,
    /// nesting, unique parent, λ-comparability within levels and at least
    /// two children for every non-leaf index. Returns the measured
    /// comparability constant.
    pub fn check(&self) -> Result<f64> {
        let mut lambda: f64 = 1.0;
        for m in 0..self.levels() {
            let r = self.level_range(m);
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for i in r.clone() {
                let u = self.nodes[i].u;
                if u.is_empty() {
                    return Err(violated("nonempty", format!("U of index {i} is empty")));
                }
                lo = lo.min(u.len());
                hi = hi.max(u.len());
                if i + 1 < r.end && self.nodes[i + 1].u.lo < u.hi {
                    return Err(violated("cover", format!("indices {i} and {} overlap at level {m}", i + 1)));
                }
            }
            if !r.is_empty() {
                lambda = lambda.max(hi / lo);
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                let pu = self.nodes[p].u;
                if self.nodes[p].level + 1 != n.level || !pu.contains_interval(&n.u) {
                    return Err(violated("nesting", format!("U of index {i} is not inside its parent {p}")));
                }
            }
            if n.level > 0 {
                let containing: Vec<usize> = self
                    .level_range(n.level - 1)
                    .filter(|&c| self.nodes[c].u.contains_interval(&n.u))
                    .collect();
                if containing.len() > 1 || containing.first().copied() != n.parent {
                    return Err(violated(
                        "unique-parent",
                        format!("index {i} is contained in {containing:?} but linked to {:?}", n.parent),
                    ));
                }
            }
            if n.level + 1 < self.levels() && !n.children.is_empty() && n.children.len() < 2 {
                return Err(violated("children", format!("index {i} has a single child")));
            }
            if n.level + 1 < self.levels() && n.children.is_empty() {
                return Err(violated("children", format!("non-leaf index {i} has no children")));
            }
            if !n.children.is_empty() {
                let s: f64 = n.children.iter().map(|&c| self.nodes[c].u.len()).sum();
                if (s - n.u.len()).abs() > 1e-12 * n.u.len().max(1.0) {
                    return Err(violated(
                        "children-cover",
                        format!("children of {i} cover {s}, parent has {}", n.u.len()),
                    ));
                }
            }
        }
        Ok(lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn win() -> Interval {
        Interval::new(-1.0, 2.0)
    }

    #[test]
    fn dyadic_counts_and_lengths() {
        let p = MultilevelPartition::build_dyadic(win(), 3, 2).unwrap();
        assert_eq!(p.cell_count(0), 5);
        assert!((p.cell(0, 2).len() - 0.6).abs() < 1e-15);
        assert_eq!(p.cell_count(3), 40);
        let p = MultilevelPartition::build_dyadic(Interval::new(0.0, 1.0), 0, 2).unwrap();
        assert_eq!(p.max_level(), 0);
        assert_eq!(p.cell_count(0), 5);
        let p = MultilevelPartition::build_dyadic(win(), 8, 3).unwrap();
        assert_eq!(p.cell_count(8), 1792);
        for i in 0..1792 {
            assert!((p.cell(8, i).len() - 3.0 / 1792.0).abs() < 1e-14);
        }
        assert_eq!(p.ratio_bounds(), (0.5, 0.5));
    }

    #[test]
    fn rejects_too_deep() {
        let err = MultilevelPartition::build_dyadic(win(), 40, 2).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "L", .. }));
    }

    #[test]
    fn supports_and_omegas() {
        let p = MultilevelPartition::build_dyadic(win(), 2, 2).unwrap();
        assert_eq!(p.supports(0).unwrap().len(), 4);
        assert!(matches!(p.supports(3), Err(Error::LevelOutOfRange { .. })));
        let p3 = MultilevelPartition::build_dyadic(win(), 1, 3).unwrap();
        assert_eq!(p3.supports(0).unwrap().len(), 5);
        assert_eq!(p.omega_cells(1, 4), 3..6);
        assert_eq!(p.omega_cells(1, 0), 0..2);
        assert_eq!(p.omega_neighborhood(1, 0).lo, -1.0);
        assert_eq!(p3.omega_cells(1, 6).len(), 5);
        let q = SupportIndex { m: 1, j: 3 };
        assert_eq!(p.support_knots(q).len(), 3);
    }

    #[test]
    fn omega_ratio_bounds() {
        for k in 2..=4 {
            let p = MultilevelPartition::build_perturbed(win(), 4, k, 0.2, 9).unwrap();
            for m in 0..=4 {
                for i in 0..p.cell_count(m) {
                    let ratio = p.omega_neighborhood(m, i).len() / p.cell(m, i).len();
                    assert!(ratio >= 1.0);
                    assert!(ratio <= (2 * k - 1) as f64 * p.lambda() * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn interval_level_by_knot_counting() {
        let p = MultilevelPartition::build_dyadic(win(), 6, 2).unwrap();
        assert_eq!(p.interval_level(p.cell(6, 17)).unwrap(), 6);
        assert_eq!(p.interval_level(win()).unwrap(), 0);
        let j = Interval::new(0.0, 0.31);
        // brute force: level m knots are -1 + 3 i / (5·2^m)
        let mut expect = 0;
        for m in 0..=6 {
            let n = 5 * (1 << m);
            let inside = (0..=n)
                .map(|i| -1.0 + 3.0 * i as f64 / n as f64)
                .filter(|&x| x > 0.0 + 1e-12 && x < 0.31)
                .count();
            if inside <= 1 {
                expect = m;
            } else {
                break;
            }
        }
        assert_eq!(p.interval_level(j).unwrap(), expect);
        assert_eq!(expect, 1);
    }

    #[test]
    fn perturbed_zero_jitter_is_dyadic() {
        let d = MultilevelPartition::build_dyadic(win(), 5, 3).unwrap();
        let p = MultilevelPartition::build_perturbed(win(), 5, 3, 0.0, 1234).unwrap();
        for m in 0..=5 {
            assert_eq!(d.knots(m), p.knots(m));
        }
        assert!(MultilevelPartition::build_perturbed(win(), 5, 3, 0.4, 1).is_err());
    }

    #[test]
    fn perturbed_checker_passes() {
        let p = MultilevelPartition::build_perturbed(win(), 6, 2, 0.2, 42).unwrap();
        assert!(p.measured_lambda() <= p.lambda());
        assert!(p.measured_lambda() > 1.1);
        let again = MultilevelPartition::build_perturbed(win(), 6, 2, 0.2, 42).unwrap();
        assert_eq!(p.finest_knots(), again.finest_knots());
        assert_eq!(p.fingerprint(), again.fingerprint());
    }

    #[test]
    fn json_round_trip_and_diagnostics() {
        let p = MultilevelPartition::build_perturbed(win(), 3, 2, 0.1, 5).unwrap();
        let text = p.to_json().unwrap();
        let back = MultilevelPartition::from_json(&text).unwrap();
        assert_eq!(back.fingerprint(), p.fingerprint());

        let bad = r#"{"window":[0,1],"k":2,"levels":[[0,0.2,0.4,0.6,0.8,1],[0,0.1,0.2,0.4,0.5,0.6,0.7,0.8,0.9,1]]}"#;
        let err = MultilevelPartition::from_json(bad).unwrap_err();
        assert!(matches!(err, Error::InvalidPartition { condition: "branching", .. }), "{err}");

        let bad = r#"{"window":[0,1],"k":2,"levels":[[0,0.25,0.5,0.75,1]]}"#;
        let err = MultilevelPartition::from_json(bad).unwrap_err();
        assert!(matches!(err, Error::InvalidPartition { condition: "level0-cells", .. }), "{err}");

        let bad = r#"{"window":[0,1],"k":2,"lambda":1.0,"levels":[[0,0.1,0.2,0.3,0.4,1]]}"#;
        let err = MultilevelPartition::from_json(bad).unwrap_err();
        assert!(matches!(err, Error::InvalidPartition { condition: "cond-rho", .. }), "{err}");

        let bad = r#"{"window":[0,1],"k":2,"levels":[[0,0.2,0.4,0.6,0.8,1],[0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.9,1]]}"#;
        let err = MultilevelPartition::from_json(bad).unwrap_err();
        assert!(matches!(err, Error::InvalidPartition { condition: "nested", .. }), "{err}");
    }

    #[test]
    fn accepts_ternary_refinement() {
        let l0: Vec<f64> = (0..=5).map(|i| i as f64 / 5.0).collect();
        let l1: Vec<f64> = (0..=15).map(|i| i as f64 / 15.0).collect();
        let mut l1 = l1;
        for i in (0..=15).step_by(3) {
            l1[i] = l0[i / 3];
        }
        let p = MultilevelPartition::from_levels(Interval::new(0.0, 1.0), 2, vec![l0, l1], None, "t").unwrap();
        assert_eq!(p.branching(), 3);
        assert_eq!(p.children(0, 1), 3..6);
    }

    #[test]
    fn nested_structure_from_partition() {
        let p = MultilevelPartition::build_dyadic(win(), 4, 2).unwrap();
        let s = p.nested_structure();
        s.check().unwrap();
        for m in 0..=4 {
            let cells = p.cell_count(m);
            assert_eq!(s.level_range(m).len(), cells - 1);
            // brute-force cover: every cell but the last k − 1
            let expect: f64 = (0..cells - 1).map(|i| p.cell(m, i).len()).sum();
            assert!((s.level_cover(m) - expect).abs() < 1e-12);
            assert!((expect - (3.0 - 3.0 / cells as f64)).abs() < 1e-12);
        }
        // U of support (2, 5) is its leftmost cell
        let i = s.index_of(2, 5).unwrap();
        assert_eq!(s.node(i).u, p.cell(2, 5));
        // parent is the level-1 index whose U contains it
        let par = s.node(i).parent.unwrap();
        assert!(s.node(par).u.contains_interval(&s.node(i).u));
        // descendants of the excluded rightmost level-0 cell are roots
        let last = s.index_of(1, 8).unwrap();
        assert_eq!(s.node(last).parent, None);
    }

    #[test]
    fn dyadic_structure_sizes() {
        assert_eq!(NestedStructure::dyadic(4).len(), 15);
        assert_eq!(NestedStructure::dyadic(6).len(), 63);
        let s = NestedStructure::dyadic(6);
        assert_eq!(s.check().unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn perturbed_partitions_are_regular(seed in any::<u64>(), jitter in 0.0f64..0.249, k in 2usize..=4) {
            let p = MultilevelPartition::build_perturbed(win(), 4, k, jitter, seed).unwrap();
            let (r, rho) = p.ratio_bounds();
            prop_assert!(0.0 < r && r < rho + 1e-15 && rho < 1.0);
            for m in 1..=4 {
                for i in 0..p.cell_count(m) {
                    let par = p.parent(m, i).unwrap();
                    let ratio = p.cell(m, i).len() / p.cell(m - 1, par).len();
                    prop_assert!(ratio >= r * (1.0 - 1e-9) && ratio <= rho * (1.0 + 1e-9));
                }
            }
            p.nested_structure().check().unwrap();
        }
    }
}
