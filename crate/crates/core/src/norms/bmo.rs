use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::funcspace::{check_exponent, Func, GridSamples, Interval};
use crate::partition::MultilevelPartition;

/// Mean-oscillation estimate over a finite interval family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    pub value: f64,
    pub argmax: Option<Interval>,
    pub family_size: usize,
    pub q: f64,
}

/// Intervals probed by [`bmo_norm`], as pairs of finest-knot indices: every
/// cell of every level, and for `m < L` the intervals between the centres of
/// adjacent level-`m` cells (each centre snapped to the nearest
/// level-`(m+1)` knot).
pub fn bmo_family(p: &MultilevelPartition) -> Vec<Vec<(usize, usize)>> {
    (0..=p.max_level())
        .map(|m| {
            let cells = p.cell_count(m);
            let mut fam: Vec<(usize, usize)> =
                (0..cells).map(|i| (p.fine_index(m, i), p.fine_index(m, i + 1))).collect();
            if m < p.max_level() {
                let centre = |i: usize| {
                    let c = p.cell(m, i).mid();
                    let kids = p.children(m, i);
                    let fine = p.knots(m + 1);
                    let best = (kids.start..=kids.end)
                        .min_by(|&a, &b| (fine[a] - c).abs().total_cmp(&(fine[b] - c).abs()))
                        .expect("cells have children");
                    p.fine_index(m + 1, best)
                };
                let centres: Vec<usize> = (0..cells).map(centre).collect();
                fam.extend(centres.windows(2).map(|w| (w[0], w[1])));
            }
            fam
        })
        .collect()
}

fn oscillation(s: &GridSamples, lo: usize, hi: usize, q: f64) -> f64 {
    let r = s.range(lo, hi);
    let (w, v) = (&s.w[r.clone()], &s.v[r]);
    let len: f64 = w.iter().sum();
    if len <= 0.0 {
        return 0.0;
    }
    let avg = w.iter().zip(v).map(|(w, v)| w * v).sum::<f64>() / len;
    let dev: f64 = if q == 1.0 {
        w.iter().zip(v).map(|(w, v)| w * (v - avg).abs()).sum()
    } else if q == 2.0 {
        w.iter().zip(v).map(|(w, v)| w * (v - avg) * (v - avg)).sum()
    } else {
        w.iter().zip(v).map(|(w, v)| w * (v - avg).abs().powf(q)).sum()
    };
    (dev / len).powf(1.0 / q)
}

/// `max_J ((1/|J|) ∫_J |f − avg_J f|^q)^{1/q}` over [`bmo_family`], from
/// precomputed window samples. A lower bound of the BMO norm.
pub fn bmo_norm_sampled(s: &GridSamples, p: &MultilevelPartition, q: f64) -> Result<BmoEstimate> {
    check_exponent(q)?;
    let family = bmo_family(p);
    let fine = p.finest_knots();
    let per_level: Vec<(f64, Option<(usize, usize)>)> = family
        .par_iter()
        .map(|fam| {
            let mut best = (0.0, None);
            for &(lo, hi) in fam {
                let v = oscillation(s, lo, hi, q);
                if v > best.0 {
                    best = (v, Some((lo, hi)));
                }
            }
            best
        })
        .collect();
    let mut best = (0.0, None);
    for b in per_level {
        if b.0 > best.0 {
            best = b;
        }
    }
    Ok(BmoEstimate {
        value: best.0,
        argmax: best.1.map(|(lo, hi)| Interval::new(fine[lo], fine[hi])),
        family_size: family.iter().map(Vec::len).sum(),
        q,
    })
}

/// BMO estimate of `f` over the partition's interval family.
pub fn bmo_norm(f: &dyn Func, p: &MultilevelPartition, q: f64) -> Result<BmoEstimate> {
    check_exponent(q)?;
    bmo_norm_sampled(&GridSamples::new(f, p.rule()), p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::FnFunc;

    fn part() -> MultilevelPartition {
        MultilevelPartition::build_dyadic(Interval::new(-1.0, 2.0), 6, 2).unwrap()
    }

    #[test]
    fn constant_has_zero_oscillation() {
        let c = FnFunc::new("c", Interval::new(-1.0, 2.0), vec![], |_| 3.0);
        let e = bmo_norm(&c, &part(), 1.0).unwrap();
        assert!(e.value < 1e-14);
    }

    #[test]
    fn step_attains_one_half() {
        let step = FnFunc::new("step", Interval::new(0.0, 0.5), vec![0.0, 0.5], |x| if x < 0.5 { 1.0 } else { 0.0 });
        let e = bmo_norm(&step, &part(), 1.0).unwrap();
        assert!((e.value - 0.5).abs() < 1e-13, "{e:?}");
        let j = e.argmax.unwrap();
        assert!((j.mid() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn family_counts() {
        let p = part();
        let fam = bmo_family(&p);
        let total: usize = fam.iter().map(Vec::len).sum();
        let cells: usize = (0..=6).map(|m| p.cell_count(m)).sum();
        let shifted: usize = (0..6).map(|m| p.cell_count(m) - 1).sum();
        assert_eq!(total, cells + shifted);
    }

    #[test]
    fn positive_homogeneity() {
        let f = FnFunc::new("f", Interval::new(0.0, 1.0), vec![0.3], |x: f64| (x - 0.3).abs().sqrt());
        let g = FnFunc::new("g", Interval::new(0.0, 1.0), vec![0.3], |x: f64| 2.5 * (x - 0.3).abs().sqrt());
        let a = bmo_norm(&f, &part(), 2.0).unwrap().value;
        let b = bmo_norm(&g, &part(), 2.0).unwrap().value;
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
    }
}
