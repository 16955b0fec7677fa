use bmo_splines::bspline::decompose;
use bmo_splines::calibration::dyadic;
use bmo_splines::corpus::{bump, resolve};
use bmo_splines::funcspace::{FnFunc, LinearCombination};
use bmo_splines::{Interval, MultilevelPartition, SupportIndex};

// every cell whose data can reach b_Q: Ω of the level-(m−1) cells meeting
// supp φ_Q, together with supp φ_Q itself
fn dependency_hull(p: &MultilevelPartition, q: SupportIndex) -> Interval {
    let s = p.support_interval(q);
    let coarse = q.m.saturating_sub(1);
    let mut lo = s.lo;
    let mut hi = s.hi;
    for i in 0..p.cell_count(coarse) {
        let c = p.cell(coarse, i);
        if c.lo < s.hi && c.hi > s.lo {
            let o = p.omega_neighborhood(coarse, i);
            lo = lo.min(o.lo);
            hi = hi.max(o.hi);
        }
    }
    Interval::new(lo, hi)
}

#[test]
fn coefficients_ignore_perturbations_outside_their_reach() {
    for k in [2, 3] {
        let p = dyadic(6, k).unwrap();
        let f = resolve("cusp05", &p).unwrap().func;
        let region = Interval::new(0.61, 0.67);
        let g = FnFunc::new("blip", region, vec![], move |x: f64| bump((x - region.lo) / region.len()));
        let perturbed = LinearCombination { a: 1.0, f: f.clone(), b: 0.3, g };
        for q in [1.0, 2.0] {
            let a = decompose(&f, &p, q).unwrap();
            let b = decompose(&perturbed, &p, q).unwrap();
            let (mut untouched, mut changed) = (0, 0);
            for ((idx, ca), (_, cb)) in a.iter().zip(b.iter()) {
                let hull = dependency_hull(&p, idx);
                if hull.hi <= region.lo || hull.lo >= region.hi {
                    untouched += 1;
                    assert!((ca - cb).abs() <= 1e-12, "k={k} q={q} {idx:?}: {ca} vs {cb}");
                } else if (ca - cb).abs() > 1e-12 {
                    changed += 1;
                }
            }
            assert!(untouched > 100 && changed > 0, "k={k}: {untouched} untouched, {changed} changed");
        }
    }
}

#[test]
fn decomposition_is_linear() {
    let p = dyadic(6, 3).unwrap();
    let f = resolve("bump", &p).unwrap().func;
    let g = resolve("sawtooth_2", &p).unwrap().func;
    let h = LinearCombination { a: 2.0, f: f.clone(), b: -0.5, g: g.clone() };
    let (df, dg, dh) = (decompose(&f, &p, 2.0).unwrap(), decompose(&g, &p, 2.0).unwrap(), decompose(&h, &p, 2.0).unwrap());
    for (((_, a), (_, b)), (_, c)) in df.iter().zip(dg.iter()).zip(dh.iter()) {
        assert!((2.0 * a - 0.5 * b - c).abs() < 1e-12);
    }
}
