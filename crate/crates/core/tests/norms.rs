use bmo_splines::bspline::decompose;
use bmo_splines::calibration::{
    dyadic, embedding_rows, john_nirenberg_rows, l1_bmo_rows, stable_basis_ratios, CORPUS_LEVELS, EMBEDDING_COUNT,
    EMBEDDING_SEED, EMBEDDING_TAUS,
};
use bmo_splines::constants::frozen;
use bmo_splines::corpus::resolve;
use bmo_splines::funcspace::LinearCombination;
use bmo_splines::norms::{besov_norm_e, besov_norm_modulus, besov_norm_q, bmo_norm, bmo_qk_norm};

#[test]
fn embedding_constants_hold_on_calibration_and_fresh_draws() {
    let c = frozen();
    for seed in [EMBEDDING_SEED, 77] {
        let rows = embedding_rows(CORPUS_LEVELS, EMBEDDING_COUNT, seed).unwrap();
        for r in &rows {
            for (i, &tau) in EMBEDDING_TAUS.iter().enumerate() {
                let frozen_tau = c.embedding_ltau(tau).unwrap();
                assert!(c.within_upper(r.bmo / r.ltau[i], frozen_tau), "seed {seed} tau {tau}: {r:?}");
            }
            assert!(c.within_upper(r.bmo / r.gq1, c.embedding_gq), "seed {seed}: {r:?}");
        }
    }
}

#[test]
fn john_nirenberg_proxy() {
    let c = frozen();
    let rows = john_nirenberg_rows(CORPUS_LEVELS).unwrap();
    assert_eq!(rows.len(), 8);
    for (id, r) in rows {
        assert!(r >= 1.0 - 1e-12, "{id}: {r}");
        assert!(c.within_upper(r, c.john_nirenberg), "{id}: {r}");
    }
}

#[test]
fn l1_average_controlled_by_oscillation() {
    let c = frozen();
    for (id, r) in l1_bmo_rows(CORPUS_LEVELS, 24, 404).unwrap() {
        assert!(c.within_upper(r, c.l1_bmo), "{id}: {r}");
    }
}

#[test]
fn stable_basis_ratio_in_frozen_range() {
    let c = frozen();
    for r in stable_basis_ratios(CORPUS_LEVELS, 2, 31).unwrap() {
        assert!(c.within_range(r, c.stable_basis), "{r}");
    }
}

#[test]
fn norms_are_positively_homogeneous() {
    let p = dyadic(6, 2).unwrap();
    let f = resolve("cusp05", &p).unwrap().func;
    let g = LinearCombination { a: 3.25, f: f.clone(), b: 0.0, g: f.clone() };
    let rel = |a: f64, b: f64| (3.25 * a - b).abs() <= 1e-12 * b.abs();
    for q in [1.0, 2.0] {
        assert!(rel(bmo_norm(&f, &p, q).unwrap().value, bmo_norm(&g, &p, q).unwrap().value));
        assert!(rel(bmo_qk_norm(&f, &p, q, 2).unwrap(), bmo_qk_norm(&g, &p, q, 2).unwrap()));
        for alpha in [0.5, 1.0] {
            assert!(rel(besov_norm_e(&f, &p, alpha, 2, q).unwrap().value, besov_norm_e(&g, &p, alpha, 2, q).unwrap().value));
            let (df, dg) = (decompose(&f, &p, q).unwrap(), decompose(&g, &p, q).unwrap());
            assert!(rel(besov_norm_q(&df, alpha).unwrap().value, besov_norm_q(&dg, alpha).unwrap().value));
        }
    }
    assert!(rel(besov_norm_modulus(&f, &p, 0.5, 2).unwrap().value, besov_norm_modulus(&g, &p, 0.5, 2).unwrap().value));
}

#[test]
fn step_oscillation_matches_closed_form() {
    // 1_{[0,1/2)}: mean oscillation with q = 1 peaks at 1/2 on intervals split evenly by the jump
    let p = dyadic(8, 2).unwrap();
    let f = resolve("step", &p).unwrap().func;
    let b = bmo_norm(&f, &p, 1.0).unwrap();
    assert!((b.value - 0.5).abs() < 1e-12, "{b:?}");
    let c = resolve("const1", &p).unwrap().func;
    assert_eq!(bmo_norm(&c, &p, 2.0).unwrap().value, 0.0);
}
