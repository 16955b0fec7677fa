use bmo_splines::calibration::{random_sequence, sequence_jackson_rows, SEQUENCE_COUNT, SEQUENCE_DEPTH, SEQUENCE_SEED};
use bmo_splines::constants::frozen;
use bmo_splines::norms::{gq_norm, ltau_norm};
use bmo_splines::nterm::{sigma_n_gq_greedy, sigma_n_gq_oracle, GqBenchReport};
use bmo_splines::NestedStructure;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sequence_jackson_constant() {
    let c = frozen();
    for seed in [SEQUENCE_SEED, 12] {
        for r in sequence_jackson_rows(SEQUENCE_DEPTH, SEQUENCE_COUNT, seed).unwrap() {
            assert!(c.within_upper(r.worst, c.sequence_jackson), "seed {seed}: {r:?}");
        }
    }
}

#[test]
fn greedy_residual_is_nonincreasing_and_dominates_oracle() {
    let s = NestedStructure::dyadic(4);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let h = random_sequence(&s, &mut rng);
        let mut prev = f64::INFINITY;
        for n in 0..=s.len() {
            let g = sigma_n_gq_greedy(&s, &h, n, 1.0).unwrap().1;
            let o = sigma_n_gq_oracle(&s, &h, n, 1.0).unwrap();
            assert!(g <= prev + 1e-15);
            assert!(o <= g + 1e-12);
            prev = g;
        }
        assert_eq!(prev, 0.0);
    }
}

#[test]
fn gq_bounded_by_ltau_at_n_zero() {
    // σ_0 = ‖h‖_{g^1} ≤ C ‖h‖_{ℓ^τ} with the frozen sequence constant
    let c = frozen();
    let s = NestedStructure::dyadic(SEQUENCE_DEPTH);
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for _ in 0..50 {
        let h = random_sequence(&s, &mut rng);
        for tau in [0.5, 1.0] {
            let r = gq_norm(&s, &h, 1.0).unwrap() / ltau_norm(&h.values, tau).unwrap();
            assert!(c.within_upper(r, c.sequence_jackson), "tau {tau}: {r}");
        }
    }
}

#[test]
fn greedy_within_oracle_factor_on_depth_four() {
    let c = frozen();
    let report = GqBenchReport::run(4, 100, 7, 1.0).unwrap();
    assert_eq!(report.rows.len(), 100 * 14);
    assert!(report.max_ratio <= c.greedy_oracle_factor);
    assert!(c.within_upper(report.max_ratio, c.greedy_oracle_measured));
}
