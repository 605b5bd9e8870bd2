use dqclean_core::eval::{auprg, auroc, average_precision, ScoredBinarySet};
use dqclean_core::protocol::Verdict;
use dqclean_core::stats::{
    bootstrap_ci, cohen_kappa, krippendorff_alpha, paired_permutation_test, percentile_index, replicate_rng,
    resample_indices, speed_up, Alternative, PermutationMode,
};
use dqclean_oracles as oracle;
use proptest::prelude::*;

fn verdicts(bits: &[bool]) -> Vec<Verdict> {
    bits.iter().map(|&b| Verdict::from(b)).collect()
}

proptest! {
    #[test]
    fn kappa_matches_table_and_is_symmetric(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..30)) {
        let (a, b): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        match oracle::kappa_from_table(&a, &b) {
            Some(expected) => {
                let k = cohen_kappa(&verdicts(&a), &verdicts(&b)).unwrap();
                prop_assert!((k - expected).abs() < 1e-12);
                prop_assert_eq!(k, cohen_kappa(&verdicts(&b), &verdicts(&a)).unwrap());
            }
            None => prop_assert!(cohen_kappa(&verdicts(&a), &verdicts(&b)).is_err()),
        }
    }

    #[test]
    fn identical_lists_have_kappa_one(bits in prop::collection::vec(any::<bool>(), 2..30)) {
        prop_assume!(bits.iter().any(|b| *b) && bits.iter().any(|b| !*b));
        prop_assert_eq!(cohen_kappa(&verdicts(&bits), &verdicts(&bits)).unwrap(), 1.0);
    }

    #[test]
    fn alpha_matches_definition(units in prop::collection::vec(prop::collection::vec(prop::option::of(any::<bool>()), 4), 1..=6)) {
        let mapped: Vec<Vec<Option<Verdict>>> =
            units.iter().map(|u| u.iter().map(|v| v.map(Verdict::from)).collect()).collect();
        match (krippendorff_alpha(&mapped), oracle::alpha_by_definition(&units)) {
            (Ok(a), Some(e)) => prop_assert!((a - e).abs() < 1e-12, "{} vs {}", a, e),
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "got {:?}, oracle {:?}", got, want),
        }
    }

    #[test]
    fn bootstrap_endpoints_are_order_statistics(data in prop::collection::vec(-10.0f64..10.0, 1..40), seed in any::<u64>()) {
        let mean = |xs: &[f64]| Ok::<_, ()>(xs.iter().sum::<f64>() / xs.len() as f64);
        let reps = 101;
        let r = bootstrap_ci(&data, mean, reps, 90.0, seed).unwrap();
        let mut replicates: Vec<f64> = (0..reps)
            .map(|rep| {
                let mut rng = replicate_rng(seed, rep as u64);
                let sample: Vec<f64> = resample_indices(&mut rng, data.len()).into_iter().map(|i| data[i]).collect();
                mean(&sample).unwrap()
            })
            .collect();
        replicates.sort_by(f64::total_cmp);
        prop_assert_eq!(r.ci_low, replicates[percentile_index(0.05, reps)]);
        prop_assert_eq!(r.ci_high, replicates[percentile_index(0.95, reps)]);
        prop_assert!(r.ci_low <= r.ci_high);
    }

    #[test]
    fn permutation_p_is_exact_rational(diffs in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let r = paired_permutation_test(&diffs, Alternative::Greater, PermutationMode::Exhaustive).unwrap();
        let (count, total) = oracle::permutation_count(&diffs);
        prop_assert_eq!(r.denominator, 1u64 << diffs.len());
        prop_assert_eq!((r.extreme, r.denominator), (count, total));
        prop_assert_eq!(r.p_value, count as f64 / total as f64);
        prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }

    #[test]
    fn speed_up_times_annotated_is_pool(pool in 1u64..1_000_000, frac in 0.0f64..1.0) {
        let annotated = ((pool as f64 * frac) as u64).max(1);
        let s = speed_up(pool, annotated).unwrap();
        prop_assert_eq!((s.pool, s.annotated), (pool, annotated));
        prop_assert!((s.factor() * annotated as f64 - pool as f64).abs() <= 1e-9 * pool as f64);
    }

    #[test]
    fn metrics_invariant_under_monotone_transform(
        items in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..20),
    ) {
        let (scores, labels): (Vec<f64>, Vec<bool>) = items.into_iter().unzip();
        prop_assume!(labels.iter().any(|l| *l) && labels.iter().any(|l| !*l));
        let a = ScoredBinarySet::from_scores(&scores, &labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        let b = ScoredBinarySet::from_scores(&transformed, &labels).unwrap();
        prop_assert!((auroc(&a).unwrap() - auroc(&b).unwrap()).abs() < 1e-12);
        prop_assert!((average_precision(&a).unwrap() - average_precision(&b).unwrap()).abs() < 1e-12);
        prop_assert!((auprg(&a).unwrap() - auprg(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn reversed_scores_flip_auroc(
        items in prop::collection::vec((any::<u32>(), any::<bool>()), 2..20),
    ) {
        let (raw, labels): (Vec<u32>, Vec<bool>) = items.into_iter().unzip();
        let mut uniq = raw.clone();
        uniq.sort();
        uniq.dedup();
        prop_assume!(uniq.len() == raw.len());
        prop_assume!(labels.iter().any(|l| *l) && labels.iter().any(|l| !*l));
        let scores: Vec<f64> = raw.iter().map(|&r| f64::from(r)).collect();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let a = auroc(&ScoredBinarySet::from_scores(&scores, &labels).unwrap()).unwrap();
        let b = auroc(&ScoredBinarySet::from_scores(&neg, &labels).unwrap()).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_agrees_with_exhaustive_at_ten() {
    let diffs = [0.4, -0.1, 0.3, 0.2, -0.5, 0.1, 0.05, -0.2, 0.35, 0.15];
    let exact = paired_permutation_test(&diffs, Alternative::Greater, PermutationMode::Exhaustive).unwrap();
    let mc =
        paired_permutation_test(&diffs, Alternative::Greater, PermutationMode::MonteCarlo { draws: 100_000, seed: 5 })
            .unwrap();
    assert!(!mc.exhaustive);
    assert!((exact.p_value - mc.p_value).abs() < 0.01);
}
