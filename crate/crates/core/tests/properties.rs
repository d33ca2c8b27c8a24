use proptest::prelude::*;

use metareduce::challenge::{random_top_hit_probability, skewness, welch_p};
use metareduce::config_space::random_subset;
use metareduce::expectation::{expected_oracle_average, expected_oracle_optimal, expected_random_optimal};
use metareduce::harness::{nemenyi_cd, studentized_range_q};
use metareduce::ranking::rank_with_ties;

fn means(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..=max)
}

proptest! {
    #[test]
    fn rank_sums_are_triangular(values in prop::collection::vec(0u8..5, 1..40)) {
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        let n = values.len() as f64;
        prop_assert_eq!(rank_with_ties(&values).iter().sum::<f64>(), n * (n + 1.0) / 2.0);
    }

    #[test]
    fn ranks_follow_values(values in prop::collection::vec(0.0f64..1.0, 2..20)) {
        let ranks = rank_with_ties(&values);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(ranks[i] < ranks[j]);
                }
            }
        }
    }

    #[test]
    fn oracle_beats_random_in_expectation(m in means(12), pick in 0usize..12) {
        let k = pick % m.len() + 1;
        let oracle = expected_oracle_optimal(&m, k).unwrap();
        let random = expected_random_optimal(&m, k).unwrap();
        prop_assert!(oracle <= random + 1e-12);
        prop_assert!(expected_oracle_average(&m, k).unwrap() <= expected_oracle_average(&m, m.len()).unwrap() + 1e-12);
    }

    #[test]
    fn random_optimum_improves_with_k(m in means(12)) {
        let values: Vec<f64> = (1..=m.len()).map(|k| expected_random_optimal(&m, k).unwrap()).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn hit_probability_grows_with_k(p in 1u64..40, g_pick in 0u64..40) {
        let g = g_pick % p + 1;
        let mut last = 0.0;
        for k in 1..=p {
            let h = random_top_hit_probability(p, g, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!(h >= last);
            last = h;
        }
        prop_assert_eq!(last, 1.0);
    }

    #[test]
    fn skewness_is_a_fraction(m in prop::collection::vec(0.0f64..1.0, 2..20)) {
        if let Ok(s) = skewness(&m) {
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn welch_p_is_a_probability(
        a in prop::collection::vec(0.0f64..1.0, 2..12),
        b in prop::collection::vec(0.0f64..1.0, 2..12),
    ) {
        let p = welch_p(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(welch_p(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn random_subsets_are_distinct_and_replayable(n in 1usize..30, pick in 0usize..30, seed in any::<u64>()) {
        let k = pick % n + 1;
        let s = random_subset(n, k, seed);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), k);
        prop_assert!(s.iter().all(|&i| i < n));
        prop_assert_eq!(random_subset(n, k, seed), s);
    }
}

#[test]
fn studentized_range_at_ten_strategies_twenty_datasets() {
    // q_{0.05} for ten groups at infinite degrees of freedom is 4.474, divided by sqrt 2.
    let q = studentized_range_q(10, 0.05).unwrap();
    assert!((q - 4.474 / 2f64.sqrt()).abs() < 2e-3, "{q}");
    let cd = nemenyi_cd(10, 20, 0.05).unwrap();
    let expected = q * (10.0 * 11.0 / (6.0 * 20.0_f64)).sqrt();
    assert!((cd - expected).abs() < 1e-12);
    assert!((cd - 3.0293).abs() < 2e-3, "{cd}");
}

#[test]
fn studentized_range_beyond_the_table() {
    // Infinite-df studentized range quantiles: q_{0.05}(30) = 5.3013, q_{0.10}(33) = 5.0659.
    let q = studentized_range_q(30, 0.05).unwrap();
    assert!((q - 5.3013 / 2f64.sqrt()).abs() < 1e-3, "{q}");
    let q = studentized_range_q(33, 0.10).unwrap();
    assert!((q - 5.0659 / 2f64.sqrt()).abs() < 1e-3, "{q}");
    assert!(studentized_range_q(21, 0.05).unwrap() > studentized_range_q(20, 0.05).unwrap());
}

#[test]
fn random_subset_is_roughly_uniform() {
    // Every 2-subset of 6 items should come up about equally often.
    let mut counts = std::collections::HashMap::new();
    let draws = 10_000;
    for seed in 0..draws {
        let mut s = random_subset(6, 2, seed);
        s.sort_unstable();
        *counts.entry(s).or_insert(0u32) += 1;
    }
    assert_eq!(counts.len(), 15);
    let expected = draws as f64 / 15.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9th percentile of chi-square with 14 degrees of freedom.
    assert!(chi2 < 36.12, "chi-square {chi2}");
}
