mod common;

use std::collections::BTreeMap;

use nbknn_core::data_io::split_indices;
use nbknn_core::multiclass::{ovo_plus_from_ordering, ovr_plus_from_ordering};
use nbknn_core::negbin::complementary_pvalue;
use nbknn_core::{
    adjusted_pvalue, bayes_classify, cdf_below, classify_ovo_plus, classify_ovr_plus, count_to_kth_minority,
    efficiency_scores, fit_binary, knn_classify, neighbor_order, prf, ClassId, ConfusionMatrix, GaussianClassSpec,
    KnnConfig, LabeledDataset, NegBinParams, SplitSpec, Weighting,
};
use proptest::prelude::*;

use common::{continuous_fixture, fixture_rng, integer_fixture, permute_rows};

fn p0_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.05), Just(0.1), Just(0.3), Just(0.5), 0.01f64..0.99]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn adjusted_pvalue_increases_in_n(k in 1u64..40, p0 in p0_strategy(), extra in 0u64..400) {
        let params = NegBinParams::new(k, p0).unwrap();
        let n = k + extra;
        let a = adjusted_pvalue(&params, n).unwrap();
        let b = adjusted_pvalue(&params, n + 1).unwrap();
        prop_assert!(a <= b);
        // Strictness is only observable while the step exceeds rounding.
        if b < 1.0 - 1e-12 {
            prop_assert!(a < b, "e({n}) = {a} not below e({}) = {b}", n + 1);
        }
    }

    #[test]
    fn mid_p_values_sum_to_one(k in 1u64..60, p0 in p0_strategy(), extra in 0u64..2000) {
        let params = NegBinParams::new(k, p0).unwrap();
        let n = k + extra;
        let e = adjusted_pvalue(&params, n).unwrap();
        let c = complementary_pvalue(&params, n).unwrap();
        prop_assert!((e + c - 1.0).abs() <= 1e-14);
        prop_assert!(cdf_below(&params, n).unwrap() <= e);
    }

    #[test]
    fn n_obs_strictly_increases_in_k(seed in any::<u64>(), n in 4usize..60) {
        let mut rng = fixture_rng(seed);
        let data = integer_fixture(&mut rng, n, 2, 2, 6);
        let query = [rng.below(6) as f64, rng.below(6) as f64];
        let ordering = neighbor_order(&data, &query).unwrap();
        let minority = ClassId(2);
        let n2 = data.count(minority) as u64;
        let mut last = 0;
        for k in 1..=n2 {
            let stat = count_to_kth_minority(&ordering, data.labels(), minority, k).unwrap();
            prop_assert!(stat.n_obs > last);
            prop_assert!(stat.n_obs >= k);
            let all_minority = ordering.order()[..k as usize].iter().all(|&i| data.label(i) == minority);
            prop_assert_eq!(stat.n_obs == k, all_minority);
            last = stat.n_obs;
        }
        prop_assert!(count_to_kth_minority(&ordering, data.labels(), minority, n2 + 1).is_err());
    }

    #[test]
    fn neighbor_order_follows_points_not_rows(seed in any::<u64>(), n in 2usize..80) {
        let mut rng = fixture_rng(seed);
        let data = continuous_fixture(&mut rng, &[n, 3], 3);
        let mut perm: Vec<usize> = (0..data.len()).collect();
        rng.shuffle(&mut perm);
        let shuffled = permute_rows(&data, &perm);
        let query = [0.1, -0.2, 0.3];
        let a = neighbor_order(&data, &query).unwrap();
        let b = neighbor_order(&shuffled, &query).unwrap();
        let mapped: Vec<usize> = b.order().iter().map(|&i| perm[i]).collect();
        prop_assert_eq!(a.order(), &mapped[..]);
    }

    #[test]
    fn predictions_are_scale_equivariant(seed in any::<u64>(), n in 6usize..50, factor in 1u32..5, j in 2usize..4) {
        let mut rng = fixture_rng(seed);
        let data = integer_fixture(&mut rng, n, 2, j, 8);
        let scaled = data.scaled(factor as f64);
        let query = [rng.below(8) as f64, rng.below(8) as f64];
        let q_scaled = [query[0] * factor as f64, query[1] * factor as f64];
        let a = neighbor_order(&data, &query).unwrap();
        let b = neighbor_order(&scaled, &q_scaled).unwrap();
        prop_assert_eq!(a.order(), b.order());
        let k_max = 1 + rng.below(10) as usize;
        if j == 2 {
            let fa = fit_binary(data.clone(), k_max).unwrap().evidence_pair(&query).unwrap();
            let fb = fit_binary(scaled.clone(), k_max).unwrap().evidence_pair(&q_scaled).unwrap();
            prop_assert_eq!(fa, fb);
        }
        prop_assert_eq!(
            classify_ovo_plus(&data, &query, k_max).unwrap(),
            classify_ovo_plus(&scaled, &q_scaled, k_max).unwrap()
        );
        prop_assert_eq!(
            classify_ovr_plus(&data, &query, k_max).unwrap(),
            classify_ovr_plus(&scaled, &q_scaled, k_max).unwrap()
        );
    }

    #[test]
    fn evidence_depends_only_on_the_prefix(seed in any::<u64>(), n1 in 5usize..60, n2 in 2usize..20, k_max in 1usize..12) {
        let mut rng = fixture_rng(seed);
        let data = continuous_fixture(&mut rng, &[n1.max(n2), n2], 2);
        let query = [0.0, 0.0];
        let clf = fit_binary(data.clone(), k_max).unwrap();
        let before = clf.evidence_pair(&query).unwrap();

        // Everything after the k_max_eff-th minority neighbor is moved far
        // away and relabeled among itself; class counts are unchanged.
        let ordering = neighbor_order(&data, &query).unwrap();
        let cut = count_to_kth_minority(&ordering, data.labels(), clf.minority(), clf.k_max_eff() as u64)
            .unwrap()
            .n_obs as usize;
        let tail: Vec<usize> = ordering.order()[cut..].to_vec();
        let mut tail_labels: Vec<ClassId> = tail.iter().map(|&i| data.label(i)).collect();
        rng.shuffle(&mut tail_labels);
        let mut rows: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
        let mut labels = data.labels().to_vec();
        for (t, (&i, &l)) in tail.iter().zip(&tail_labels).enumerate() {
            rows[i] = vec![100.0 + t as f64 + rng.uniform(), -50.0 * rng.uniform()];
            labels[i] = l;
        }
        let altered = LabeledDataset::from_rows(&rows, labels, 2).unwrap();
        let after = fit_binary(altered, k_max).unwrap().evidence_pair(&query).unwrap();
        prop_assert_eq!(before.e1.to_bits(), after.e1.to_bits());
        prop_assert_eq!(before.e2.to_bits(), after.e2.to_bits());
    }

    #[test]
    fn evidence_is_deterministic(seed in any::<u64>(), n in 4usize..60) {
        let mut rng = fixture_rng(seed);
        let data = integer_fixture(&mut rng, n, 2, 2, 5);
        let query = [2.0, 2.0];
        let clf = fit_binary(data.clone(), 45).unwrap().with_trace(true);
        let a = clf.evidence_pair(&query).unwrap();
        let b = fit_binary(data, 45).unwrap().with_trace(true).evidence_pair(&query).unwrap();
        prop_assert_eq!(a.e1.to_bits(), b.e1.to_bits());
        prop_assert_eq!(a.e2.to_bits(), b.e2.to_bits());
        prop_assert_eq!(a.per_k, b.per_k);
    }

    #[test]
    fn reductions_agree_with_binary_on_two_classes(seed in any::<u64>(), n in 3usize..50, k_max in 1usize..50) {
        let mut rng = fixture_rng(seed);
        let data = integer_fixture(&mut rng, n, 2, 2, 6);
        let query = [rng.below(6) as f64, rng.below(6) as f64];
        let binary = fit_binary(data.clone(), k_max).unwrap().classify(&query).unwrap();
        prop_assert_eq!(classify_ovo_plus(&data, &query, k_max).unwrap(), binary);
        prop_assert_eq!(classify_ovr_plus(&data, &query, k_max).unwrap(), binary);
    }

    #[test]
    fn reductions_ignore_row_order(seed in any::<u64>(), j in 3usize..6, k_max in 1usize..20) {
        let mut rng = fixture_rng(seed);
        let counts: Vec<usize> = (0..j).map(|_| 2 + rng.below(25) as usize).collect();
        let data = continuous_fixture(&mut rng, &counts, 2);
        let mut perm: Vec<usize> = (0..data.len()).collect();
        rng.shuffle(&mut perm);
        let shuffled = permute_rows(&data, &perm);
        let query = [rng.uniform() - 0.5, rng.uniform() - 0.5];
        let oa = neighbor_order(&data, &query).unwrap();
        let ob = neighbor_order(&shuffled, &query).unwrap();
        let ovo = ovo_plus_from_ordering(&data, &oa, k_max).unwrap();
        prop_assert!(ovo.depth < j);
        prop_assert_eq!(&ovo, &ovo_plus_from_ordering(&shuffled, &ob, k_max).unwrap());
        let ovr = ovr_plus_from_ordering(&data, &oa, k_max).unwrap();
        prop_assert!(ovr.depth < j);
        prop_assert_eq!(&ovr, &ovr_plus_from_ordering(&shuffled, &ob, k_max).unwrap());
    }

    #[test]
    fn macro_metrics_are_relabel_invariant(cells in proptest::collection::vec(0u64..50, 9), seed in any::<u64>()) {
        let j = 3;
        let rows: Vec<Vec<u64>> = cells.chunks(j).map(<[u64]>::to_vec).collect();
        let mut perm: Vec<usize> = (0..j).collect();
        fixture_rng(seed).shuffle(&mut perm);
        // Class perm[i] of the original becomes class i.
        let relabeled: Vec<Vec<u64>> = (0..j).map(|a| (0..j).map(|p| rows[perm[a]][perm[p]]).collect()).collect();
        let r0 = prf(&ConfusionMatrix::from_rows(&rows).unwrap());
        let r1 = prf(&ConfusionMatrix::from_rows(&relabeled).unwrap());
        for i in 0..j {
            prop_assert_eq!(r1.per_class[i], r0.per_class[perm[i]]);
        }
        prop_assert!((r0.macro_avg.precision - r1.macro_avg.precision).abs() < 1e-15);
        prop_assert!((r0.macro_avg.recall - r1.macro_avg.recall).abs() < 1e-15);
        prop_assert!((r0.macro_avg.f1 - r1.macro_avg.f1).abs() < 1e-15);
    }

    #[test]
    fn balanced_macro_recall_is_accuracy(cells in proptest::collection::vec(0u64..20, 6), size in 20u64..40) {
        // Rows sum to `size`: the last cell in each row takes the remainder.
        let j = 3;
        let mut rows = vec![vec![0u64; j]; j];
        for (a, row) in rows.iter_mut().enumerate() {
            let first = cells[2 * a].min(size);
            let second = cells[2 * a + 1].min(size - first);
            row[0] = first;
            row[1] = second;
            row[2] = size - first - second;
        }
        let cm = ConfusionMatrix::from_rows(&rows).unwrap();
        let r = prf(&cm);
        prop_assert!((r.macro_avg.recall - cm.accuracy()).abs() < 1e-15);
    }

    #[test]
    fn efficiency_is_scale_invariant(values in proptest::collection::vec(0.01f64..1.0, 1..6), c in 0.1f64..100.0) {
        let a: BTreeMap<String, f64> = values.iter().enumerate().map(|(i, &v)| (format!("m{i}"), v)).collect();
        let b: BTreeMap<String, f64> = a.iter().map(|(k, v)| (k.clone(), v * c)).collect();
        let ea = efficiency_scores(&a).unwrap();
        let eb = efficiency_scores(&b).unwrap();
        for (k, v) in &ea {
            prop_assert!((v - eb[k]).abs() < 1e-12);
            prop_assert!(*v <= 1.0);
        }
        prop_assert!(ea.values().any(|&v| v == 1.0));
    }

    #[test]
    fn split_partitions_and_balances(seed in any::<u64>(), trial in 0usize..50, counts in proptest::collection::vec(4usize..60, 2..5), frac in 0.1f64..0.6) {
        let mut rng = fixture_rng(seed);
        let data = continuous_fixture(&mut rng, &counts, 1);
        let spec = SplitSpec { minority_test_fraction: frac, seed, trials: 1 };
        let Ok(m) = spec.test_per_class(data.class_counts()) else { return Ok(()) };
        let s = split_indices(&data, &spec, trial).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        for c in data.class_ids() {
            prop_assert_eq!(s.test.iter().filter(|&&i| data.label(i) == c).count(), m);
        }
        prop_assert_eq!(&s, &split_indices(&data, &spec, trial).unwrap());
    }

    #[test]
    fn equal_class_sizes_make_weighting_irrelevant(seed in any::<u64>(), half in 2usize..30, k in 1usize..20) {
        let mut rng = fixture_rng(seed);
        let data = continuous_fixture(&mut rng, &[half, half], 2);
        let k = k.min(data.len());
        let query = [rng.uniform(), rng.uniform()];
        let u = knn_classify(&data, &query, &KnnConfig::new(Weighting::Uniform).with_k(k)).unwrap();
        let w = knn_classify(&data, &query, &KnnConfig::new(Weighting::InverseClassSize).with_k(k)).unwrap();
        prop_assert_eq!(u, w);
    }

    #[test]
    fn bayes_ignores_common_prior_scale(x in -4.0f64..4.0, y in -4.0f64..4.0, c in 0.01f64..100.0, p in 0.05f64..0.95) {
        let specs = vec![
            GaussianClassSpec::new(vec![0.0, 0.0], 1.0, p),
            GaussianClassSpec::new(vec![1.0, 1.0], 2.0, 1.0 - p),
        ];
        let scaled: Vec<GaussianClassSpec> = specs
            .iter()
            .map(|s| GaussianClassSpec::new(s.mean.clone(), s.variance, s.prior * c))
            .collect();
        // Near the boundary the two log scores differ only by rounding.
        let margin = {
            let d0 = (x * x + y * y) / 2.0;
            let d1 = ((x - 1.0).powi(2) + (y - 1.0).powi(2)) / 4.0 + 2.0f64.ln();
            (p.ln() - d0 - (1.0 - p).ln() + d1).abs()
        };
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(bayes_classify(&specs, &[x, y]), bayes_classify(&scaled, &[x, y]));
    }
}
