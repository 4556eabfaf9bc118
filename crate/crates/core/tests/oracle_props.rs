use failover::convergence::subadditivity_check;
use failover::oracle::{brute_feasible, brute_opt_mach, SearchLimits};
use proptest::prelude::*;

fn instance(max: usize) -> impl Strategy<Value = (f64, Vec<f64>)> {
    prop::sample::select(vec![1.0, 1.3, 2.0]).prop_flat_map(move |b| {
        let hi = (b / 2.0f64).min(1.0);
        // Millesimal sizes stay exact under the oracle's quantization.
        let size = (0u32..=1000).prop_map(move |k| (k as f64 / 1000.0 * hi * 1000.0).round() / 1000.0);
        (Just(b), prop::collection::vec(size, 1..=max))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn bounded_differences((b, sizes) in instance(5), pos in 0usize..5, k in 0u32..=1000) {
        let limits = SearchLimits::default();
        let base = brute_opt_mach(&sizes, b, &limits).unwrap();
        let mut other = sizes.clone();
        let hi = (b / 2.0f64).min(1.0);
        other[pos % sizes.len()] = (k as f64 / 1000.0 * hi * 1000.0).round() / 1000.0;
        let changed = brute_opt_mach(&other, b, &limits).unwrap();
        prop_assert!(base.abs_diff(changed) <= 2);
    }

    #[test]
    fn monotone_and_agreement((b, sizes) in instance(5), extra in 0u32..=500) {
        let limits = SearchLimits::default();
        let opt = brute_opt_mach(&sizes, b, &limits).unwrap();
        let mut more = sizes.clone();
        more.push(extra as f64 / 1000.0);
        let opt_more = brute_opt_mach(&more, b, &limits).unwrap();
        prop_assert!(opt <= opt_more && opt_more <= opt + 2);
        for m in 2..=8 {
            prop_assert_eq!(brute_feasible(&sizes, b, m, &limits).unwrap(), opt <= m);
        }
    }

    #[test]
    fn relabeling_is_irrelevant((b, sizes) in instance(6)) {
        let limits = SearchLimits::default();
        let mut rev = sizes.clone();
        rev.reverse();
        prop_assert_eq!(brute_opt_mach(&sizes, b, &limits).unwrap(), brute_opt_mach(&rev, b, &limits).unwrap());
    }

    #[test]
    fn subadditive((b, sizes) in instance(4), cut in 0usize..4) {
        let cut = cut.min(sizes.len());
        prop_assert!(subadditivity_check(&sizes[..cut], &sizes[cut..], b).unwrap());
    }
}
