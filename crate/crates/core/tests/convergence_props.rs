use failover::convergence::{
    estimate_c, lb_identity_check, max_deficiency, proxy_opt, quantile_measure_check,
    reverse_deficiency, ProxyMethod,
};
use failover::instances::{quantile_instance, DistributionSpec};
use failover::oracle::{brute_opt_mach, SearchLimits};
use proptest::prelude::*;

/// Maximum bipartite matching of sources into targets with target >= source.
fn exhaustive_matching(sources: &[f64], targets: &[f64]) -> usize {
    fn go(i: usize, sources: &[f64], targets: &[f64], used: &mut Vec<bool>) -> usize {
        if i == sources.len() {
            return 0;
        }
        let mut best = go(i + 1, sources, targets, used);
        for k in 0..targets.len() {
            if !used[k] && targets[k] >= sources[i] {
                used[k] = true;
                best = best.max(1 + go(i + 1, sources, targets, used));
                used[k] = false;
            }
        }
        best
    }
    go(0, sources, targets, &mut vec![false; targets.len()])
}

fn grid_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|n| {
        // Coarse grid values force ties.
        let v = (0u32..8).prop_map(|k| k as f64 / 8.0);
        (prop::collection::vec(v.clone(), n), prop::collection::vec(v, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn hall_identity_matches_exhaustive((x, s) in grid_pair()) {
        let r = max_deficiency(&x, &s).unwrap();
        prop_assert_eq!(r.unmatched, x.len() - exhaustive_matching(&x, &s));
        prop_assert_eq!(r.matched + r.unmatched, x.len());
        let rev = reverse_deficiency(&x, &s).unwrap();
        prop_assert_eq!(rev.unmatched, s.len() - exhaustive_matching(&s, &x));
    }
}

#[test]
fn quantile_measure_bounds() {
    let specs = [
        DistributionSpec::Uniform { lo: 0.0, hi: 0.5 },
        DistributionSpec::Uniform { lo: 0.1, hi: 0.3 },
        DistributionSpec::PointMass { value: 0.25 },
        DistributionSpec::Discrete { values: vec![0.125, 0.25, 0.5], weights: vec![0.25, 0.25, 0.5] },
    ];
    for spec in &specs {
        for t in [1, 2, 3, 8, 13, 64] {
            assert!(quantile_measure_check(spec, t).unwrap(), "{spec} at T = {t}");
        }
    }
}

#[test]
fn offline_proxy_dominates_brute() {
    let spec = DistributionSpec::Uniform { lo: 0.0, hi: 0.5 };
    for t in 1..=7 {
        for b in [1.0, 1.3] {
            let brute = proxy_opt(&spec, b, t, ProxyMethod::Brute).unwrap();
            let offline = proxy_opt(&spec, b, t, ProxyMethod::OfflineMin).unwrap();
            assert!(offline >= brute, "T = {t}, B = {b}");
        }
    }
    // Explicit grid {0, 1/12, ..., 5/12}.
    let grid: Vec<f64> = (0..6).map(|j| j as f64 / 12.0).collect();
    assert_eq!(quantile_instance(&spec, 6).unwrap().sizes, grid);
    let direct = brute_opt_mach(&grid, 1.0, &SearchLimits::default()).unwrap();
    assert_eq!(proxy_opt(&spec, 1.0, 6, ProxyMethod::Brute).unwrap(), direct);
}

#[test]
fn point_mass_series_is_constant() {
    let half = DistributionSpec::PointMass { value: 0.5 };
    let s = estimate_c(&half, 1.0, &[1, 2, 4, 8], ProxyMethod::Brute).unwrap();
    assert!(s.records.iter().all(|r| r.ratio == 2.0));
    let s = estimate_c(&half, 1.0, &[64, 128, 256], ProxyMethod::OfflineMin).unwrap();
    assert!(s.records.iter().all(|r| r.ratio == 2.0));
    assert_eq!(s.c_estimate(), Some(2.0));
    assert!(s.to_csv().starts_with("T,machines,ratio,diff\n64,128,2.000000,\n"));
}

#[test]
fn lb_identity_on_uniform() {
    let spec = DistributionSpec::Uniform { lo: 0.0, hi: 0.5 };
    assert!(lb_identity_check(&spec, 1.0, 2, 6).unwrap().holds);
    for t in 1..=4 {
        for n in t..=7 {
            assert!(lb_identity_check(&spec, 1.0, t, n).unwrap().holds, "T = {t}, n = {n}");
        }
    }
}
