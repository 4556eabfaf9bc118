use failover::configlp::{
    config_valid, price_column, round_up, solve_config_lp, Configuration, PricingMode, TypePartition,
};
use failover::simplex::solve_packing;
use proptest::prelude::*;

/// All valid configurations, by odometer over per-type counts up to floor(1/s).
fn all_configs(p: &TypePartition, b: f64) -> Vec<Configuration> {
    let caps: Vec<u32> = p.types().iter().map(|&(s, _)| (1.0 / s + 1e-9).floor() as u32).collect();
    let mut out = Vec::new();
    let mut c = vec![0u32; caps.len()];
    loop {
        let cfg = Configuration::new(c.clone());
        if config_valid(&cfg, p, b, 1e-9) {
            out.push(cfg);
        }
        let mut i = 0;
        loop {
            if i == c.len() {
                return out;
            }
            if c[i] < caps[i] {
                c[i] += 1;
                break;
            }
            c[i] = 0;
            i += 1;
        }
    }
}

/// LP value with every valid configuration as a column.
fn full_lp(p: &TypePartition, b: f64) -> f64 {
    let cols = all_configs(p, b);
    let obj: Vec<f64> = p.types().iter().map(|&(_, n)| 2.0 * n as f64).collect();
    let rows: Vec<Vec<f64>> = cols.iter().map(|c| c.counts().iter().map(|&n| n as f64).collect()).collect();
    let rhs = vec![1.0; rows.len()];
    solve_packing(&obj, &rows, &rhs, 100_000).unwrap().0
}

fn partition() -> impl Strategy<Value = (TypePartition, f64)> {
    (
        prop::collection::vec((0.05f64..=0.5, 1usize..4), 1..5),
        prop::sample::select(vec![1.0, 1.3, 2.0]),
    )
        .prop_map(|(types, b)| {
            let types = types.into_iter().map(|(s, n)| (s.min(b / 2.0), n)).collect();
            (TypePartition::new(types).unwrap(), b)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_pricing_matches_enumeration(
        (p, b) in partition(),
        raw in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let y: Vec<f64> = raw[..p.len()].to_vec();
        let (c, v) = price_column(&y, &p, b, PricingMode::Exact).unwrap();
        prop_assert!(config_valid(&c, &p, b, 1e-9));
        let best = all_configs(&p, b)
            .iter()
            .map(|c| c.counts().iter().zip(&y).map(|(&n, &y)| n as f64 * y).sum::<f64>())
            .fold(0.0, f64::max);
        prop_assert!((v - best).abs() < 1e-9, "priced {} vs enumerated {}", v, best);
    }

    #[test]
    fn column_generation_matches_full_lp((p, b) in partition()) {
        let r = solve_config_lp(&p, b, 1e-9).unwrap();
        prop_assert!((r.objective - full_lp(&p, b)).abs() < 1e-6);
        prop_assert!(r.basic);
        prop_assert!(r.columns.len() <= p.len());
        for (c, x) in &r.columns {
            prop_assert!(config_valid(c, &p, b, 1e-9));
            prop_assert!(*x > 0.0);
        }
        for (t, cov) in r.coverage(p.len()).into_iter().enumerate() {
            prop_assert!(cov >= 2.0 * p.count(t) as f64 - 1e-7);
        }
        let rounded = round_up(&r, &p);
        prop_assert!(rounded.len() as f64 <= r.objective + r.columns.len() as f64 + 1e-9);
        for t in 0..p.len() {
            let cov: u32 = rounded.iter().map(|c| c.count(t)).sum();
            prop_assert!(cov as usize >= 2 * p.count(t));
        }
    }

    #[test]
    fn duplication_and_merge((p, b) in partition(), k in 2usize..=4) {
        let one = solve_config_lp(&p, b, 1e-9).unwrap().objective;
        let many = solve_config_lp(&p.scaled(k), b, 1e-9).unwrap().objective;
        prop_assert!((many - k as f64 * one).abs() < 1e-6);
        let merged = solve_config_lp(&p.merged(), b, 1e-9).unwrap().objective;
        prop_assert!((merged - one).abs() < 1e-6);
    }
}

#[test]
fn fptas_pricing_is_within_factor() {
    let p = TypePartition::new(vec![(0.12, 3), (0.2, 2), (0.33, 1), (0.45, 2)]).unwrap();
    let y = [0.1, 0.21, 0.3, 0.55];
    let (_, exact) = price_column(&y, &p, 1.0, PricingMode::Exact).unwrap();
    for eps in [0.5, 0.2, 0.05] {
        let (c, v) = price_column(&y, &p, 1.0, PricingMode::Fptas(eps)).unwrap();
        assert!(config_valid(&c, &p, 1.0, 1e-9));
        assert!(v >= (1.0 - eps) * exact - 1e-12);
    }
}
