use failover::instances::{rng_from_seed, trial_seed};
use failover::model::{compute_loads, check_feasible, Assignment, DemandSequence, ProblemParams};
use failover::stochastic::{failover_stochastic, RoundOutcome, StochasticParams};
use rand::Rng;

fn uniform_stream(seed: u64, hi: f64) -> impl Iterator<Item = f64> {
    let mut rng = rng_from_seed(seed);
    std::iter::from_fn(move || Some(rng.gen::<f64>() * hi))
}

#[test]
fn runs_are_feasible_at_every_prefix() {
    for trial in 0..40u64 {
        let b = [1.0, 1.3, 2.0][trial as usize % 3];
        let m = [20, 60, 150, 400][trial as usize % 4];
        let p = ProblemParams::new(b, Some(m)).unwrap();
        let mut it = uniform_stream(trial_seed(3, trial), p.max_size());
        let cst1 = [0.0, 1.0, 3.0][trial as usize % 3];
        let run = failover_stochastic(&mut it, &p, &StochasticParams { cst1 }).unwrap();
        assert!(run.machines_opened <= m);
        assert!(run.assignment.max_machine().is_none_or(|u| u < run.machines_opened));
        let d = DemandSequence::new(run.sizes.clone(), &p).unwrap();
        let mut prefix = Assignment::new();
        for (j, pair) in run.assignment.placements() {
            prefix.place(j, pair);
            if j % 7 == 0 {
                let loads = compute_loads(&prefix, &d).unwrap();
                assert!(check_feasible(&loads, &p, 1e-9).is_ok(), "trial {trial} prefix {j}");
            }
        }
        let loads = compute_loads(&run.assignment, &d).unwrap();
        assert!(check_feasible(&loads, &p, 1e-9).is_ok());
        // Every consumed demand is either placed or rejected by a failure.
        assert_eq!(run.assignment.len() + run.rejected.len(), run.sizes.len());
        let mut budget = m;
        for r in &run.rounds {
            assert_eq!(r.budget, budget);
            assert!(r.opened <= r.budget);
            budget -= r.opened;
            if r.outcome == RoundOutcome::Skipped {
                assert_eq!(r.consumed, 0);
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let p = ProblemParams::new(1.0, Some(300)).unwrap();
    let run = |seed| {
        let mut it = uniform_stream(seed, 0.5);
        failover_stochastic(&mut it, &p, &StochasticParams::default()).unwrap()
    };
    let (a, b) = (run(9), run(9));
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.rounds, b.rounds);
}

#[test]
fn smoke_uniform_hundred_machines() {
    let p = ProblemParams::new(1.0, Some(100)).unwrap();
    let mut it = uniform_stream(1, 0.5);
    let run = failover_stochastic(&mut it, &p, &StochasticParams::default()).unwrap();
    assert!(run.machines_opened <= 100);
    assert!(run.utilization() > 0.0);
}
