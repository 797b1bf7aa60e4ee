use ocbas::harness::{self, ExperimentPlan, PolicySetup};
use ocbas::Testbed;
use ocbas_core::testbeds::TimeModel;
use ocbas_core::Policy;

fn plan(seed: u64) -> ExperimentPlan {
    let testbed = Testbed::synthetic(TimeModel::UniformSpread(5)).unwrap();
    ExperimentPlan {
        policies: Policy::ALL
            .iter()
            .map(|&p| testbed.default_setup(p))
            .collect(),
        testbed,
        budgets: vec![1000, 2000],
        macro_reps: 40,
        base_seed: seed,
    }
}

#[test]
fn rows_follow_policy_then_budget() {
    let result = harness::run_pcs_experiment(&plan(1)).unwrap();
    let keys: Vec<(Policy, u64)> = result.rows.iter().map(|r| (r.policy, r.budget)).collect();
    assert_eq!(
        keys,
        [
            (Policy::Ea, 1000),
            (Policy::Ea, 2000),
            (Policy::Ocba, 1000),
            (Policy::Ocba, 2000),
            (Policy::Ocbas, 1000),
            (Policy::Ocbas, 2000)
        ]
    );
    for r in &result.rows {
        let se = (r.pcs * (1.0 - r.pcs) / 40.0).sqrt();
        assert!((r.std_err - se).abs() < 1e-15);
    }
}

#[test]
fn same_seed_same_result_on_any_pool() {
    let a = harness::with_workers(1, || harness::run_pcs_experiment(&plan(5)))
        .unwrap()
        .unwrap();
    let b = harness::with_workers(3, || harness::run_pcs_experiment(&plan(5)))
        .unwrap()
        .unwrap();
    assert_eq!(a, b);
    let c = harness::run_pcs_experiment(&plan(6)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn invalid_plans_are_rejected_before_running() {
    let mut p = plan(1);
    p.budgets = vec![2000, 1000];
    assert!(harness::run_pcs_experiment(&p).is_err());
    let mut p = plan(1);
    p.policies = vec![PolicySetup {
        policy: Policy::Ocbas,
        warmup: 500,
        increment: 100,
    }];
    assert!(harness::run_pcs_experiment(&p).is_err());
    let mut p = plan(1);
    p.testbed = Testbed::Smoke(ocbas_core::testbeds::SmokeTestbed::representatives());
    assert!(p.validate().is_err(), "smoke testbed without a known best");
}

#[test]
fn smoke_truth_is_the_smallest_estimate() {
    let base = ocbas_core::testbeds::SmokeTestbed::representatives();
    let (testbed, estimates) = harness::smoke_with_truth(base, 400, 3).unwrap();
    let best = testbed.true_best().unwrap();
    assert!(estimates
        .iter()
        .all(|e| e.mean >= estimates[best.index()].mean));
}

#[test]
fn pcs_grows_with_budget() {
    let testbed = Testbed::synthetic(TimeModel::UniformSpread(10)).unwrap();
    let plan = ExperimentPlan {
        policies: Policy::ALL
            .iter()
            .map(|&p| testbed.default_setup(p))
            .collect(),
        testbed,
        budgets: vec![1000, 4000, 7000, 10_000],
        macro_reps: 400,
        base_seed: 21,
    };
    let result = harness::run_pcs_experiment(&plan).unwrap();
    for policy in Policy::ALL {
        let rows: Vec<_> = plan
            .budgets
            .iter()
            .map(|&t| result.row(policy, t).unwrap())
            .collect();
        for w in rows.windows(2) {
            let se = (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
            assert!(
                w[1].pcs >= w[0].pcs - 3.0 * se,
                "{policy}: {} then {}",
                w[0].pcs,
                w[1].pcs
            );
        }
        for r in &rows {
            // overshoot is bounded by one replication per design
            assert!(r.mean_consumed_time >= r.budget as f64);
            assert!(r.mean_consumed_time <= r.budget as f64 + 10.0 * 19.0);
        }
    }
}
