//! Macro-replication experiments.
//!
//! Every replication draws from its own stream, seeded from the plan's base
//! seed and the replication's coordinates, and results are gathered by
//! index. Output therefore does not depend on the number of workers.

use ocbas_core::testbeds::smoke::{self, DesignEstimate, SmokeTestbed};
use ocbas_core::{run_sequential, DesignId, DesignStats, Policy, PolicyConfig, Simulator};
use rayon::prelude::*;

use crate::seed;
use crate::{HarnessError, Testbed};

/// Policy with its warm-up and increment; see [`PolicyConfig`] for units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicySetup {
    pub policy: Policy,
    pub warmup: u64,
    pub increment: u64,
}

impl PolicySetup {
    pub fn config(&self, total_budget: u64) -> PolicyConfig {
        PolicyConfig::new(self.policy, self.warmup, self.increment, total_budget)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub testbed: Testbed,
    pub policies: Vec<PolicySetup>,
    /// Strictly increasing total budgets.
    pub budgets: Vec<u64>,
    pub macro_reps: u64,
    pub base_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.macro_reps == 0 {
            return Err(HarnessError::Plan("macro_reps must be at least 1".into()));
        }
        if self.budgets.is_empty() {
            return Err(HarnessError::Plan("no budgets given".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Plan(
                "budgets must be strictly increasing".into(),
            ));
        }
        if self.policies.is_empty() {
            return Err(HarnessError::Plan("no policies given".into()));
        }
        if self.testbed.true_best().is_none() {
            return Err(HarnessError::Plan("testbed has no known true best".into()));
        }
        let k = self.testbed.num_designs();
        for setup in &self.policies {
            for &budget in &self.budgets {
                setup.config(budget).validate(k).map_err(|e| {
                    HarnessError::Plan(format!("{} at budget {budget}: {e}", setup.policy))
                })?;
            }
        }
        Ok(())
    }
}

/// PCS estimate of one (policy, budget) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PcsRow {
    pub policy: Policy,
    pub budget: u64,
    pub pcs: f64,
    /// `sqrt(pcs (1 - pcs) / macro_reps)`.
    pub std_err: f64,
    pub macro_reps: u64,
    pub mean_consumed_time: f64,
}

impl PcsRow {
    pub fn new(policy: Policy, budget: u64, correct: u64, macro_reps: u64, consumed: f64) -> Self {
        let pcs = correct as f64 / macro_reps as f64;
        PcsRow {
            policy,
            budget,
            pcs,
            std_err: (pcs * (1.0 - pcs) / macro_reps as f64).sqrt(),
            macro_reps,
            mean_consumed_time: consumed,
        }
    }
}

/// A cell that was abandoned because a macro-replication failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub policy: Policy,
    pub budget: u64,
    pub replication: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<PcsRow>,
    pub failures: Vec<CellFailure>,
}

impl ExperimentResult {
    pub fn row(&self, policy: Policy, budget: u64) -> Option<&PcsRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.budget == budget)
    }
}

/// Runs every (policy, budget) cell of the plan on the current rayon pool.
pub fn run_pcs_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult, HarnessError> {
    plan.validate()?;
    let truth = plan.testbed.true_best().expect("validated");
    let mut result = ExperimentResult::default();
    for setup in &plan.policies {
        for &budget in &plan.budgets {
            let cfg = setup.config(budget);
            let outcomes: Vec<Result<(bool, u64), ocbas_core::Error>> = (0..plan.macro_reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = seed::stream(plan.base_seed, &[setup.policy.tag(), budget, rep]);
                    run_sequential(&plan.testbed, &cfg, &mut rng)
                        .map(|r| (r.selected == truth, r.consumed_time))
                })
                .collect();
            let mut correct = 0;
            let mut consumed = 0u128;
            let mut failure = None;
            for (rep, outcome) in outcomes.into_iter().enumerate() {
                match outcome {
                    Ok((hit, time)) => {
                        correct += u64::from(hit);
                        consumed += u128::from(time);
                    }
                    Err(e) => {
                        failure = Some(CellFailure {
                            policy: setup.policy,
                            budget,
                            replication: rep as u64,
                            message: e.to_string(),
                        });
                        break;
                    }
                }
            }
            match failure {
                Some(f) => result.failures.push(f),
                None => result.rows.push(PcsRow::new(
                    setup.policy,
                    budget,
                    correct,
                    plan.macro_reps,
                    consumed as f64 / plan.macro_reps as f64,
                )),
            }
        }
    }
    Ok(result)
}

/// Mean response time of every smoke design, `reps` replications each.
pub fn estimate_smoke_table(
    testbed: &SmokeTestbed,
    reps: u64,
    base_seed: u64,
) -> Result<Vec<DesignEstimate>, HarnessError> {
    estimate_with_tag(testbed, reps, base_seed, seed::SMOKE_TABLE_TAG)
}

/// `testbed` with its true best fixed by a high-precision estimate.
pub fn smoke_with_truth(
    testbed: SmokeTestbed,
    truth_reps: u64,
    base_seed: u64,
) -> Result<(SmokeTestbed, Vec<DesignEstimate>), HarnessError> {
    let estimates = estimate_with_tag(&testbed, truth_reps, base_seed, seed::SMOKE_TRUTH_TAG)?;
    let best = smoke::best_estimate(&estimates).expect("sixteen designs");
    Ok((testbed.with_true_best(best), estimates))
}

fn estimate_with_tag(
    testbed: &SmokeTestbed,
    reps: u64,
    base_seed: u64,
    tag: u64,
) -> Result<Vec<DesignEstimate>, HarnessError> {
    if reps == 0 {
        return Err(HarnessError::Plan("reps must be at least 1".into()));
    }
    (0..testbed.num_designs())
        .map(|i| {
            let design = DesignId::from_index(i);
            let times = response_times(testbed, design, reps, base_seed, tag)?;
            let stats = times
                .iter()
                .fold(DesignStats::new(), |s, obs| s.update(obs));
            Ok(DesignEstimate::from_stats(testbed.designs()[i], &stats))
        })
        .collect()
}

fn response_times(
    testbed: &SmokeTestbed,
    design: DesignId,
    reps: u64,
    base_seed: u64,
    tag: u64,
) -> Result<Vec<ocbas_core::Observation>, HarnessError> {
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed::stream(base_seed, &[tag, u64::from(design.get()), rep]);
            testbed.run(design, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(HarnessError::from)
}

/// Empirical PMF of one design's replication time as sorted
/// `(time, frequency)` pairs.
pub fn empirical_pmf<S: Simulator + Sync>(
    testbed: &S,
    design: DesignId,
    reps: u64,
    base_seed: u64,
) -> Result<Vec<(u64, f64)>, HarnessError> {
    if reps == 0 {
        return Err(HarnessError::Plan("reps must be at least 1".into()));
    }
    let times: Vec<u64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed::stream(
                base_seed,
                &[seed::SMOKE_PMF_TAG, u64::from(design.get()), rep],
            );
            testbed.run(design, &mut rng).map(|o| o.elapsed)
        })
        .collect::<Result<_, _>>()?;
    let mut counts = std::collections::BTreeMap::new();
    for t in times {
        *counts.entry(t).or_insert(0u64) += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(t, n)| (t, n as f64 / reps as f64))
        .collect())
}

/// Runs `f` on a dedicated pool with `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(
    workers: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    Ok(pool.install(f))
}
