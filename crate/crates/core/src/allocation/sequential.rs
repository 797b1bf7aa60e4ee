use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use super::AllocationInputs;
use super::{allocate_equal, allocate_theorem2, monotone_counts, monotone_targets, ocba_fractions};
use crate::stats::{select_observed_best, DesignId, DesignStats, Simulator};
use crate::{Error, Result};

const TARGET_SLACK: f64 = 1e-9;

/// Budget allocation policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    /// Equal split of simulation time.
    Ea,
    /// Classic OCBA over replication counts; every replication is charged
    /// its actual duration.
    Ocba,
    /// OCBA over simulation time with the mean replication time in the rule.
    Ocbas,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Ea, Policy::Ocba, Policy::Ocbas];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Ea => "ea",
            Policy::Ocba => "ocba",
            Policy::Ocbas => "ocbas",
        }
    }

    /// Stable numeric tag, used when deriving random streams.
    pub fn tag(self) -> u64 {
        match self {
            Policy::Ea => 1,
            Policy::Ocba => 2,
            Policy::Ocbas => 3,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ea" => Ok(Policy::Ea),
            "ocba" => Ok(Policy::Ocba),
            "ocbas" => Ok(Policy::Ocbas),
            _ => Err(Error::InvalidArgument(
                "policy must be one of ea, ocba, ocbas",
            )),
        }
    }
}

/// Parameters of one sequential run.
///
/// `warmup` and `increment` are in time units for [`Policy::Ea`] and
/// [`Policy::Ocbas`] and in replications for [`Policy::Ocba`].
/// `total_budget` is always in time units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyConfig {
    pub policy: Policy,
    pub warmup: u64,
    pub increment: u64,
    pub total_budget: u64,
}

impl PolicyConfig {
    pub fn new(policy: Policy, warmup: u64, increment: u64, total_budget: u64) -> Self {
        PolicyConfig {
            policy,
            warmup,
            increment,
            total_budget,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if k < 2 {
            return Err(Error::InvalidArgument("at least two designs are required"));
        }
        if self.warmup == 0 || self.increment == 0 {
            return Err(Error::InvalidArgument(
                "warm-up and increment must be positive",
            ));
        }
        // every replication takes at least one unit, so k * n0 units is the
        // least a count-based warm-up can consume
        if self.total_budget < k as u64 * self.warmup {
            return Err(Error::InvalidArgument(
                "total budget does not cover the warm-up",
            ));
        }
        Ok(())
    }
}

/// Outcome of one sequential run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub selected: DesignId,
    pub stats: Vec<DesignStats>,
    /// Sum of the durations of every replication that was run.
    pub consumed_time: u64,
    /// Number of allocation rounds after the warm-up.
    pub iterations: u64,
    /// Longest single replication seen.
    pub max_elapsed: u64,
}

struct Runner<'a, S: ?Sized, R: ?Sized> {
    sim: &'a S,
    rng: &'a mut R,
    stats: Vec<DesignStats>,
    max_elapsed: u64,
}

impl<S: Simulator + ?Sized, R: Rng + ?Sized> Runner<'_, S, R> {
    fn replicate(&mut self, i: usize) -> Result<()> {
        let design = DesignId::from_index(i);
        let obs = self.sim.run(design, self.rng)?;
        if obs.design != design {
            return Err(Error::InvalidArgument(
                "simulator reported a different design",
            ));
        }
        self.max_elapsed = self.max_elapsed.max(obs.elapsed);
        self.stats[i].push(&obs);
        Ok(())
    }

    /// Runs whole replications until the design's consumed time reaches
    /// `target`; the last one may overshoot and is charged in full.
    fn run_until_time(&mut self, i: usize, target: f64) -> Result<()> {
        // absorb rounding in the rescaled targets
        let target = target - TARGET_SLACK * target.max(1.0);
        while (self.stats[i].consumed_time as f64) < target {
            self.replicate(i)?;
        }
        Ok(())
    }

    fn run_until_count(&mut self, i: usize, target: u64) -> Result<()> {
        while self.stats[i].completed < target {
            self.replicate(i)?;
        }
        Ok(())
    }

    /// Sample variances need two replications per design.
    fn ensure_two_replications(&mut self) -> Result<()> {
        for i in 0..self.stats.len() {
            self.run_until_count(i, 2)?;
        }
        Ok(())
    }

    fn consumed(&self) -> u64 {
        self.stats.iter().map(|s| s.consumed_time).sum()
    }
}

/// Sequential allocation: warm up every design, then repeatedly raise the
/// stage total by the increment, recompute per-design targets with the
/// policy, and simulate each design up to its target.
///
/// Time-based policies stop once the allocated stage total reaches the
/// budget; the final increment is clipped to land on it. The count-based
/// policy stops once the consumed time reaches the budget. Targets never
/// decrease between rounds.
pub fn run_sequential<S, R>(sim: &S, cfg: &PolicyConfig, rng: &mut R) -> Result<SelectionReport>
where
    S: Simulator + ?Sized,
    R: Rng + ?Sized,
{
    let k = sim.num_designs();
    cfg.validate(k)?;
    let mut runner = Runner {
        sim,
        rng,
        stats: vec![DesignStats::new(); k],
        max_elapsed: 0,
    };
    let iterations = match cfg.policy {
        Policy::Ea | Policy::Ocbas => time_based(&mut runner, cfg)?,
        Policy::Ocba => count_based(&mut runner, cfg)?,
    };
    let selected = select_observed_best(&runner.stats)?;
    let consumed_time = runner.consumed();
    Ok(SelectionReport {
        selected,
        stats: runner.stats,
        consumed_time,
        iterations,
        max_elapsed: runner.max_elapsed,
    })
}

fn time_based<S, R>(runner: &mut Runner<'_, S, R>, cfg: &PolicyConfig) -> Result<u64>
where
    S: Simulator + ?Sized,
    R: Rng + ?Sized,
{
    let k = runner.stats.len();
    let budget = cfg.total_budget as f64;
    let mut targets = vec![cfg.warmup as f64; k];
    for (i, &t) in targets.iter().enumerate() {
        runner.run_until_time(i, t)?;
    }
    runner.ensure_two_replications()?;

    let mut stage_total = (k as u64 * cfg.warmup) as f64;
    let mut iterations = 0;
    while stage_total < budget {
        stage_total = (stage_total + cfg.increment as f64).min(budget);
        let fractions = match cfg.policy {
            Policy::Ocbas => {
                allocate_theorem2(&AllocationInputs::from_stats(&runner.stats, 1.0)?)?.into_vec()
            }
            _ => allocate_equal(k, 1.0).into_vec(),
        };
        targets = monotone_targets(&fractions, &targets, stage_total);
        for (i, &t) in targets.iter().enumerate() {
            runner.run_until_time(i, t)?;
        }
        iterations += 1;
    }
    Ok(iterations)
}

fn count_based<S, R>(runner: &mut Runner<'_, S, R>, cfg: &PolicyConfig) -> Result<u64>
where
    S: Simulator + ?Sized,
    R: Rng + ?Sized,
{
    let k = runner.stats.len();
    for i in 0..k {
        runner.run_until_count(i, cfg.warmup)?;
    }
    runner.ensure_two_replications()?;

    let mut iterations = 0;
    while runner.consumed() < cfg.total_budget {
        let current: Vec<u64> = runner.stats.iter().map(|s| s.completed).collect();
        let total_reps = current.iter().sum::<u64>() + cfg.increment;
        let fractions = ocba_fractions(&AllocationInputs::from_stats(&runner.stats, 1.0)?)?;
        let targets = monotone_counts(&fractions, &current, total_reps);
        for (i, &t) in targets.iter().enumerate() {
            runner.run_until_count(i, t)?;
        }
        iterations += 1;
    }
    Ok(iterations)
}
