//! Designs, observations and per-design running statistics.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::{Error, Result};

/// One-based identifier of a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DesignId(u32);

impl DesignId {
    /// # Panics
    ///
    /// If `id` is zero.
    pub fn new(id: u32) -> Self {
        assert!(id >= 1, "design ids start at 1");
        DesignId(id)
    }

    pub fn from_index(index: usize) -> Self {
        DesignId(index as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position of the design in per-design slices.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for DesignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The set of competing designs `1..=k`, and the true best when it is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemSpec {
    k: usize,
    true_best: Option<DesignId>,
}

impl ProblemSpec {
    pub fn new(k: usize, true_best: Option<DesignId>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument("at least two designs are required"));
        }
        if let Some(b) = true_best {
            if b.index() >= k {
                return Err(Error::InvalidArgument(
                    "true best is not one of the designs",
                ));
            }
        }
        Ok(ProblemSpec { k, true_best })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn true_best(&self) -> Option<DesignId> {
        self.true_best
    }

    pub fn design_ids(&self) -> impl Iterator<Item = DesignId> {
        (0..self.k).map(DesignId::from_index)
    }
}

/// Output of a single replication: a performance sample and the integer
/// time the replication consumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub design: DesignId,
    pub value: f64,
    pub elapsed: u64,
}

impl Observation {
    pub fn new(design: DesignId, value: f64, elapsed: u64) -> Result<Self> {
        if elapsed == 0 {
            return Err(Error::InvalidArgument(
                "a replication takes at least one time unit",
            ));
        }
        Ok(Observation {
            design,
            value,
            elapsed,
        })
    }
}

/// Running sample statistics of one design.
///
/// Mean and sum of squared deviations are maintained with Welford's update;
/// time is accumulated exactly in integers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DesignStats {
    pub completed: u64,
    pub mean: f64,
    pub m2: f64,
    pub consumed_time: u64,
}

impl DesignStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the statistics after absorbing `obs`.
    pub fn update(mut self, obs: &Observation) -> Self {
        self.push(obs);
        self
    }

    pub fn push(&mut self, obs: &Observation) {
        assert!(obs.elapsed >= 1, "replication time must be positive");
        self.completed += 1;
        let delta = obs.value - self.mean;
        self.mean += delta / self.completed as f64;
        self.m2 += delta * (obs.value - self.mean);
        self.consumed_time += obs.elapsed;
    }

    /// Unbiased sample variance, available from two replications on.
    pub fn variance(&self) -> Option<f64> {
        (self.completed >= 2).then(|| (self.m2 / (self.completed - 1) as f64).max(0.0))
    }

    /// Average replication time, available from one replication on.
    pub fn mean_time(&self) -> Option<f64> {
        (self.completed >= 1).then(|| self.consumed_time as f64 / self.completed as f64)
    }
}

/// Returns the design with the smallest sample mean; ties go to the
/// smallest id. `all_stats[i]` belongs to design `i + 1`.
pub fn select_observed_best(all_stats: &[DesignStats]) -> Result<DesignId> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in all_stats.iter().enumerate() {
        if s.completed == 0 {
            return Err(Error::InsufficientObservations {
                design: DesignId::from_index(i),
                completed: 0,
            });
        }
        match best {
            Some((_, m)) if s.mean >= m => {}
            _ => best = Some((i, s.mean)),
        }
    }
    best.map(|(i, _)| DesignId::from_index(i))
        .ok_or(Error::InvalidArgument("no designs to select from"))
}

/// Per-design time budgets. Entry `i` belongs to design `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationVector {
    budgets: Vec<f64>,
}

impl AllocationVector {
    pub fn new(budgets: Vec<f64>) -> Result<Self> {
        if budgets.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidArgument(
                "budgets must be finite and nonnegative",
            ));
        }
        Ok(AllocationVector { budgets })
    }

    /// Rescales nonnegative weights so that they sum to `total`.
    pub(crate) fn from_weights(weights: Vec<f64>, total: f64) -> Self {
        let sum: f64 = weights.iter().sum();
        let budgets = weights.into_iter().map(|w| w / sum * total).collect();
        AllocationVector { budgets }
    }

    pub fn get(&self, design: DesignId) -> f64 {
        self.budgets[design.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.budgets
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.budgets
    }

    pub fn len(&self) -> usize {
        self.budgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.budgets.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.budgets.iter().sum()
    }

    /// Fraction of the total assigned to each design.
    pub fn fractions(&self) -> Vec<f64> {
        let total = self.total();
        self.budgets.iter().map(|b| b / total).collect()
    }
}

/// A design simulator: runs one replication of a design and reports the
/// performance sample together with the integer time it took.
///
/// Implementations must draw all randomness from `rng`, so a fixed seed
/// reproduces the observation.
pub trait Simulator {
    fn num_designs(&self) -> usize;

    fn run<R: Rng + ?Sized>(&self, design: DesignId, rng: &mut R) -> Result<Observation>;
}

impl<S: Simulator + ?Sized> Simulator for &S {
    fn num_designs(&self) -> usize {
        (**self).num_designs()
    }

    fn run<R: Rng + ?Sized>(&self, design: DesignId, rng: &mut R) -> Result<Observation> {
        (**self).run(design, rng)
    }
}
