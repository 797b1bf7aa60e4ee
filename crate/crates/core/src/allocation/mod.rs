//! Budget allocation rules and the sequential allocation procedure.
//!
//! Time-based OCBAS rule, for the observed best `b` and the other designs `i, j`:
//!
//! ```text
//! T_i / T_j = (s_i / d_i^2) / (s_j / d_j^2),   s_i = sigma_i^2 * mu_i,  d_i = mean_b - mean_i
//! T_b       = sqrt(s_b * sum_{i != b} T_i^2 / s_i)
//! ```
//!
//! Only the mean replication time `mu_i` enters. With all `mu_i = 1` this is
//! the classic replication-count OCBA rule.

mod sequential;

use alloc::vec;
use alloc::vec::Vec;

use crate::normal;
use crate::stats::{select_observed_best, AllocationVector, DesignId, DesignStats};
use crate::{Error, Result};

pub use sequential::{run_sequential, Policy, PolicyConfig, SelectionReport};

/// Floor applied to sample variances before they enter a denominator.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Relative floor on `|mean_b - mean_i|`, scaled by `max(1, |mean_b|)`.
pub const DELTA_FLOOR: f64 = 1e-6;

/// Per-design estimates driving an allocation, plus the observed best and
/// the stage total to distribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationInputs {
    means: Vec<f64>,
    variances: Vec<f64>,
    mean_times: Vec<f64>,
    best: DesignId,
    stage_total: f64,
}

impl AllocationInputs {
    /// `best` must hold the minimal mean.
    pub fn new(
        means: Vec<f64>,
        variances: Vec<f64>,
        mean_times: Vec<f64>,
        best: DesignId,
        stage_total: f64,
    ) -> Result<Self> {
        let k = means.len();
        if k < 2 {
            return Err(Error::InvalidArgument("at least two designs are required"));
        }
        if variances.len() != k || mean_times.len() != k {
            return Err(Error::InvalidArgument("per-design inputs differ in length"));
        }
        if best.index() >= k {
            return Err(Error::InvalidArgument(
                "observed best is not one of the designs",
            ));
        }
        if means.iter().any(|m| !m.is_finite())
            || variances.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            || mean_times.iter().any(|t| !(t.is_finite() && *t > 0.0))
        {
            return Err(Error::InvalidArgument(
                "means must be finite, variances nonnegative and mean times positive",
            ));
        }
        let best_mean = means[best.index()];
        if means.iter().any(|&m| m < best_mean) {
            return Err(Error::InvalidArgument(
                "observed best must have the minimal mean",
            ));
        }
        Ok(AllocationInputs {
            means,
            variances,
            mean_times,
            best,
            stage_total,
        })
    }

    /// Like [`new`](Self::new) but picks the observed best itself.
    pub fn with_observed_best(
        means: Vec<f64>,
        variances: Vec<f64>,
        mean_times: Vec<f64>,
        stage_total: f64,
    ) -> Result<Self> {
        let best = argmin(&means).ok_or(Error::InvalidArgument("no designs"))?;
        Self::new(means, variances, mean_times, best, stage_total)
    }

    /// Sample estimates from running statistics. Every design needs at least
    /// two completed replications.
    pub fn from_stats(stats: &[DesignStats], stage_total: f64) -> Result<Self> {
        let best = select_observed_best(stats)?;
        let mut means = Vec::with_capacity(stats.len());
        let mut variances = Vec::with_capacity(stats.len());
        let mut mean_times = Vec::with_capacity(stats.len());
        for (i, s) in stats.iter().enumerate() {
            let variance = s.variance().ok_or(Error::InsufficientObservations {
                design: DesignId::from_index(i),
                completed: s.completed,
            })?;
            means.push(s.mean);
            variances.push(variance);
            mean_times.push(s.mean_time().unwrap_or(1.0));
        }
        Self::new(means, variances, mean_times, best, stage_total)
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn best(&self) -> DesignId {
        self.best
    }

    pub fn stage_total(&self) -> f64 {
        self.stage_total
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean_times(&self) -> &[f64] {
        &self.mean_times
    }

    pub fn with_stage_total(mut self, stage_total: f64) -> Self {
        self.stage_total = stage_total;
        self
    }

    /// Same estimates with every mean replication time set to one.
    pub fn with_unit_times(mut self) -> Self {
        self.mean_times.iter_mut().for_each(|t| *t = 1.0);
        self
    }

    /// `sigma_i^2 * mu_i` with the variance floor applied.
    fn scaled_variance(&self, i: usize) -> f64 {
        self.variances[i].max(VARIANCE_FLOOR) * self.mean_times[i]
    }

    /// `|mean_b - mean_i|` floored away from zero.
    fn guarded_gap(&self, i: usize) -> f64 {
        let best_mean = self.means[self.best.index()];
        let floor = DELTA_FLOOR * best_mean.abs().max(1.0);
        (self.means[i] - best_mean).abs().max(floor)
    }
}

fn argmin(values: &[f64]) -> Option<DesignId> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, m)) if v >= m => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| DesignId::from_index(i))
}

/// Asymptotically optimal time allocation for stochastic replication times.
///
/// One non-best design is fixed at `1`, the other non-best designs follow
/// from the ratio condition, the best from the square-root condition, and
/// the result is scaled to the stage total.
pub fn allocate_theorem2(inputs: &AllocationInputs) -> Result<AllocationVector> {
    if inputs.stage_total.is_nan() || inputs.stage_total <= 0.0 {
        return Err(Error::NonPositiveBudget {
            design: None,
            value: inputs.stage_total,
        });
    }
    let b = inputs.best.index();
    let k = inputs.k();
    let noise_to_gap = |i: usize| {
        let gap = inputs.guarded_gap(i);
        inputs.scaled_variance(i) / (gap * gap)
    };
    let reference = if b == 0 { 1 } else { 0 };
    let reference_weight = noise_to_gap(reference);

    let mut weights = vec![0.0; k];
    let mut best_sum = 0.0;
    for i in (0..k).filter(|&i| i != b) {
        let w = if i == reference {
            1.0
        } else {
            noise_to_gap(i) / reference_weight
        };
        weights[i] = w;
        best_sum += w * w / inputs.scaled_variance(i);
    }
    weights[b] = libm::sqrt(inputs.scaled_variance(b) * best_sum);
    Ok(AllocationVector::from_weights(weights, inputs.stage_total))
}

/// Splits `stage_total` evenly over `k` designs.
pub fn allocate_equal(k: usize, stage_total: f64) -> AllocationVector {
    AllocationVector::from_weights(vec![1.0; k], stage_total)
}

/// Classic OCBA: replication counts from the same rule with unit times,
/// rounded by largest remainder so the counts add up to `total_reps`.
pub fn allocate_ocba_classic(inputs: &AllocationInputs, total_reps: u64) -> Result<Vec<u64>> {
    let k = inputs.k();
    if total_reps < k as u64 {
        return Err(Error::TooFewReplications {
            total: total_reps,
            designs: k,
        });
    }
    let fractions = ocba_fractions(inputs)?;
    Ok(monotone_counts(&fractions, &vec![0; k], total_reps))
}

pub(crate) fn ocba_fractions(inputs: &AllocationInputs) -> Result<Vec<f64>> {
    let unit = inputs.clone().with_unit_times().with_stage_total(1.0);
    Ok(allocate_theorem2(&unit)?.fractions())
}

/// Bonferroni lower bound on the probability of correct selection under
/// the normal approximation of each design's posterior. Not clipped; it can
/// be negative.
pub fn apcs(inputs: &AllocationInputs, budgets: &AllocationVector) -> Result<f64> {
    Ok(1.0 - selection_error_bound(inputs, budgets)?)
}

/// `sum_{i != b} Pr{J_b > J_i}` under the normal approximation, i.e.
/// `1 - APCS`. Kept separate so tiny values do not cancel against one.
pub fn selection_error_bound(inputs: &AllocationInputs, budgets: &AllocationVector) -> Result<f64> {
    if budgets.len() != inputs.k() {
        return Err(Error::InvalidArgument(
            "budget vector length differs from design count",
        ));
    }
    for (i, &t) in budgets.as_slice().iter().enumerate() {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::NonPositiveBudget {
                design: Some(DesignId::from_index(i)),
                value: t,
            });
        }
    }
    let b = inputs.best.index();
    let t = budgets.as_slice();
    let best_term = inputs.scaled_variance(b) / t[b];
    Ok((0..inputs.k())
        .filter(|&i| i != b)
        .map(|i| {
            let delta = inputs.means[b] - inputs.means[i];
            let sd = libm::sqrt(best_term + inputs.scaled_variance(i) / t[i]);
            normal::cdf(delta / sd)
        })
        .sum())
}

/// Distributes `total` proportionally to `fractions` without lowering any
/// design below `current`. Designs whose proportional share would fall
/// below their current level keep it, and the rest is re-split among the
/// remaining designs. If `total` does not exceed the current sum, the
/// current levels are returned.
pub(crate) fn monotone_targets(fractions: &[f64], current: &[f64], total: f64) -> Vec<f64> {
    let fixed = fix_designs(fractions, current, total);
    let (budget, share) = free_budget(fractions, current, &fixed, total);
    (0..fractions.len())
        .map(|i| {
            if fixed[i] {
                current[i]
            } else {
                fractions[i] / share * budget
            }
        })
        .collect()
}

/// Integer version of [`monotone_targets`] with largest-remainder rounding;
/// ties in the remainder go to the smallest index.
pub(crate) fn monotone_counts(fractions: &[f64], current: &[u64], total: u64) -> Vec<u64> {
    let current_f: Vec<f64> = current.iter().map(|&c| c as f64).collect();
    let fixed = fix_designs(fractions, &current_f, total as f64);
    let committed: u64 = (0..current.len())
        .filter(|&i| fixed[i])
        .map(|i| current[i])
        .sum();
    if fixed.iter().all(|&f| f) {
        return current.to_vec();
    }
    let budget = total - committed;
    let share: f64 = (0..fractions.len())
        .filter(|&i| !fixed[i])
        .map(|i| fractions[i])
        .sum();
    let mut counts = current.to_vec();
    let mut remainders = Vec::new();
    let mut assigned = 0u64;
    for i in (0..fractions.len()).filter(|&i| !fixed[i]) {
        let desired = fractions[i] / share * budget as f64;
        let whole = (libm::floor(desired) as u64).max(current[i]);
        counts[i] = whole;
        assigned += whole;
        remainders.push((i, desired - whole as f64));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut left = budget.saturating_sub(assigned);
    for &(i, _) in &remainders {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn fix_designs(fractions: &[f64], current: &[f64], total: f64) -> Vec<bool> {
    let mut fixed = vec![false; fractions.len()];
    loop {
        let (budget, share) = free_budget(fractions, current, &fixed, total);
        let mut changed = false;
        for i in 0..fractions.len() {
            if !fixed[i] && (share <= 0.0 || fractions[i] / share * budget < current[i]) {
                fixed[i] = true;
                changed = true;
            }
        }
        if !changed || fixed.iter().all(|&f| f) {
            return fixed;
        }
    }
}

fn free_budget(fractions: &[f64], current: &[f64], fixed: &[bool], total: f64) -> (f64, f64) {
    let committed: f64 = (0..current.len())
        .filter(|&i| fixed[i])
        .map(|i| current[i])
        .sum();
    let share: f64 = (0..fractions.len())
        .filter(|&i| !fixed[i])
        .map(|i| fractions[i])
        .sum();
    (total - committed, share)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs())
    }

    fn inputs(means: &[f64], sds: &[f64], mus: &[f64], total: f64) -> AllocationInputs {
        AllocationInputs::with_observed_best(
            means.to_vec(),
            sds.iter().map(|s| s * s).collect(),
            mus.to_vec(),
            total,
        )
        .unwrap()
    }

    #[test]
    fn three_design_example() {
        let inp = inputs(&[0.0, 1.0, 2.0], &[6.0; 3], &[10.0; 3], 1000.0);
        let t = allocate_theorem2(&inp).unwrap();
        let t = t.as_slice();
        assert!(rel_close(t[1] / t[2], 4.0, 1e-12));
        assert!(rel_close(t[0], libm::hypot(t[1], t[2]), 1e-12));
        // weights (sqrt 17, 4, 1) scaled to 1000
        let scale = 1000.0 / (17f64.sqrt() + 5.0);
        assert!(rel_close(t[0], 17f64.sqrt() * scale, 1e-12));
        assert!(rel_close(t[1], 4.0 * scale, 1e-12));
        assert!(rel_close(t[2], scale, 1e-12));
        assert!((t[0] - 451.941_016).abs() < 1e-6);
        assert!((t[1] - 438.447_187).abs() < 1e-6);
        assert!((t[2] - 109.611_797).abs() < 1e-6);
    }

    #[test]
    fn symmetric_designs_get_equal_budgets() {
        let inp = inputs(
            &[0.0, 2.0, -2.0 + 4.0],
            &[3.0, 5.0, 5.0],
            &[4.0, 7.0, 7.0],
            77.0,
        );
        let t = allocate_theorem2(&inp).unwrap();
        assert!(rel_close(t.as_slice()[1], t.as_slice()[2], 1e-15));
    }

    #[test]
    fn best_not_first() {
        let inp = inputs(
            &[3.0, 1.0, 2.0, 5.0],
            &[2.0, 1.0, 3.0, 2.0],
            &[1.0, 2.0, 3.0, 4.0],
            10.0,
        );
        assert_eq!(inp.best(), DesignId::new(2));
        let t = allocate_theorem2(&inp).unwrap();
        let t = t.as_slice();
        let w = |sd: f64, mu: f64, d: f64| sd * sd * mu / (d * d);
        let w0 = w(2.0, 1.0, 2.0);
        let w2 = w(3.0, 3.0, 1.0);
        let w3 = w(2.0, 4.0, 4.0);
        assert!(rel_close(t[0] / t[2], w0 / w2, 1e-12));
        assert!(rel_close(t[3] / t[2], w3 / w2, 1e-12));
        let tb = (2.0f64 * (t[0] * t[0] / 4.0 + t[2] * t[2] / 27.0 + t[3] * t[3] / 16.0)).sqrt();
        assert!(rel_close(t[1], tb, 1e-12));
        assert!(rel_close(t.iter().sum::<f64>(), 10.0, 1e-12));
    }

    #[test]
    fn nonpositive_stage_total_rejected() {
        let inp = inputs(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], 0.0);
        assert!(matches!(
            allocate_theorem2(&inp),
            Err(Error::NonPositiveBudget { design: None, .. })
        ));
    }

    #[test]
    fn ties_and_zero_variance_are_guarded() {
        let inp = inputs(&[1.0, 1.0, 2.0], &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 100.0);
        let t = allocate_theorem2(&inp).unwrap();
        assert!(t.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(rel_close(t.total(), 100.0, 1e-12));
    }

    #[test]
    fn inputs_validation() {
        assert!(
            AllocationInputs::new(vec![0.0], vec![1.0], vec![1.0], DesignId::new(1), 1.0).is_err()
        );
        assert!(AllocationInputs::new(
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            DesignId::new(1),
            1.0
        )
        .is_err());
        assert!(AllocationInputs::new(
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 0.0],
            DesignId::new(1),
            1.0
        )
        .is_err());
    }

    #[test]
    fn from_stats_needs_two_replications() {
        let one =
            DesignStats::new().update(&crate::Observation::new(DesignId::new(1), 1.0, 1).unwrap());
        let two = one.update(&crate::Observation::new(DesignId::new(1), 2.0, 3).unwrap());
        assert!(matches!(
            AllocationInputs::from_stats(&[two, one], 10.0),
            Err(Error::InsufficientObservations { completed: 1, .. })
        ));
        let inp = AllocationInputs::from_stats(&[two, two], 10.0).unwrap();
        assert_eq!(inp.mean_times(), &[2.0, 2.0]);
        assert_eq!(inp.variances(), &[0.5, 0.5]);
    }

    #[test]
    fn equal_allocation() {
        assert_eq!(allocate_equal(10, 1000.0).as_slice(), &[100.0; 10]);
        let third = allocate_equal(3, 1.0);
        assert_eq!(third.total(), 1.0);
        assert_eq!(allocate_equal(16, 1e4).as_slice(), &[625.0; 16]);
    }

    #[test]
    fn classic_ocba_counts() {
        let inp = inputs(&[0.0, 1.0, 2.0], &[6.0; 3], &[1.0; 3], 1.0);
        let counts = allocate_ocba_classic(&inp, 100).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 100);
        // fractions (sqrt 17, 4, 1) / (sqrt 17 + 5) of 100: 45.19, 43.85, 10.96
        assert_eq!(counts, vec![45, 44, 11]);

        let sym = inputs(&[0.0, 1.0, 1.0], &[2.0; 3], &[1.0; 3], 1.0);
        // fractions (sqrt 2, 1, 1) / (2 + sqrt 2): 41.42, 29.29, 29.29
        let counts = allocate_ocba_classic(&sym, 100).unwrap();
        assert_eq!(counts, vec![42, 29, 29]);

        assert!(matches!(
            allocate_ocba_classic(&inp, 2),
            Err(Error::TooFewReplications {
                total: 2,
                designs: 3
            })
        ));
    }

    #[test]
    fn apcs_examples() {
        let inp = inputs(&[0.0, 1.0], &[6.0; 2], &[10.0; 2], 1000.0);
        let budgets = AllocationVector::new(vec![500.0, 500.0]).unwrap();
        let v = apcs(&inp, &budgets).unwrap();
        assert!((v - normal::cdf(1.0 / 1.2)).abs() < 1e-15);
        assert!((v - 0.7977).abs() < 1e-4);

        let far = inputs(&[0.0, 1e9, 2e9], &[1.0; 3], &[1.0; 3], 3.0);
        let ones = AllocationVector::new(vec![1.0; 3]).unwrap();
        assert_eq!(apcs(&far, &ones).unwrap(), 1.0);

        let tied = inputs(&[2.0; 4], &[1.0; 4], &[1.0; 4], 4.0);
        let ones = AllocationVector::new(vec![1.0; 4]).unwrap();
        assert_eq!(apcs(&tied, &ones).unwrap(), 1.0 - 3.0 * 0.5);
    }

    #[test]
    fn apcs_rejects_zero_budget() {
        let inp = inputs(&[0.0, 1.0], &[1.0; 2], &[1.0; 2], 1.0);
        let budgets = AllocationVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            apcs(&inp, &budgets),
            Err(Error::NonPositiveBudget { design: Some(d), .. }) if d == DesignId::new(2)
        ));
    }

    #[test]
    fn monotone_targets_respect_floors() {
        let t = monotone_targets(&[0.5, 0.25, 0.25], &[10.0, 60.0, 10.0], 100.0);
        assert_eq!(t[1], 60.0);
        assert!(rel_close(t[0], 0.5 / 0.75 * 40.0, 1e-12));
        assert!(rel_close(t.iter().sum::<f64>(), 100.0, 1e-12));
        // nothing to add
        assert_eq!(
            monotone_targets(&[0.5, 0.5], &[30.0, 40.0], 50.0),
            vec![30.0, 40.0]
        );
        let c = monotone_counts(&[0.5, 0.25, 0.25], &[5, 30, 5], 50);
        assert_eq!(c.iter().sum::<u64>(), 50);
        assert_eq!(c[1], 30);
        assert!(c[0] >= 5 && c[2] >= 5);
    }

    fn instance() -> impl Strategy<Value = AllocationInputs> {
        (3usize..10).prop_flat_map(|k| {
            (
                prop::collection::vec(-10.0f64..10.0, k),
                prop::collection::vec(0.1f64..50.0, k),
                prop::collection::vec(1.0f64..20.0, k),
                1.0f64..1e5,
            )
                .prop_map(|(m, v, mu, t)| {
                    AllocationInputs::with_observed_best(m, v, mu, t).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn scale_equivariant(inp in instance(), factor in 0.1f64..100.0) {
            let a = allocate_theorem2(&inp).unwrap();
            let total = inp.stage_total() * factor;
            let b = allocate_theorem2(&inp.clone().with_stage_total(total)).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!(rel_close(x * factor, *y, 1e-12));
            }
        }

        #[test]
        fn common_time_factor_cancels(inp in instance(), gamma in 0.1f64..100.0) {
            let a = allocate_theorem2(&inp).unwrap().fractions();
            let scaled = AllocationInputs::new(
                inp.means().to_vec(),
                inp.variances().to_vec(),
                inp.mean_times().iter().map(|m| m * gamma).collect(),
                inp.best(),
                inp.stage_total(),
            ).unwrap();
            let b = allocate_theorem2(&scaled).unwrap().fractions();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(rel_close(*x, *y, 1e-12));
            }
        }

        #[test]
        fn apcs_increases_with_gap(inp in instance(), pick in any::<prop::sample::Index>(), extra in 0.01f64..5.0) {
            let b = inp.best().index();
            let others: Vec<usize> = (0..inp.k()).filter(|&i| i != b).collect();
            let i = others[pick.index(others.len())];
            let budgets = allocate_theorem2(&inp).unwrap();
            let mut means = inp.means().to_vec();
            means[i] += extra;
            let wider = AllocationInputs::new(
                means, inp.variances().to_vec(), inp.mean_times().to_vec(), inp.best(), inp.stage_total(),
            ).unwrap();
            let before = selection_error_bound(&inp, &budgets).unwrap();
            let after = selection_error_bound(&wider, &budgets).unwrap();
            prop_assert!(after <= before);
        }

        #[test]
        fn counts_are_monotone_and_exact(
            fr in prop::collection::vec(0.01f64..1.0, 2..10),
            cur_seed in prop::collection::vec(0u64..20, 10),
            extra in 0u64..200,
        ) {
            let k = fr.len();
            let current = &cur_seed[..k];
            let total = current.iter().sum::<u64>() + extra;
            let counts = monotone_counts(&fr, current, total);
            prop_assert_eq!(counts.iter().sum::<u64>(), total);
            for (c, p) in counts.iter().zip(current) {
                prop_assert!(c >= p);
            }
        }
    }
}
