//! Exact distribution of the number of replications completed within a time
//! budget when replication times are i.i.d. integer random variables.
//!
//! With budget `T` and replication times `t_1, t_2, ...`, the number of
//! completed replications `n` satisfies `t_1 + ... + t_n <= T < t_1 + ... + t_{n+1}`.
//! Partial replications produce nothing, so `n` is a renewal counting
//! variable and
//!
//! ```text
//! Pr{n >= c} = (F * f^(c-1))(T)     (c >= 1),   Pr{n >= 0} = 1
//! Pr{n  = c} = Pr{n >= c} - Pr{n >= c + 1}
//! ```
//!
//! where `f^(c)` is the `c`-fold convolution power of the time PMF and `F`
//! its CDF. Given `n = c` the sample mean of Gaussian observations has
//! standard deviation `sigma / sqrt(c)`, which gives the exact posterior CDF
//! as a mixture of normals ([`PosteriorSpec`]).

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{normal, Error, Result};

/// Mass below which the zero-replication event is treated as impossible.
pub const NO_REPLICATION_EPS: f64 = 1e-12;

const MASS_TOLERANCE: f64 = 1e-9;
const RENORMALIZE_DRIFT: f64 = 1e-12;

/// PMF over a contiguous range of nonnegative integers.
#[derive(Clone, PartialEq)]
pub struct DiscretePmf {
    support_min: u64,
    probs: Vec<f64>,
}

impl fmt::Debug for DiscretePmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl DiscretePmf {
    /// Builds a PMF whose first entry is the mass at `support_min`.
    ///
    /// The masses must be nonnegative and sum to one within `1e-9`; they are
    /// renormalized to remove the residual. Leading and trailing zeros are
    /// trimmed.
    pub fn new(support_min: u64, probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument(
                "probabilities must be finite and nonnegative",
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument("probabilities must sum to one"));
        }
        Self::from_weights(support_min, probs)
    }

    /// Normalizes nonnegative weights into a PMF starting at `support_min`.
    pub fn from_weights(support_min: u64, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative",
            ));
        }
        let Some(first) = weights.iter().position(|&w| w > 0.0) else {
            return Err(Error::InvalidArgument("weights must have positive mass"));
        };
        let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(first);
        let sum: f64 = weights[first..=last].iter().sum();
        let probs = weights[first..=last].iter().map(|w| w / sum).collect();
        Ok(DiscretePmf {
            support_min: support_min + first as u64,
            probs,
        })
    }

    pub fn point_mass(value: u64) -> Self {
        DiscretePmf {
            support_min: value,
            probs: vec![1.0],
        }
    }

    /// The identity for convolution: all mass at zero.
    pub fn identity() -> Self {
        Self::point_mass(0)
    }

    /// Uniform over `lo..=hi`.
    pub fn uniform(lo: u64, hi: u64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidArgument("uniform range is empty"));
        }
        let n = (hi - lo + 1) as usize;
        Ok(DiscretePmf {
            support_min: lo,
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_min + self.probs.len() as u64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self, value: u64) -> f64 {
        value
            .checked_sub(self.support_min)
            .and_then(|i| self.probs.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// `Pr{X <= value}`.
    pub fn cdf(&self, value: u64) -> f64 {
        if value < self.support_min {
            return 0.0;
        }
        if value >= self.support_max() {
            return 1.0;
        }
        let upto = (value - self.support_min) as usize;
        self.probs[..=upto].iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, p)| v as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.iter()
            .map(|(v, p)| {
                let d = v as f64 - mean;
                d * d * p
            })
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.support_min + i as u64, p))
    }

    /// Smallest value whose CDF reaches `u`; used for inverse-transform sampling.
    pub fn quantile(&self, u: f64) -> u64 {
        let mut acc = 0.0;
        for (v, p) in self.iter() {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.support_max()
    }

    fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn renormalize_if_drifted(&mut self) {
        let mass = self.total_mass();
        if (mass - 1.0).abs() > RENORMALIZE_DRIFT {
            self.probs.iter_mut().for_each(|p| *p /= mass);
        }
    }
}

/// Distribution of the sum of two independent variables.
pub fn convolve(a: &DiscretePmf, b: &DiscretePmf) -> DiscretePmf {
    let mut probs = vec![0.0; a.probs.len() + b.probs.len() - 1];
    for (i, &pa) in a.probs.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (j, &pb) in b.probs.iter().enumerate() {
            probs[i + j] += pa * pb;
        }
    }
    let mut out = DiscretePmf {
        support_min: a.support_min + b.support_min,
        probs,
    };
    out.renormalize_if_drifted();
    out
}

/// `c`-fold self-convolution; `c = 0` gives the point mass at zero.
pub fn convolution_power(f: &DiscretePmf, c: u64) -> DiscretePmf {
    ConvolutionPowers::new(f.clone())
        .nth(c as usize)
        .expect("the power sequence is infinite")
}

/// Iterator over `f^0, f^1, f^2, ...`, each computed from its predecessor.
#[derive(Debug, Clone)]
pub struct ConvolutionPowers {
    base: DiscretePmf,
    next: DiscretePmf,
}

impl ConvolutionPowers {
    pub fn new(base: DiscretePmf) -> Self {
        ConvolutionPowers {
            base,
            next: DiscretePmf::identity(),
        }
    }
}

impl Iterator for ConvolutionPowers {
    type Item = DiscretePmf;

    fn next(&mut self) -> Option<DiscretePmf> {
        let following = convolve(&self.next, &self.base);
        Some(core::mem::replace(&mut self.next, following))
    }
}

/// `Pr{n >= c}` evaluated literally as `(F * f^(c-1))(T)`.
pub fn prob_replications_at_least(f: &DiscretePmf, budget: u64, c: u64) -> f64 {
    if c == 0 {
        return 1.0;
    }
    if (c - 1).saturating_mul(f.support_min) > budget {
        return 0.0;
    }
    let power = convolution_power(f, c - 1);
    power
        .iter()
        .take_while(|&(x, _)| x <= budget)
        .map(|(x, p)| p * f.cdf(budget - x))
        .sum::<f64>()
        .min(1.0)
}

/// `Pr{n = c}`.
pub fn prob_replications_exact(f: &DiscretePmf, budget: u64, c: u64) -> f64 {
    if c == 0 {
        return 1.0 - f.cdf(budget);
    }
    (prob_replications_at_least(f, budget, c) - prob_replications_at_least(f, budget, c + 1))
        .max(0.0)
}

/// `E[n]`.
pub fn expected_replications(f: &DiscretePmf, budget: u64) -> Result<f64> {
    Ok(ReplicationCount::new(f, budget)?.mean())
}

/// Full distribution of the completed-replication count `n` for one budget.
///
/// Built from the partial-sum distributions restricted to `[0, T]`, which
/// makes every `Pr{n >= c}` available from a single forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationCount {
    budget: u64,
    /// `at_least[c] = Pr{n >= c}` for `c = 0..=c_max`; zero beyond.
    at_least: Vec<f64>,
}

impl ReplicationCount {
    pub fn new(f: &DiscretePmf, budget: u64) -> Result<Self> {
        if f.support_min == 0 {
            return Err(Error::InvalidArgument(
                "replication times must be at least one unit",
            ));
        }
        let c_max = budget / f.support_min;
        let mut at_least = Vec::with_capacity(c_max as usize + 2);
        at_least.push(1.0);
        // partial sum S_c restricted to values <= budget, as (offset, masses)
        let mut lo = 0u64;
        let mut sums: Vec<f64> = vec![1.0];
        for _ in 0..c_max {
            let new_lo = lo + f.support_min;
            if new_lo > budget {
                break;
            }
            let new_hi = (lo + sums.len() as u64 - 1 + f.support_max()).min(budget);
            let mut next = vec![0.0; (new_hi - new_lo + 1) as usize];
            for (i, &p) in sums.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (j, &q) in f.probs.iter().enumerate() {
                    let idx = i + j;
                    if idx >= next.len() {
                        break;
                    }
                    next[idx] += p * q;
                }
            }
            let mass: f64 = next.iter().sum();
            at_least.push(mass.min(*at_least.last().unwrap_or(&1.0)));
            lo = new_lo;
            sums = next;
        }
        Ok(ReplicationCount { budget, at_least })
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Largest count with positive probability bound, `floor(T / support_min)`.
    pub fn max_count(&self) -> u64 {
        self.at_least.len() as u64 - 1
    }

    pub fn at_least(&self, c: u64) -> f64 {
        self.at_least.get(c as usize).copied().unwrap_or(0.0)
    }

    pub fn exact(&self, c: u64) -> f64 {
        (self.at_least(c) - self.at_least(c + 1)).max(0.0)
    }

    /// `(c, Pr{n = c})` for `c = 0..=max_count`.
    pub fn pmf(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        (0..=self.max_count()).map(|c| (c, self.exact(c)))
    }

    pub fn mean(&self) -> f64 {
        // E[n] = sum_{c >= 1} Pr{n >= c}
        self.at_least[1..].iter().sum()
    }
}

pub type PriorCdf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Inputs of the exact posterior CDF of a design's performance.
#[derive(Clone)]
pub struct PosteriorSpec {
    pub mean: f64,
    pub sigma: f64,
    pub time_pmf: DiscretePmf,
    pub budget: u64,
    /// Prior CDF used when no replication completes; never defaulted.
    pub prior_cdf: Option<PriorCdf>,
}

impl fmt::Debug for PosteriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PosteriorSpec")
            .field("mean", &self.mean)
            .field("sigma", &self.sigma)
            .field("time_pmf", &self.time_pmf)
            .field("budget", &self.budget)
            .field("prior_cdf", &self.prior_cdf.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl PosteriorSpec {
    /// Precomputes the replication-count mixture weights.
    pub fn posterior(&self) -> Result<Posterior> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument("sigma must be positive"));
        }
        let count = ReplicationCount::new(&self.time_pmf, self.budget)?;
        let no_replication = 1.0 - self.time_pmf.cdf(self.budget);
        let prior = match (&self.prior_cdf, no_replication > NO_REPLICATION_EPS) {
            (Some(p), _) => Some((p.clone(), no_replication)),
            (None, true) => {
                return Err(Error::PriorRequired {
                    prob_no_replication: no_replication,
                })
            }
            (None, false) => None,
        };
        let components: Vec<(f64, f64)> = (1..=count.max_count())
            .map(|c| (libm::sqrt(c as f64) / self.sigma, count.exact(c)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        let weight_sum = components.iter().map(|&(_, w)| w).sum();
        Ok(Posterior {
            mean: self.mean,
            components,
            weight_sum,
            prior,
        })
    }
}

/// The posterior CDF as a mixture of normals with common mean.
#[derive(Clone)]
pub struct Posterior {
    mean: f64,
    /// `(sqrt(c) / sigma, Pr{n = c})` for every count with positive mass.
    components: Vec<(f64, f64)>,
    weight_sum: f64,
    prior: Option<(PriorCdf, f64)>,
}

impl Posterior {
    pub fn cdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        let mixture: f64 = self
            .components
            .iter()
            .map(|&(scale, w)| normal::cdf(d * scale) * w)
            .sum();
        let value = match &self.prior {
            Some((prior, p0)) => mixture + prior(x) * p0,
            // conditioned on at least one replication
            None => mixture / self.weight_sum,
        };
        value.clamp(0.0, 1.0)
    }
}

/// One-off evaluation of the exact posterior CDF at `x`.
pub fn posterior_cdf(spec: &PosteriorSpec, x: f64) -> Result<f64> {
    Ok(spec.posterior()?.cdf(x))
}

/// Large-budget approximation `N(mean, sigma^2 * mu_time / budget)`.
pub fn gaussian_approx_cdf(mean: f64, sigma: f64, mu_time: f64, budget: f64, x: f64) -> f64 {
    let sd = libm::sqrt(sigma * sigma * mu_time / budget);
    normal::cdf((x - mean) / sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constructors_validate() {
        assert!(DiscretePmf::new(1, vec![0.5, 0.4]).is_err());
        assert!(DiscretePmf::new(1, vec![-0.5, 1.5]).is_err());
        assert!(DiscretePmf::uniform(3, 2).is_err());
        let p = DiscretePmf::from_weights(1, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.support_min(), 2);
        assert_eq!(p.support_max(), 3);
        assert_eq!(p.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn views() {
        let p = DiscretePmf::uniform(9, 11).unwrap();
        assert!(close(p.mean(), 10.0, 1e-12));
        assert!(close(p.variance(), 2.0 / 3.0, 1e-12));
        assert_eq!(p.cdf(8), 0.0);
        assert!(close(p.cdf(9), 1.0 / 3.0, 1e-15));
        assert_eq!(p.cdf(11), 1.0);
        assert_eq!(p.pmf(12), 0.0);
        assert_eq!(p.quantile(0.0), 9);
        assert_eq!(p.quantile(0.5), 10);
        assert_eq!(p.quantile(0.999), 11);
    }

    #[test]
    fn convolution_examples() {
        let d1 = DiscretePmf::point_mass(1);
        assert_eq!(convolve(&d1, &d1), DiscretePmf::point_mass(2));

        let u = DiscretePmf::uniform(1, 2).unwrap();
        let uu = convolve(&u, &u);
        assert_eq!(uu.support_min(), 2);
        assert_eq!(uu.probs(), &[0.25, 0.5, 0.25]);

        assert_eq!(convolve(&u, &DiscretePmf::identity()), u);
        assert_eq!(convolve(&DiscretePmf::identity(), &u), u);
    }

    #[test]
    fn power_examples() {
        let u = DiscretePmf::uniform(1, 2).unwrap();
        assert_eq!(convolution_power(&u, 2).probs(), &[0.25, 0.5, 0.25]);
        assert_eq!(
            convolution_power(&DiscretePmf::point_mass(10), 5),
            DiscretePmf::point_mass(50)
        );
        assert_eq!(convolution_power(&u, 1), u);
        assert_eq!(convolution_power(&u, 0), DiscretePmf::identity());
    }

    #[test]
    fn at_least_examples() {
        let u = DiscretePmf::uniform(1, 2).unwrap();
        assert_eq!(prob_replications_at_least(&u, 7, 0), 1.0);
        let d = DiscretePmf::point_mass(10);
        assert_eq!(prob_replications_at_least(&d, 100, 10), 1.0);
        assert_eq!(prob_replications_at_least(&d, 100, 11), 0.0);
        assert!(close(prob_replications_at_least(&u, 2, 2), 0.25, 1e-15));
    }

    #[test]
    fn exact_examples() {
        let u = DiscretePmf::uniform(1, 2).unwrap();
        assert!(close(prob_replications_exact(&u, 2, 1), 0.75, 1e-15));
        assert_eq!(prob_replications_exact(&u, 2, 0), 0.0);
        let d = DiscretePmf::point_mass(10);
        assert_eq!(prob_replications_exact(&d, 5, 0), 1.0);
        let total: f64 = (0..=20).map(|c| prob_replications_exact(&u, 20, c)).sum();
        assert!(close(total, 1.0, 1e-12));
    }

    #[test]
    fn count_distribution_rejects_zero_time() {
        let f = DiscretePmf::new(0, vec![0.5, 0.5]).unwrap();
        assert!(ReplicationCount::new(&f, 10).is_err());
    }

    #[test]
    fn expected_replications_examples() {
        let d = DiscretePmf::point_mass(10);
        assert!(close(expected_replications(&d, 100).unwrap(), 10.0, 1e-12));
        let u = DiscretePmf::uniform(1, 2).unwrap();
        assert!(close(expected_replications(&u, 2).unwrap(), 1.25, 1e-12));
    }

    #[test]
    fn expected_replications_renewal_limit() {
        let f = DiscretePmf::uniform(9, 11).unwrap();
        let e = expected_replications(&f, 100_000).unwrap();
        assert!((9990.0..=10010.0).contains(&e), "E[n] = {e}");
    }

    #[test]
    fn deterministic_time_posterior_collapses() {
        let spec = PosteriorSpec {
            mean: 0.0,
            sigma: 6.0,
            time_pmf: DiscretePmf::point_mass(10),
            budget: 40,
            prior_cdf: None,
        };
        let post = spec.posterior().unwrap();
        assert_eq!(post.cdf(0.0), 0.5);
        for i in -40..=40 {
            let x = i as f64 * 0.25;
            assert!(close(post.cdf(x), normal::cdf(x / 3.0), 1e-15));
        }
    }

    #[test]
    fn prior_required_when_budget_may_be_empty() {
        let spec = PosteriorSpec {
            mean: 0.0,
            sigma: 1.0,
            time_pmf: DiscretePmf::uniform(5, 15).unwrap(),
            budget: 10,
            prior_cdf: None,
        };
        assert!(matches!(
            posterior_cdf(&spec, 0.0),
            Err(Error::PriorRequired { .. })
        ));
        let with_prior = PosteriorSpec {
            prior_cdf: Some(Arc::new(|x: f64| normal::cdf(x / 10.0))),
            ..spec
        };
        // n = 0 w.p. 5/11; n = 2 only for (5, 5); n = 1 otherwise
        let p0 = 5.0 / 11.0;
        let p2 = 1.0 / 121.0;
        let p1 = 6.0 / 11.0 - p2;
        let expected =
            normal::cdf(0.5) * p1 + normal::cdf(0.5 * 2f64.sqrt()) * p2 + normal::cdf(0.05) * p0;
        assert!(close(
            posterior_cdf(&with_prior, 0.5).unwrap(),
            expected,
            1e-12
        ));
    }

    #[test]
    fn posterior_rejects_bad_sigma() {
        let spec = PosteriorSpec {
            mean: 0.0,
            sigma: 0.0,
            time_pmf: DiscretePmf::point_mass(1),
            budget: 3,
            prior_cdf: None,
        };
        assert!(spec.posterior().is_err());
    }

    #[test]
    fn gaussian_approx_examples() {
        assert_eq!(gaussian_approx_cdf(0.0, 6.0, 10.0, 1000.0, 0.0), 0.5);
        let v = gaussian_approx_cdf(0.0, 6.0, 10.0, 1000.0, 0.6);
        assert!(close(v, normal::cdf(1.0), 1e-12));
        assert!(close(v, 0.8413, 1e-4));
    }

    fn small_pmf() -> impl Strategy<Value = DiscretePmf> {
        (1u64..6, prop::collection::vec(0.01f64..1.0, 1..5))
            .prop_map(|(lo, w)| DiscretePmf::from_weights(lo, w).unwrap())
    }

    proptest! {
        #[test]
        fn literal_and_forward_routes_agree(f in small_pmf(), budget in 0u64..60) {
            let count = ReplicationCount::new(&f, budget).unwrap();
            for c in 0..=count.max_count() + 1 {
                let lit = prob_replications_at_least(&f, budget, c);
                prop_assert!((lit - count.at_least(c)).abs() < 1e-12);
            }
        }

        #[test]
        fn count_pmf_is_a_distribution(f in small_pmf(), budget in 0u64..200) {
            let count = ReplicationCount::new(&f, budget).unwrap();
            let mut total = 0.0;
            for (_, p) in count.pmf() {
                prop_assert!(p >= 0.0);
                total += p;
            }
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn at_least_is_monotone(f in small_pmf(), budget in 0u64..80) {
            let here = ReplicationCount::new(&f, budget).unwrap();
            let more = ReplicationCount::new(&f, budget + 1).unwrap();
            for c in 0..=here.max_count() + 1 {
                prop_assert!(here.at_least(c + 1) <= here.at_least(c) + 1e-15);
                prop_assert!(more.at_least(c) + 1e-12 >= here.at_least(c));
            }
        }

        #[test]
        fn convolution_preserves_mass(a in small_pmf(), b in small_pmf()) {
            let c = convolve(&a, &b);
            prop_assert_eq!(c.support_min(), a.support_min() + b.support_min());
            prop_assert!((c.total_mass() - 1.0).abs() < 1e-12);
            prop_assert!((c.mean() - a.mean() - b.mean()).abs() < 1e-9);
        }

        #[test]
        fn posterior_is_monotone_with_proper_limits(
            f in small_pmf(),
            extra in 0u64..100,
            mean in -5.0f64..5.0,
            sigma in 0.5f64..10.0,
        ) {
            // budget that always fits one replication
            let budget = f.support_max() + extra;
            let post = PosteriorSpec { mean, sigma, time_pmf: f, budget, prior_cdf: None }
                .posterior()
                .unwrap();
            let mut prev = 0.0;
            for i in 0..=1000 {
                let x = mean - 10.0 * sigma + 20.0 * sigma * i as f64 / 1000.0;
                let g = post.cdf(x);
                prop_assert!(g + 1e-15 >= prev);
                prev = g;
            }
            prop_assert!(post.cdf(mean - 10.0 * sigma) < 1e-6);
            prop_assert!(post.cdf(mean + 10.0 * sigma) > 1.0 - 1e-6);
            prop_assert_eq!(post.cdf(mean), 0.5);
        }

        #[test]
        fn deterministic_collapse(mu in 1u64..20, c in 1u64..30, x in -20.0f64..20.0) {
            let post = PosteriorSpec {
                mean: 1.0,
                sigma: 6.0,
                time_pmf: DiscretePmf::point_mass(mu),
                budget: c * mu,
                prior_cdf: None,
            }
            .posterior()
            .unwrap();
            let expected = normal::cdf((x - 1.0) / (6.0 / libm::sqrt(c as f64)));
            prop_assert!((post.cdf(x) - expected).abs() < 1e-15);
        }
    }
}
