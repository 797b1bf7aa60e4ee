//! Ten synthetic designs with means `0, 1, ..., 9`, Gaussian noise with
//! standard deviation 6, and one of three replication-time models.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::renewal::DiscretePmf;
use crate::stats::{DesignId, Observation, Simulator};
use crate::{normal, Error, Result};

pub const NUM_DESIGNS: usize = 10;
pub const NOISE_SIGMA: f64 = 6.0;

/// Replication-time model of the synthetic testbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeModel {
    /// Uniform on `11 - j ..= 9 + j` for every design, `j` in `1..=10`.
    UniformSpread(u32),
    /// Design `i` takes `x` in `1..=19` with mass proportional to
    /// `Phi((x - i + 1.5) / j) - Phi((x - i + 0.5) / j)`, `j` in `1..=10`.
    TruncatedGaussian(u32),
    /// Time is 5 or 15, tied to the sign of the noise through `p` in `[0, 1]`.
    CorrelatedTwoPoint(f64),
}

impl TimeModel {
    fn validate(&self) -> Result<()> {
        match *self {
            TimeModel::UniformSpread(j) | TimeModel::TruncatedGaussian(j) => {
                if !(1..=10).contains(&j) {
                    return Err(Error::InvalidArgument("spread index j must be in 1..=10"));
                }
            }
            TimeModel::CorrelatedTwoPoint(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument("correlation p must be in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Time PMF of the uniform spread model.
pub fn uniform_time_pmf(j: u32) -> Result<DiscretePmf> {
    TimeModel::UniformSpread(j).validate()?;
    DiscretePmf::uniform(u64::from(11 - j), u64::from(9 + j))
}

/// Time PMF of design `design` under the truncated discrete Gaussian model.
pub fn truncated_gaussian_pmf(design: DesignId, j: u32) -> Result<DiscretePmf> {
    TimeModel::TruncatedGaussian(j).validate()?;
    let shift = f64::from(design.get());
    let scale = f64::from(j);
    let weights = (1..=19u32)
        .map(|x| {
            let x = f64::from(x);
            interval_mass((x - shift + 0.5) / scale, (x - shift + 1.5) / scale)
        })
        .collect();
    DiscretePmf::from_weights(1, weights)
}

/// `Phi(hi) - Phi(lo)`, evaluated in the tail where it does not cancel.
fn interval_mass(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        normal::cdf(-lo) - normal::cdf(-hi)
    } else {
        normal::cdf(hi) - normal::cdf(lo)
    }
}

pub fn sample_uniform_time<R: Rng + ?Sized>(j: u32, rng: &mut R) -> u64 {
    assert!((1..=10).contains(&j), "spread index j must be in 1..=10");
    rng.random_range(u64::from(11 - j)..=u64::from(9 + j))
}

pub fn sample_truncated_gaussian_time<R: Rng + ?Sized>(
    design: DesignId,
    j: u32,
    rng: &mut R,
) -> u64 {
    let pmf = truncated_gaussian_pmf(design, j).expect("valid design and spread");
    pmf.quantile(rng.random())
}

/// Draws noise `w ~ N(0, 36)` and a time of 15 with probability `p` when
/// `w >= 0` (`1 - p` when `w < 0`), otherwise 5.
pub fn sample_correlated<R: Rng + ?Sized>(design: DesignId, p: f64, rng: &mut R) -> Observation {
    let w = noise().sample(rng);
    let u: f64 = rng.random();
    let long_prob = if w >= 0.0 { p } else { 1.0 - p };
    let elapsed = if u < long_prob { 15 } else { 5 };
    Observation {
        design,
        value: true_mean(design) + w,
        elapsed,
    }
}

fn noise() -> Normal<f64> {
    Normal::new(0.0, NOISE_SIGMA).expect("positive sigma")
}

pub fn true_mean(design: DesignId) -> f64 {
    f64::from(design.get() - 1)
}

/// The synthetic testbed. Design 1 is the true best.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    time_model: TimeModel,
    /// Per-design time PMFs for the models with time independent of noise.
    time_pmfs: Option<Vec<DiscretePmf>>,
    noise: Normal<f64>,
}

impl SyntheticSpec {
    pub fn new(time_model: TimeModel) -> Result<Self> {
        time_model.validate()?;
        let time_pmfs = match time_model {
            TimeModel::UniformSpread(j) => {
                let pmf = uniform_time_pmf(j)?;
                Some((0..NUM_DESIGNS).map(|_| pmf.clone()).collect())
            }
            TimeModel::TruncatedGaussian(j) => Some(
                (0..NUM_DESIGNS)
                    .map(|i| truncated_gaussian_pmf(DesignId::from_index(i), j))
                    .collect::<Result<_>>()?,
            ),
            TimeModel::CorrelatedTwoPoint(_) => None,
        };
        Ok(SyntheticSpec {
            time_model,
            time_pmfs,
            noise: noise(),
        })
    }

    pub fn time_model(&self) -> TimeModel {
        self.time_model
    }

    pub fn true_best(&self) -> DesignId {
        DesignId::new(1)
    }

    /// Replication-time PMF of a design; `None` for the correlated model,
    /// whose time is not independent of the observation.
    pub fn time_pmf(&self, design: DesignId) -> Option<&DiscretePmf> {
        self.time_pmfs.as_ref().map(|p| &p[design.index()])
    }
}

impl Simulator for SyntheticSpec {
    fn num_designs(&self) -> usize {
        NUM_DESIGNS
    }

    fn run<R: Rng + ?Sized>(&self, design: DesignId, rng: &mut R) -> Result<Observation> {
        if design.index() >= NUM_DESIGNS {
            return Err(Error::InvalidArgument("design out of range"));
        }
        match (self.time_model, &self.time_pmfs) {
            (TimeModel::CorrelatedTwoPoint(p), _) => Ok(sample_correlated(design, p, rng)),
            (TimeModel::UniformSpread(j), _) => {
                let value = true_mean(design) + self.noise.sample(rng);
                Ok(Observation {
                    design,
                    value,
                    elapsed: sample_uniform_time(j, rng),
                })
            }
            (_, Some(pmfs)) => {
                let value = true_mean(design) + self.noise.sample(rng);
                let elapsed = pmfs[design.index()].quantile(rng.random());
                Ok(Observation {
                    design,
                    value,
                    elapsed,
                })
            }
            (_, None) => unreachable!("independent time models carry PMFs"),
        }
    }
}
