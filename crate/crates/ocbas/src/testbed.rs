use std::fmt;

use ocbas_core::testbeds::{SmokeTestbed, SyntheticSpec, TimeModel};
use ocbas_core::{DesignId, Observation, Policy, Simulator};
use rand::Rng;

use crate::harness::PolicySetup;

/// A testbed whose true best design is known, so PCS can be scored.
#[derive(Debug, Clone)]
pub enum Testbed {
    Synthetic(SyntheticSpec),
    Smoke(SmokeTestbed),
}

impl Testbed {
    pub fn synthetic(model: TimeModel) -> ocbas_core::Result<Self> {
        Ok(Testbed::Synthetic(SyntheticSpec::new(model)?))
    }

    pub fn true_best(&self) -> Option<DesignId> {
        match self {
            Testbed::Synthetic(s) => Some(s.true_best()),
            Testbed::Smoke(s) => s.true_best(),
        }
    }

    /// Default warm-up and increment for a policy on this testbed.
    pub fn default_setup(&self, policy: Policy) -> PolicySetup {
        let (warmup, increment) = match (self, policy) {
            (Testbed::Synthetic(_), Policy::Ocba) => (5, 10),
            (Testbed::Synthetic(_), _) => (50, 100),
            (Testbed::Smoke(_), Policy::Ocba) => (20, 10),
            (Testbed::Smoke(_), _) => (200, 100),
        };
        PolicySetup {
            policy,
            warmup,
            increment,
        }
    }
}

impl fmt::Display for Testbed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Testbed::Synthetic(s) => match s.time_model() {
                TimeModel::UniformSpread(j) => write!(f, "synthetic-uniform(j={j})"),
                TimeModel::TruncatedGaussian(j) => write!(f, "synthetic-gaussian(j={j})"),
                TimeModel::CorrelatedTwoPoint(p) => write!(f, "correlated(p={p})"),
            },
            Testbed::Smoke(s) => write!(f, "smoke({} designs)", s.designs().len()),
        }
    }
}

impl Simulator for Testbed {
    fn num_designs(&self) -> usize {
        match self {
            Testbed::Synthetic(s) => s.num_designs(),
            Testbed::Smoke(s) => s.num_designs(),
        }
    }

    fn run<R: Rng + ?Sized>(
        &self,
        design: DesignId,
        rng: &mut R,
    ) -> ocbas_core::Result<Observation> {
        match self {
            Testbed::Synthetic(s) => s.run(design, rng),
            Testbed::Smoke(s) => s.run(design, rng),
        }
    }
}
