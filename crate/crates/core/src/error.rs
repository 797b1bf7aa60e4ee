use core::fmt;

use crate::stats::DesignId;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A design has too few completed replications for the requested statistic.
    InsufficientObservations {
        design: DesignId,
        completed: u64,
    },
    /// The posterior needs a prior because the budget may not fit a single replication.
    PriorRequired {
        prob_no_replication: f64,
    },
    /// A budget that must be strictly positive was zero or negative.
    NonPositiveBudget {
        design: Option<DesignId>,
        value: f64,
    },
    /// Fewer replications than designs were requested from the count-based rule.
    TooFewReplications {
        total: u64,
        designs: usize,
    },
    /// Smoke simulation ran past its horizon without a detection.
    Censored {
        horizon: u64,
    },
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InsufficientObservations { design, completed } => write!(
                f,
                "insufficient observations: design {design} has {completed} completed replications"
            ),
            Error::PriorRequired { prob_no_replication } => write!(
                f,
                "prior required: probability of zero completed replications is {prob_no_replication}"
            ),
            Error::NonPositiveBudget { design: Some(d), value } => {
                write!(f, "budget for design {d} must be positive, got {value}")
            }
            Error::NonPositiveBudget { design: None, value } => {
                write!(f, "stage total must be positive, got {value}")
            }
            Error::TooFewReplications { total, designs } => write!(
                f,
                "cannot allocate {total} replications among {designs} designs"
            ),
            Error::Censored { horizon } => {
                write!(f, "no detection within the horizon of {horizon} slots")
            }
            Error::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}
