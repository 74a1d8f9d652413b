use std::fmt;

use ltcost::estimator::EstimateError;
use ltcost::eval::EvalError;
use ltcost::route::RouteError;
use ltcost::stats::StatsError;
use ltcost::traversal::TraversalError;

/// A failed command, classified by exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
    Unanswerable(String),
    Remote(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Unanswerable(_) => 3,
            Failure::Remote(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Unanswerable(m) | Failure::Remote(m) => f.write_str(m),
        }
    }
}

impl From<EstimateError> for Failure {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::NotAnswerable { .. } => Failure::Unanswerable(e.to_string()),
            EstimateError::InvalidFactor { .. } => Failure::Usage(e.to_string()),
            EstimateError::NegativeOrNaNStat { .. } => Failure::Input(e.to_string()),
        }
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::EndpointUnreachable { .. } | StatsError::ProtocolError(_) | StatsError::PartialCatalog { .. } => {
                Failure::Remote(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<TraversalError> for Failure {
    fn from(e: TraversalError) -> Self {
        match e {
            TraversalError::Http { .. } => Failure::Remote(e.to_string()),
            TraversalError::NotAnswerable { .. } => Failure::Unanswerable(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Estimate(inner) => inner.into(),
            EvalError::InvalidRatio(_) | EvalError::InvalidGrid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<RouteError> for Failure {
    fn from(e: RouteError) -> Self {
        match e {
            RouteError::InvalidThreshold => Failure::Usage(e.to_string()),
            RouteError::Estimate(inner) => inner.into(),
        }
    }
}
