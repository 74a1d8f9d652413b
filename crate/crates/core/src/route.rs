//! Choosing between link traversal and the SPARQL endpoint for one query.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{estimate, EstimateError, EstimatorConfig};
use crate::http::HttpClient;
use crate::query::QueryPattern;
use crate::stats::StatsCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    LinkTraversal,
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rationale {
    AnswerableLowCost,
    EndpointAvailable,
    EndpointDownFallback,
    NotAnswerable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub strategy: Strategy,
    pub rationale: Rationale,
    pub estimated_cost: Option<u64>,
    pub threshold: u64,
    /// Set when the availability probe failed rather than answering.
    pub probe_error: Option<String>,
    /// Unanchored triples, for unanswerable queries.
    pub witness: Option<BTreeSet<usize>>,
}

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("threshold must be at least 1")]
    InvalidThreshold,
    #[error(transparent)]
    Estimate(EstimateError),
}

/// Route `q`: unanswerable queries go to the endpoint, cheap ones bypass
/// it, and expensive ones use it only while `probe` reports it available.
/// `probe` runs only for answerable queries whose estimate exceeds
/// `threshold`; a probe error counts as unavailable.
pub fn decide_strategy<P>(
    q: &QueryPattern,
    catalog: &StatsCatalog,
    config: &EstimatorConfig,
    threshold: u64,
    probe: P,
) -> Result<RouteDecision, RouteError>
where
    P: FnOnce() -> Result<bool, String>,
{
    if threshold < 1 {
        return Err(RouteError::InvalidThreshold);
    }
    let mut decision = RouteDecision {
        strategy: Strategy::Endpoint,
        rationale: Rationale::NotAnswerable,
        estimated_cost: None,
        threshold,
        probe_error: None,
        witness: None,
    };
    let cost = match estimate(q, catalog, config) {
        Ok(e) => e.ceiled_total,
        Err(EstimateError::NotAnswerable { witness }) => {
            decision.witness = Some(witness);
            return Ok(decision);
        }
        Err(e) => return Err(RouteError::Estimate(e)),
    };
    decision.estimated_cost = Some(cost);
    if cost <= threshold {
        decision.strategy = Strategy::LinkTraversal;
        decision.rationale = Rationale::AnswerableLowCost;
        return Ok(decision);
    }
    let up = probe().unwrap_or_else(|e| {
        decision.probe_error = Some(e);
        false
    });
    if up {
        decision.rationale = Rationale::EndpointAvailable;
    } else {
        decision.strategy = Strategy::LinkTraversal;
        decision.rationale = Rationale::EndpointDownFallback;
    }
    Ok(decision)
}

pub const PROBE_TIMEOUT: Duration = Duration::from_secs(2);

/// Availability check: `ASK {}` against `endpoint`. Any 2xx answer counts
/// as available.
pub fn ask_probe(endpoint: &str, timeout: Duration) -> Result<bool, String> {
    let resp = HttpClient::new(timeout, 5)
        .get(
            endpoint,
            &[("query", "ASK {}")],
            "application/sparql-results+json, application/sparql-results+xml",
        )
        .map_err(|e| e.to_string())?;
    Ok((200..300).contains(&resp.status))
}
