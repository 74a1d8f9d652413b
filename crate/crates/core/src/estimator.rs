//! The four cost estimators. Each walks the resolution groups of the
//! traversal order, charging one access per binding of the group's anchor
//! variable (or per newly seen constant IRI) and propagating worst-case
//! binding counts to the variables the group binds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{AnalysisError, Anchor, GroupAnchor, QueryAnalysis};
use crate::query::{QueryPattern, Term, RDF_TYPE};
use crate::stats::StatsCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Mnp,
    Mp,
    Mpj,
    Mpjf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mnp, Method::Mp, Method::Mpj, Method::Mpjf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mnp => "Mnp",
            Method::Mp => "Mp",
            Method::Mpj => "Mpj",
            Method::Mpjf => "Mpjf",
        }
    }

    fn uses_predicates(self) -> bool {
        self != Method::Mnp
    }

    fn uses_f1(self) -> bool {
        matches!(self, Method::Mpj | Method::Mpjf)
    }

    fn uses_f2(self) -> bool {
        self == Method::Mpjf
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method '{s}' (expected mnp, mp, mpj or mpjf)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub f1: f64,
    pub f2: f64,
}

impl EstimatorConfig {
    pub fn new(method: Method, f1: f64, f2: f64) -> Self {
        Self { method, f1, f2 }
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::new(Method::Mpjf, 0.9, 0.9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCost {
    pub id: usize,
    pub variable: GroupAnchor,
    pub triples: Vec<usize>,
    pub accesses: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub method: Method,
    pub total: f64,
    pub ceiled_total: u64,
    pub group_costs: Vec<GroupCost>,
    pub binding_counts: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("query is not answerable by zero-knowledge link traversal (unanchored triples {witness:?})")]
    NotAnswerable { witness: BTreeSet<usize> },
    #[error("catalog value for {what} is negative or not a number ({value})")]
    NegativeOrNaNStat { what: String, value: f64 },
    #[error("factor {name} = {value} is outside [0, 1]")]
    InvalidFactor { name: &'static str, value: f64 },
}

/// Ceiling that ignores floating-point noise just above an integer.
pub fn ceil_total(total: f64) -> u64 {
    let nearest = total.round();
    if (total - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest.max(0.0) as u64
    } else {
        total.ceil().max(0.0) as u64
    }
}

struct Multipliers<'a> {
    catalog: &'a StatsCatalog,
    method: Method,
}

impl Multipliers<'_> {
    fn object_side(&self, predicate: &Term) -> f64 {
        let g = &self.catalog.global;
        match predicate {
            Term::Iri(p) if self.method.uses_predicates() => self.catalog.object_avg(p),
            Term::Iri(_) => g.avg_obj_bindings,
            _ => g.avg_outgoing_props * g.avg_obj_bindings,
        }
    }

    fn subject_side(&self, predicate: &Term) -> f64 {
        let g = &self.catalog.global;
        match predicate {
            Term::Iri(p) if self.method.uses_predicates() => self.catalog.subject_avg(p, p == RDF_TYPE),
            Term::Iri(p) if p == RDF_TYPE => g.avg_instances_per_class,
            Term::Iri(_) => g.avg_subj_bindings_nontype,
            _ => g.avg_incoming_props * g.avg_subj_bindings_nontype,
        }
    }

    fn predicate(&self, subject_anchored: bool) -> f64 {
        let g = &self.catalog.global;
        if subject_anchored {
            g.avg_outgoing_props
        } else {
            g.avg_incoming_props
        }
    }
}

/// Reject catalogs with negative or NaN values and factors outside [0, 1].
pub fn check_inputs(catalog: &StatsCatalog, config: &EstimatorConfig) -> Result<(), EstimateError> {
    if let Some((what, value)) = catalog.first_invalid_value() {
        return Err(EstimateError::NegativeOrNaNStat { what, value });
    }
    for (name, value) in [("f1", config.f1), ("f2", config.f2)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(EstimateError::InvalidFactor { name, value });
        }
    }
    Ok(())
}

fn analyze(q: &QueryPattern) -> Result<QueryAnalysis, EstimateError> {
    QueryAnalysis::new(q).map_err(|e| match e {
        AnalysisError::NotAnswerable { witness } => EstimateError::NotAnswerable { witness },
        AnalysisError::InvalidOrder(_) => unreachable!("greedy order is always valid"),
    })
}

pub fn estimate(q: &QueryPattern, catalog: &StatsCatalog, config: &EstimatorConfig) -> Result<CostEstimate, EstimateError> {
    let analysis = analyze(q)?;
    estimate_analyzed(q, &analysis, catalog, config)
}

/// Estimate over an analysis computed by the caller.
pub fn estimate_analyzed(
    q: &QueryPattern,
    analysis: &QueryAnalysis,
    catalog: &StatsCatalog,
    config: &EstimatorConfig,
) -> Result<CostEstimate, EstimateError> {
    check_inputs(catalog, config)?;
    let method = config.method;
    let mult = Multipliers { catalog, method };
    let mut counts: HashMap<String, f64> = HashMap::new();
    let mut dereferenced: BTreeSet<&str> = BTreeSet::new();
    let mut group_costs = Vec::with_capacity(analysis.groups.len());

    for group in &analysis.groups {
        let last = *group.triple_indices.last().expect("groups are non-empty");
        let accesses = match &group.variable {
            GroupAnchor::Constant => group
                .triple_indices
                .iter()
                .flat_map(|&t| [&q.triples[t].subject, &q.triples[t].object])
                .filter_map(Term::as_iri)
                .filter(|iri| dereferenced.insert(iri))
                .count() as f64,
            GroupAnchor::Variable(v) => counts[v],
        };
        group_costs.push(GroupCost {
            id: group.id,
            variable: group.variable.clone(),
            triples: group.triple_indices.clone(),
            accesses,
        });

        let affected_here: Vec<&String> = if method.uses_f2() {
            analysis
                .filter_effects
                .iter()
                .filter(|e| q.filters[e.filter].after_triple == last)
                .flat_map(|e| e.affected.iter())
                .collect()
        } else {
            Vec::new()
        };

        if let GroupAnchor::Variable(v) = &group.variable {
            let mut c = counts[v];
            if method.uses_f1() {
                if let Some(stars) = analysis.star_joins.get(v) {
                    for t in &group.triple_indices {
                        if stars.contains(t) {
                            c *= config.f1;
                        }
                    }
                }
            }
            for a in &affected_here {
                if *a == v {
                    c *= config.f2;
                }
            }
            counts.insert(v.clone(), c);
        }

        for &t in &group.triple_indices {
            let step = analysis.step_of(t);
            let triple = &q.triples[t];
            let (base, subject_anchored) = match &step.anchor {
                Anchor::Iri(iri) => (1.0, triple.subject.as_iri() == Some(iri.as_str())),
                Anchor::Variable(v) => (counts[v], triple.subject.as_var() == Some(v.as_str())),
            };
            for key in &step.fresh {
                let in_predicate = triple.predicate.binding_key().as_deref() == Some(key.as_str());
                let m = if in_predicate {
                    mult.predicate(subject_anchored)
                } else if subject_anchored {
                    mult.object_side(&triple.predicate)
                } else {
                    mult.subject_side(&triple.predicate)
                };
                counts.insert(key.clone(), base * m);
            }
        }

        if method.uses_f2() {
            for a in affected_here {
                if group.variable != GroupAnchor::Variable(a.clone()) {
                    if let Some(c) = counts.get_mut(a) {
                        *c *= config.f2;
                    }
                }
            }
        }
    }

    let total: f64 = group_costs.iter().map(|g| g.accesses).sum();
    let binding_counts = counts
        .into_iter()
        .filter(|(k, _)| !k.starts_with("_:"))
        .collect();
    Ok(CostEstimate {
        method,
        total,
        ceiled_total: ceil_total(total),
        group_costs,
        binding_counts,
    })
}

pub fn estimate_all(
    q: &QueryPattern,
    catalog: &StatsCatalog,
    f1: f64,
    f2: f64,
) -> Result<BTreeMap<Method, CostEstimate>, EstimateError> {
    let analysis = analyze(q)?;
    Method::ALL
        .into_iter()
        .map(|m| Ok((m, estimate_analyzed(q, &analysis, catalog, &EstimatorConfig::new(m, f1, f2))?)))
        .collect()
}
