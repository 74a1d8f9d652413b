//! Knowledge-base statistics: five global averages plus per-predicate
//! subject/object binding averages.

mod catalog_file;
mod dump;
mod endpoint;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog_file::{load_catalog, parse_catalog, save_catalog, write_catalog};
pub use dump::{compute_from_dump, compute_from_ntriples, read_ntriples, DumpTriple, MalformedTriple};
pub use endpoint::{fetch_from_endpoint, EndpointOptions};

use crate::query::RDF_TYPE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    /// K1
    pub avg_outgoing_props: f64,
    /// K2
    pub avg_incoming_props: f64,
    /// K3
    pub avg_subj_bindings_nontype: f64,
    /// K4
    pub avg_instances_per_class: f64,
    /// K5
    pub avg_obj_bindings: f64,
}

impl Default for GlobalStats {
    /// Values measured over DBpedia.
    fn default() -> Self {
        Self {
            avg_outgoing_props: 25.0,
            avg_incoming_props: 5.0,
            avg_subj_bindings_nontype: 1505.0,
            avg_instances_per_class: 848.0,
            avg_obj_bindings: 1.86,
        }
    }
}

impl GlobalStats {
    pub fn zeros() -> Self {
        Self {
            avg_outgoing_props: 0.0,
            avg_incoming_props: 0.0,
            avg_subj_bindings_nontype: 0.0,
            avg_instances_per_class: 0.0,
            avg_obj_bindings: 0.0,
        }
    }

    pub fn get(&self, p: Parameter) -> Option<f64> {
        Some(match p {
            Parameter::K1 => self.avg_outgoing_props,
            Parameter::K2 => self.avg_incoming_props,
            Parameter::K3 => self.avg_subj_bindings_nontype,
            Parameter::K4 => self.avg_instances_per_class,
            Parameter::K5 => self.avg_obj_bindings,
            _ => return None,
        })
    }

    pub(crate) fn slot(&mut self, p: Parameter) -> Option<&mut f64> {
        Some(match p {
            Parameter::K1 => &mut self.avg_outgoing_props,
            Parameter::K2 => &mut self.avg_incoming_props,
            Parameter::K3 => &mut self.avg_subj_bindings_nontype,
            Parameter::K4 => &mut self.avg_instances_per_class,
            Parameter::K5 => &mut self.avg_obj_bindings,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateStats {
    pub predicate: String,
    pub avg_subject_bindings: f64,
    pub avg_object_bindings: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsCatalog {
    pub global: GlobalStats,
    pub per_predicate: BTreeMap<String, PredicateStats>,
    pub provenance: String,
}

impl Default for StatsCatalog {
    fn default() -> Self {
        Self {
            global: GlobalStats::default(),
            per_predicate: BTreeMap::new(),
            provenance: "defaults".to_string(),
        }
    }
}

impl StatsCatalog {
    pub fn with_global(global: GlobalStats) -> Self {
        Self {
            global,
            ..Self::default()
        }
    }

    pub fn insert(&mut self, predicate: &str, avg_subject_bindings: f64, avg_object_bindings: f64) {
        self.per_predicate.insert(
            predicate.to_string(),
            PredicateStats {
                predicate: predicate.to_string(),
                avg_subject_bindings,
                avg_object_bindings,
            },
        );
    }

    /// Average number of subjects sharing one object under `predicate`.
    pub fn subject_avg(&self, predicate: &str, is_rdf_type: bool) -> f64 {
        match self.per_predicate.get(predicate) {
            Some(p) => p.avg_subject_bindings,
            None if is_rdf_type => self.global.avg_instances_per_class,
            None => self.global.avg_subj_bindings_nontype,
        }
    }

    /// Average number of objects one subject has under `predicate`.
    pub fn object_avg(&self, predicate: &str) -> f64 {
        self.per_predicate
            .get(predicate)
            .map_or(self.global.avg_obj_bindings, |p| p.avg_object_bindings)
    }

    /// First stored value that is negative or not finite, if any.
    pub fn first_invalid_value(&self) -> Option<(String, f64)> {
        let g = &self.global;
        let globals = [
            ("avg_outgoing_props", g.avg_outgoing_props),
            ("avg_incoming_props", g.avg_incoming_props),
            ("avg_subj_bindings_nontype", g.avg_subj_bindings_nontype),
            ("avg_instances_per_class", g.avg_instances_per_class),
            ("avg_obj_bindings", g.avg_obj_bindings),
        ];
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        for (k, v) in globals {
            if bad(v) {
                return Some((k.to_string(), v));
            }
        }
        for p in self.per_predicate.values() {
            for v in [p.avg_subject_bindings, p.avg_object_bindings] {
                if bad(v) {
                    return Some((p.predicate.clone(), v));
                }
            }
        }
        None
    }
}

pub fn lookup_subject_avg(catalog: &StatsCatalog, predicate: &str, is_rdf_type: bool) -> f64 {
    catalog.subject_avg(predicate, is_rdf_type)
}

pub fn lookup_object_avg(catalog: &StatsCatalog, predicate: &str) -> f64 {
    catalog.object_avg(predicate)
}

/// The statistics a collector query can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parameter {
    K1,
    K2,
    K3,
    K4,
    K5,
    PerPredSubj,
    PerPredObj,
}

impl Parameter {
    pub const GLOBALS: [Parameter; 5] = [Self::K1, Self::K2, Self::K3, Self::K4, Self::K5];

    pub fn name(self) -> &'static str {
        match self {
            Self::K1 => "K1",
            Self::K2 => "K2",
            Self::K3 => "K3",
            Self::K4 => "K4",
            Self::K5 => "K5",
            Self::PerPredSubj => "perPredSubj",
            Self::PerPredObj => "perPredObj",
        }
    }

    pub fn is_per_predicate(self) -> bool {
        matches!(self, Self::PerPredSubj | Self::PerPredObj)
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Parameter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [Self::K1, Self::K2, Self::K3, Self::K4, Self::K5, Self::PerPredSubj, Self::PerPredObj]
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown parameter '{s}'"))
    }
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("parameter {0} needs a predicate IRI")]
    MissingPredicate(Parameter),
    #[error("parameter {0} does not take a predicate")]
    UnexpectedPredicate(Parameter),
    #[error("catalog format error at line {line}: {message}")]
    FormatError { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("every one of the {count} dump records was malformed")]
    AllMalformed { count: usize },
    #[error("endpoint {url} is unreachable: {message}")]
    EndpointUnreachable { url: String, message: String },
    #[error("protocol error from endpoint: {0}")]
    ProtocolError(String),
    #[error("catalog is incomplete; missing {gaps:?}")]
    PartialCatalog {
        catalog: Box<StatsCatalog>,
        gaps: Vec<String>,
    },
}

/// Aggregate query computing `parameter` over a SPARQL endpoint.
pub fn collector_query(parameter: Parameter, predicate: Option<&str>) -> Result<String, StatsError> {
    let inner = match (parameter, predicate) {
        (p @ (Parameter::PerPredSubj | Parameter::PerPredObj), None) => return Err(StatsError::MissingPredicate(p)),
        (p, Some(_)) if !p.is_per_predicate() => return Err(StatsError::UnexpectedPredicate(p)),
        (Parameter::K1, _) => "  { SELECT ?x (COUNT(DISTINCT ?y) AS ?count)\n    WHERE {\n      ?x a ?type . ?x ?y ?z } GROUP BY ?x }}".to_string(),
        (Parameter::K2, _) => "  { SELECT ?z (COUNT(DISTINCT ?y) AS ?count)\n    WHERE {\n      ?x ?y ?z . ?z a ?type } GROUP BY ?z }}".to_string(),
        (Parameter::K3, _) => " { SELECT ?z (COUNT(DISTINCT ?x) AS ?count)\n   WHERE {\n    ?x ?y ?z FILTER (?y!=rdf:type) } GROUP BY ?z } }".to_string(),
        (Parameter::K4, _) => "  { SELECT ?z (COUNT(DISTINCT ?x) AS ?count)\n    WHERE { ?x a ?z } GROUP BY ?z } }".to_string(),
        (Parameter::K5, _) => "  { SELECT ?x (COUNT(DISTINCT ?z) AS ?count)\n    WHERE { ?x ?y ?z } GROUP BY ?x } }".to_string(),
        (Parameter::PerPredObj, Some(p)) => format!(
            "  {{ SELECT ?x (COUNT(DISTINCT ?z) AS ?count)\n    WHERE {{ ?x <{p}> ?z }} GROUP BY ?x }} }}"
        ),
        (Parameter::PerPredSubj, Some(p)) => format!(
            "  {{ SELECT ?z (COUNT(DISTINCT ?x) AS ?count)\n    WHERE {{ ?x <{p}> ?z }} GROUP BY ?z }} }}"
        ),
    };
    let prologue = if parameter == Parameter::K3 {
        format!("PREFIX rdf: <{}>\n", RDF_TYPE.trim_end_matches("type"))
    } else {
        String::new()
    };
    Ok(format!("{prologue}SELECT (AVG(?count) AS ?average)\nWHERE {{\n{inner}\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GENRE: &str = "http://dbpedia.org/ontology/genre";

    #[test]
    fn k4_query_text() {
        let q = collector_query(Parameter::K4, None).unwrap();
        assert!(q.contains("SELECT (AVG(?count) AS ?average)"));
        assert!(q.contains("WHERE { ?x a ?z } GROUP BY ?z"));
    }

    #[test]
    fn per_predicate_object_query() {
        let q = collector_query(Parameter::PerPredObj, Some(GENRE)).unwrap();
        assert!(q.contains("COUNT(DISTINCT ?z)"));
        assert!(q.contains("?x <http://dbpedia.org/ontology/genre> ?z } GROUP BY ?x"));
    }

    #[test]
    fn per_predicate_without_predicate_fails() {
        assert!(matches!(
            collector_query(Parameter::PerPredSubj, None),
            Err(StatsError::MissingPredicate(Parameter::PerPredSubj))
        ));
        assert!(matches!(
            collector_query(Parameter::K1, Some(GENRE)),
            Err(StatsError::UnexpectedPredicate(_))
        ));
    }

    #[test]
    fn k3_declares_rdf_prefix() {
        let q = collector_query(Parameter::K3, None).unwrap();
        assert!(q.starts_with("PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"));
        assert!(q.contains("FILTER (?y!=rdf:type)"));
    }

    #[test]
    fn lookups_prefer_catalog_then_fall_back() {
        let mut c = StatsCatalog::default();
        c.insert(GENRE, 56.9, 1.8);
        assert_eq!(lookup_object_avg(&c, GENRE), 1.8);
        assert_eq!(lookup_subject_avg(&c, GENRE, false), 56.9);
        assert_eq!(lookup_subject_avg(&c, "http://unknown/p", false), 1505.0);
        assert_eq!(lookup_subject_avg(&c, RDF_TYPE, true), 848.0);
        assert_eq!(lookup_object_avg(&c, "http://unknown/p"), 1.86);
    }

    #[test]
    fn default_globals() {
        let g = GlobalStats::default();
        assert_eq!(
            Parameter::GLOBALS.map(|p| g.get(p).unwrap()),
            [25.0, 5.0, 1505.0, 848.0, 1.86]
        );
    }

    #[test]
    fn invalid_values_are_reported() {
        let mut c = StatsCatalog::default();
        assert!(c.first_invalid_value().is_none());
        c.insert("http://p", f64::NAN, 1.0);
        assert!(c.first_invalid_value().is_some());
        let mut c = StatsCatalog::default();
        c.global.avg_obj_bindings = -1.0;
        assert_eq!(c.first_invalid_value(), Some(("avg_obj_bindings".to_string(), -1.0)));
    }
}
