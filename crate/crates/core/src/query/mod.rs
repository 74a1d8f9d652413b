//! The SPARQL subset handled by the estimators: a single SELECT over one
//! basic graph pattern, positioned FILTERs, and optional SERVICE grouping
//! (SPARQL-LD form).

mod filter;
mod parser;
pub(crate) mod render;
mod term;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{CompareOp, FilterExpr, Function};
pub use parser::parse_query;
pub use render::render_query;
pub use term::{
    Literal, Term, RDF_TYPE, XSD, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER, XSD_STRING,
};


#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    pub index: usize,
}

impl TriplePattern {
    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    /// Binding keys of every variable-like term, in s/p/o order.
    pub fn binding_keys(&self) -> Vec<String> {
        let mut keys = Vec::with_capacity(3);
        for t in self.terms() {
            if let Some(k) = t.binding_key() {
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        keys
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterClause {
    pub expression: FilterExpr,
    /// Index of the triple this filter textually follows.
    pub after_triple: usize,
    pub variables: BTreeSet<String>,
}

impl FilterClause {
    pub fn new(expression: FilterExpr, after_triple: usize) -> Self {
        let variables = expression.variables();
        Self {
            expression,
            after_triple,
            variables,
        }
    }
}

/// A SERVICE block of SPARQL-LD text, flattened into the triple list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceGroup {
    pub anchor: Term,
    pub triples: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    Star,
    Variables(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderKey {
    pub variable: String,
    pub descending: bool,
}

/// Solution modifiers are kept for round-tripping only; they do not affect
/// cost.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modifiers {
    pub distinct: bool,
    pub reduced: bool,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPattern {
    pub projection: Projection,
    pub triples: Vec<TriplePattern>,
    /// Sorted by `after_triple`, textual order within one attachment point.
    pub filters: Vec<FilterClause>,
    pub prefixes: BTreeMap<String, String>,
    pub service_groups: Vec<ServiceGroup>,
    pub modifiers: Modifiers,
}

impl QueryPattern {
    /// Variables in order of first appearance (triples first, then filters).
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.triples {
            for term in t.terms() {
                if let Term::Variable(v) = term {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        for f in &self.filters {
            for v in &f.variables {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Columns of the result table.
    pub fn result_columns(&self) -> Vec<String> {
        match &self.projection {
            Projection::Star => self
                .variables()
                .into_iter()
                .filter(|v| {
                    self.triples
                        .iter()
                        .any(|t| t.terms().iter().any(|x| x.as_var() == Some(v)))
                })
                .collect(),
            Projection::Variables(vs) => vs.clone(),
        }
    }

    pub fn filters_after(&self, triple: usize) -> impl Iterator<Item = (usize, &FilterClause)> {
        self.filters
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.after_triple == triple)
    }
}

/// IRIs in subject or object position. Predicate IRIs are never dereferenced.
pub fn distinct_anchor_iris(q: &QueryPattern) -> BTreeSet<String> {
    q.triples
        .iter()
        .flat_map(|t| [&t.subject, &t.object])
        .filter_map(|t| t.as_iri().map(str::to_owned))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported feature at {line}:{column}: {feature}")]
    UnsupportedFeature {
        line: usize,
        column: usize,
        feature: String,
    },
    #[error("unknown prefix '{prefix}:' at {line}:{column}")]
    UnknownPrefix {
        prefix: String,
        line: usize,
        column: usize,
    },
    #[error("the WHERE clause contains no triple patterns")]
    EmptyPattern,
}
