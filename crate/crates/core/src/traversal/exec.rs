use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::document::GraphTriple;
use super::filter_eval::passes;
use super::store::{Deref, DerefStore};
use super::TraversalError;
use crate::analysis::{AnalysisError, GroupAnchor, QueryAnalysis};
use crate::query::{render_query, QueryPattern, Term, TriplePattern};

type Row = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingTable {
    pub columns: Vec<String>,
    /// `None` only for a selected variable that occurs solely in a FILTER.
    pub rows: Vec<Vec<Option<Term>>>,
}

impl BindingTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<&Term>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_ref()).collect())
    }

    /// Rows as a set, for order-insensitive comparison.
    pub fn row_set(&self) -> BTreeSet<Vec<Option<Term>>> {
        self.rows.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub iri: String,
    pub group: usize,
    /// Logical access sequence number.
    pub ts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalTrace {
    pub query: String,
    pub order: Vec<usize>,
    /// One record per (group, IRI) dereference, in access order.
    pub accessed: Vec<AccessRecord>,
    pub distinct_count: usize,
    pub misses: Vec<String>,
    /// Accesses counted per group, so an IRI fetched by two groups counts
    /// twice.
    pub group_access_count: usize,
}

impl TraversalTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// First group that accessed each IRI.
    pub fn first_access_groups(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for a in &self.accessed {
            out.entry(a.iri.as_str()).or_insert(a.group);
        }
        out
    }
}

pub fn real_cost(trace: &TraversalTrace) -> usize {
    trace.distinct_count
}

struct Recorder<'a> {
    store: &'a DerefStore,
    accessed: Vec<AccessRecord>,
    seen: HashSet<String>,
    misses: Vec<String>,
}

impl Recorder<'_> {
    fn access(&mut self, iri: &str, group: usize) -> Result<Option<super::Graph>, TraversalError> {
        let ts = self.accessed.len() as u64;
        self.accessed.push(AccessRecord {
            iri: iri.to_string(),
            group,
            ts,
        });
        let first = self.seen.insert(iri.to_string());
        match self.store.dereference(iri)? {
            Deref::Found(g) => Ok(Some(g)),
            Deref::Miss => {
                if first {
                    self.misses.push(iri.to_string());
                }
                Ok(None)
            }
        }
    }
}

fn unify(pattern: &Term, value: &Term, row: &mut Row) -> bool {
    match pattern.binding_key() {
        Some(key) => match row.get(&key) {
            Some(bound) => bound == value,
            None => {
                row.insert(key, value.clone());
                true
            }
        },
        None => pattern == value,
    }
}

fn extend<'g>(t: &TriplePattern, row: &Row, graph: impl Iterator<Item = &'g GraphTriple>, out: &mut Vec<Row>) {
    for g in graph {
        let mut r = row.clone();
        if unify(&t.subject, &g.subject, &mut r)
            && unify(&t.predicate, &g.predicate, &mut r)
            && unify(&t.object, &g.object, &mut r)
        {
            out.push(r);
        }
    }
}

fn dedup(rows: Vec<Row>) -> Vec<Row> {
    let mut seen = HashSet::with_capacity(rows.len());
    rows.into_iter().filter(|r| seen.insert(r.clone())).collect()
}

struct FilterState {
    pending: Vec<usize>,
    bound: HashSet<String>,
    triple_vars: HashSet<String>,
}

impl FilterState {
    fn apply_ready(&mut self, q: &QueryPattern, rows: &mut Vec<Row>) -> Result<(), TraversalError> {
        let mut still = Vec::new();
        for &fi in &self.pending {
            let f = &q.filters[fi];
            let ready = f
                .variables
                .iter()
                .all(|v| !self.triple_vars.contains(v) || self.bound.contains(v));
            if !ready {
                still.push(fi);
                continue;
            }
            let mut kept = Vec::with_capacity(rows.len());
            for r in rows.drain(..) {
                if passes(&f.expression, &r).map_err(|u| TraversalError::UnsupportedFilter(u.0))? {
                    kept.push(r);
                }
            }
            *rows = kept;
        }
        self.pending = still;
        Ok(())
    }
}

/// Evaluate `q` by zero-knowledge link traversal over `store`.
pub fn execute(q: &QueryPattern, store: &DerefStore) -> Result<(BindingTable, TraversalTrace), TraversalError> {
    let analysis = QueryAnalysis::new(q).map_err(|e| match e {
        AnalysisError::NotAnswerable { witness } => TraversalError::NotAnswerable { witness },
        AnalysisError::InvalidOrder(m) => unreachable!("greedy order is valid: {m}"),
    })?;
    let mut rec = Recorder {
        store,
        accessed: Vec::new(),
        seen: HashSet::new(),
        misses: Vec::new(),
    };
    let mut filters = FilterState {
        pending: Vec::new(),
        bound: HashSet::new(),
        triple_vars: q.triples.iter().flat_map(|t| t.binding_keys()).collect(),
    };
    let mut rows: Vec<Row> = vec![Row::new()];

    for group in &analysis.groups {
        let triples: Vec<&TriplePattern> = group.triple_indices.iter().map(|&i| &q.triples[i]).collect();
        match &group.variable {
            GroupAnchor::Constant => {
                let iris: BTreeSet<&str> = triples
                    .iter()
                    .flat_map(|t| [&t.subject, &t.object])
                    .filter_map(Term::as_iri)
                    .collect();
                let mut docs = Vec::new();
                for iri in iris {
                    docs.extend(rec.access(iri, group.id)?);
                }
                for (&ti, t) in group.triple_indices.iter().zip(&triples) {
                    let mut next = Vec::new();
                    for r in &rows {
                        extend(t, r, docs.iter().flat_map(|d| d.iter()), &mut next);
                    }
                    rows = dedup(next);
                    filters.bound.extend(t.binding_keys());
                    filters.pending.extend(q.filters_after(ti).map(|(i, _)| i));
                    filters.apply_ready(q, &mut rows)?;
                }
            }
            GroupAnchor::Variable(v) => {
                let iris: BTreeSet<String> = rows
                    .iter()
                    .filter_map(|r| r.get(v).and_then(Term::as_iri).map(str::to_owned))
                    .collect();
                let mut docs: HashMap<String, super::Graph> = HashMap::new();
                for iri in iris {
                    if let Some(g) = rec.access(&iri, group.id)? {
                        docs.insert(iri, g);
                    }
                }
                rows.retain(|r| r.get(v).is_some_and(Term::is_iri));
                for (&ti, t) in group.triple_indices.iter().zip(&triples) {
                    let mut next = Vec::new();
                    for r in &rows {
                        let iri = r[v].as_iri().expect("retained rows bind an IRI");
                        if let Some(doc) = docs.get(iri) {
                            extend(t, r, doc.iter(), &mut next);
                        }
                    }
                    rows = dedup(next);
                    filters.bound.extend(t.binding_keys());
                    filters.pending.extend(q.filters_after(ti).map(|(i, _)| i));
                    filters.apply_ready(q, &mut rows)?;
                }
            }
        }
    }

    let columns = q.result_columns();
    let mut seen = HashSet::new();
    let table_rows = rows
        .iter()
        .map(|r| columns.iter().map(|c| r.get(c).cloned()).collect::<Vec<_>>())
        .filter(|r| seen.insert(r.clone()))
        .collect();
    let trace = TraversalTrace {
        query: render_query(q),
        order: analysis.order.clone(),
        group_access_count: rec.accessed.len(),
        distinct_count: rec.seen.len(),
        accessed: rec.accessed,
        misses: rec.misses,
    };
    Ok((
        BindingTable {
            columns,
            rows: table_rows,
        },
        trace,
    ))
}
