//! Brute-force evaluation of the statistics aggregate queries over an
//! in-memory triple set: nested-loop joins, GROUP BY, COUNT(DISTINCT), AVG.

use std::collections::{BTreeMap, BTreeSet};

pub const TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

pub type Triple = (String, String, String);

fn avg_count_distinct<I: IntoIterator<Item = (String, String)>>(rows: I) -> f64 {
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (k, v) in rows {
        groups.entry(k).or_default().insert(v);
    }
    if groups.is_empty() {
        return 0.0;
    }
    groups.values().map(|s| s.len() as f64).sum::<f64>() / groups.len() as f64
}

pub struct Oracle {
    triples: Vec<Triple>,
}

impl Oracle {
    pub fn new(triples: &[Triple]) -> Self {
        let set: BTreeSet<Triple> = triples.iter().cloned().collect();
        Self {
            triples: set.into_iter().collect(),
        }
    }

    /// `?x a ?type . ?x ?y ?z` grouped by ?x, distinct ?y.
    pub fn k1(&self) -> f64 {
        let mut rows = Vec::new();
        for a in self.triples.iter().filter(|t| t.1 == TYPE) {
            for b in self.triples.iter().filter(|t| t.0 == a.0) {
                rows.push((a.0.clone(), b.1.clone()));
            }
        }
        avg_count_distinct(rows)
    }

    /// `?x ?y ?z . ?z a ?type` grouped by ?z, distinct ?y.
    pub fn k2(&self) -> f64 {
        let mut rows = Vec::new();
        for a in &self.triples {
            for _ in self.triples.iter().filter(|t| t.1 == TYPE && t.0 == a.2) {
                rows.push((a.2.clone(), a.1.clone()));
            }
        }
        avg_count_distinct(rows)
    }

    pub fn k3(&self) -> f64 {
        avg_count_distinct(self.triples.iter().filter(|t| t.1 != TYPE).map(|t| (t.2.clone(), t.0.clone())))
    }

    pub fn k4(&self) -> f64 {
        avg_count_distinct(self.triples.iter().filter(|t| t.1 == TYPE).map(|t| (t.2.clone(), t.0.clone())))
    }

    pub fn k5(&self) -> f64 {
        avg_count_distinct(self.triples.iter().map(|t| (t.0.clone(), t.2.clone())))
    }

    pub fn per_pred_obj(&self, p: &str) -> f64 {
        avg_count_distinct(self.triples.iter().filter(|t| t.1 == p).map(|t| (t.0.clone(), t.2.clone())))
    }

    pub fn per_pred_subj(&self, p: &str) -> f64 {
        avg_count_distinct(self.triples.iter().filter(|t| t.1 == p).map(|t| (t.2.clone(), t.0.clone())))
    }

    pub fn predicates(&self) -> BTreeSet<String> {
        self.triples.iter().map(|t| t.1.clone()).collect()
    }
}
