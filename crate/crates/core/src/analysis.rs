//! Answerability, traversal order, necessary-to-resolve variables and the
//! structural features the estimators consume.
//!
//! A triple is evaluable at its turn when it has an anchor: a subject or
//! object IRI, or a variable bound by an earlier triple. Predicate IRIs and
//! blank nodes never anchor. Constant anchors are preferred over bound
//! variables, and subjects over objects.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::query::render::{write_modifiers, write_prologue, write_triple};
use crate::query::{QueryPattern, Term, TriplePattern};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("query is not answerable by zero-knowledge link traversal (unanchored triples {witness:?})")]
    NotAnswerable { witness: BTreeSet<usize> },
    #[error("invalid traversal order: {0}")]
    InvalidOrder(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerabilityReport {
    pub answerable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
    pub reordered_from_original: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_witness: Option<BTreeSet<usize>>,
}

/// What a triple dereferences when its turn comes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    Iri(String),
    Variable(String),
}

fn anchor_at(t: &TriplePattern, bound: &BTreeSet<String>) -> Option<Anchor> {
    if let Term::Iri(iri) = &t.subject {
        return Some(Anchor::Iri(iri.clone()));
    }
    if let Term::Iri(iri) = &t.object {
        return Some(Anchor::Iri(iri.clone()));
    }
    for node in [&t.subject, &t.object] {
        if let Term::Variable(v) = node {
            if bound.contains(v) {
                return Some(Anchor::Variable(v.clone()));
            }
        }
    }
    None
}

/// Stable-greedy ordering: repeatedly place the earliest (by original index)
/// unplaced triple that has an anchor.
pub fn check_answerability(q: &QueryPattern) -> AnswerabilityReport {
    let n = q.triples.len();
    let mut placed = vec![false; n];
    let mut bound = BTreeSet::new();
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !placed[i] && anchor_at(&q.triples[i], &bound).is_some());
        let Some(i) = next else { break };
        placed[i] = true;
        order.push(i);
        bound.extend(q.triples[i].binding_keys());
    }
    if order.len() == n {
        let reordered = order.iter().enumerate().any(|(pos, &i)| pos != i);
        AnswerabilityReport {
            answerable: true,
            order: Some(order),
            reordered_from_original: reordered,
            failure_witness: None,
        }
    } else {
        AnswerabilityReport {
            answerable: false,
            order: None,
            reordered_from_original: false,
            failure_witness: Some((0..n).filter(|&i| !placed[i]).collect()),
        }
    }
}

/// One triple at its position in the traversal order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalStep {
    pub triple: usize,
    pub anchor: Anchor,
    /// Binding keys first bound by this triple, in s/p/o order.
    pub fresh: Vec<String>,
}

/// Validates `order` and annotates every position with its anchor.
pub fn traversal_steps(q: &QueryPattern, order: &[usize]) -> Result<Vec<TraversalStep>, AnalysisError> {
    let n = q.triples.len();
    if order.len() != n {
        return Err(AnalysisError::InvalidOrder(format!(
            "order has {} entries for {n} triples",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    let mut bound = BTreeSet::new();
    let mut steps = Vec::with_capacity(n);
    for &i in order {
        if i >= n || seen[i] {
            return Err(AnalysisError::InvalidOrder(format!(
                "order is not a permutation (index {i})"
            )));
        }
        seen[i] = true;
        let t = &q.triples[i];
        let anchor = anchor_at(t, &bound).ok_or_else(|| {
            AnalysisError::InvalidOrder(format!("triple {i} has no anchor at its position"))
        })?;
        let fresh: Vec<String> = t
            .binding_keys()
            .into_iter()
            .filter(|k| !bound.contains(k))
            .collect();
        bound.extend(fresh.iter().cloned());
        steps.push(TraversalStep {
            triple: i,
            anchor,
            fresh,
        });
    }
    Ok(steps)
}

/// A necessary-to-resolve variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NrvInfo {
    pub variable: String,
    pub binding_triple: usize,
    /// Later triples anchored by this variable that bind something new.
    pub consumer_triples: Vec<usize>,
    pub star_triples: BTreeSet<usize>,
    pub filter_affected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterEffect {
    /// Index into `QueryPattern::filters`.
    pub filter: usize,
    /// Position (in traversal order) of the triple the filter follows.
    pub position: usize,
    pub affected: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(from = "String")]
pub enum GroupAnchor {
    Constant,
    Variable(String),
}

impl From<String> for GroupAnchor {
    fn from(s: String) -> Self {
        match s.strip_prefix('?') {
            Some(v) => GroupAnchor::Variable(v.to_owned()),
            None => GroupAnchor::Constant,
        }
    }
}

impl fmt::Display for GroupAnchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupAnchor::Constant => f.write_str("constant"),
            GroupAnchor::Variable(v) => write!(f, "?{v}"),
        }
    }
}

impl Serialize for GroupAnchor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A run of consecutive triples served by one dereferencing pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionGroup {
    pub id: usize,
    pub variable: GroupAnchor,
    pub triple_indices: Vec<usize>,
    pub ended_by_filter: bool,
}

fn position_of(steps: &[TraversalStep]) -> BTreeMap<usize, usize> {
    steps.iter().enumerate().map(|(pos, s)| (s.triple, pos)).collect()
}

fn nrvs_from_steps(steps: &[TraversalStep]) -> Vec<NrvInfo> {
    let mut out = Vec::new();
    for (pos, step) in steps.iter().enumerate() {
        for v in &step.fresh {
            if v.starts_with("_:") {
                continue;
            }
            let consumers: Vec<usize> = steps[pos + 1..]
                .iter()
                .filter(|s| s.anchor == Anchor::Variable(v.clone()) && !s.fresh.is_empty())
                .map(|s| s.triple)
                .collect();
            if !consumers.is_empty() {
                out.push(NrvInfo {
                    variable: v.clone(),
                    binding_triple: step.triple,
                    consumer_triples: consumers,
                    star_triples: BTreeSet::new(),
                    filter_affected: false,
                });
            }
        }
    }
    out
}

fn stars_from(q: &QueryPattern, steps: &[TraversalStep], nrvs: &[NrvInfo]) -> BTreeMap<String, BTreeSet<usize>> {
    let names: BTreeSet<&str> = nrvs.iter().map(|n| n.variable.as_str()).collect();
    let mut out: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    if steps.len() < 3 {
        return out;
    }
    for step in &steps[1..steps.len() - 1] {
        let Anchor::Variable(v) = &step.anchor else { continue };
        if !names.contains(v.as_str()) {
            continue;
        }
        if step.fresh.iter().any(|w| names.contains(w.as_str())) {
            continue;
        }
        if q.filters_after(step.triple).next().is_some() {
            continue;
        }
        out.entry(v.clone()).or_default().insert(step.triple);
    }
    out
}

fn filter_effects_from(q: &QueryPattern, steps: &[TraversalStep], nrvs: &[NrvInfo]) -> Vec<FilterEffect> {
    let pos = position_of(steps);
    let bound_at: BTreeMap<&str, usize> = steps
        .iter()
        .enumerate()
        .flat_map(|(p, s)| s.fresh.iter().map(move |v| (v.as_str(), p)))
        .collect();
    q.filters
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let fpos = pos[&f.after_triple];
            let attached = &q.triples[f.after_triple];
            let affected = nrvs
                .iter()
                .filter(|n| {
                    let mentioned = f.variables.contains(&n.variable)
                        || attached.terms().iter().any(|t| t.as_var() == Some(n.variable.as_str()));
                    let bound_before = bound_at.get(n.variable.as_str()).is_some_and(|&b| b <= fpos);
                    let consumed_after = n.consumer_triples.iter().any(|c| pos[c] > fpos);
                    mentioned && bound_before && consumed_after
                })
                .map(|n| n.variable.clone())
                .collect();
            FilterEffect {
                filter: fi,
                position: fpos,
                affected,
            }
        })
        .collect()
}

fn groups_from(q: &QueryPattern, steps: &[TraversalStep]) -> Vec<ResolutionGroup> {
    let mut groups: Vec<ResolutionGroup> = Vec::new();
    let mut split_next = false;
    for step in steps {
        let key = match &step.anchor {
            Anchor::Iri(_) => GroupAnchor::Constant,
            Anchor::Variable(v) => GroupAnchor::Variable(v.clone()),
        };
        let has_filter = q.filters_after(step.triple).next().is_some();
        match groups.last_mut() {
            Some(g) if g.variable == key && !split_next => g.triple_indices.push(step.triple),
            _ => {
                let id = groups.len();
                groups.push(ResolutionGroup {
                    id,
                    variable: key,
                    triple_indices: vec![step.triple],
                    ended_by_filter: false,
                });
            }
        }
        if has_filter {
            groups.last_mut().unwrap().ended_by_filter = true;
        }
        split_next = has_filter;
    }
    groups
}

/// Everything the estimators and the simulator need about one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAnalysis {
    pub order: Vec<usize>,
    pub reordered_from_original: bool,
    pub steps: Vec<TraversalStep>,
    pub nrvs: Vec<NrvInfo>,
    pub star_joins: BTreeMap<String, BTreeSet<usize>>,
    pub filter_effects: Vec<FilterEffect>,
    pub groups: Vec<ResolutionGroup>,
}

impl QueryAnalysis {
    pub fn new(q: &QueryPattern) -> Result<Self, AnalysisError> {
        let report = check_answerability(q);
        match report.order {
            Some(order) => Self::with_order(q, order),
            None => Err(AnalysisError::NotAnswerable {
                witness: report.failure_witness.unwrap_or_default(),
            }),
        }
    }

    pub fn with_order(q: &QueryPattern, order: Vec<usize>) -> Result<Self, AnalysisError> {
        let steps = traversal_steps(q, &order)?;
        let mut nrvs = nrvs_from_steps(&steps);
        let star_joins = stars_from(q, &steps, &nrvs);
        let filter_effects = filter_effects_from(q, &steps, &nrvs);
        for n in &mut nrvs {
            n.star_triples = star_joins.get(&n.variable).cloned().unwrap_or_default();
            n.filter_affected = filter_effects.iter().any(|e| e.affected.contains(&n.variable));
        }
        let groups = groups_from(q, &steps);
        let reordered_from_original = order.iter().enumerate().any(|(p, &i)| p != i);
        Ok(Self {
            order,
            reordered_from_original,
            steps,
            nrvs,
            star_joins,
            filter_effects,
            groups,
        })
    }

    pub fn has_star_joins(&self) -> bool {
        self.star_joins.values().any(|s| !s.is_empty())
    }

    pub fn step_of(&self, triple: usize) -> &TraversalStep {
        self.steps.iter().find(|s| s.triple == triple).expect("triple in order")
    }
}

pub fn find_nrvs(q: &QueryPattern, order: &[usize]) -> Result<Vec<NrvInfo>, AnalysisError> {
    Ok(QueryAnalysis::with_order(q, order.to_vec())?.nrvs)
}

/// For each NRV, the triples (anchored by it, strictly inside the traversal
/// order) that constrain its bindings without propagating the traversal.
pub fn detect_star_joins(
    q: &QueryPattern,
    order: &[usize],
) -> Result<BTreeMap<String, BTreeSet<usize>>, AnalysisError> {
    Ok(QueryAnalysis::with_order(q, order.to_vec())?.star_joins)
}

pub fn filter_affected_nrvs(
    q: &QueryPattern,
    order: &[usize],
    nrvs: &[NrvInfo],
) -> Result<BTreeSet<String>, AnalysisError> {
    let steps = traversal_steps(q, order)?;
    Ok(filter_effects_from(q, &steps, nrvs)
        .into_iter()
        .flat_map(|e| e.affected)
        .collect())
}

pub fn build_resolution_groups(
    q: &QueryPattern,
    order: &[usize],
) -> Result<Vec<ResolutionGroup>, AnalysisError> {
    Ok(groups_from(q, &traversal_steps(q, order)?))
}

/// SPARQL-LD text: each resolution group wrapped in a SERVICE block at its
/// anchor. Constant groups are split per anchor IRI.
pub fn render_service_form(q: &QueryPattern, order: &[usize]) -> Result<String, AnalysisError> {
    if let Some(witness) = check_answerability(q).failure_witness {
        return Err(AnalysisError::NotAnswerable { witness });
    }
    let analysis = QueryAnalysis::with_order(q, order.to_vec())?;
    let mut out = String::new();
    write_prologue(q, &mut out);
    out.push_str("WHERE {\n");
    for group in &analysis.groups {
        let mut blocks: Vec<(Term, Vec<usize>)> = Vec::new();
        for &t in &group.triple_indices {
            let anchor = match &analysis.step_of(t).anchor {
                Anchor::Iri(i) => Term::Iri(i.clone()),
                Anchor::Variable(v) => Term::Variable(v.clone()),
            };
            match blocks.last_mut() {
                Some((a, ts)) if *a == anchor => ts.push(t),
                _ => blocks.push((anchor, vec![t])),
            }
        }
        for (anchor, triples) in blocks {
            out.push_str(&format!("  SERVICE {anchor} {{\n"));
            for t in triples {
                write_triple(q, t, "    ", &mut out);
            }
            out.push_str("  }\n");
        }
    }
    out.push('}');
    write_modifiers(q, &mut out);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;
    use crate::samples::*;

    fn analyze(text: &str) -> QueryAnalysis {
        QueryAnalysis::new(&parse_query(text).unwrap()).unwrap()
    }

    #[test]
    fn plato_is_answerable_in_order() {
        let r = check_answerability(&parse_query(PLATO).unwrap());
        assert!(r.answerable);
        assert_eq!(r.order, Some(vec![0, 1]));
        assert!(!r.reordered_from_original);
    }

    #[test]
    fn isuri_query_is_not_answerable() {
        let r = check_answerability(&parse_query(ISURI).unwrap());
        assert!(!r.answerable);
        assert_eq!(r.failure_witness, Some(BTreeSet::from([0])));
        assert!(r.order.is_none());
    }

    #[test]
    fn reorders_when_anchor_comes_second() {
        let q = parse_query("SELECT * WHERE { ?x <http://p> ?y . <http://a> <http://q> ?x }").unwrap();
        let r = check_answerability(&q);
        assert!(r.answerable);
        assert_eq!(r.order, Some(vec![1, 0]));
        assert!(r.reordered_from_original);
    }

    #[test]
    fn nrvs_of_author_chain() {
        let a = analyze(AUTHOR_CHAIN);
        let names: Vec<&str> = a.nrvs.iter().map(|n| n.variable.as_str()).collect();
        assert_eq!(names, vec!["author", "publication"]);
        assert_eq!(a.nrvs[0].binding_triple, 0);
        assert_eq!(a.nrvs[0].consumer_triples, vec![1]);
        assert_eq!(a.nrvs[1].consumer_triples, vec![2]);
    }

    #[test]
    fn no_nrvs_for_single_triples() {
        assert!(analyze(MANDELA).nrvs.is_empty());
        assert!(analyze("SELECT * WHERE { ?s <http://p> <http://o> }").nrvs.is_empty());
    }

    #[test]
    fn invalid_order_is_rejected() {
        let q = parse_query(AUTHOR_CHAIN).unwrap();
        assert!(matches!(find_nrvs(&q, &[1, 0, 2]), Err(AnalysisError::InvalidOrder(_))));
        assert!(matches!(find_nrvs(&q, &[0, 0, 2]), Err(AnalysisError::InvalidOrder(_))));
        assert!(matches!(find_nrvs(&q, &[0, 1]), Err(AnalysisError::InvalidOrder(_))));
    }

    #[test]
    fn director_star() {
        let a = analyze(DIRECTOR_STAR);
        assert_eq!(a.star_joins, BTreeMap::from([("author".to_string(), BTreeSet::from([1]))]));
    }

    #[test]
    fn party_chain_has_no_author_star() {
        let a = analyze(PARTY_CHAIN);
        assert!(!a.star_joins.contains_key("author"));
    }

    #[test]
    fn two_triples_never_star() {
        let a = analyze("SELECT * WHERE { <http://a> <http://p> ?x . ?x <http://q> ?y }");
        assert!(a.star_joins.is_empty());
    }

    #[test]
    fn birthdate_filter_affects_author() {
        let q = parse_query(BIRTHDATE_FILTER).unwrap();
        let a = QueryAnalysis::new(&q).unwrap();
        let affected = filter_affected_nrvs(&q, &a.order, &a.nrvs).unwrap();
        assert_eq!(affected, BTreeSet::from(["author".to_string()]));
        assert_eq!(a.star_joins["author"], BTreeSet::from([1]));
    }

    #[test]
    fn filter_at_end_affects_nothing() {
        let q = parse_query(BIRTHDATE_FILTER_AT_END).unwrap();
        let a = QueryAnalysis::new(&q).unwrap();
        assert!(filter_affected_nrvs(&q, &a.order, &a.nrvs).unwrap().is_empty());
        assert!(a.filter_effects[0].affected.is_empty());
    }

    fn shape(groups: &[ResolutionGroup]) -> Vec<(String, Vec<usize>, bool)> {
        groups
            .iter()
            .map(|g| (g.variable.to_string(), g.triple_indices.clone(), g.ended_by_filter))
            .collect()
    }

    #[test]
    fn star_example_groups() {
        let a = analyze(DIRECTOR_STAR);
        assert_eq!(
            shape(&a.groups),
            vec![
                ("constant".into(), vec![0], false),
                ("?author".into(), vec![1, 2], false),
                ("?publication".into(), vec![3], false),
            ]
        );
    }

    #[test]
    fn filter_example_groups() {
        let a = analyze(BIRTHDATE_FILTER);
        assert_eq!(
            shape(&a.groups),
            vec![
                ("constant".into(), vec![0], false),
                ("?author".into(), vec![1, 2], true),
                ("?author".into(), vec![3], false),
                ("?publication".into(), vec![4], false),
            ]
        );
    }

    #[test]
    fn single_triple_group() {
        assert_eq!(shape(&analyze(MANDELA).groups), vec![("constant".into(), vec![0], false)]);
    }

    #[test]
    fn service_form_of_plato() {
        let q = parse_query(PLATO).unwrap();
        let text = render_service_form(&q, &[0, 1]).unwrap();
        let back = parse_query(&text).unwrap();
        assert_eq!(back.service_groups.len(), 2);
        assert_eq!(back.service_groups[0].anchor, Term::iri("http://dbpedia.org/resource/Plato"));
        assert_eq!(back.service_groups[1].anchor, Term::var("influencer"));
        assert_eq!(back.triples, q.triples);
        assert_eq!(back.filters, q.filters);
    }

    #[test]
    fn service_form_of_mandela() {
        let q = parse_query(MANDELA).unwrap();
        let back = parse_query(&render_service_form(&q, &[0]).unwrap()).unwrap();
        assert_eq!(back.service_groups.len(), 1);
        assert_eq!(back.service_groups[0].anchor, q.triples[0].subject);
    }

    #[test]
    fn service_form_mirrors_groups() {
        let q = parse_query(BIRTHDATE_FILTER).unwrap();
        let a = QueryAnalysis::new(&q).unwrap();
        let back = parse_query(&render_service_form(&q, &a.order).unwrap()).unwrap();
        assert_eq!(back.service_groups.len(), 4);
        let b = QueryAnalysis::new(&back).unwrap();
        assert_eq!(shape(&b.groups), shape(&a.groups));
        let ranges: Vec<_> = back.service_groups.iter().map(|g| g.triples.clone()).collect();
        assert_eq!(ranges, vec![0..1, 1..3, 3..4, 4..5]);
    }

    #[test]
    fn service_form_of_unanswerable_query_fails() {
        let q = parse_query(ISURI).unwrap();
        assert!(matches!(
            render_service_form(&q, &[0]),
            Err(AnalysisError::NotAnswerable { .. })
        ));
    }

    #[test]
    fn group_anchor_serializes_as_sentinel() {
        assert_eq!(serde_json::to_string(&GroupAnchor::Constant).unwrap(), "\"constant\"");
        assert_eq!(serde_json::to_string(&GroupAnchor::Variable("a".into())).unwrap(), "\"?a\"");
    }
}
