use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use oxttl::NTriplesParser;

use super::{GlobalStats, StatsCatalog, StatsError};
use crate::query::RDF_TYPE;

/// One dump record. Subject and object are in N-Triples term syntax
/// (`<iri>`, `_:b`, `"lex"^^<dt>`), the predicate is a bare IRI.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DumpTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl DumpTriple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    /// A triple whose three positions are all IRIs.
    pub fn iris(s: &str, p: &str, o: &str) -> Self {
        Self::new(format!("<{s}>"), p, format!("<{o}>"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedTriple {
    pub line: usize,
    pub message: String,
}

/// N-Triples records from `reader`, one result per non-blank, non-comment
/// line.
pub fn read_ntriples<R: BufRead>(reader: R) -> impl Iterator<Item = Result<DumpTriple, MalformedTriple>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        let text = match line {
            Ok(t) => t,
            Err(e) => {
                return Some(Err(MalformedTriple {
                    line: line_no,
                    message: e.to_string(),
                }))
            }
        };
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return None;
        }
        let mut parsed = NTriplesParser::new().for_slice(trimmed);
        Some(match (parsed.next(), parsed.next()) {
            (Some(Ok(t)), None) => Ok(DumpTriple::new(
                t.subject.to_string(),
                t.predicate.as_str(),
                t.object.to_string(),
            )),
            (Some(Err(e)), _) => Err(MalformedTriple {
                line: line_no,
                message: e.to_string(),
            }),
            _ => Err(MalformedTriple {
                line: line_no,
                message: "expected exactly one triple".to_string(),
            }),
        })
    })
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
}

impl Interner {
    fn id(&mut self, s: String) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(s).or_insert(next)
    }
}

fn mean_of_distinct<K: std::hash::Hash + Eq>(groups: &HashMap<K, HashSet<u32>>) -> f64 {
    if groups.is_empty() {
        return 0.0;
    }
    let total: usize = groups.values().map(HashSet::len).sum();
    total as f64 / groups.len() as f64
}

/// Exact statistics over an in-memory copy of the dump. Duplicate records
/// count once, as they would in a loaded graph.
pub fn compute_from_dump<I>(records: I) -> Result<StatsCatalog, StatsError>
where
    I: IntoIterator<Item = Result<DumpTriple, MalformedTriple>>,
{
    let mut nodes = Interner::default();
    let mut preds = Interner::default();
    let mut pred_names: BTreeMap<u32, String> = BTreeMap::new();
    let mut triples: HashSet<(u32, u32, u32)> = HashSet::new();
    let mut malformed = 0usize;
    for r in records {
        match r {
            Ok(t) => {
                let s = nodes.id(t.subject);
                let o = nodes.id(t.object);
                let p = preds.id(t.predicate.clone());
                pred_names.entry(p).or_insert(t.predicate);
                triples.insert((s, p, o));
            }
            Err(_) => malformed += 1,
        }
    }
    if triples.is_empty() && malformed > 0 {
        return Err(StatsError::AllMalformed { count: malformed });
    }
    let type_id = preds.ids.get(RDF_TYPE).copied();
    let typed: HashSet<u32> = triples
        .iter()
        .filter(|t| Some(t.1) == type_id)
        .map(|t| t.0)
        .collect();

    let mut out_preds: HashMap<u32, HashSet<u32>> = HashMap::new();
    let mut in_preds: HashMap<u32, HashSet<u32>> = HashMap::new();
    let mut subj_nontype: HashMap<u32, HashSet<u32>> = HashMap::new();
    let mut class_members: HashMap<u32, HashSet<u32>> = HashMap::new();
    let mut objects_of: HashMap<u32, HashSet<u32>> = HashMap::new();
    let mut per_obj: HashMap<u32, HashMap<u32, HashSet<u32>>> = HashMap::new();
    let mut per_subj: HashMap<u32, HashMap<u32, HashSet<u32>>> = HashMap::new();
    for &(s, p, o) in &triples {
        if typed.contains(&s) {
            out_preds.entry(s).or_default().insert(p);
        }
        if typed.contains(&o) {
            in_preds.entry(o).or_default().insert(p);
        }
        if Some(p) == type_id {
            class_members.entry(o).or_default().insert(s);
        } else {
            subj_nontype.entry(o).or_default().insert(s);
        }
        objects_of.entry(s).or_default().insert(o);
        per_obj.entry(p).or_default().entry(s).or_default().insert(o);
        per_subj.entry(p).or_default().entry(o).or_default().insert(s);
    }

    let mut catalog = StatsCatalog::with_global(GlobalStats {
        avg_outgoing_props: mean_of_distinct(&out_preds),
        avg_incoming_props: mean_of_distinct(&in_preds),
        avg_subj_bindings_nontype: mean_of_distinct(&subj_nontype),
        avg_instances_per_class: mean_of_distinct(&class_members),
        avg_obj_bindings: mean_of_distinct(&objects_of),
    });
    for (pid, name) in &pred_names {
        let o = per_obj.get(pid).map_or(0.0, mean_of_distinct);
        let s = per_subj.get(pid).map_or(0.0, mean_of_distinct);
        catalog.insert(name, s, o);
    }
    catalog.provenance = format!("dump ({} triples, {malformed} malformed records skipped)", triples.len());
    Ok(catalog)
}

pub fn compute_from_ntriples<R: BufRead>(reader: R) -> Result<StatsCatalog, StatsError> {
    compute_from_dump(read_ntriples(reader))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &str = "http://ex/p";

    fn ok(s: &str, p: &str, o: &str) -> Result<DumpTriple, MalformedTriple> {
        Ok(DumpTriple::iris(s, p, o))
    }

    #[test]
    fn three_triple_example() {
        let c = compute_from_dump([
            ok("http://ex/a", P, "http://ex/x"),
            ok("http://ex/a", P, "http://ex/y"),
            ok("http://ex/b", P, "http://ex/x"),
        ])
        .unwrap();
        let p = &c.per_predicate[P];
        assert_eq!(p.avg_object_bindings, 1.5);
        assert_eq!(p.avg_subject_bindings, 1.5);
    }

    #[test]
    fn empty_dump_gives_zeros() {
        let c = compute_from_dump(Vec::<Result<DumpTriple, MalformedTriple>>::new()).unwrap();
        assert!(c.per_predicate.is_empty());
        assert_eq!(c.global, GlobalStats::zeros());
    }

    #[test]
    fn constant_group_sizes() {
        let q = "http://ex/q";
        let c = compute_from_dump((0..5).map(|i| ok(&format!("http://ex/s{i}"), q, &format!("http://ex/o{i}")))).unwrap();
        assert_eq!(c.per_predicate[q].avg_object_bindings, 1.0);
    }

    #[test]
    fn all_malformed_fails_but_some_is_fine() {
        let text = "garbage\n<http://a> <http://p> .\n";
        assert!(matches!(
            compute_from_ntriples(text.as_bytes()),
            Err(StatsError::AllMalformed { count: 2 })
        ));
        let text = "garbage\n<http://a> <http://p> <http://b> .\n# comment\n";
        let c = compute_from_ntriples(text.as_bytes()).unwrap();
        assert_eq!(c.per_predicate["http://p"].avg_object_bindings, 1.0);
        assert!(c.provenance.contains("1 malformed"));
    }

    #[test]
    fn literals_and_types() {
        let text = r#"<http://a> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://C> .
<http://a> <http://p> "x" .
<http://a> <http://p> "y"@en .
<http://b> <http://q> <http://a> .
<http://b> <http://p> "x" .
"#;
        let c = compute_from_ntriples(text.as_bytes()).unwrap();
        // a is the only typed entity: outgoing {type, p}, incoming {q}.
        assert_eq!(c.global.avg_outgoing_props, 2.0);
        assert_eq!(c.global.avg_incoming_props, 1.0);
        assert_eq!(c.global.avg_instances_per_class, 1.0);
        // objects of non-type triples: "x" <- {a,b}, "y"@en <- {a}, a <- {b}
        assert_eq!(c.global.avg_subj_bindings_nontype, 4.0 / 3.0);
        assert_eq!(c.per_predicate["http://p"].avg_object_bindings, 1.5);
    }
}
