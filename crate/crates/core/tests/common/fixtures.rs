//! Synthetic document stores with independently known traversal costs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ltcost::query::{parse_query, QueryPattern, Term};
use ltcost::stats::DumpTriple;
use ltcost::traversal::{DerefStore, GraphTriple};

pub struct Chain {
    pub query: QueryPattern,
    pub store: DerefStore,
    pub dump: Vec<DumpTriple>,
    /// Distinct documents a traversal must open, counted by walking the graph.
    pub documents_needed: usize,
    /// Number of root-to-leaf paths.
    pub paths: usize,
}

fn node(level: usize, i: usize) -> String {
    format!("http://chain/n{level}_{i}")
}

fn pred(level: usize) -> String {
    format!("http://chain/p{level}")
}

/// A layered graph where every node at level `i` has exactly `degrees[i]`
/// distinct successors. With `pool` set, successors are drawn from a shared
/// pool of that many nodes per level, so paths can converge.
pub fn chain(degrees: &[usize], pool: Option<usize>, seed: u64) -> Chain {
    assert!(!degrees.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs: BTreeMap<String, Vec<GraphTriple>> = BTreeMap::new();
    let mut dump = Vec::new();
    let mut frontier: BTreeSet<String> = [node(0, 0)].into();
    let mut documents_needed = 0;
    let mut next_id = 0;
    for (level, &k) in degrees.iter().enumerate() {
        documents_needed += frontier.len();
        let mut next = BTreeSet::new();
        for s in &frontier {
            let targets: Vec<String> = match pool {
                Some(n) => sample(&mut rng, n.max(k), k).into_iter().map(|i| node(level + 1, i)).collect(),
                None => (0..k)
                    .map(|_| {
                        next_id += 1;
                        node(level + 1, next_id)
                    })
                    .collect(),
            };
            let doc = docs.entry(s.clone()).or_default();
            for o in targets {
                doc.push(GraphTriple::new(Term::iri(s), Term::iri(pred(level)), Term::iri(&o)));
                dump.push(DumpTriple::iris(s, &pred(level), &o));
                next.insert(o);
            }
        }
        frontier = next;
    }
    let mut body = format!("<{}> <{}> ?x1 .\n", node(0, 0), pred(0));
    for level in 1..degrees.len() {
        body.push_str(&format!("?x{level} <{}> ?x{} .\n", pred(level), level + 1));
    }
    Chain {
        query: parse_query(&format!("SELECT * WHERE {{\n{body}}}")).expect("chain query parses"),
        store: DerefStore::in_memory(docs),
        dump,
        documents_needed,
        paths: degrees.iter().product(),
    }
}

/// A random small web over `http://ex/c0..c9` using the predicates of the
/// query generator, so generated queries find matches.
pub fn random_web(seed: u64) -> DerefStore {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let preds = ["http://ex/p0", "http://ex/p1", "http://ex/p2", "http://ex/p3", "http://ex/p4", ltcost::query::RDF_TYPE];
    let mut docs: BTreeMap<String, Vec<GraphTriple>> = BTreeMap::new();
    for _ in 0..rng.random_range(10..60) {
        let s = format!("http://ex/c{}", rng.random_range(0..10));
        let p = preds[rng.random_range(0..preds.len())];
        let o = match rng.random_range(0..4) {
            0 => Term::Literal(ltcost::query::Literal::lang("x", if rng.random_bool(0.5) { "en" } else { "de" })),
            1 => Term::Literal(ltcost::query::Literal::simple("x")),
            _ => Term::iri(format!("http://ex/c{}", rng.random_range(0..10))),
        };
        let t = GraphTriple::new(Term::iri(&s), Term::iri(p), o);
        // documents may also describe the resources they link to
        if let Term::Iri(target) = &t.object {
            if rng.random_bool(0.3) {
                docs.entry(target.clone()).or_default().push(t.clone());
            }
        }
        docs.entry(s).or_default().push(t);
    }
    DerefStore::in_memory(docs)
}
