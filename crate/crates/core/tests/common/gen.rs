//! Seeded generators for answerable queries and catalogs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ltcost::query::{parse_query, QueryPattern, RDF_TYPE};
use ltcost::stats::StatsCatalog;

const PREDICATES: [&str; 5] = ["p0", "p1", "p2", "p3", "p4"];

fn pred(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.15) {
        format!("<{RDF_TYPE}>")
    } else {
        format!("<http://ex/{}>", PREDICATES[rng.random_range(0..PREDICATES.len())])
    }
}

/// A random answerable query of 1..=max_triples triples with chains,
/// stars, constant checks and filters.
pub fn answerable_query(seed: u64, max_triples: usize) -> QueryPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_triples);
    let mut bound: Vec<String> = Vec::new();
    let mut fresh = 0;
    let mut body = String::new();
    for i in 0..n {
        let mut new_var = |bound: &mut Vec<String>| {
            fresh += 1;
            let v = format!("v{fresh}");
            bound.push(v.clone());
            format!("?{v}")
        };
        let p = pred(&mut rng);
        let constant = format!("<http://ex/c{}>", rng.random_range(0..4));
        let line = if i == 0 || bound.is_empty() || rng.random_bool(0.2) {
            match rng.random_range(0..3) {
                0 => format!("{constant} {p} {} .", new_var(&mut bound)),
                1 => format!("{} {p} {constant} .", new_var(&mut bound)),
                _ => format!("{constant} {p} <http://ex/c{}> .", rng.random_range(0..4)),
            }
        } else {
            let v = bound[rng.random_range(0..bound.len())].clone();
            match rng.random_range(0..6) {
                0 | 1 => format!("?{v} {p} {} .", new_var(&mut bound)),
                2 => format!("{} {p} ?{v} .", new_var(&mut bound)),
                3 => format!("?{v} {p} \"x\" ."),
                4 => {
                    let pv = new_var(&mut bound);
                    format!("?{v} {pv} {} .", new_var(&mut bound))
                }
                _ => {
                    let w = bound[rng.random_range(0..bound.len())].clone();
                    format!("?{v} {p} ?{w} .")
                }
            }
        };
        body.push_str(&line);
        body.push('\n');
        if rng.random_bool(0.25) && !bound.is_empty() {
            let w = &bound[rng.random_range(0..bound.len())];
            if rng.random_bool(0.5) {
                body.push_str(&format!("FILTER(?{w} != <http://ex/c0>)\n"));
            } else {
                body.push_str(&format!("FILTER(lang(?{w}) = 'en')\n"));
            }
        }
    }
    parse_query(&format!("SELECT * WHERE {{\n{body}}}")).expect("generated query parses")
}

/// A random catalog with non-negative values; some predicates absent.
pub fn catalog(seed: u64) -> StatsCatalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut c = StatsCatalog::default();
    c.global.avg_outgoing_props = rng.random_range(0.0..50.0);
    c.global.avg_incoming_props = rng.random_range(0.0..20.0);
    c.global.avg_subj_bindings_nontype = rng.random_range(0.0..3000.0);
    c.global.avg_instances_per_class = rng.random_range(0.0..2000.0);
    c.global.avg_obj_bindings = rng.random_range(0.0..5.0);
    for p in PREDICATES {
        if rng.random_bool(0.6) {
            c.insert(&format!("http://ex/{p}"), rng.random_range(0.0..500.0), rng.random_range(0.0..10.0));
        }
    }
    if rng.random_bool(0.5) {
        c.insert(RDF_TYPE, rng.random_range(0.0..5000.0), rng.random_range(0.0..3.0));
    }
    c
}
