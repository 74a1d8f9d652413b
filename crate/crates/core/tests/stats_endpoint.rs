mod common;

use std::time::Duration;

use common::{dead_url, json_average, MockServer, Response};
use ltcost::stats::{fetch_from_endpoint, EndpointOptions, StatsError};

const GENRE: &str = "http://dbpedia.org/ontology/genre";

fn dbpedia_like(query: &str) -> Response {
    if query.contains("SELECT DISTINCT ?p") {
        return Response::ok(
            "application/sparql-results+json",
            format!(r#"{{"head":{{"vars":["p"]}},"results":{{"bindings":[{{"p":{{"type":"uri","value":"{GENRE}"}}}}]}}}}"#),
        );
    }
    if query.contains(GENRE) {
        return if query.contains("GROUP BY ?x") { json_average("1.8") } else { json_average("56.9") };
    }
    let value = if query.contains("?x a ?type . ?x ?y ?z") {
        "25"
    } else if query.contains("?z a ?type") {
        "5"
    } else if query.contains("FILTER (?y!=rdf:type)") {
        "1505"
    } else if query.contains("?x a ?z") {
        "848"
    } else {
        "1.86"
    };
    json_average(value)
}

fn options(ms: u64) -> EndpointOptions {
    EndpointOptions {
        timeout: Duration::from_millis(ms),
    }
}

#[test]
fn collects_genre_from_fixture_endpoint() {
    let server = MockServer::start(|r| dbpedia_like(r.param("query").unwrap_or("")));
    let url = format!("{}/sparql", server.base);
    let c = fetch_from_endpoint(&url, None, &options(5000)).unwrap();
    let genre = &c.per_predicate[GENRE];
    assert_eq!(genre.avg_object_bindings, 1.8);
    assert_eq!(genre.avg_subject_bindings, 56.9);
    assert_eq!(c.global.avg_outgoing_props, 25.0);
    assert_eq!(c.global.avg_incoming_props, 5.0);
    assert_eq!(c.global.avg_subj_bindings_nontype, 1505.0);
    assert_eq!(c.global.avg_instances_per_class, 848.0);
    assert_eq!(c.global.avg_obj_bindings, 1.86);
    assert!(c.provenance.contains(&url));
    // five globals, one predicate list, two per-predicate queries
    assert_eq!(server.requests().len(), 8);
}

#[test]
fn explicit_predicate_list_skips_discovery() {
    let server = MockServer::start(|r| dbpedia_like(r.param("query").unwrap_or("")));
    let url = format!("{}/sparql", server.base);
    let c = fetch_from_endpoint(&url, Some(&[GENRE.to_string()]), &options(5000)).unwrap();
    assert_eq!(c.per_predicate.len(), 1);
    assert_eq!(server.requests().len(), 7);
}

#[test]
fn unreachable_host() {
    match fetch_from_endpoint(&dead_url(), Some(&[]), &options(2000)) {
        Err(StatsError::EndpointUnreachable { .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn one_timed_out_global_gives_partial_catalog() {
    let server = MockServer::start(|r| {
        let q = r.param("query").unwrap_or("");
        let resp = dbpedia_like(q);
        if q.contains("FILTER (?y!=rdf:type)") {
            resp.delayed(Duration::from_millis(1500))
        } else {
            resp
        }
    });
    let url = format!("{}/sparql", server.base);
    match fetch_from_endpoint(&url, Some(&[GENRE.to_string()]), &options(400)) {
        Err(StatsError::PartialCatalog { catalog, gaps }) => {
            assert_eq!(gaps.len(), 1);
            assert!(gaps[0].starts_with("K3"));
            assert!(catalog.provenance.contains("gaps"));
            assert_eq!(catalog.global.avg_outgoing_props, 25.0);
            assert_eq!(catalog.global.avg_subj_bindings_nontype, 1505.0);
            assert_eq!(catalog.per_predicate[GENRE].avg_object_bindings, 1.8);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn gateway_timeout_status_is_a_gap() {
    let server = MockServer::start(|r| {
        let q = r.param("query").unwrap_or("");
        if q.contains(GENRE) && q.contains("GROUP BY ?z") {
            Response::status(504)
        } else {
            dbpedia_like(q)
        }
    });
    let url = format!("{}/sparql", server.base);
    match fetch_from_endpoint(&url, Some(&[GENRE.to_string()]), &options(5000)) {
        Err(StatsError::PartialCatalog { catalog, gaps }) => {
            assert!(gaps[0].starts_with(GENRE));
            assert!(!catalog.per_predicate.contains_key(GENRE));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_numeric_result_is_protocol_error() {
    let server = MockServer::start(|_| json_average("lots"));
    let url = format!("{}/sparql", server.base);
    assert!(matches!(
        fetch_from_endpoint(&url, Some(&[]), &options(5000)),
        Err(StatsError::ProtocolError(_))
    ));
}

#[test]
fn xml_results_are_accepted() {
    let server = MockServer::start(|r| {
        let q = r.param("query").unwrap_or("");
        let v = if q.contains(GENRE) && q.contains("GROUP BY ?x") { "1.8" } else { "2" };
        Response::ok(
            "application/sparql-results+xml",
            format!(
                "<?xml version=\"1.0\"?><sparql xmlns=\"http://www.w3.org/2005/sparql-results#\"><head><variable name=\"average\"/></head><results><result><binding name=\"average\"><literal datatype=\"http://www.w3.org/2001/XMLSchema#decimal\">{v}</literal></binding></result></results></sparql>"
            ),
        )
    });
    let url = format!("{}/sparql", server.base);
    let c = fetch_from_endpoint(&url, Some(&[GENRE.to_string()]), &options(5000)).unwrap();
    assert_eq!(c.per_predicate[GENRE].avg_object_bindings, 1.8);
    assert_eq!(c.global.avg_obj_bindings, 2.0);
}

#[test]
fn empty_aggregate_leaves_predicate_out() {
    let server = MockServer::start(|r| {
        let q = r.param("query").unwrap_or("");
        if q.contains(GENRE) {
            Response::ok("application/sparql-results+json", r#"{"head":{"vars":["average"]},"results":{"bindings":[{}]}}"#)
        } else {
            dbpedia_like(q)
        }
    });
    let url = format!("{}/sparql", server.base);
    let c = fetch_from_endpoint(&url, Some(&[GENRE.to_string()]), &options(5000)).unwrap();
    assert!(c.per_predicate.is_empty());
}
