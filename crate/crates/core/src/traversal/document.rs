use oxrdf::{GraphName, Literal as OxLiteral, NamedOrBlankNode, Term as OxTerm};
use oxttl::n3::N3Term;
use oxttl::{N3Parser, NTriplesParser, TurtleParser};

use crate::query::{Literal, Term};

/// A triple of a dereferenced document.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphTriple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl GraphTriple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocFormat {
    NTriples,
    Turtle,
    N3,
}

impl DocFormat {
    pub fn from_extension(path: &str) -> Self {
        let lower = path.to_ascii_lowercase();
        if lower.ends_with(".nt") {
            DocFormat::NTriples
        } else if lower.ends_with(".n3") {
            DocFormat::N3
        } else {
            DocFormat::Turtle
        }
    }

    pub fn from_content_type(content_type: Option<&str>) -> Self {
        match content_type {
            Some("application/n-triples") => DocFormat::NTriples,
            Some("text/n3") => DocFormat::N3,
            _ => DocFormat::Turtle,
        }
    }
}

fn literal(l: &OxLiteral) -> Literal {
    match l.language() {
        Some(lang) => Literal::lang(l.value(), lang),
        None => Literal::typed(l.value(), l.datatype().as_str()),
    }
}

fn subject(s: NamedOrBlankNode) -> Term {
    match s {
        NamedOrBlankNode::NamedNode(n) => Term::Iri(n.into_string()),
        NamedOrBlankNode::BlankNode(b) => Term::Blank(b.into_string()),
    }
}

fn object(o: OxTerm) -> Option<Term> {
    match o {
        OxTerm::NamedNode(n) => Some(Term::Iri(n.into_string())),
        OxTerm::BlankNode(b) => Some(Term::Blank(b.into_string())),
        OxTerm::Literal(l) => Some(Term::Literal(literal(&l))),
        #[allow(unreachable_patterns)]
        _ => None,
    }
}

fn n3_term(t: N3Term) -> Option<Term> {
    match t {
        N3Term::NamedNode(n) => Some(Term::Iri(n.into_string())),
        N3Term::BlankNode(b) => Some(Term::Blank(b.into_string())),
        N3Term::Literal(l) => Some(Term::Literal(literal(&l))),
        #[allow(unreachable_patterns)]
        _ => None,
    }
}

/// Parse a document; relative IRIs resolve against `base`.
pub fn parse_document(bytes: &[u8], format: DocFormat, base: &str) -> Result<Vec<GraphTriple>, String> {
    let mut out = Vec::new();
    match format {
        DocFormat::NTriples => {
            for t in NTriplesParser::new().for_slice(bytes) {
                let t = t.map_err(|e| e.to_string())?;
                if let Some(o) = object(t.object) {
                    out.push(GraphTriple::new(subject(t.subject), Term::Iri(t.predicate.into_string()), o));
                }
            }
        }
        DocFormat::Turtle => {
            let parser = TurtleParser::new().with_base_iri(base).unwrap_or_else(|_| TurtleParser::new());
            for t in parser.for_slice(bytes) {
                let t = t.map_err(|e| e.to_string())?;
                if let Some(o) = object(t.object) {
                    out.push(GraphTriple::new(subject(t.subject), Term::Iri(t.predicate.into_string()), o));
                }
            }
        }
        DocFormat::N3 => {
            let parser = N3Parser::new().with_base_iri(base).unwrap_or_else(|_| N3Parser::new());
            for q in parser.for_slice(bytes) {
                let q = q.map_err(|e| e.to_string())?;
                if q.graph_name != GraphName::DefaultGraph {
                    continue;
                }
                let s = n3_term(q.subject);
                let p = n3_term(q.predicate);
                let o = n3_term(q.object);
                if let (Some(s @ (Term::Iri(_) | Term::Blank(_))), Some(p @ Term::Iri(_)), Some(o)) = (s, p, o) {
                    out.push(GraphTriple::new(s, p, o));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turtle_with_relative_iris_and_literals() {
        let doc = br#"@prefix dbo: <http://dbpedia.org/ontology/> .
<> dbo:birthDate "1918-07-18"^^<http://www.w3.org/2001/XMLSchema#date> ;
   dbo:abstract "Nelson"@en , "plain" ."#;
        let g = parse_document(doc, DocFormat::Turtle, "http://dbpedia.org/resource/Nelson_Mandela").unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g[0].subject, Term::iri("http://dbpedia.org/resource/Nelson_Mandela"));
        assert_eq!(
            g[0].object,
            Term::Literal(Literal::typed("1918-07-18", "http://www.w3.org/2001/XMLSchema#date"))
        );
        assert_eq!(g[1].object, Term::Literal(Literal::lang("Nelson", "en")));
        assert_eq!(g[2].object, Term::Literal(Literal::simple("plain")));
    }

    #[test]
    fn ntriples_and_n3() {
        let nt = b"<http://a> <http://p> _:x .\n";
        let g = parse_document(nt, DocFormat::NTriples, "http://a").unwrap();
        assert!(matches!(g[0].object, Term::Blank(_)));
        let n3 = b"@prefix : <http://ex/> .\n:a :p :b .\n";
        let g = parse_document(n3, DocFormat::N3, "http://ex/a").unwrap();
        assert_eq!(g, vec![GraphTriple::new(Term::iri("http://ex/a"), Term::iri("http://ex/p"), Term::iri("http://ex/b"))]);
    }

    #[test]
    fn syntax_error_is_reported() {
        assert!(parse_document(b"<http://a> <http://p> .", DocFormat::Turtle, "http://a").is_err());
    }

    #[test]
    fn formats_from_names() {
        assert_eq!(DocFormat::from_extension("x/Plato.NT"), DocFormat::NTriples);
        assert_eq!(DocFormat::from_extension("a.n3"), DocFormat::N3);
        assert_eq!(DocFormat::from_extension("a.ttl"), DocFormat::Turtle);
        assert_eq!(DocFormat::from_content_type(Some("application/n-triples")), DocFormat::NTriples);
        assert_eq!(DocFormat::from_content_type(None), DocFormat::Turtle);
    }
}
