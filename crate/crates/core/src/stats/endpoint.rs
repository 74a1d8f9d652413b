use std::time::Duration;

use serde_json::Value;

use super::{collector_query, GlobalStats, Parameter, StatsCatalog, StatsError};
use crate::http::{HttpClient, HttpFailure};

const ACCEPT: &str = "application/sparql-results+json, application/sparql-results+xml;q=0.9";
const PREDICATE_LIST: &str = "SELECT DISTINCT ?p WHERE { ?s ?p ?o }";

#[derive(Debug, Clone)]
pub struct EndpointOptions {
    /// Per-request timeout. A timed-out query becomes a gap in the catalog.
    pub timeout: Duration,
}

impl Default for EndpointOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(120),
        }
    }
}

enum Outcome {
    Rows(Vec<Option<String>>),
    Gap(String),
}

struct Session<'a> {
    url: &'a str,
    client: HttpClient,
}

impl Session<'_> {
    fn select(&self, query: &str, var: &str) -> Result<Outcome, StatsError> {
        let resp = match self.client.get(self.url, &[("query", query)], ACCEPT) {
            Ok(r) => r,
            Err(HttpFailure::Timeout) => return Ok(Outcome::Gap("timed out".into())),
            Err(HttpFailure::Unreachable(message)) => {
                return Err(StatsError::EndpointUnreachable {
                    url: self.url.to_string(),
                    message,
                })
            }
            Err(HttpFailure::Other(m)) => return Err(StatsError::ProtocolError(m)),
        };
        match resp.status {
            200..=299 => {}
            503 | 504 => return Ok(Outcome::Gap(format!("HTTP {}", resp.status))),
            s => return Err(StatsError::ProtocolError(format!("HTTP status {s}"))),
        }
        let body = String::from_utf8_lossy(&resp.body);
        let trimmed = body.trim_start();
        let rows = if trimmed.starts_with('<') {
            xml_values(trimmed, var)
        } else {
            json_values(trimmed, var)?
        };
        Ok(Outcome::Rows(rows))
    }

    fn average(&self, query: &str) -> Result<Result<Option<f64>, String>, StatsError> {
        match self.select(query, "average")? {
            Outcome::Gap(why) => Ok(Err(why)),
            Outcome::Rows(rows) => match rows.into_iter().next().flatten() {
                None => Ok(Ok(None)),
                Some(v) => v
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x >= 0.0)
                    .map(|x| Ok(Ok(Some(x))))
                    .unwrap_or_else(|| Err(StatsError::ProtocolError(format!("non-numeric result '{v}'")))),
            },
        }
    }
}

fn json_values(body: &str, var: &str) -> Result<Vec<Option<String>>, StatsError> {
    let doc: Value =
        serde_json::from_str(body).map_err(|e| StatsError::ProtocolError(format!("invalid results JSON: {e}")))?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| StatsError::ProtocolError("results JSON has no bindings array".into()))?;
    Ok(bindings
        .iter()
        .map(|b| b.get(var).and_then(|t| t.get("value")).and_then(Value::as_str).map(str::to_owned))
        .collect())
}

/// Values of `var` from a SPARQL XML results document. Only the shapes
/// endpoints actually emit for single-variable aggregates are recognised.
fn xml_values(body: &str, var: &str) -> Vec<Option<String>> {
    let open = format!("<binding name=\"{var}\">");
    body.split("<result>")
        .skip(1)
        .map(|result| {
            let start = result.find(&open)? + open.len();
            let rest = &result[start..];
            let end = rest.find("</binding>")?;
            let inner = &rest[..end];
            let value_start = inner.find('>')? + 1;
            let value_end = inner.rfind("</")?;
            (value_start <= value_end).then(|| unescape_xml(&inner[value_start..value_end]))
        })
        .collect()
}

fn unescape_xml(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

/// Run the collector queries against a SPARQL endpoint. When `predicates` is
/// `None` every predicate the endpoint reports is collected. Timed-out
/// queries are reported through `StatsError::PartialCatalog`, which still
/// carries the catalog; missing globals hold their default values.
pub fn fetch_from_endpoint(
    url: &str,
    predicates: Option<&[String]>,
    options: &EndpointOptions,
) -> Result<StatsCatalog, StatsError> {
    let session = Session {
        url,
        client: HttpClient::new(options.timeout, 5),
    };
    let mut gaps = Vec::new();
    let mut global = GlobalStats::default();
    for param in Parameter::GLOBALS {
        match session.average(&collector_query(param, None)?)? {
            Ok(Some(v)) => *global.slot(param).unwrap() = v,
            Ok(None) => gaps.push(format!("{param} (no result)")),
            Err(why) => gaps.push(format!("{param} ({why})")),
        }
    }
    let listed: Vec<String> = match predicates {
        Some(ps) => ps.to_vec(),
        None => match session.select(PREDICATE_LIST, "p")? {
            Outcome::Rows(rows) => rows.into_iter().flatten().collect(),
            Outcome::Gap(why) => {
                gaps.push(format!("predicate list ({why})"));
                Vec::new()
            }
        },
    };
    let mut listed = listed;
    listed.sort();
    listed.dedup();

    let mut catalog = StatsCatalog::with_global(global);
    for p in &listed {
        let subj = session.average(&collector_query(Parameter::PerPredSubj, Some(p))?)?;
        let obj = session.average(&collector_query(Parameter::PerPredObj, Some(p))?)?;
        match (subj, obj) {
            (Ok(Some(s)), Ok(Some(o))) => catalog.insert(p, s, o),
            (Ok(_), Ok(_)) => {}
            (Err(why), _) | (_, Err(why)) => gaps.push(format!("{p} ({why})")),
        }
    }
    catalog.provenance = if gaps.is_empty() {
        format!("endpoint {url}")
    } else {
        format!("endpoint {url}; gaps: {}", gaps.join(", "))
    };
    if gaps.is_empty() {
        Ok(catalog)
    } else {
        Err(StatsError::PartialCatalog {
            catalog: Box::new(catalog),
            gaps,
        })
    }
}
