use std::io::ErrorKind;
use std::time::Duration;

use ureq::Agent;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum HttpFailure {
    Unreachable(String),
    Timeout,
    Other(String),
}

impl std::fmt::Display for HttpFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HttpFailure::Unreachable(m) => write!(f, "unreachable: {m}"),
            HttpFailure::Timeout => f.write_str("timed out"),
            HttpFailure::Other(m) => f.write_str(m),
        }
    }
}

pub(crate) struct HttpResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

pub(crate) struct HttpClient {
    agent: Agent,
}

impl HttpClient {
    pub fn new(timeout: Duration, max_redirects: u32) -> Self {
        let agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .max_redirects(max_redirects)
            .build()
            .into();
        Self { agent }
    }

    pub fn get(&self, url: &str, query: &[(&str, &str)], accept: &str) -> Result<HttpResponse, HttpFailure> {
        let mut req = self.agent.get(url).header("Accept", accept);
        for (k, v) in query {
            req = req.query(*k, *v);
        }
        let mut resp = req.call().map_err(classify)?;
        let status = resp.status().as_u16();
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(|v| v.split(';').next().unwrap_or("").trim().to_ascii_lowercase());
        let body = resp
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_vec()
            .map_err(classify)?;
        Ok(HttpResponse {
            status,
            content_type,
            body,
        })
    }
}

fn classify(e: ureq::Error) -> HttpFailure {
    match e {
        ureq::Error::Timeout(_) => HttpFailure::Timeout,
        ureq::Error::HostNotFound | ureq::Error::ConnectionFailed | ureq::Error::BadUri(_) => {
            HttpFailure::Unreachable(e.to_string())
        }
        ureq::Error::Io(io) => match io.kind() {
            ErrorKind::TimedOut | ErrorKind::WouldBlock => HttpFailure::Timeout,
            ErrorKind::ConnectionRefused
            | ErrorKind::ConnectionReset
            | ErrorKind::ConnectionAborted
            | ErrorKind::NotConnected
            | ErrorKind::AddrNotAvailable => HttpFailure::Unreachable(io.to_string()),
            _ => HttpFailure::Other(io.to_string()),
        },
        other => HttpFailure::Other(other.to_string()),
    }
}
