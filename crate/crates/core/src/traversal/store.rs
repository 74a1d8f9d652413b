use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::document::{parse_document, DocFormat, GraphTriple};
use super::TraversalError;
use crate::http::{HttpClient, HttpFailure};

pub type Graph = Arc<Vec<GraphTriple>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreMode {
    Local,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissPolicy {
    #[default]
    EmptyGraph,
    Error,
}

#[derive(Debug, Clone)]
enum DocRef {
    Path(PathBuf),
    Url(String),
    Inline(Graph),
}

/// Result of one dereference.
#[derive(Debug, Clone)]
pub enum Deref {
    Found(Graph),
    Miss,
}

const ACCEPT: &str = "text/turtle, application/n-triples";

/// IRI → document mapping with lazily parsed, cached documents.
pub struct DerefStore {
    manifest: BTreeMap<String, DocRef>,
    mode: StoreMode,
    miss_policy: MissPolicy,
    timeout: Duration,
    /// Fetch unmapped http(s) IRIs at the IRI itself.
    live: bool,
    cache: Mutex<HashMap<String, Graph>>,
}

impl std::fmt::Debug for DerefStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DerefStore")
            .field("documents", &self.manifest.len())
            .field("mode", &self.mode)
            .field("miss_policy", &self.miss_policy)
            .field("live", &self.live)
            .finish()
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

impl DerefStore {
    fn with_manifest(manifest: BTreeMap<String, DocRef>, mode: StoreMode) -> Self {
        Self {
            manifest,
            mode,
            miss_policy: MissPolicy::default(),
            timeout: Duration::from_secs(30),
            live: false,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// A store over already-parsed documents.
    pub fn in_memory(documents: impl IntoIterator<Item = (String, Vec<GraphTriple>)>) -> Self {
        let manifest = documents
            .into_iter()
            .map(|(iri, triples)| (iri, DocRef::Inline(Arc::new(triples))))
            .collect();
        Self::with_manifest(manifest, StoreMode::Local)
    }

    /// A store that dereferences every http(s) IRI on the web.
    pub fn live() -> Self {
        let mut s = Self::with_manifest(BTreeMap::new(), StoreMode::Http);
        s.live = true;
        s
    }

    pub fn with_miss_policy(mut self, policy: MissPolicy) -> Self {
        self.miss_policy = policy;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn mode(&self) -> StoreMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.manifest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.is_empty()
    }

    pub fn contains(&self, iri: &str) -> bool {
        self.manifest.contains_key(iri)
    }

    pub fn iris(&self) -> impl Iterator<Item = &str> {
        self.manifest.keys().map(String::as_str)
    }

    pub fn dereference(&self, iri: &str) -> Result<Deref, TraversalError> {
        if let Some(g) = self.cache.lock().unwrap().get(iri) {
            return Ok(Deref::Found(Arc::clone(g)));
        }
        let graph = match self.manifest.get(iri) {
            Some(DocRef::Inline(g)) => Some(Arc::clone(g)),
            Some(DocRef::Path(p)) => Some(self.read_local(iri, p)?),
            Some(DocRef::Url(u)) => self.fetch(iri, u)?,
            None if self.live && is_url(iri) => self.fetch(iri, iri)?,
            None => None,
        };
        match graph {
            Some(g) => {
                self.cache.lock().unwrap().insert(iri.to_string(), Arc::clone(&g));
                Ok(Deref::Found(g))
            }
            None if self.miss_policy == MissPolicy::Error => Err(TraversalError::Miss(iri.to_string())),
            None => Ok(Deref::Miss),
        }
    }

    fn read_local(&self, iri: &str, path: &Path) -> Result<Graph, TraversalError> {
        let bytes = fs::read(path).map_err(|source| TraversalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let format = DocFormat::from_extension(&path.to_string_lossy());
        parse_document(&bytes, format, iri)
            .map(Arc::new)
            .map_err(|message| TraversalError::Parse {
                iri: iri.to_string(),
                message,
            })
    }

    /// `Ok(None)` for a 404/410, which is a miss rather than a failure.
    fn fetch(&self, iri: &str, url: &str) -> Result<Option<Graph>, TraversalError> {
        let client = HttpClient::new(self.timeout, 5);
        let mut attempt = 0;
        let resp = loop {
            attempt += 1;
            let result = client.get(url, &[], ACCEPT);
            let retryable = match &result {
                Ok(r) => r.status >= 500,
                Err(HttpFailure::Timeout | HttpFailure::Unreachable(_)) => true,
                Err(HttpFailure::Other(_)) => false,
            };
            if !retryable || attempt == 2 {
                break result;
            }
        };
        let resp = resp.map_err(|e| TraversalError::Http {
            iri: iri.to_string(),
            message: e.to_string(),
        })?;
        match resp.status {
            200..=299 => {}
            404 | 410 => return Ok(None),
            s => {
                return Err(TraversalError::Http {
                    iri: iri.to_string(),
                    message: format!("HTTP status {s}"),
                })
            }
        }
        let format = DocFormat::from_content_type(resp.content_type.as_deref());
        parse_document(&resp.body, format, iri)
            .map(|g| Some(Arc::new(g)))
            .map_err(|message| TraversalError::Parse {
                iri: iri.to_string(),
                message,
            })
    }
}

/// Read a manifest of `IRI<TAB>path` or `IRI<TAB>URL` rows. Local paths are
/// relative to the manifest's directory and must be readable.
pub fn load_store(manifest_path: impl AsRef<Path>) -> Result<DerefStore, TraversalError> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|source| TraversalError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, dir)
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<DerefStore, TraversalError> {
    let mut manifest = BTreeMap::new();
    let mut mode: Option<(StoreMode, usize)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((iri, target)) = trimmed.split_once('\t') else {
            return Err(TraversalError::FormatError {
                line,
                message: "expected IRI<TAB>document".into(),
            });
        };
        let (iri, target) = (iri.trim(), target.trim());
        if iri.is_empty() || target.is_empty() {
            return Err(TraversalError::FormatError {
                line,
                message: "empty IRI or document reference".into(),
            });
        }
        let row_mode = if is_url(target) { StoreMode::Http } else { StoreMode::Local };
        match mode {
            None => mode = Some((row_mode, line)),
            Some((m, first)) if m != row_mode => {
                return Err(TraversalError::FormatError {
                    line,
                    message: format!("mixes local paths and URLs (line {first} sets the mode)"),
                })
            }
            _ => {}
        }
        let doc = match row_mode {
            StoreMode::Http => DocRef::Url(target.to_string()),
            StoreMode::Local => {
                let path = base_dir.join(target);
                fs::File::open(&path).map_err(|source| TraversalError::Io {
                    path: path.clone(),
                    source,
                })?;
                DocRef::Path(path)
            }
        };
        if manifest.insert(iri.to_string(), doc).is_some() {
            return Err(TraversalError::FormatError {
                line,
                message: format!("duplicate IRI {iri}"),
            });
        }
    }
    Ok(DerefStore::with_manifest(
        manifest,
        mode.map_or(StoreMode::Local, |(m, _)| m),
    ))
}
