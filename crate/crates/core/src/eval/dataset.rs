//! On-disk ground truth: one directory per query holding `query.rq`,
//! `meta.json`, an optional `accessed.txt` and a `docs/` folder with the
//! documents the query touched.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use percent_encoding::percent_decode_str;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EvalError, SkippedEntry};
use crate::query::{parse_query, QueryPattern, Term};
use crate::traversal::{
    execute, load_store, parse_document, real_cost, DerefStore, DocFormat, GraphTriple, TraversalError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthEntry {
    pub id: String,
    pub query_text: String,
    pub query: QueryPattern,
    pub real_cost: u64,
    pub accessed_iris: Option<Vec<String>>,
    pub executed_at: Option<String>,
    /// Directory the entry was read from.
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Format,
    Parse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadFailure {
    /// Directory name of the entry.
    pub entry: String,
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub entries: Vec<GroundTruthEntry>,
    pub failures: Vec<LoadFailure>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Load every entry directory under `root`, sorted by name. Entries that
/// fail to load are collected in `failures`; only an unreadable root is an
/// error.
pub fn load_ground_truth(root: impl AsRef<Path>) -> Result<GroundTruth, EvalError> {
    let root = root.as_ref();
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io(root))?
        .map(|e| e.map(|e| e.path()).map_err(io(root)))
        .collect::<Result<Vec<_>, _>>()?;
    dirs.retain(|d| d.is_dir());
    dirs.sort();

    let mut out = GroundTruth::default();
    let mut ids = BTreeSet::new();
    for dir in dirs {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match load_entry(&dir, &name) {
            Ok(entry) if !ids.insert(entry.id.clone()) => out.failures.push(LoadFailure {
                entry: name,
                kind: FailureKind::Format,
                message: format!("duplicate id {}", entry.id),
            }),
            Ok(entry) => out.entries.push(entry),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

fn load_entry(dir: &Path, name: &str) -> Result<GroundTruthEntry, LoadFailure> {
    let fail = |kind, message: String| LoadFailure {
        entry: name.to_string(),
        kind,
        message,
    };
    let read = |file: &str| {
        fs::read_to_string(dir.join(file)).map_err(|e| fail(FailureKind::Format, format!("{file}: {e}")))
    };
    let query_text = read("query.rq")?;
    let meta: Value =
        serde_json::from_str(&read("meta.json")?).map_err(|e| fail(FailureKind::Format, format!("meta.json: {e}")))?;

    let real_cost = match &meta["real_cost"] {
        Value::Null => return Err(fail(FailureKind::Format, "meta.json: missing real_cost".into())),
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|&c| c >= 1)
    .ok_or_else(|| {
        fail(
            FailureKind::Format,
            format!("meta.json: real_cost must be an integer >= 1, got {}", meta["real_cost"]),
        )
    })?;
    let id = match &meta["id"] {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Null => name.to_string(),
        other => return Err(fail(FailureKind::Format, format!("meta.json: bad id {other}"))),
    };
    let executed_at = match &meta["executed_at"] {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    };
    let accessed_iris = match fs::read_to_string(dir.join("accessed.txt")) {
        Ok(text) => Some(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_owned)
                .collect(),
        ),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(fail(FailureKind::Format, format!("accessed.txt: {e}"))),
    };
    let query = parse_query(&query_text).map_err(|e| fail(FailureKind::Parse, e.to_string()))?;
    Ok(GroundTruthEntry {
        id,
        query_text,
        query,
        real_cost,
        accessed_iris,
        executed_at,
        dir: dir.to_path_buf(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub id: String,
    pub recorded: u64,
    pub replayed: u64,
    pub misses: usize,
}

impl ReplayOutcome {
    pub fn matches(&self) -> bool {
        self.recorded == self.replayed
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub outcomes: Vec<ReplayOutcome>,
    pub failures: Vec<SkippedEntry>,
}

impl ReplaySummary {
    pub fn matched(&self) -> usize {
        self.outcomes.iter().filter(|o| o.matches()).count()
    }

    /// Matches over all attempted entries, failures included.
    pub fn match_rate(&self) -> f64 {
        let total = self.outcomes.len() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.matched() as f64 / total as f64
        }
    }
}

/// Re-execute an entry against its bundled documents.
pub fn replay(entry: &GroundTruthEntry) -> Result<ReplayOutcome, TraversalError> {
    let store = entry_store(entry)?;
    let (_, trace) = execute(&entry.query, &store)?;
    Ok(ReplayOutcome {
        id: entry.id.clone(),
        recorded: entry.real_cost,
        replayed: real_cost(&trace) as u64,
        misses: trace.misses.len(),
    })
}

pub fn replay_all(entries: &[GroundTruthEntry]) -> ReplaySummary {
    let mut summary = ReplaySummary::default();
    for e in entries {
        match replay(e) {
            Ok(o) => summary.outcomes.push(o),
            Err(err) => summary.failures.push(SkippedEntry {
                id: e.id.clone(),
                reason: err.to_string(),
            }),
        }
    }
    summary
}

/// The entry's documents as a store. `docs/manifest.tsv` is used when
/// present; otherwise each document file is matched to an IRI by name, or
/// failing that, to the IRIs it describes as subject.
pub fn entry_store(entry: &GroundTruthEntry) -> Result<DerefStore, TraversalError> {
    let docs = entry.dir.join("docs");
    let manifest = docs.join("manifest.tsv");
    if manifest.is_file() {
        return load_store(manifest);
    }
    if !docs.is_dir() {
        return Ok(DerefStore::in_memory(Vec::new()));
    }
    let io = |source| TraversalError::Io {
        path: docs.clone(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(&docs)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    files.retain(|f| f.is_file());
    files.sort();

    let mut parsed = Vec::with_capacity(files.len());
    for f in &files {
        let bytes = fs::read(f).map_err(|source| TraversalError::Io {
            path: f.clone(),
            source,
        })?;
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let decoded = percent_decode_str(&stem).decode_utf8_lossy().into_owned();
        let base = if decoded.contains("://") { decoded } else { format!("file:///{stem}") };
        let triples = parse_document(&bytes, DocFormat::from_extension(&f.to_string_lossy()), &base).map_err(
            |message| TraversalError::Parse {
                iri: f.display().to_string(),
                message,
            },
        )?;
        parsed.push((stem, triples));
    }

    let wanted: Vec<String> = match &entry.accessed_iris {
        Some(list) => list.clone(),
        None => parsed
            .iter()
            .flat_map(|(_, ts)| ts.iter().filter_map(|t| t.subject.as_iri().map(str::to_owned)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let mut store: BTreeMap<String, Vec<GraphTriple>> = BTreeMap::new();
    for iri in wanted {
        if let Some(i) = match_document(&iri, &parsed) {
            store.insert(iri, parsed[i].1.clone());
        }
    }
    Ok(DerefStore::in_memory(store))
}

fn sanitized(iri: &str) -> String {
    iri.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn match_document(iri: &str, docs: &[(String, Vec<GraphTriple>)]) -> Option<usize> {
    let local = iri.rsplit(['/', '#']).next().unwrap_or(iri);
    let by_name = docs.iter().position(|(stem, _)| {
        percent_decode_str(stem).decode_utf8_lossy() == iri || *stem == sanitized(iri) || stem == local
    });
    by_name.or_else(|| {
        let subject = Term::iri(iri);
        docs.iter()
            .enumerate()
            .map(|(i, (_, ts))| (i, ts.iter().filter(|t| t.subject == subject).count()))
            .filter(|&(_, n)| n > 0)
            // first file wins among equals
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
    })
}
