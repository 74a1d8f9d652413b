//! Zero-knowledge link traversal over a dereference store: the ground-truth
//! cost oracle.

mod document;
mod exec;
mod filter_eval;
mod store;

use std::collections::BTreeSet;
use std::path::PathBuf;

use thiserror::Error;

pub use document::{parse_document, DocFormat, GraphTriple};
pub use exec::{execute, real_cost, AccessRecord, BindingTable, TraversalTrace};
pub use store::{load_store, parse_manifest, Deref, DerefStore, Graph, MissPolicy, StoreMode};

/// Convenience for [`DerefStore::dereference`].
pub fn dereference(store: &DerefStore, iri: &str) -> Result<Deref, TraversalError> {
    store.dereference(iri)
}

#[derive(Debug, Error)]
pub enum TraversalError {
    #[error("manifest format error at line {line}: {message}")]
    FormatError { line: usize, message: String },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("document for {iri} is malformed: {message}")]
    Parse { iri: String, message: String },
    #[error("no document for {0}")]
    Miss(String),
    #[error("fetching {iri} failed: {message}")]
    Http { iri: String, message: String },
    #[error("query is not answerable by zero-knowledge link traversal (unanchored triples {witness:?})")]
    NotAnswerable { witness: BTreeSet<usize> },
    #[error("filter function '{0}' is not supported by the simulator")]
    UnsupportedFilter(String),
}
