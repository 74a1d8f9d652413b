//! Writes ground-truth entry directories.

use std::fs;
use std::path::{Path, PathBuf};

use ltcost::eval::GroundTruthEntry;
use ltcost::query::parse_query;

pub fn write_entry(root: &Path, name: &str, query: &str, meta: &str, accessed: Option<&[&str]>, docs: &[(&str, &str)]) -> PathBuf {
    let dir = root.join(name);
    fs::create_dir_all(dir.join("docs")).unwrap();
    fs::write(dir.join("query.rq"), query).unwrap();
    fs::write(dir.join("meta.json"), meta).unwrap();
    if let Some(list) = accessed {
        fs::write(dir.join("accessed.txt"), list.join("\n")).unwrap();
    }
    for (file, body) in docs {
        fs::write(dir.join("docs").join(file), body).unwrap();
    }
    dir
}

/// Copy a committed fixture store into an entry's docs folder.
pub fn copy_fixture(fixture: &str, entry_dir: &Path) {
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(fixture);
    for f in fs::read_dir(src).unwrap() {
        let f = f.unwrap().path();
        fs::copy(&f, entry_dir.join("docs").join(f.file_name().unwrap())).unwrap();
    }
}

/// An in-memory entry, for scoring tests that never touch the disk.
pub fn entry(id: &str, query: &str, real_cost: u64) -> GroundTruthEntry {
    GroundTruthEntry {
        id: id.to_string(),
        query_text: query.to_string(),
        query: parse_query(query).unwrap(),
        real_cost,
        accessed_iris: None,
        executed_at: None,
        dir: PathBuf::new(),
    }
}
