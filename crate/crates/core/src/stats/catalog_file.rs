use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{GlobalStats, Parameter, StatsCatalog, StatsError};

const GLOBAL_KEYS: [(&str, Parameter); 5] = [
    ("avg_outgoing_props", Parameter::K1),
    ("avg_incoming_props", Parameter::K2),
    ("avg_subj_bindings_nontype", Parameter::K3),
    ("avg_instances_per_class", Parameter::K4),
    ("avg_obj_bindings", Parameter::K5),
];

const PROVENANCE_TAG: &str = "# provenance\t";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Render a catalog in its text format. `f64` Display is the shortest string
/// that parses back to the same bits.
pub fn write_catalog(catalog: &StatsCatalog) -> String {
    let mut out = String::new();
    out.push_str(PROVENANCE_TAG);
    out.push_str(&escape(&catalog.provenance));
    out.push_str("\n[global]\n");
    for (key, param) in GLOBAL_KEYS {
        out.push_str(&format!("{key}\t{}\n", catalog.global.get(param).unwrap()));
    }
    out.push_str("[predicates]\n");
    for p in catalog.per_predicate.values() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            p.predicate, p.avg_subject_bindings, p.avg_object_bindings
        ));
    }
    out
}

fn number(field: &str, line: usize) -> Result<f64, StatsError> {
    let v: f64 = field.trim().parse().map_err(|_| StatsError::FormatError {
        line,
        message: format!("'{field}' is not a number"),
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(StatsError::FormatError {
            line,
            message: format!("value {field} must be finite and non-negative"),
        });
    }
    Ok(v)
}

#[derive(PartialEq)]
enum Section {
    None,
    Global,
    Predicates,
}

pub fn parse_catalog(text: &str) -> Result<StatsCatalog, StatsError> {
    let fail = |line: usize, message: String| StatsError::FormatError { line, message };
    let mut provenance = String::new();
    let mut section = Section::None;
    let mut global = GlobalStats::zeros();
    let mut seen_global: BTreeMap<&str, usize> = BTreeMap::new();
    let mut catalog = StatsCatalog {
        global: GlobalStats::zeros(),
        per_predicate: BTreeMap::new(),
        provenance: String::new(),
    };
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        if let Some(p) = raw.strip_prefix(PROVENANCE_TAG) {
            provenance = unescape(p);
            continue;
        }
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed {
            "[global]" => {
                section = Section::Global;
                continue;
            }
            "[predicates]" => {
                section = Section::Predicates;
                continue;
            }
            _ => {}
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        match section {
            Section::None => return Err(fail(line, "row outside of any section".into())),
            Section::Global => {
                let [key, value] = fields[..] else {
                    return Err(fail(line, "expected key<TAB>value".into()));
                };
                let key = key.trim();
                let (name, param) = GLOBAL_KEYS
                    .iter()
                    .find(|(k, _)| *k == key)
                    .ok_or_else(|| fail(line, format!("unknown global parameter '{key}'")))?;
                if seen_global.insert(name, line).is_some() {
                    return Err(fail(line, format!("duplicate global parameter '{key}'")));
                }
                *global.slot(*param).unwrap() = number(value, line)?;
            }
            Section::Predicates => {
                let [iri, subj, obj] = fields[..] else {
                    return Err(fail(line, "expected IRI<TAB>avgSubjectBindings<TAB>avgObjectBindings".into()));
                };
                let iri = iri.trim();
                if iri.is_empty() {
                    return Err(fail(line, "empty predicate IRI".into()));
                }
                if catalog.per_predicate.contains_key(iri) {
                    return Err(fail(line, format!("duplicate predicate '{iri}'")));
                }
                let (s, o) = (number(subj, line)?, number(obj, line)?);
                catalog.insert(iri, s, o);
            }
        }
    }
    if let Some((key, _)) = GLOBAL_KEYS.iter().find(|(k, _)| !seen_global.contains_key(k)) {
        return Err(fail(last_line.max(1), format!("missing global parameter '{key}'")));
    }
    catalog.global = global;
    catalog.provenance = provenance;
    Ok(catalog)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<StatsCatalog, StatsError> {
    parse_catalog(&fs::read_to_string(path)?)
}

pub fn save_catalog(catalog: &StatsCatalog, path: impl AsRef<Path>) -> Result<(), StatsError> {
    fs::write(path, write_catalog(catalog))?;
    Ok(())
}
