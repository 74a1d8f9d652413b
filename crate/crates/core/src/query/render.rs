use std::fmt::Write;

use super::{Projection, QueryPattern};

/// Serialize a query back to SPARQL text. IRIs are written in full; PREFIX
/// declarations are emitted so the prefix map survives a round trip.
pub fn render_query(q: &QueryPattern) -> String {
    let mut out = String::new();
    write_prologue(q, &mut out);
    out.push_str("WHERE {\n");
    let mut i = 0;
    while i < q.triples.len() {
        if let Some(group) = q
            .service_groups
            .iter()
            .find(|g| g.triples.start == i && !g.triples.is_empty())
        {
            let _ = writeln!(out, "  SERVICE {} {{", group.anchor);
            for t in group.triples.clone() {
                write_triple(q, t, "    ", &mut out);
            }
            out.push_str("  }\n");
            i = group.triples.end;
        } else {
            write_triple(q, i, "  ", &mut out);
            i += 1;
        }
    }
    out.push('}');
    write_modifiers(q, &mut out);
    out.push('\n');
    out
}

pub(crate) fn write_prologue(q: &QueryPattern, out: &mut String) {
    for (prefix, iri) in &q.prefixes {
        let _ = writeln!(out, "PREFIX {prefix}: <{iri}>");
    }
    out.push_str("SELECT ");
    if q.modifiers.distinct {
        out.push_str("DISTINCT ");
    } else if q.modifiers.reduced {
        out.push_str("REDUCED ");
    }
    match &q.projection {
        Projection::Star => out.push('*'),
        Projection::Variables(vs) => {
            let vars: Vec<String> = vs.iter().map(|v| format!("?{v}")).collect();
            out.push_str(&vars.join(" "));
        }
    }
    out.push('\n');
}

pub(crate) fn write_triple(q: &QueryPattern, index: usize, indent: &str, out: &mut String) {
    let _ = writeln!(out, "{indent}{}", q.triples[index]);
    for (_, f) in q.filters_after(index) {
        let _ = writeln!(out, "{indent}FILTER ({})", f.expression);
    }
}

pub(crate) fn write_modifiers(q: &QueryPattern, out: &mut String) {
    let m = &q.modifiers;
    if !m.order_by.is_empty() {
        out.push_str("\nORDER BY");
        for key in &m.order_by {
            if key.descending {
                let _ = write!(out, " DESC(?{})", key.variable);
            } else {
                let _ = write!(out, " ?{}", key.variable);
            }
        }
    }
    if let Some(limit) = m.limit {
        let _ = write!(out, "\nLIMIT {limit}");
    }
    if let Some(offset) = m.offset {
        let _ = write!(out, "\nOFFSET {offset}");
    }
}
