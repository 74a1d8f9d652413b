//! FILTER evaluation with SPARQL's error-as-false semantics.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::query::{CompareOp, FilterExpr, Function, Literal, Term, XSD, XSD_BOOLEAN};

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Term(Term),
    Bool(bool),
    Int(i64),
}

/// Reached a function outside the supported set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unsupported(pub String);

type Eval = Result<Option<Value>, Unsupported>;

const NUMERIC: [&str; 13] = [
    "integer",
    "decimal",
    "double",
    "float",
    "int",
    "long",
    "short",
    "byte",
    "nonNegativeInteger",
    "positiveInteger",
    "negativeInteger",
    "nonPositiveInteger",
    "unsignedInt",
];

fn numeric(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Term(Term::Literal(l)) => {
            let dt = l.datatype.as_deref()?.strip_prefix(XSD)?;
            NUMERIC.contains(&dt).then(|| l.lexical.trim().parse().ok()).flatten()
        }
        _ => None,
    }
}

fn boolean(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::Term(Term::Literal(l)) if l.datatype.as_deref() == Some(XSD_BOOLEAN) => match l.lexical.trim() {
            "true" | "1" => Some(true),
            "false" | "0" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

/// Effective boolean value.
fn ebv(v: &Value) -> Option<bool> {
    if let Some(b) = boolean(v) {
        return Some(b);
    }
    if let Some(n) = numeric(v) {
        return Some(n != 0.0 && !n.is_nan());
    }
    match v {
        Value::Term(Term::Literal(l)) if l.is_plain_string() => Some(!l.lexical.is_empty()),
        _ => None,
    }
}

fn compare(op: CompareOp, a: &Value, b: &Value) -> Option<bool> {
    let ord = if let (Some(x), Some(y)) = (numeric(a), numeric(b)) {
        x.partial_cmp(&y)?
    } else if let (Some(x), Some(y)) = (boolean(a), boolean(b)) {
        x.cmp(&y)
    } else {
        match (a, b) {
            (Value::Term(Term::Literal(x)), Value::Term(Term::Literal(y)))
                if x.datatype == y.datatype && x.language == y.language =>
            {
                x.lexical.cmp(&y.lexical)
            }
            (Value::Term(x), Value::Term(y)) => {
                return match op {
                    CompareOp::Eq => Some(x == y),
                    CompareOp::Ne => Some(x != y),
                    _ => None,
                }
            }
            _ => return None,
        }
    };
    Some(match op {
        CompareOp::Lt => ord == Ordering::Less,
        CompareOp::Le => ord != Ordering::Greater,
        CompareOp::Eq => ord == Ordering::Equal,
        CompareOp::Ne => ord != Ordering::Equal,
        CompareOp::Ge => ord != Ordering::Less,
        CompareOp::Gt => ord == Ordering::Greater,
    })
}

fn year(l: &Literal) -> Option<i64> {
    let s = l.lexical.trim();
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let end = digits.find('-')?;
    let y: i64 = digits[..end].parse().ok()?;
    (end >= 4).then_some(if neg { -y } else { y })
}

fn call(function: Function, arg: Option<Value>) -> Option<Value> {
    let arg = arg?;
    match (function, arg) {
        (Function::IsUri, Value::Term(t)) => Some(Value::Bool(t.is_iri())),
        (Function::IsUri, _) => Some(Value::Bool(false)),
        (Function::Lang, Value::Term(Term::Literal(l))) => Some(Value::Term(Term::Literal(Literal::simple(
            l.language.unwrap_or_default(),
        )))),
        (Function::Str, Value::Term(Term::Iri(i))) => Some(Value::Term(Term::Literal(Literal::simple(i)))),
        (Function::Str, Value::Term(Term::Literal(l))) => Some(Value::Term(Term::Literal(Literal::simple(l.lexical)))),
        (Function::Year, Value::Term(Term::Literal(l))) => year(&l).map(Value::Int),
        _ => None,
    }
}

fn eval(expr: &FilterExpr, row: &BTreeMap<String, Term>) -> Eval {
    Ok(match expr {
        FilterExpr::Term(Term::Variable(v)) => row.get(v).cloned().map(Value::Term),
        FilterExpr::Term(t) => Some(Value::Term(t.clone())),
        FilterExpr::Compare { op, left, right } => {
            let (a, b) = (eval(left, row)?, eval(right, row)?);
            match (a, b) {
                (Some(a), Some(b)) => compare(*op, &a, &b).map(Value::Bool),
                _ => None,
            }
        }
        FilterExpr::Call { function, args } => {
            let arg = match args.first() {
                Some(a) => eval(a, row)?,
                None => None,
            };
            call(*function, arg)
        }
        FilterExpr::And(a, b) => {
            let x = eval(a, row)?.as_ref().and_then(ebv);
            let y = eval(b, row)?.as_ref().and_then(ebv);
            match (x, y) {
                (Some(false), _) | (_, Some(false)) => Some(Value::Bool(false)),
                (Some(true), Some(true)) => Some(Value::Bool(true)),
                _ => None,
            }
        }
        FilterExpr::Or(a, b) => {
            let x = eval(a, row)?.as_ref().and_then(ebv);
            let y = eval(b, row)?.as_ref().and_then(ebv);
            match (x, y) {
                (Some(true), _) | (_, Some(true)) => Some(Value::Bool(true)),
                (Some(false), Some(false)) => Some(Value::Bool(false)),
                _ => None,
            }
        }
        FilterExpr::Not(a) => eval(a, row)?.as_ref().and_then(ebv).map(|b| Value::Bool(!b)),
        FilterExpr::Opaque { name, .. } => return Err(Unsupported(name.clone())),
    })
}

/// Whether `row` passes the filter. Type errors and unbound variables make
/// the filter false.
pub fn passes(expr: &FilterExpr, row: &BTreeMap<String, Term>) -> Result<bool, Unsupported> {
    Ok(eval(expr, row)?.as_ref().and_then(ebv).unwrap_or(false))
}
