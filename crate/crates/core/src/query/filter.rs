use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Ge => ">=",
            CompareOp::Gt => ">",
        }
    }
}

/// Built-in functions the traversal simulator knows how to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Function {
    Lang,
    Year,
    #[serde(rename = "isURI")]
    IsUri,
    Str,
}

impl Function {
    /// Case-insensitive lookup; `isIRI` is an alias of `isURI`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lang" => Some(Function::Lang),
            "year" => Some(Function::Year),
            "isuri" | "isiri" => Some(Function::IsUri),
            "str" => Some(Function::Str),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Lang => "lang",
            Function::Year => "year",
            Function::IsUri => "isURI",
            Function::Str => "str",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterExpr {
    Term(Term),
    Compare {
        op: CompareOp,
        left: Box<FilterExpr>,
        right: Box<FilterExpr>,
    },
    Call {
        function: Function,
        args: Vec<FilterExpr>,
    },
    And(Box<FilterExpr>, Box<FilterExpr>),
    Or(Box<FilterExpr>, Box<FilterExpr>),
    Not(Box<FilterExpr>),
    /// A function outside the supported set. `name` is the keyword as
    /// written, or `<iri>` for IRI-named functions. Estimation only needs the
    /// variables; the simulator refuses to evaluate it.
    Opaque { name: String, args: Vec<FilterExpr> },
}

impl FilterExpr {
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            FilterExpr::Term(Term::Variable(v)) => {
                out.insert(v.clone());
            }
            FilterExpr::Term(_) => {}
            FilterExpr::Compare { left, right, .. }
            | FilterExpr::And(left, right)
            | FilterExpr::Or(left, right) => {
                left.collect_variables(out);
                right.collect_variables(out);
            }
            FilterExpr::Not(inner) => inner.collect_variables(out),
            FilterExpr::Call { args, .. } | FilterExpr::Opaque { args, .. } => {
                for a in args {
                    a.collect_variables(out);
                }
            }
        }
    }

    pub fn is_opaque(&self) -> bool {
        match self {
            FilterExpr::Opaque { .. } => true,
            FilterExpr::Term(_) => false,
            FilterExpr::Compare { left, right, .. }
            | FilterExpr::And(left, right)
            | FilterExpr::Or(left, right) => left.is_opaque() || right.is_opaque(),
            FilterExpr::Not(inner) => inner.is_opaque(),
            FilterExpr::Call { args, .. } => args.iter().any(FilterExpr::is_opaque),
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[FilterExpr]) -> fmt::Result {
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

/// Fully parenthesized rendering; re-parses to the same tree.
impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterExpr::Term(t) => write!(f, "{t}"),
            FilterExpr::Compare { op, left, right } => {
                write!(f, "({left} {} {right})", op.symbol())
            }
            FilterExpr::Call { function, args } => {
                f.write_str(function.name())?;
                write_args(f, args)
            }
            FilterExpr::And(l, r) => write!(f, "({l} && {r})"),
            FilterExpr::Or(l, r) => write!(f, "({l} || {r})"),
            FilterExpr::Not(inner) => write!(f, "!({inner})"),
            FilterExpr::Opaque { name, args } => {
                f.write_str(name)?;
                write_args(f, args)
            }
        }
    }
}
