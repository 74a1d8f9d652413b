use std::collections::{BTreeMap, BTreeSet};

use super::{
    CompareOp, FilterClause, FilterExpr, Function, Literal, Modifiers, OrderKey, Projection,
    QueryError, QueryPattern, ServiceGroup, Term, TriplePattern, RDF_TYPE, XSD_BOOLEAN,
    XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(String),
    PName { prefix: String, local: String },
    Var(String),
    Blank(String),
    Str(String),
    LangTag(String),
    DoubleCaret,
    Number { lexical: String, datatype: &'static str },
    Word(String),
    Punct(char),
    Op(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Iri(i) => format!("<{i}>"),
            Tok::PName { prefix, local } => format!("{prefix}:{local}"),
            Tok::Var(v) => format!("?{v}"),
            Tok::Blank(b) => format!("_:{b}"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::LangTag(l) => format!("@{l}"),
            Tok::DoubleCaret => "^^".into(),
            Tok::Number { lexical, .. } => lexical.clone(),
            Tok::Word(w) => w.clone(),
            Tok::Punct(c) => c.to_string(),
            Tok::Op(o) => (*o).to_string(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '.' || c == '\u{b7}'
}

fn is_var_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\u{b7}'
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            chars: src.char_indices().collect(),
            i: 0,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.i + ahead).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.i).map_or(self.src.len(), |&(o, _)| o)
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> QueryError {
        let (line, column) = line_col(self.src, offset);
        QueryError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.i += 1;
            } else if c == '#' {
                while let Some(c) = self.peek(0) {
                    self.i += 1;
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, usize)>, QueryError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            let start = self.offset();
            let Some(c) = self.peek(0) else {
                out.push((Tok::Eof, start));
                return Ok(out);
            };
            let tok = match c {
                '<' => self.lex_angle(),
                '?' | '$' => {
                    if self.peek(1).is_some_and(is_var_char) {
                        self.i += 1;
                        Tok::Var(self.take_while(is_var_char))
                    } else {
                        self.i += 1;
                        Tok::Op("?")
                    }
                }
                '_' if self.peek(1) == Some(':') => {
                    self.i += 2;
                    let label = self.take_name();
                    if label.is_empty() {
                        return Err(self.err(start, "empty blank node label"));
                    }
                    Tok::Blank(label)
                }
                '"' | '\'' => Tok::Str(self.lex_string(c)?),
                '@' => {
                    self.i += 1;
                    let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                    if tag.is_empty() {
                        return Err(self.err(start, "empty language tag"));
                    }
                    Tok::LangTag(tag)
                }
                '^' => {
                    if self.peek(1) == Some('^') {
                        self.i += 2;
                        Tok::DoubleCaret
                    } else {
                        self.i += 1;
                        Tok::Op("^")
                    }
                }
                '0'..='9' => self.lex_number(),
                '.' if self.peek(1).is_some_and(|c| c.is_ascii_digit()) => self.lex_number(),
                '{' | '}' | '(' | ')' | '.' | ';' | ',' | '*' | '[' | ']' => {
                    self.i += 1;
                    Tok::Punct(c)
                }
                '&' if self.peek(1) == Some('&') => {
                    self.i += 2;
                    Tok::Op("&&")
                }
                '|' => {
                    if self.peek(1) == Some('|') {
                        self.i += 2;
                        Tok::Op("||")
                    } else {
                        self.i += 1;
                        Tok::Op("|")
                    }
                }
                '!' => {
                    if self.peek(1) == Some('=') {
                        self.i += 2;
                        Tok::Op("!=")
                    } else {
                        self.i += 1;
                        Tok::Op("!")
                    }
                }
                '=' => {
                    self.i += 1;
                    Tok::Op("=")
                }
                '>' => {
                    if self.peek(1) == Some('=') {
                        self.i += 2;
                        Tok::Op(">=")
                    } else {
                        self.i += 1;
                        Tok::Op(">")
                    }
                }
                '+' | '-' | '/' => {
                    self.i += 1;
                    Tok::Op(match c {
                        '+' => "+",
                        '-' => "-",
                        _ => "/",
                    })
                }
                ':' => {
                    self.i += 1;
                    let local = self.take_local();
                    Tok::PName {
                        prefix: String::new(),
                        local,
                    }
                }
                c if c.is_alphabetic() => {
                    let name = self.take_name();
                    if self.peek(0) == Some(':') {
                        self.i += 1;
                        let local = self.take_local();
                        Tok::PName {
                            prefix: name,
                            local,
                        }
                    } else {
                        Tok::Word(name)
                    }
                }
                other => return Err(self.err(start, format!("unexpected character '{other}'"))),
            };
            out.push((tok, start));
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.i += 1;
        }
        s
    }

    /// Name characters, never ending with '.'.
    fn take_name(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if !is_name_char(c) {
                break;
            }
            if c == '.' && !self.peek(1).is_some_and(|n| is_name_char(n) && n != '.') {
                break;
            }
            s.push(c);
            self.i += 1;
        }
        s
    }

    fn take_local(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c == '\\' {
                if let Some(n) = self.peek(1) {
                    s.push(n);
                    self.i += 2;
                    continue;
                }
                break;
            }
            let ok = is_name_char(c) || c == ':' || c == '%';
            if !ok {
                break;
            }
            if c == '.'
                && !self
                    .peek(1)
                    .is_some_and(|n| (is_name_char(n) && n != '.') || n == ':' || n == '%' || n == '\\')
            {
                break;
            }
            s.push(c);
            self.i += 1;
        }
        s
    }

    fn lex_angle(&mut self) -> Tok {
        let mut j = self.i + 1;
        while let Some(&(_, c)) = self.chars.get(j) {
            if c == '>' {
                let iri: String = self.chars[self.i + 1..j].iter().map(|&(_, c)| c).collect();
                self.i = j + 1;
                return Tok::Iri(iri);
            }
            if c.is_whitespace() || "<\"{}|^`\\".contains(c) {
                break;
            }
            j += 1;
        }
        if self.peek(1) == Some('=') {
            self.i += 2;
            Tok::Op("<=")
        } else {
            self.i += 1;
            Tok::Op("<")
        }
    }

    fn lex_number(&mut self) -> Tok {
        let mut s = self.take_while(|c| c.is_ascii_digit());
        let mut datatype = XSD_INTEGER;
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
            s.push('.');
            s.push_str(&self.take_while(|c| c.is_ascii_digit()));
            datatype = XSD_DECIMAL;
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = matches!(self.peek(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    s.push(self.peek(0).unwrap());
                    self.i += 1;
                }
                s.push_str(&self.take_while(|c| c.is_ascii_digit()));
                datatype = XSD_DOUBLE;
            }
        }
        Tok::Number {
            lexical: s,
            datatype,
        }
    }

    fn lex_string(&mut self, quote: char) -> Result<String, QueryError> {
        let start = self.offset();
        let long = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.i += if long { 3 } else { 1 };
        let mut s = String::new();
        loop {
            let Some(c) = self.peek(0) else {
                return Err(self.err(start, "unterminated string literal"));
            };
            if c == quote {
                if !long {
                    self.i += 1;
                    return Ok(s);
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.i += 3;
                    return Ok(s);
                }
            }
            if c == '\\' {
                let esc = self
                    .peek(1)
                    .ok_or_else(|| self.err(start, "unterminated escape"))?;
                self.i += 2;
                match esc {
                    't' => s.push('\t'),
                    'n' => s.push('\n'),
                    'r' => s.push('\r'),
                    'b' => s.push('\u{8}'),
                    'f' => s.push('\u{c}'),
                    '"' | '\'' | '\\' => s.push(esc),
                    'u' | 'U' => {
                        let n = if esc == 'u' { 4 } else { 8 };
                        let hex: String = (0..n).filter_map(|k| self.peek(k)).collect();
                        let cp = u32::from_str_radix(&hex, 16)
                            .ok()
                            .filter(|_| hex.len() == n)
                            .and_then(char::from_u32)
                            .ok_or_else(|| self.err(start, "invalid unicode escape"))?;
                        s.push(cp);
                        self.i += n;
                    }
                    other => return Err(self.err(start, format!("invalid escape '\\{other}'"))),
                }
                continue;
            }
            if !long && (c == '\n' || c == '\r') {
                return Err(self.err(start, "newline in short string literal"));
            }
            s.push(c);
            self.i += 1;
        }
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn is_absolute_iri(iri: &str) -> bool {
    match iri.split_once(':') {
        Some((scheme, _)) => {
            let mut chars = scheme.chars();
            chars.next().is_some_and(|c| c.is_ascii_alphabetic())
                && chars.all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
        }
        None => false,
    }
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "OPTIONAL", "UNION", "MINUS", "GRAPH", "BIND", "VALUES", "EXISTS", "NOT", "IN",
];

const AGGREGATES: &[&str] = &["COUNT", "SUM", "MIN", "MAX", "AVG", "SAMPLE", "GROUP_CONCAT"];

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
    triples: Vec<TriplePattern>,
    filters: Vec<FilterClause>,
    services: Vec<ServiceGroup>,
    anon: usize,
    used_blank_labels: BTreeSet<String>,
}

/// Parse a SELECT query in the supported subset.
pub fn parse_query(text: &str) -> Result<QueryPattern, QueryError> {
    let toks = Lexer::new(text).tokenize()?;
    let used_blank_labels = toks
        .iter()
        .filter_map(|(t, _)| match t {
            Tok::Blank(b) => Some(b.clone()),
            _ => None,
        })
        .collect();
    let mut p = Parser {
        src: text,
        toks,
        pos: 0,
        prefixes: BTreeMap::new(),
        triples: Vec::new(),
        filters: Vec::new(),
        services: Vec::new(),
        anon: 0,
        used_blank_labels,
    };
    p.query()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: impl Into<String>) -> QueryError {
        let (line, column) = line_col(self.src, self.offset());
        QueryError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> QueryError {
        self.syntax(format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn unsupported(&self, feature: impl Into<String>) -> QueryError {
        let (line, column) = line_col(self.src, self.offset());
        QueryError::UnsupportedFeature {
            line,
            column,
            feature: feature.into(),
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QueryError> {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{c}'")))
        }
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.peek().is_word(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn check_unsupported_word(&self) -> Result<(), QueryError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_KEYWORDS.contains(&upper.as_str()) {
                return Err(self.unsupported(upper));
            }
        }
        Ok(())
    }

    fn query(&mut self) -> Result<QueryPattern, QueryError> {
        loop {
            if self.eat_word("PREFIX") {
                let Tok::PName { prefix, local } = self.next() else {
                    self.pos -= 1;
                    return Err(self.unexpected("prefix name"));
                };
                if !local.is_empty() {
                    return Err(self.syntax("prefix declaration must end with ':'"));
                }
                let Tok::Iri(iri) = self.peek().clone() else {
                    return Err(self.unexpected("IRI"));
                };
                if !is_absolute_iri(&iri) {
                    return Err(self.syntax(format!("relative IRI <{iri}>")));
                }
                self.next();
                self.prefixes.insert(prefix, iri);
            } else if self.peek().is_word("BASE") {
                return Err(self.unsupported("BASE"));
            } else {
                break;
            }
        }

        for kw in ["ASK", "CONSTRUCT", "DESCRIBE"] {
            if self.peek().is_word(kw) {
                return Err(self.unsupported(format!("{kw} query form")));
            }
        }
        if !self.eat_word("SELECT") {
            return Err(self.unexpected("SELECT"));
        }
        let mut modifiers = Modifiers::default();
        if self.eat_word("DISTINCT") {
            modifiers.distinct = true;
        } else if self.eat_word("REDUCED") {
            modifiers.reduced = true;
        }

        let mut select_positions = Vec::new();
        let projection = if *self.peek() == Tok::Punct('*') {
            self.next();
            Projection::Star
        } else {
            let mut vars = Vec::new();
            loop {
                match self.peek().clone() {
                    Tok::Var(v) => {
                        select_positions.push(self.offset());
                        self.next();
                        if !vars.contains(&v) {
                            vars.push(v);
                        }
                    }
                    Tok::Punct('(') => return Err(self.unsupported("projection expression")),
                    _ => break,
                }
            }
            if vars.is_empty() {
                return Err(self.unexpected("'*' or a variable"));
            }
            Projection::Variables(vars)
        };

        if self.peek().is_word("FROM") {
            return Err(self.unsupported("FROM"));
        }
        self.eat_word("WHERE");
        let pending = self.group(false)?;
        if let Some(last) = self.triples.len().checked_sub(1) {
            for f in pending {
                self.filters.push(FilterClause::new(f, last));
            }
        }

        self.solution_modifiers(&mut modifiers)?;
        if *self.peek() != Tok::Eof {
            self.check_unsupported_word()?;
            return Err(self.unexpected("end of query"));
        }
        if self.triples.is_empty() {
            return Err(QueryError::EmptyPattern);
        }

        let mut filters = std::mem::take(&mut self.filters);
        filters.sort_by_key(|f| f.after_triple);

        let q = QueryPattern {
            projection,
            triples: std::mem::take(&mut self.triples),
            filters,
            prefixes: std::mem::take(&mut self.prefixes),
            service_groups: std::mem::take(&mut self.services),
            modifiers,
        };

        if let Projection::Variables(vars) = &q.projection {
            let used = q.variables();
            for (v, offset) in vars.iter().zip(select_positions) {
                if !used.contains(v) {
                    let (line, column) = line_col(self.src, offset);
                    return Err(QueryError::Syntax {
                        line,
                        column,
                        message: format!("selected variable ?{v} does not occur in the pattern"),
                    });
                }
            }
        }
        Ok(q)
    }

    fn solution_modifiers(&mut self, m: &mut Modifiers) -> Result<(), QueryError> {
        if self.peek().is_word("GROUP") {
            return Err(self.unsupported("GROUP BY"));
        }
        if self.peek().is_word("HAVING") {
            return Err(self.unsupported("HAVING"));
        }
        if self.eat_word("ORDER") {
            if !self.eat_word("BY") {
                return Err(self.unexpected("BY"));
            }
            loop {
                match self.peek().clone() {
                    Tok::Var(v) => {
                        self.next();
                        m.order_by.push(OrderKey {
                            variable: v,
                            descending: false,
                        });
                    }
                    Tok::Word(w)
                        if w.eq_ignore_ascii_case("ASC") || w.eq_ignore_ascii_case("DESC") =>
                    {
                        self.next();
                        self.expect_punct('(')?;
                        let Tok::Var(v) = self.peek().clone() else {
                            return Err(self.unsupported("ORDER BY expression"));
                        };
                        self.next();
                        self.expect_punct(')')?;
                        m.order_by.push(OrderKey {
                            variable: v,
                            descending: w.eq_ignore_ascii_case("DESC"),
                        });
                    }
                    Tok::Punct('(') => return Err(self.unsupported("ORDER BY expression")),
                    _ => break,
                }
            }
            if m.order_by.is_empty() {
                return Err(self.unexpected("order key"));
            }
        }
        loop {
            if self.eat_word("LIMIT") {
                m.limit = Some(self.integer()?);
            } else if self.eat_word("OFFSET") {
                m.offset = Some(self.integer()?);
            } else {
                break;
            }
        }
        if self.peek().is_word("VALUES") {
            return Err(self.unsupported("VALUES"));
        }
        Ok(())
    }

    fn integer(&mut self) -> Result<u64, QueryError> {
        match self.peek().clone() {
            Tok::Number {
                lexical,
                datatype: XSD_INTEGER,
            } => {
                let n = lexical
                    .parse()
                    .map_err(|_| self.syntax("integer out of range"))?;
                self.next();
                Ok(n)
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    /// Parses `{ ... }`. Returns filters that preceded every triple of this
    /// group and of its nested groups, for the caller to attach.
    fn group(&mut self, in_service: bool) -> Result<Vec<FilterExpr>, QueryError> {
        self.expect_punct('{')?;
        if self.peek().is_word("SELECT") {
            return Err(self.unsupported("subquery"));
        }
        let start = self.triples.len();
        let mut pending: Vec<FilterExpr> = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Punct('}') => {
                    self.next();
                    break;
                }
                Tok::Punct('.') => {
                    self.next();
                }
                Tok::Eof => return Err(self.unexpected("'}'")),
                Tok::Word(w) if w.eq_ignore_ascii_case("FILTER") => {
                    self.next();
                    let expr = self.constraint()?;
                    if self.triples.len() > start {
                        let idx = self.triples.len() - 1;
                        self.filters.push(FilterClause::new(expr, idx));
                    } else {
                        pending.push(expr);
                    }
                }
                Tok::Word(w) if w.eq_ignore_ascii_case("SERVICE") => {
                    if in_service {
                        return Err(self.unsupported("nested SERVICE"));
                    }
                    self.next();
                    self.eat_word("SILENT");
                    let anchor = match self.next() {
                        Tok::Var(v) => Term::Variable(v),
                        Tok::Iri(i) => self.absolute(i)?,
                        Tok::PName { prefix, local } => self.expand(&prefix, &local)?,
                        _ => {
                            self.pos -= 1;
                            return Err(self.unexpected("SERVICE anchor (IRI or variable)"));
                        }
                    };
                    let first = self.triples.len();
                    let inner = self.group(true)?;
                    self.attach_or_keep(inner, first, &mut pending);
                    let end = self.triples.len();
                    self.services.push(ServiceGroup {
                        anchor,
                        triples: first..end,
                    });
                    if self.peek().is_word("UNION") {
                        return Err(self.unsupported("UNION"));
                    }
                }
                Tok::Punct('{') => {
                    let first = self.triples.len();
                    let inner = self.group(in_service)?;
                    self.attach_or_keep(inner, first, &mut pending);
                    if self.peek().is_word("UNION") {
                        return Err(self.unsupported("UNION"));
                    }
                }
                Tok::Word(w)
                    if UNSUPPORTED_KEYWORDS.contains(&w.to_ascii_uppercase().as_str()) =>
                {
                    return Err(self.unsupported(w.to_ascii_uppercase()));
                }
                _ => self.triples_same_subject()?,
            }
        }
        if self.triples.len() > start {
            let last = self.triples.len() - 1;
            for f in pending.drain(..) {
                self.filters.push(FilterClause::new(f, last));
            }
        }
        Ok(pending)
    }

    fn attach_or_keep(&mut self, inner: Vec<FilterExpr>, first: usize, pending: &mut Vec<FilterExpr>) {
        if inner.is_empty() {
            return;
        }
        if self.triples.len() > first {
            let last = self.triples.len() - 1;
            for f in inner {
                self.filters.push(FilterClause::new(f, last));
            }
        } else {
            pending.extend(inner);
        }
    }

    fn absolute(&self, iri: String) -> Result<Term, QueryError> {
        if is_absolute_iri(&iri) {
            Ok(Term::Iri(iri))
        } else {
            Err(self.syntax(format!("relative IRI <{iri}> (no BASE support)")))
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<Term, QueryError> {
        match self.prefixes.get(prefix) {
            Some(ns) => Ok(Term::Iri(format!("{ns}{local}"))),
            None => {
                // offset of the token just consumed
                let off = self.toks[self.pos.saturating_sub(1)].1;
                let (line, column) = line_col(self.src, off);
                Err(QueryError::UnknownPrefix {
                    prefix: prefix.to_owned(),
                    line,
                    column,
                })
            }
        }
    }

    fn fresh_blank(&mut self) -> Term {
        loop {
            let label = format!("anon{}", self.anon);
            self.anon += 1;
            if self.used_blank_labels.insert(label.clone()) {
                return Term::Blank(label);
            }
        }
    }

    fn anon_blank(&mut self) -> Result<Term, QueryError> {
        self.expect_punct('[')?;
        if *self.peek() != Tok::Punct(']') {
            return Err(self.unsupported("blank node property list"));
        }
        self.next();
        Ok(self.fresh_blank())
    }

    fn triples_same_subject(&mut self) -> Result<(), QueryError> {
        let subject = match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Term::Variable(v)
            }
            Tok::Iri(i) => {
                self.next();
                self.absolute(i)?
            }
            Tok::PName { prefix, local } => {
                self.next();
                self.expand(&prefix, &local)?
            }
            Tok::Blank(b) => {
                self.next();
                Term::Blank(b)
            }
            Tok::Punct('[') => self.anon_blank()?,
            Tok::Punct('(') => return Err(self.unsupported("RDF collection")),
            Tok::Str(_) | Tok::Number { .. } => {
                return Err(self.syntax("literal in subject position"))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("true") || w.eq_ignore_ascii_case("false") => {
                return Err(self.syntax("literal in subject position"))
            }
            _ => return Err(self.unexpected("triple pattern")),
        };

        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.object()?;
                let index = self.triples.len();
                self.triples.push(TriplePattern {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                    index,
                });
                if *self.peek() == Tok::Punct(',') {
                    self.next();
                } else {
                    break;
                }
            }
            if *self.peek() != Tok::Punct(';') {
                return Ok(());
            }
            while *self.peek() == Tok::Punct(';') {
                self.next();
            }
            match self.peek() {
                Tok::Punct('.') | Tok::Punct('}') => return Ok(()),
                t if t.is_word("FILTER") => return Ok(()),
                _ => {}
            }
        }
    }

    fn check_path_operator(&self) -> Result<(), QueryError> {
        match self.peek() {
            Tok::Op("/" | "|" | "^" | "+" | "?") | Tok::Punct('*') => {
                Err(self.unsupported("property path"))
            }
            _ => Ok(()),
        }
    }

    fn verb(&mut self) -> Result<Term, QueryError> {
        let t = match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Term::Variable(v)
            }
            Tok::Iri(i) => {
                self.next();
                self.absolute(i)?
            }
            Tok::PName { prefix, local } => {
                self.next();
                self.expand(&prefix, &local)?
            }
            Tok::Word(w) if w == "a" => {
                self.next();
                Term::Iri(RDF_TYPE.to_owned())
            }
            Tok::Op("^" | "!") | Tok::Punct('(') => return Err(self.unsupported("property path")),
            Tok::Blank(_) | Tok::Punct('[') => {
                return Err(self.syntax("blank node in predicate position"))
            }
            Tok::Str(_) | Tok::Number { .. } => {
                return Err(self.syntax("literal in predicate position"))
            }
            _ => return Err(self.unexpected("predicate")),
        };
        self.check_path_operator()?;
        Ok(t)
    }

    fn object(&mut self) -> Result<Term, QueryError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(Term::Variable(v))
            }
            Tok::Iri(i) => {
                self.next();
                self.absolute(i)
            }
            Tok::PName { prefix, local } => {
                self.next();
                self.expand(&prefix, &local)
            }
            Tok::Blank(b) => {
                self.next();
                Ok(Term::Blank(b))
            }
            Tok::Punct('[') => self.anon_blank(),
            Tok::Punct('(') => Err(self.unsupported("RDF collection")),
            _ => match self.literal()? {
                Some(lit) => Ok(Term::Literal(lit)),
                None => Err(self.unexpected("object")),
            },
        }
    }

    /// String, numeric or boolean literal, or `None` if the next token does
    /// not start one.
    fn literal(&mut self) -> Result<Option<Literal>, QueryError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                match self.peek().clone() {
                    Tok::LangTag(tag) => {
                        self.next();
                        Ok(Some(Literal::lang(s, tag)))
                    }
                    Tok::DoubleCaret => {
                        self.next();
                        let dt = match self.next() {
                            Tok::Iri(i) => self.absolute(i)?,
                            Tok::PName { prefix, local } => self.expand(&prefix, &local)?,
                            _ => {
                                self.pos -= 1;
                                return Err(self.unexpected("datatype IRI"));
                            }
                        };
                        Ok(Some(Literal::typed(s, dt.as_iri().unwrap_or_default())))
                    }
                    _ => Ok(Some(Literal::simple(s))),
                }
            }
            Tok::Number { lexical, datatype } => {
                self.next();
                Ok(Some(Literal::typed(lexical, datatype)))
            }
            Tok::Op(sign @ ("-" | "+")) => {
                if let Tok::Number { lexical, datatype } = self.peek_at(1).clone() {
                    self.next();
                    self.next();
                    let lexical = if sign == "-" {
                        format!("-{lexical}")
                    } else {
                        format!("+{lexical}")
                    };
                    Ok(Some(Literal::typed(lexical, datatype)))
                } else {
                    Ok(None)
                }
            }
            Tok::Word(w) if w == "true" || w == "false" => {
                self.next();
                Ok(Some(Literal::typed(w, XSD_BOOLEAN)))
            }
            _ => Ok(None),
        }
    }

    fn constraint(&mut self) -> Result<FilterExpr, QueryError> {
        match self.peek().clone() {
            Tok::Punct('(') => {
                self.next();
                let e = self.or_expr()?;
                self.expect_punct(')')?;
                Ok(e)
            }
            Tok::Word(_) | Tok::Iri(_) | Tok::PName { .. } => {
                let e = self.primary()?;
                match e {
                    FilterExpr::Call { .. } | FilterExpr::Opaque { .. } => Ok(e),
                    _ => Err(self.syntax("FILTER requires a parenthesized expression or a function call")),
                }
            }
            _ => Err(self.unexpected("'(' after FILTER")),
        }
    }

    fn or_expr(&mut self) -> Result<FilterExpr, QueryError> {
        let mut left = self.and_expr()?;
        while *self.peek() == Tok::Op("||") {
            self.next();
            let right = self.and_expr()?;
            left = FilterExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<FilterExpr, QueryError> {
        let mut left = self.relational()?;
        while *self.peek() == Tok::Op("&&") {
            self.next();
            let right = self.relational()?;
            left = FilterExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn relational(&mut self) -> Result<FilterExpr, QueryError> {
        let left = self.additive()?;
        let op = match self.peek() {
            Tok::Op("=") => CompareOp::Eq,
            Tok::Op("!=") => CompareOp::Ne,
            Tok::Op("<") => CompareOp::Lt,
            Tok::Op("<=") => CompareOp::Le,
            Tok::Op(">") => CompareOp::Gt,
            Tok::Op(">=") => CompareOp::Ge,
            t if t.is_word("IN") || t.is_word("NOT") => return Err(self.unsupported("IN / NOT IN")),
            _ => return Ok(left),
        };
        self.next();
        let right = self.additive()?;
        Ok(FilterExpr::Compare {
            op,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn additive(&mut self) -> Result<FilterExpr, QueryError> {
        let e = self.unary()?;
        match self.peek() {
            Tok::Op("+" | "-" | "/") | Tok::Punct('*') => Err(self.unsupported("arithmetic expression")),
            _ => Ok(e),
        }
    }

    fn unary(&mut self) -> Result<FilterExpr, QueryError> {
        match self.peek() {
            Tok::Op("!") => {
                self.next();
                Ok(FilterExpr::Not(Box::new(self.unary()?)))
            }
            Tok::Op("-" | "+") => match self.literal()? {
                Some(lit) => Ok(FilterExpr::Term(Term::Literal(lit))),
                None => Err(self.unsupported("arithmetic expression")),
            },
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<FilterExpr, QueryError> {
        match self.peek().clone() {
            Tok::Punct('(') => {
                self.next();
                let e = self.or_expr()?;
                self.expect_punct(')')?;
                Ok(e)
            }
            Tok::Var(v) => {
                self.next();
                Ok(FilterExpr::Term(Term::Variable(v)))
            }
            Tok::Iri(_) | Tok::PName { .. } => {
                let term = match self.next() {
                    Tok::Iri(i) => self.absolute(i)?,
                    Tok::PName { prefix, local } => self.expand(&prefix, &local)?,
                    _ => unreachable!(),
                };
                if *self.peek() == Tok::Punct('(') {
                    let args = self.arg_list()?;
                    Ok(FilterExpr::Opaque {
                        name: term.to_string(),
                        args,
                    })
                } else {
                    Ok(FilterExpr::Term(term))
                }
            }
            Tok::Word(w) => {
                if w == "true" || w == "false" {
                    let lit = self.literal()?.expect("boolean literal");
                    return Ok(FilterExpr::Term(Term::Literal(lit)));
                }
                let upper = w.to_ascii_uppercase();
                if upper == "EXISTS" || upper == "NOT" {
                    return Err(self.unsupported(format!("{upper} EXISTS")));
                }
                if AGGREGATES.contains(&upper.as_str()) {
                    return Err(self.unsupported(format!("aggregate {upper}")));
                }
                if *self.peek_at(1) != Tok::Punct('(') {
                    return Err(self.syntax(format!("unexpected keyword '{w}' in expression")));
                }
                self.next();
                let args = self.arg_list()?;
                match Function::from_name(&w) {
                    Some(function) => {
                        if args.len() != 1 {
                            return Err(self.syntax(format!(
                                "{}() takes exactly one argument",
                                function.name()
                            )));
                        }
                        Ok(FilterExpr::Call { function, args })
                    }
                    None => Ok(FilterExpr::Opaque { name: w, args }),
                }
            }
            _ => match self.literal()? {
                Some(lit) => Ok(FilterExpr::Term(Term::Literal(lit))),
                None => Err(self.unexpected("expression")),
            },
        }
    }

    fn arg_list(&mut self) -> Result<Vec<FilterExpr>, QueryError> {
        self.expect_punct('(')?;
        let mut args = Vec::new();
        if *self.peek() == Tok::Punct(')') {
            self.next();
            return Ok(args);
        }
        if self.peek().is_word("DISTINCT") {
            return Err(self.unsupported("DISTINCT in function call"));
        }
        loop {
            args.push(self.or_expr()?);
            match self.next() {
                Tok::Punct(',') => continue,
                Tok::Punct(')') => return Ok(args),
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("',' or ')'"));
                }
            }
        }
    }
}
