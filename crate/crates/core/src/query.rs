//! Positive relational algebra with lattice-aware selections, and clean
//! query answering over the clean instances of a dirty instance.
//!
//! Queries are written as s-expressions:
//!
//! ```text
//! (rel R)
//! (project (A B) q)
//! (product q1 q2)
//! (union q1 q2)
//! (select-eq A "constant" q)
//! (select-attr-eq A B q)
//! (select-dom "constant" A q)       ; constant ⪯ A
//! (select-join-dom A B q)           ; A and B dominate a common non-bottom value
//! ```
//!
//! A product renames attributes present on both sides to `left.A` and
//! `right.A`. Answers are single-relation instances named `Q`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instance::{join_instances, meet_instances, reduce, Attribute, Instance, RelationSchema, Schema, Tid, Tuple};
use crate::md::{enumerate_clean, MatchDep};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Query {
    Relation(String),
    Project(Vec<String>, Box<Query>),
    Product(Box<Query>, Box<Query>),
    Union(Box<Query>, Box<Query>),
    SelectEq {
        attr: String,
        constant: String,
        input: Box<Query>,
    },
    SelectAttrEq {
        left: String,
        right: String,
        input: Box<Query>,
    },
    /// Keeps tuples whose `attr` value dominates `constant`.
    SelectDom {
        constant: String,
        attr: String,
        input: Box<Query>,
    },
    /// Keeps tuples whose two values share a non-bottom lower bound.
    SelectJoinDom {
        left: String,
        right: String,
        input: Box<Query>,
    },
}

const ANSWER: &str = "Q";

impl Query {
    pub fn rel(name: impl Into<String>) -> Self {
        Query::Relation(name.into())
    }

    pub fn project<A: Into<String>>(attrs: impl IntoIterator<Item = A>, input: Query) -> Self {
        Query::Project(attrs.into_iter().map(Into::into).collect(), Box::new(input))
    }

    pub fn product(left: Query, right: Query) -> Self {
        Query::Product(Box::new(left), Box::new(right))
    }

    pub fn union(left: Query, right: Query) -> Self {
        Query::Union(Box::new(left), Box::new(right))
    }

    pub fn select_eq(attr: impl Into<String>, constant: impl Into<String>, input: Query) -> Self {
        Query::SelectEq {
            attr: attr.into(),
            constant: constant.into(),
            input: Box::new(input),
        }
    }

    pub fn select_attr_eq(left: impl Into<String>, right: impl Into<String>, input: Query) -> Self {
        Query::SelectAttrEq {
            left: left.into(),
            right: right.into(),
            input: Box::new(input),
        }
    }

    pub fn select_dom(constant: impl Into<String>, attr: impl Into<String>, input: Query) -> Self {
        Query::SelectDom {
            constant: constant.into(),
            attr: attr.into(),
            input: Box::new(input),
        }
    }

    pub fn select_join_dom(left: impl Into<String>, right: impl Into<String>, input: Query) -> Self {
        Query::SelectJoinDom {
            left: left.into(),
            right: right.into(),
            input: Box::new(input),
        }
    }

    pub fn children(&self) -> Vec<&Query> {
        match self {
            Query::Relation(_) => vec![],
            Query::Product(l, r) | Query::Union(l, r) => vec![l, r],
            Query::Project(_, q)
            | Query::SelectEq { input: q, .. }
            | Query::SelectAttrEq { input: q, .. }
            | Query::SelectDom { input: q, .. }
            | Query::SelectJoinDom { input: q, .. } => vec![q],
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(Query::node_count).sum::<usize>()
    }

    pub fn parse(text: &str) -> Result<Query> {
        sexpr::parse_query(text)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Relation(r) => write!(f, "(rel {r})"),
            Query::Project(attrs, q) => write!(f, "(project ({}) {q})", attrs.join(" ")),
            Query::Product(l, r) => write!(f, "(product {l} {r})"),
            Query::Union(l, r) => write!(f, "(union {l} {r})"),
            Query::SelectEq { attr, constant, input } => {
                write!(f, "(select-eq {attr} {} {input})", sexpr::quote(constant))
            }
            Query::SelectAttrEq { left, right, input } => write!(f, "(select-attr-eq {left} {right} {input})"),
            Query::SelectDom { constant, attr, input } => {
                write!(f, "(select-dom {} {attr} {input})", sexpr::quote(constant))
            }
            Query::SelectJoinDom { left, right, input } => write!(f, "(select-join-dom {left} {right} {input})"),
        }
    }
}

/// Replaces equality selections by their domination counterparts.
pub fn relax(q: &Query) -> Query {
    match q {
        Query::Relation(r) => Query::Relation(r.clone()),
        Query::Project(a, q) => Query::Project(a.clone(), Box::new(relax(q))),
        Query::Product(l, r) => Query::product(relax(l), relax(r)),
        Query::Union(l, r) => Query::union(relax(l), relax(r)),
        Query::SelectEq { attr, constant, input } => Query::select_dom(constant.clone(), attr.clone(), relax(input)),
        Query::SelectAttrEq { left, right, input } => Query::select_join_dom(left.clone(), right.clone(), relax(input)),
        Query::SelectDom { constant, attr, input } => Query::select_dom(constant.clone(), attr.clone(), relax(input)),
        Query::SelectJoinDom { left, right, input } => {
            Query::select_join_dom(left.clone(), right.clone(), relax(input))
        }
    }
}

/// Whether `q` uses only domination-monotone operators. This is a sound
/// syntactic test, not a characterization.
pub fn is_monotone_syntax(q: &Query) -> bool {
    !matches!(q, Query::SelectEq { .. } | Query::SelectAttrEq { .. })
        && q.children().into_iter().all(is_monotone_syntax)
}

struct Table<S: Scalar> {
    schema: RelationSchema<S>,
    tuples: Vec<Tuple<S>>,
}

impl<S: Scalar> Table<S> {
    fn column(&self, attr: &str) -> Result<usize> {
        self.schema
            .position(attr)
            .ok_or_else(|| Error::Query(format!("unknown attribute `{attr}`")))
    }

    fn comparable(&self, a: usize, b: usize) -> Result<()> {
        let (da, db) = (self.schema.domain(a), self.schema.domain(b));
        if da.name() == db.name() {
            Ok(())
        } else {
            Err(Error::Query(format!(
                "attributes `{}` and `{}` are not comparable",
                self.schema.attributes[a].name, self.schema.attributes[b].name
            )))
        }
    }

    fn filter(mut self, mut keep: impl FnMut(&Tuple<S>) -> Result<bool>) -> Result<Self> {
        let mut out = Vec::with_capacity(self.tuples.len());
        for t in self.tuples {
            if keep(&t)? {
                out.push(t);
            }
        }
        self.tuples = out;
        Ok(self)
    }
}

fn eval_table<S: Scalar>(q: &Query, d: &Instance<S>) -> Result<Table<S>> {
    Ok(match q {
        Query::Relation(name) => {
            let r = d
                .schema()
                .relation_index(name)
                .ok_or_else(|| Error::Query(format!("unknown relation `{name}`")))?;
            let rel = &d.schema().relations()[r];
            Table {
                schema: RelationSchema::new(ANSWER, rel.attributes.clone()),
                tuples: d.tuples(r).to_vec(),
            }
        }
        Query::Project(attrs, input) => {
            let t = eval_table(input, d)?;
            let cols = attrs.iter().map(|a| t.column(a)).collect::<Result<Vec<_>>>()?;
            for (k, c) in cols.iter().enumerate() {
                if cols[..k].contains(c) {
                    return Err(Error::Query(format!("attribute `{}` projected twice", attrs[k])));
                }
            }
            Table {
                schema: RelationSchema::new(ANSWER, cols.iter().map(|&c| t.schema.attributes[c].clone()).collect()),
                tuples: t
                    .tuples
                    .into_iter()
                    .map(|tu| Tuple {
                        tid: tu.tid,
                        values: cols.iter().map(|&c| tu.values[c].clone()).collect(),
                    })
                    .collect(),
            }
        }
        Query::Product(l, r) => {
            let (lt, rt) = (eval_table(l, d)?, eval_table(r, d)?);
            let rename = |attr: &Attribute<S>, prefix: &str, other: &RelationSchema<S>| Attribute {
                name: if other.position(&attr.name).is_some() {
                    format!("{prefix}.{}", attr.name)
                } else {
                    attr.name.clone()
                },
                domain: attr.domain.clone(),
            };
            let mut attributes: Vec<Attribute<S>> =
                lt.schema.attributes.iter().map(|a| rename(a, "left", &rt.schema)).collect();
            attributes.extend(rt.schema.attributes.iter().map(|a| rename(a, "right", &lt.schema)));
            Schema::new(vec![RelationSchema::new(ANSWER, attributes.clone())])
                .map_err(|e| Error::Query(format!("product produces clashing attributes: {e}")))?;
            let mut tuples = Vec::with_capacity(lt.tuples.len() * rt.tuples.len());
            for a in &lt.tuples {
                for b in &rt.tuples {
                    let mut values = a.values.clone();
                    values.extend(b.values.iter().cloned());
                    tuples.push(Tuple {
                        tid: Tid::new(format!("{}*{}", a.tid, b.tid)),
                        values,
                    });
                }
            }
            Table {
                schema: RelationSchema::new(ANSWER, attributes),
                tuples,
            }
        }
        Query::Union(l, r) => {
            let (mut lt, rt) = (eval_table(l, d)?, eval_table(r, d)?);
            if lt.schema != rt.schema {
                return Err(Error::Query("union of queries with different output schemas".into()));
            }
            for mut t in rt.tuples {
                while lt.tuples.iter().any(|u| u.tid == t.tid) {
                    t.tid = Tid::new(format!("{}'", t.tid));
                }
                lt.tuples.push(t);
            }
            lt
        }
        Query::SelectEq { attr, constant, input } => {
            let t = eval_table(input, d)?;
            let c = t.column(attr)?;
            let value = t.schema.domain(c).parse_text(constant)?;
            t.filter(|tu| Ok(tu.values[c] == value))?
        }
        Query::SelectAttrEq { left, right, input } => {
            let t = eval_table(input, d)?;
            let (a, b) = (t.column(left)?, t.column(right)?);
            t.comparable(a, b)?;
            t.filter(|tu| Ok(tu.values[a] == tu.values[b]))?
        }
        Query::SelectDom { constant, attr, input } => {
            let t = eval_table(input, d)?;
            let c = t.column(attr)?;
            let dom = t.schema.attributes[c].domain.clone();
            let value = dom.parse_text(constant)?;
            t.filter(|tu| dom.leq(&value, &tu.values[c]))?
        }
        Query::SelectJoinDom { left, right, input } => {
            let t = eval_table(input, d)?;
            let (a, b) = (t.column(left)?, t.column(right)?);
            t.comparable(a, b)?;
            let dom = t.schema.attributes[a].domain.clone();
            t.filter(|tu| Ok(!dom.glb(&tu.values[a], &tu.values[b])?.is_bottom()))?
        }
    })
}

/// Evaluates `q` over `d`. The answer is reduced.
pub fn eval<S: Scalar>(q: &Query, d: &Instance<S>) -> Result<Instance<S>> {
    let table = eval_table(q, d)?;
    let schema = Arc::new(Schema::new(vec![table.schema]).map_err(|e| Error::Query(e.to_string()))?);
    let mut tuples = table.tuples;
    tuples.sort_by(|a, b| a.tid.cmp(&b.tid));
    tuples.dedup_by(|a, b| a.tid == b.tid && a.values == b.values);
    Ok(reduce(&Instance::from_parts(schema, vec![tuples])))
}

/// The greatest lower bound of a non-empty list of answers.
pub fn fold_meet<S: Scalar>(answers: &[Instance<S>]) -> Result<Instance<S>> {
    let (first, rest) = answers
        .split_first()
        .ok_or_else(|| Error::Contract("meet of an empty set of instances".into()))?;
    rest.iter().try_fold(reduce(first), |acc, d| meet_instances(&acc, d))
}

/// The least upper bound of a non-empty list of answers.
pub fn fold_join<S: Scalar>(answers: &[Instance<S>]) -> Result<Instance<S>> {
    let (first, rest) = answers
        .split_first()
        .ok_or_else(|| Error::Contract("join of an empty set of instances".into()))?;
    rest.iter().try_fold(reduce(first), |acc, d| join_instances(&acc, d))
}

/// Certain and possible answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CleanAnswer<S: Scalar> {
    pub cert: Instance<S>,
    pub poss: Instance<S>,
}

fn clean_answers<S: Scalar>(q: &Query, d0: &Instance<S>, sigma: &[MatchDep], limit: usize) -> Result<Vec<Instance<S>>> {
    let e = enumerate_clean(d0, sigma, limit)?;
    if e.truncated {
        return Err(Error::IncompleteEnumeration { limit });
    }
    e.instances.iter().map(|d| eval(q, d)).collect()
}

/// The glb of the answers over all clean instances. Fails when there are
/// more than `limit` clean instances.
pub fn certain<S: Scalar>(q: &Query, d0: &Instance<S>, sigma: &[MatchDep], limit: usize) -> Result<Instance<S>> {
    fold_meet(&clean_answers(q, d0, sigma, limit)?)
}

/// The lub of the answers over all clean instances. Fails when there are
/// more than `limit` clean instances.
pub fn possible<S: Scalar>(q: &Query, d0: &Instance<S>, sigma: &[MatchDep], limit: usize) -> Result<Instance<S>> {
    fold_join(&clean_answers(q, d0, sigma, limit)?)
}

/// Both bounds from a single enumeration.
pub fn clean_answer<S: Scalar>(q: &Query, d0: &Instance<S>, sigma: &[MatchDep], limit: usize) -> Result<CleanAnswer<S>> {
    let answers = clean_answers(q, d0, sigma, limit)?;
    Ok(CleanAnswer {
        cert: fold_meet(&answers)?,
        poss: fold_join(&answers)?,
    })
}

mod sexpr {
    use super::Query;
    use crate::error::{Error, Result};

    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Open,
        Close,
        Symbol(String),
        Str(String),
    }

    struct Token {
        tok: Tok,
        line: usize,
        column: usize,
    }

    pub(super) fn quote(s: &str) -> String {
        let mut out = String::with_capacity(s.len() + 2);
        out.push('"');
        for c in s.chars() {
            if c == '"' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
        out
    }

    fn tokenize(text: &str) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        let mut chars = text.chars().peekable();
        let (mut line, mut column) = (1, 1);
        let err = |line, column, message: &str| Error::Parse {
            line,
            column,
            message: message.into(),
        };
        while let Some(&c) = chars.peek() {
            let (tl, tc) = (line, column);
            let mut bump = |c: char| {
                if c == '\n' {
                    line += 1;
                    column = 1;
                } else {
                    column += 1;
                }
            };
            match c {
                ';' => {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        bump(c);
                        chars.next();
                    }
                }
                c if c.is_whitespace() => {
                    bump(c);
                    chars.next();
                }
                '(' | ')' => {
                    bump(c);
                    chars.next();
                    let tok = if c == '(' { Tok::Open } else { Tok::Close };
                    out.push(Token { tok, line: tl, column: tc });
                }
                '"' => {
                    bump(c);
                    chars.next();
                    let mut s = String::new();
                    loop {
                        match chars.next() {
                            None => return Err(err(tl, tc, "unterminated string")),
                            Some('"') => {
                                bump('"');
                                break;
                            }
                            Some('\\') => {
                                bump('\\');
                                match chars.next() {
                                    Some(e @ ('"' | '\\')) => {
                                        bump(e);
                                        s.push(e);
                                    }
                                    _ => return Err(err(line, column, "invalid escape")),
                                }
                            }
                            Some(c) => {
                                bump(c);
                                s.push(c);
                            }
                        }
                    }
                    out.push(Token {
                        tok: Tok::Str(s),
                        line: tl,
                        column: tc,
                    });
                }
                _ => {
                    let mut s = String::new();
                    while let Some(&c) = chars.peek() {
                        if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                            break;
                        }
                        bump(c);
                        s.push(c);
                        chars.next();
                    }
                    out.push(Token {
                        tok: Tok::Symbol(s),
                        line: tl,
                        column: tc,
                    });
                }
            }
        }
        Ok(out)
    }

    struct Parser {
        tokens: Vec<Token>,
        at: usize,
        end: (usize, usize),
    }

    impl Parser {
        fn error(&self, message: impl Into<String>) -> Error {
            let (line, column) = self
                .tokens
                .get(self.at)
                .map_or(self.end, |t| (t.line, t.column));
            Error::Parse {
                line,
                column,
                message: message.into(),
            }
        }

        fn next(&mut self) -> Option<&Tok> {
            let t = self.tokens.get(self.at).map(|t| &t.tok);
            self.at += 1;
            t
        }

        fn peek(&self) -> Option<&Tok> {
            self.tokens.get(self.at).map(|t| &t.tok)
        }

        fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
            if self.peek() == Some(&want) {
                self.at += 1;
                Ok(())
            } else {
                Err(self.error(format!("expected {what}")))
            }
        }

        fn symbol(&mut self, what: &str) -> Result<String> {
            match self.peek() {
                Some(Tok::Symbol(s)) => {
                    let s = s.clone();
                    self.at += 1;
                    Ok(s)
                }
                _ => Err(self.error(format!("expected {what}"))),
            }
        }

        fn constant(&mut self) -> Result<String> {
            match self.peek() {
                Some(Tok::Symbol(s) | Tok::Str(s)) => {
                    let s = s.clone();
                    self.at += 1;
                    Ok(s)
                }
                _ => Err(self.error("expected a constant")),
            }
        }

        fn query(&mut self) -> Result<Query> {
            if let Some(Tok::Symbol(_)) = self.peek() {
                return Ok(Query::Relation(self.symbol("a relation name")?));
            }
            self.expect(Tok::Open, "`(`")?;
            let op = self.symbol("an operator")?;
            let q = match op.as_str() {
                "rel" => Query::Relation(self.symbol("a relation name")?),
                "project" => {
                    self.expect(Tok::Open, "an attribute list")?;
                    let mut attrs = Vec::new();
                    while let Some(Tok::Symbol(_)) = self.peek() {
                        attrs.push(self.symbol("an attribute")?);
                    }
                    self.expect(Tok::Close, "`)` after the attribute list")?;
                    Query::Project(attrs, Box::new(self.query()?))
                }
                "product" => Query::product(self.query()?, self.query()?),
                "union" => Query::union(self.query()?, self.query()?),
                "select-eq" => {
                    let attr = self.symbol("an attribute")?;
                    let constant = self.constant()?;
                    Query::select_eq(attr, constant, self.query()?)
                }
                "select-attr-eq" => {
                    let (a, b) = (self.symbol("an attribute")?, self.symbol("an attribute")?);
                    Query::select_attr_eq(a, b, self.query()?)
                }
                "select-dom" => {
                    let constant = self.constant()?;
                    let attr = self.symbol("an attribute")?;
                    Query::select_dom(constant, attr, self.query()?)
                }
                "select-join-dom" => {
                    let (a, b) = (self.symbol("an attribute")?, self.symbol("an attribute")?);
                    Query::select_join_dom(a, b, self.query()?)
                }
                other => {
                    self.at -= 1;
                    return Err(self.error(format!("unknown operator `{other}`")));
                }
            };
            self.expect(Tok::Close, "`)`")?;
            Ok(q)
        }
    }

    pub(super) fn parse_query(text: &str) -> Result<Query> {
        let lines: Vec<&str> = text.split('\n').collect();
        let end = (lines.len(), lines.last().map_or(0, |l| l.chars().count()) + 1);
        let mut p = Parser {
            tokens: tokenize(text)?,
            at: 0,
            end,
        };
        let q = p.query()?;
        if p.next().is_some() {
            p.at -= 1;
            return Err(p.error("unexpected input after the query"));
        }
        Ok(q)
    }
}
