//! Attribute-domain lattices.
//!
//! Every attribute draws its values from a [`Domain`], which fixes the value
//! kind, the similarity relation used on the left-hand side of matching
//! dependencies, and the matching function used to identify two values.
//! Three lattice families are built in:
//!
//! * atom sets, matched by union and ordered by inclusion;
//! * closed intervals, matched by convex hull and ordered by containment;
//! * booleans with an inconsistency marker `⊤`, where `0` and `1` match to `⊤`.
//!
//! All three share the least element [`Value::Bottom`]. The order `a ⪯ b`
//! holds exactly when `merge(a, b) == b`, and `glb` is the meet of that order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Atom = Arc<str>;

/// A non-empty finite set of atoms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AtomSet(BTreeSet<Atom>);

impl AtomSet {
    /// Returns `None` for the empty set, which is represented by `Bottom`.
    pub fn new<I, A>(atoms: I) -> Option<Self>
    where
        I: IntoIterator<Item = A>,
        A: Into<Atom>,
    {
        let set: BTreeSet<Atom> = atoms.into_iter().map(Into::into).collect();
        (!set.is_empty()).then_some(AtomSet(set))
    }

    pub fn singleton(atom: impl Into<Atom>) -> Self {
        AtomSet(BTreeSet::from([atom.into()]))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, atom: &str) -> bool {
        self.0.contains(atom)
    }

    pub fn is_subset(&self, other: &AtomSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &AtomSet) -> AtomSet {
        AtomSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &AtomSet) -> Option<AtomSet> {
        AtomSet::new(self.0.intersection(&other.0).cloned())
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.0
    }
}

/// A boolean attribute value that can also record an inconsistency.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Bool3 {
    False,
    True,
    Top,
}

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Interval<S> {
    lo: S,
    hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Option<Self> {
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn point(at: S) -> Self {
        Interval {
            lo: at.clone(),
            hi: at,
        }
    }

    pub fn lo(&self) -> &S {
        &self.lo
    }

    pub fn hi(&self) -> &S {
        &self.hi
    }

    pub fn hull(&self, other: &Self) -> Self {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn intersection(&self, other: &Self) -> Option<Self> {
        Interval::new(
            self.lo.clone().max(other.lo.clone()),
            self.hi.clone().min(other.hi.clone()),
        )
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Distance between the intervals, or a non-positive number when they meet.
    fn gap(&self, other: &Self) -> S {
        self.lo.clone().max(other.lo.clone()) - self.hi.clone().min(other.hi.clone())
    }
}

/// A lattice element of one of the built-in attribute domains.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Value<S> {
    Bottom,
    Atoms(AtomSet),
    Interval(Interval<S>),
    Bool(Bool3),
}

impl<S: Scalar> Value<S> {
    pub fn atom(atom: impl Into<Atom>) -> Self {
        Value::Atoms(AtomSet::singleton(atom))
    }

    /// An atom-set value; the empty set becomes `Bottom`.
    pub fn atoms<I, A>(atoms: I) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<Atom>,
    {
        AtomSet::new(atoms).map_or(Value::Bottom, Value::Atoms)
    }

    /// # Panics
    /// Panics when `lo > hi`.
    pub fn interval(lo: S, hi: S) -> Self {
        Value::Interval(Interval::new(lo, hi).expect("interval with lo > hi"))
    }

    pub fn point(at: S) -> Self {
        Value::Interval(Interval::point(at))
    }

    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            Value::Bottom => None,
            Value::Atoms(_) => Some(ValueKind::Atoms),
            Value::Interval(_) => Some(ValueKind::Interval),
            Value::Bool(_) => Some(ValueKind::Bool3),
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Value::Bottom)
    }
}

impl<S: fmt::Display> fmt::Display for Value<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bottom => f.write_str("⊥"),
            Value::Atoms(set) if set.len() == 1 => {
                write!(f, "{}", set.iter().next().expect("non-empty"))
            }
            Value::Atoms(set) => {
                f.write_str("{")?;
                for (i, atom) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(atom)?;
                }
                f.write_str("}")
            }
            Value::Interval(iv) => write!(f, "[{},{}]", iv.lo, iv.hi),
            Value::Bool(Bool3::False) => f.write_str("0"),
            Value::Bool(Bool3::True) => f.write_str("1"),
            Value::Bool(Bool3::Top) => f.write_str("⊤"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ValueKind {
    Atoms,
    Interval,
    Bool3,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Atoms => "atoms",
            ValueKind::Interval => "interval",
            ValueKind::Bool3 => "bool3",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Explicitly listed similar values, closed under symmetry.
///
/// Only the listed values themselves are similar; a value obtained by
/// matching a listed value with something else is similar to nothing but
/// itself.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExplicitPairs<S: Scalar> {
    partners: HashMap<Value<S>, BTreeSet<Value<S>>>,
}

impl<S: Scalar> ExplicitPairs<S> {
    pub fn new(pairs: impl IntoIterator<Item = (Value<S>, Value<S>)>) -> Self {
        let mut partners: HashMap<Value<S>, BTreeSet<Value<S>>> = HashMap::new();
        for (a, b) in pairs {
            if a == b {
                continue;
            }
            partners.entry(a.clone()).or_default().insert(b.clone());
            partners.entry(b).or_default().insert(a);
        }
        ExplicitPairs { partners }
    }

    pub fn contains(&self, a: &Value<S>, b: &Value<S>) -> bool {
        self.partners.get(a).is_some_and(|p| p.contains(b))
    }

    pub fn partners<'a>(&'a self, v: &Value<S>) -> impl Iterator<Item = &'a Value<S>> + 'a {
        self.partners.get(v).into_iter().flatten()
    }

    /// Each unordered pair once, smaller value first, sorted.
    pub fn pairs(&self) -> Vec<(Value<S>, Value<S>)> {
        let mut out: Vec<_> = self
            .partners
            .iter()
            .flat_map(|(a, bs)| bs.iter().filter(move |b| a < *b).map(move |b| (a.clone(), b.clone())))
            .collect();
        out.sort();
        out
    }
}

/// Similar atom pairs, lifted to sets: two sets are similar when some atom
/// of one is equal or similar to some atom of the other.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LiftedPairs {
    partners: HashMap<Atom, BTreeSet<Atom>>,
}

impl LiftedPairs {
    pub fn new<A: Into<Atom>>(pairs: impl IntoIterator<Item = (A, A)>) -> Self {
        let mut partners: HashMap<Atom, BTreeSet<Atom>> = HashMap::new();
        for (a, b) in pairs {
            let (a, b) = (a.into(), b.into());
            if a == b {
                continue;
            }
            partners.entry(a.clone()).or_default().insert(b.clone());
            partners.entry(b).or_default().insert(a);
        }
        LiftedPairs { partners }
    }

    pub fn atoms_similar(&self, a: &str, b: &str) -> bool {
        a == b || self.partners.get(a).is_some_and(|p| p.contains(b))
    }

    pub fn sets_similar(&self, a: &AtomSet, b: &AtomSet) -> bool {
        a.iter().any(|x| {
            b.contains(x)
                || self
                    .partners
                    .get(x)
                    .is_some_and(|p| p.iter().any(|y| b.contains(y)))
        })
    }

    pub fn pairs(&self) -> Vec<(Atom, Atom)> {
        let mut out: Vec<_> = self
            .partners
            .iter()
            .flat_map(|(a, bs)| bs.iter().filter(move |b| a < *b).map(move |b| (a.clone(), b.clone())))
            .collect();
        out.sort();
        out
    }
}

/// The similarity relation of a domain. Every mode is reflexive and
/// symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Similarity<S: Scalar> {
    Equality,
    Explicit(ExplicitPairs<S>),
    Lifted(LiftedPairs),
    /// Intervals that intersect or lie at most `epsilon` apart.
    Gap(S),
}

impl<S: Scalar> Similarity<S> {
    pub fn mode_name(&self) -> &'static str {
        match self {
            Similarity::Equality => "equality",
            Similarity::Explicit(_) => "explicit",
            Similarity::Lifted(_) => "lifted",
            Similarity::Gap(_) => "gap",
        }
    }
}

/// An attribute domain: value kind, similarity relation and the induced
/// matching function, order and meet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain<S: Scalar> {
    name: String,
    kind: ValueKind,
    similarity: Similarity<S>,
    tokenize: bool,
}

impl<S: Scalar> Domain<S> {
    pub fn new(name: impl Into<String>, kind: ValueKind, similarity: Similarity<S>) -> Result<Self> {
        let name = name.into();
        match (&similarity, kind) {
            (Similarity::Lifted(_), k) if k != ValueKind::Atoms => {
                return Err(Error::domain(&name, "lifted similarity needs an atom-set domain"))
            }
            (Similarity::Gap(eps), k) => {
                if k != ValueKind::Interval {
                    return Err(Error::domain(&name, "gap similarity needs an interval domain"));
                }
                if *eps < S::zero() {
                    return Err(Error::domain(&name, "gap epsilon must be non-negative"));
                }
            }
            (Similarity::Explicit(pairs), _) => {
                for (a, b) in pairs.pairs() {
                    for v in [&a, &b] {
                        if v.kind() != Some(kind) {
                            return Err(Error::domain(
                                &name,
                                format!("similar pair value {v} is not a non-bottom {kind} value"),
                            ));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(Domain {
            name,
            kind,
            similarity,
            tokenize: false,
        })
    }

    /// Atom-set domains with tokenization split text values into
    /// case-folded segments, so `"25 Main St."` becomes `{25, main, st.}`.
    pub fn with_tokenizer(mut self, tokenize: bool) -> Self {
        self.tokenize = tokenize && self.kind == ValueKind::Atoms;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn similarity(&self) -> &Similarity<S> {
        &self.similarity
    }

    pub fn tokenizes(&self) -> bool {
        self.tokenize
    }

    /// Whether the matching function preserves similarity (axiom S) by
    /// construction of the similarity mode.
    pub fn is_similarity_preserving(&self) -> bool {
        matches!(self.similarity, Similarity::Lifted(_) | Similarity::Gap(_))
    }

    pub fn check(&self, v: &Value<S>) -> Result<()> {
        match v.kind() {
            None => Ok(()),
            Some(k) if k == self.kind => Ok(()),
            Some(k) => Err(Error::domain(
                &self.name,
                format!("expected a {} value, found {k} value {v}", self.kind),
            )),
        }
    }

    fn check_pair(&self, a: &Value<S>, b: &Value<S>) -> Result<()> {
        self.check(a)?;
        self.check(b)
    }

    /// The matching function: the least upper bound of `a` and `b`.
    pub fn merge(&self, a: &Value<S>, b: &Value<S>) -> Result<Value<S>> {
        self.check_pair(a, b)?;
        Ok(match (a, b) {
            (Value::Bottom, x) | (x, Value::Bottom) => x.clone(),
            (Value::Atoms(x), Value::Atoms(y)) => Value::Atoms(x.union(y)),
            (Value::Interval(x), Value::Interval(y)) => Value::Interval(x.hull(y)),
            (Value::Bool(x), Value::Bool(y)) => Value::Bool(if x == y { *x } else { Bool3::Top }),
            _ => unreachable!("kinds checked"),
        })
    }

    /// `a ⪯ b`, i.e. `merge(a, b) == b`.
    pub fn leq(&self, a: &Value<S>, b: &Value<S>) -> Result<bool> {
        self.check_pair(a, b)?;
        Ok(match (a, b) {
            (Value::Bottom, _) => true,
            (_, Value::Bottom) => false,
            (Value::Atoms(x), Value::Atoms(y)) => x.is_subset(y),
            (Value::Interval(x), Value::Interval(y)) => y.contains(x),
            (Value::Bool(x), Value::Bool(y)) => x == y || *y == Bool3::Top,
            _ => unreachable!("kinds checked"),
        })
    }

    /// The greatest lower bound of `a` and `b`.
    pub fn glb(&self, a: &Value<S>, b: &Value<S>) -> Result<Value<S>> {
        self.check_pair(a, b)?;
        Ok(match (a, b) {
            (Value::Bottom, _) | (_, Value::Bottom) => Value::Bottom,
            (Value::Atoms(x), Value::Atoms(y)) => x.intersection(y).map_or(Value::Bottom, Value::Atoms),
            (Value::Interval(x), Value::Interval(y)) => {
                x.intersection(y).map_or(Value::Bottom, Value::Interval)
            }
            (Value::Bool(x), Value::Bool(y)) => match (x, y) {
                _ if x == y => Value::Bool(*x),
                (Bool3::Top, o) | (o, Bool3::Top) => Value::Bool(*o),
                _ => Value::Bottom,
            },
            _ => unreachable!("kinds checked"),
        })
    }

    /// The similarity relation of the domain. `Bottom` is similar only to
    /// itself.
    pub fn similar(&self, a: &Value<S>, b: &Value<S>) -> Result<bool> {
        self.check_pair(a, b)?;
        if a == b {
            return Ok(true);
        }
        if a.is_bottom() || b.is_bottom() {
            return Ok(false);
        }
        Ok(match &self.similarity {
            Similarity::Equality => false,
            Similarity::Explicit(pairs) => pairs.contains(a, b),
            Similarity::Lifted(pairs) => match (a, b) {
                (Value::Atoms(x), Value::Atoms(y)) => pairs.sets_similar(x, y),
                _ => false,
            },
            Similarity::Gap(eps) => match (a, b) {
                (Value::Interval(x), Value::Interval(y)) => x.gap(y) <= *eps,
                _ => false,
            },
        })
    }

    /// The starred similarity `a ≈* b`: some `c` in `closure` has `a ≈ c`
    /// and `c ⪯ b`. The closure must be match-closed and contain both
    /// arguments.
    pub fn star_similar(&self, a: &Value<S>, b: &Value<S>, closure: &BTreeSet<Value<S>>) -> Result<bool> {
        self.check_pair(a, b)?;
        if !closure.contains(a) || !closure.contains(b) {
            return Err(Error::Contract(format!(
                "closure of domain `{}` does not contain both {a} and {b}",
                self.name
            )));
        }
        let items: Vec<&Value<S>> = closure.iter().collect();
        for (i, x) in items.iter().enumerate() {
            for y in &items[i + 1..] {
                if !closure.contains(&self.merge(x, y)?) {
                    return Err(Error::Contract(format!(
                        "closure of domain `{}` is not match-closed: lacks merge of {x} and {y}",
                        self.name
                    )));
                }
            }
        }
        for c in closure {
            if self.similar(a, c)? && self.leq(c, b)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Tokenizes or wraps a text value according to the domain settings.
    fn atoms_from_text(&self, text: &str) -> Value<S> {
        if self.tokenize {
            Value::atoms(tokenize(text))
        } else {
            Value::atom(text)
        }
    }

    /// Parses the textual form of a value, as used in query constants.
    ///
    /// Atom sets accept a bare string (tokenized when the domain says so) or
    /// `{a,b,...}`; intervals accept `[lo,hi]` or a single number; booleans
    /// accept `0`, `1`, `top`, `+` and `-`. `⊥` denotes `Bottom`.
    pub fn parse_text(&self, text: &str) -> Result<Value<S>> {
        let text = text.trim();
        if text == "⊥" {
            return Ok(Value::Bottom);
        }
        let bad = |what: &str| Error::domain(&self.name, format!("cannot parse `{text}` as {what}"));
        match self.kind {
            ValueKind::Atoms => {
                if let Some(inner) = text.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
                    Ok(Value::atoms(inner.split(',').map(str::trim).filter(|a| !a.is_empty())))
                } else if text.is_empty() {
                    Err(bad("an atom set"))
                } else {
                    Ok(self.atoms_from_text(text))
                }
            }
            ValueKind::Interval => {
                if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                    let (lo, hi) = inner.split_once(',').ok_or_else(|| bad("an interval"))?;
                    let lo = S::parse_scalar(lo).ok_or_else(|| bad("an interval"))?;
                    let hi = S::parse_scalar(hi).ok_or_else(|| bad("an interval"))?;
                    Interval::new(lo, hi).map(Value::Interval).ok_or_else(|| bad("an interval with lo <= hi"))
                } else {
                    S::parse_scalar(text).map(Value::point).ok_or_else(|| bad("a number"))
                }
            }
            ValueKind::Bool3 => parse_bool3(text).map(Value::Bool).ok_or_else(|| bad("a boolean")),
        }
    }

    /// Reads a value from its project-file JSON form.
    pub fn value_from_json(&self, json: &Json) -> Result<Value<S>> {
        let bad = || Error::domain(&self.name, format!("`{json}` is not a {} value", self.kind));
        match (self.kind, json) {
            (_, Json::Null) => Ok(Value::Bottom),
            (ValueKind::Atoms, Json::String(s)) => {
                if s.is_empty() {
                    Err(bad())
                } else {
                    Ok(self.atoms_from_text(s))
                }
            }
            (ValueKind::Atoms, Json::Array(items)) => {
                let atoms = items
                    .iter()
                    .map(|item| item.as_str().filter(|s| !s.is_empty()).ok_or_else(bad))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Value::atoms(atoms))
            }
            (ValueKind::Interval, Json::Array(items)) if items.len() == 2 => {
                let lo = json_scalar::<S>(&items[0]).ok_or_else(bad)?;
                let hi = json_scalar::<S>(&items[1]).ok_or_else(bad)?;
                Interval::new(lo, hi).map(Value::Interval).ok_or_else(bad)
            }
            (ValueKind::Interval, Json::String(s)) => self.parse_text(s),
            (ValueKind::Interval, Json::Number(_)) => {
                json_scalar::<S>(json).map(Value::point).ok_or_else(bad)
            }
            (ValueKind::Bool3, Json::Bool(b)) => Ok(Value::Bool(if *b { Bool3::True } else { Bool3::False })),
            (ValueKind::Bool3, Json::Number(n)) => match n.as_u64() {
                Some(0) => Ok(Value::Bool(Bool3::False)),
                Some(1) => Ok(Value::Bool(Bool3::True)),
                _ => Err(bad()),
            },
            (ValueKind::Bool3, Json::String(s)) => parse_bool3(s).map(Value::Bool).ok_or_else(bad),
            _ => Err(bad()),
        }
    }

    /// The canonical JSON form: sorted atom arrays, `[lo, hi]` string pairs,
    /// `0`/`1`/`"top"`, and `null` for `Bottom`.
    pub fn value_to_json(&self, v: &Value<S>) -> Json {
        value_to_json(v)
    }
}

pub(crate) fn value_to_json<S: Scalar>(v: &Value<S>) -> Json {
    match v {
        Value::Bottom => Json::Null,
        Value::Atoms(set) => Json::Array(set.iter().map(|a| Json::String(a.to_string())).collect()),
        Value::Interval(iv) => Json::Array(vec![
            Json::String(iv.lo.to_string()),
            Json::String(iv.hi.to_string()),
        ]),
        Value::Bool(Bool3::False) => Json::from(0),
        Value::Bool(Bool3::True) => Json::from(1),
        Value::Bool(Bool3::Top) => Json::String("top".into()),
    }
}

fn json_scalar<S: Scalar>(json: &Json) -> Option<S> {
    match json {
        Json::String(s) => S::parse_scalar(s),
        Json::Number(n) => S::parse_scalar(&n.to_string()),
        _ => None,
    }
}

fn parse_bool3(text: &str) -> Option<Bool3> {
    match text.trim().to_ascii_lowercase().as_str() {
        "0" | "-" | "false" => Some(Bool3::False),
        "1" | "+" | "true" => Some(Bool3::True),
        "top" | "⊤" => Some(Bool3::Top),
        _ => None,
    }
}

/// Splits text on whitespace, commas, semicolons and parentheses and
/// case-folds each segment.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | '(' | ')'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// The smallest match-closed set containing `seeds` and `Bottom`.
pub fn active_closure<S: Scalar>(
    dom: &Domain<S>,
    seeds: impl IntoIterator<Item = Value<S>>,
) -> Result<BTreeSet<Value<S>>> {
    Ok(ActiveClosure::new(dom, seeds)?.elements())
}

/// The finite sub-semilattice generated by a set of seed values, kept
/// implicitly: membership is decided without materializing the closure.
#[derive(Clone, Debug)]
pub struct ActiveClosure<'d, S: Scalar> {
    domain: &'d Domain<S>,
    seeds: Vec<Value<S>>,
}

impl<'d, S: Scalar> ActiveClosure<'d, S> {
    pub fn new(domain: &'d Domain<S>, seeds: impl IntoIterator<Item = Value<S>>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for v in seeds {
            domain.check(&v)?;
            if !v.is_bottom() {
                set.insert(v);
            }
        }
        Ok(ActiveClosure {
            domain,
            seeds: set.into_iter().collect(),
        })
    }

    pub fn domain(&self) -> &'d Domain<S> {
        self.domain
    }

    pub fn seeds(&self) -> &[Value<S>] {
        &self.seeds
    }

    /// An upper bound on the length of strictly increasing chains.
    pub fn height(&self) -> usize {
        self.seeds.len() + 1
    }

    fn leq(&self, a: &Value<S>, b: &Value<S>) -> bool {
        self.domain.leq(a, b).unwrap_or(false)
    }

    fn similar(&self, a: &Value<S>, b: &Value<S>) -> bool {
        self.domain.similar(a, b).unwrap_or(false)
    }

    /// `v` is in the closure iff it is the join of the seeds below it.
    pub fn contains(&self, v: &Value<S>) -> bool {
        if self.domain.check(v).is_err() {
            return false;
        }
        let mut join = Value::Bottom;
        for s in self.seeds.iter().filter(|s| self.leq(s, v)) {
            join = self.domain.merge(&join, s).expect("same domain");
        }
        join == *v
    }

    /// Materializes the closure. Its size is at most `2^|seeds|`.
    pub fn elements(&self) -> BTreeSet<Value<S>> {
        let mut out = BTreeSet::from([Value::Bottom]);
        let mut frontier = vec![Value::Bottom];
        while let Some(v) = frontier.pop() {
            for s in &self.seeds {
                let m = self.domain.merge(&v, s).expect("same domain");
                if out.insert(m.clone()) {
                    frontier.push(m);
                }
            }
        }
        out
    }

    /// The one-sided starred similarity `a ≈* b`, decided from the finite
    /// set of possible witnesses instead of a scan of the closure.
    pub fn star_similar(&self, a: &Value<S>, b: &Value<S>) -> bool {
        if self.similar(a, b) || a.is_bottom() {
            return true;
        }
        match &self.domain.similarity {
            Similarity::Lifted(_) | Similarity::Gap(_) => false,
            Similarity::Equality => self.leq(a, b) && self.contains(a),
            Similarity::Explicit(pairs) => std::iter::once(a)
                .chain(pairs.partners(a))
                .any(|w| self.leq(w, b) && self.contains(w)),
        }
    }

    /// The upward closure of similarity: `a` and `b` are related when they
    /// dominate non-bottom closure elements that are similar to each other.
    /// Unlike `star_similar` this relation is symmetric and preserved by the
    /// matching function.
    pub fn lifted_similar(&self, a: &Value<S>, b: &Value<S>) -> bool {
        if self.similar(a, b) {
            return true;
        }
        if a.is_bottom() || b.is_bottom() {
            return false;
        }
        match &self.domain.similarity {
            Similarity::Lifted(_) | Similarity::Gap(_) => false,
            Similarity::Equality => self.seeds.iter().any(|s| self.leq(s, a) && self.leq(s, b)),
            Similarity::Explicit(pairs) => {
                self.seeds.iter().any(|s| self.leq(s, a) && self.leq(s, b))
                    || pairs.pairs().iter().any(|(p, q)| {
                        ((self.leq(p, a) && self.leq(q, b)) || (self.leq(q, a) && self.leq(p, b)))
                            && self.contains(p)
                            && self.contains(q)
                    })
            }
        }
    }
}

/// Outcome of checking one axiom over a sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomCheck<S> {
    pub holds: bool,
    /// At most a handful of violating argument tuples.
    pub counterexamples: Vec<Vec<Value<S>>>,
}

impl<S> Default for AxiomCheck<S> {
    fn default() -> Self {
        AxiomCheck {
            holds: true,
            counterexamples: Vec::new(),
        }
    }
}

impl<S> AxiomCheck<S> {
    fn fail(&mut self, witness: Vec<Value<S>>) {
        self.holds = false;
        if self.counterexamples.len() < 5 {
            self.counterexamples.push(witness);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport<S> {
    pub idempotency: AxiomCheck<S>,
    pub commutativity: AxiomCheck<S>,
    pub associativity: AxiomCheck<S>,
    /// Checked over non-bottom values only.
    pub similarity_preservation: AxiomCheck<S>,
}

impl<S> AxiomReport<S> {
    /// Idempotency, commutativity and associativity all hold.
    pub fn semilattice_ok(&self) -> bool {
        self.idempotency.holds && self.commutativity.holds && self.associativity.holds
    }
}

/// Exhaustively checks the matching-function axioms over all pairs and
/// triples of `sample`.
pub fn validate_axioms<S: Scalar>(dom: &Domain<S>, sample: &[Value<S>]) -> Result<AxiomReport<S>> {
    let mut report = AxiomReport {
        idempotency: AxiomCheck::default(),
        commutativity: AxiomCheck::default(),
        associativity: AxiomCheck::default(),
        similarity_preservation: AxiomCheck::default(),
    };
    for a in sample {
        if dom.merge(a, a)? != *a {
            report.idempotency.fail(vec![a.clone()]);
        }
        for b in sample {
            let ab = dom.merge(a, b)?;
            if ab != dom.merge(b, a)? {
                report.commutativity.fail(vec![a.clone(), b.clone()]);
            }
            for c in sample {
                let left = dom.merge(&ab, c)?;
                let right = dom.merge(a, &dom.merge(b, c)?)?;
                if left != right {
                    report.associativity.fail(vec![a.clone(), b.clone(), c.clone()]);
                }
                if a.is_bottom() || b.is_bottom() || c.is_bottom() {
                    continue;
                }
                if dom.similar(a, b)? && !dom.similar(a, &dom.merge(b, c)?)? {
                    report
                        .similarity_preservation
                        .fail(vec![a.clone(), b.clone(), c.clone()]);
                }
            }
        }
    }
    Ok(report)
}
