//! Matching dependencies and the chase that enforces them.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, Schema, Tid, Tuple};
use crate::lattice::{ActiveClosure, Domain, Value};
use crate::scalar::Scalar;

/// A matching dependency `R1[X1] ≈ R2[X2] → R1[A1] ⇌ R2[A2]`.
///
/// Attribute names are unique across a schema, so the two relations are
/// determined by the attributes on each side.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatchDep {
    pub id: String,
    /// Compared attribute pairs, left relation first.
    pub lhs: Vec<(String, String)>,
    /// The pair of attributes identified when the left-hand side matches.
    pub rhs: (String, String),
}

impl MatchDep {
    pub fn new<A: Into<String>>(id: impl Into<String>, lhs: Vec<(A, A)>, rhs: (A, A)) -> Self {
        MatchDep {
            id: id.into(),
            lhs: lhs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
            rhs: (rhs.0.into(), rhs.1.into()),
        }
    }

    /// Every attribute mentioned on the left-hand side, from both relations.
    pub fn lhs_attributes(&self) -> impl Iterator<Item = &str> + '_ {
        self.lhs.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()])
    }

    pub fn rhs_attributes(&self) -> [&str; 2] {
        [&self.rhs.0, &self.rhs.1]
    }

    /// Binds the attribute names to relation indices and columns.
    pub fn resolve<S: Scalar>(&self, schema: &Schema<S>) -> Result<ResolvedMd> {
        let mut problems = Vec::new();
        let locate = |attr: &str, problems: &mut Vec<String>| {
            let found = schema.locate(attr);
            if found.is_none() {
                problems.push(format!("md `{}` refers to unknown attribute `{attr}`", self.id));
            }
            found
        };
        if self.lhs.is_empty() {
            problems.push(format!("md `{}` has an empty left-hand side", self.id));
        }
        let mut left_rel = None;
        let mut right_rel = None;
        let mut pairs = Vec::new();
        let sides = self.lhs.iter().chain(std::iter::once(&self.rhs));
        for (a, b) in sides {
            let (Some((r1, c1)), Some((r2, c2))) = (locate(a, &mut problems), locate(b, &mut problems)) else {
                continue;
            };
            for (rel, r, attr) in [(&mut left_rel, r1, a), (&mut right_rel, r2, b)] {
                match *rel {
                    None => *rel = Some(r),
                    Some(prev) if prev != r => problems.push(format!(
                        "md `{}`: attribute `{attr}` is not in relation `{}`",
                        self.id,
                        schema.relations()[prev].name
                    )),
                    _ => {}
                }
            }
            let d1 = schema.relations()[r1].domain(c1);
            let d2 = schema.relations()[r2].domain(c2);
            if d1.name() != d2.name() {
                problems.push(format!(
                    "md `{}`: attributes `{a}` and `{b}` are not comparable ({} vs {})",
                    self.id,
                    d1.name(),
                    d2.name()
                ));
            }
            pairs.push((c1, c2));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let rhs = pairs.pop().expect("rhs pair");
        Ok(ResolvedMd {
            left: left_rel.expect("resolved"),
            right: right_rel.expect("resolved"),
            lhs: pairs,
            rhs,
        })
    }
}

impl fmt::Display for MatchDep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let left: Vec<&str> = self.lhs.iter().map(|p| p.0.as_str()).collect();
        let right: Vec<&str> = self.lhs.iter().map(|p| p.1.as_str()).collect();
        write!(
            f,
            "{}: [{}] ≈ [{}] → {} ⇌ {}",
            self.id,
            left.join(","),
            right.join(","),
            self.rhs.0,
            self.rhs.1
        )
    }
}

/// A dependency bound to a schema: relation indices and column pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedMd {
    pub left: usize,
    pub right: usize,
    pub lhs: Vec<(usize, usize)>,
    pub rhs: (usize, usize),
}

pub(crate) fn resolve_all<S: Scalar>(schema: &Schema<S>, sigma: &[MatchDep]) -> Result<Vec<ResolvedMd>> {
    let mut problems = Vec::new();
    let mut ids = HashSet::new();
    let mut out = Vec::new();
    for md in sigma {
        if !ids.insert(md.id.as_str()) {
            problems.push(format!("md id `{}` is used twice", md.id));
        }
        match md.resolve(schema) {
            Ok(r) => out.push(r),
            Err(Error::Validation(p)) => problems.extend(p),
            Err(e) => problems.push(e.to_string()),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(Error::Validation(problems))
    }
}

/// Which similarity relation the chase consults on left-hand sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SimilarityMode {
    /// The domain's own similarity.
    Plain,
    /// `a ≈* b` over the active closure of the initial instance.
    OneSidedStar,
    /// Values are related when they dominate similar closure elements.
    Lifted,
}

const UNKNOWN: u8 = 2;

/// Interned values of one domain with cached merge and similarity results.
struct DomainTable<'a, S: Scalar> {
    domain: &'a Domain<S>,
    closure: Option<ActiveClosure<'a, S>>,
    values: Vec<Value<S>>,
    index: HashMap<Value<S>, u32>,
    merges: HashMap<(u32, u32), u32>,
    similar: Vec<Vec<u8>>,
}

impl<'a, S: Scalar> DomainTable<'a, S> {
    fn intern(&mut self, v: &Value<S>) -> u32 {
        if let Some(&id) = self.index.get(v) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(v.clone());
        self.index.insert(v.clone(), id);
        self.similar.push(Vec::new());
        id
    }

    fn merge(&mut self, a: u32, b: u32) -> Result<u32> {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.merges.get(&key) {
            return Ok(m);
        }
        let v = self.domain.merge(&self.values[a as usize], &self.values[b as usize])?;
        let m = self.intern(&v);
        self.merges.insert(key, m);
        Ok(m)
    }

    fn similar(&mut self, mode: SimilarityMode, a: u32, b: u32) -> bool {
        let row = &self.similar[a as usize];
        if let Some(&known) = row.get(b as usize) {
            if known != UNKNOWN {
                return known == 1;
            }
        }
        let (va, vb) = (&self.values[a as usize], &self.values[b as usize]);
        let result = match (mode, &self.closure) {
            (SimilarityMode::OneSidedStar, Some(c)) => c.star_similar(va, vb),
            (SimilarityMode::Lifted, Some(c)) => c.lifted_similar(va, vb),
            _ => self.domain.similar(va, vb).unwrap_or(false),
        };
        let row = &mut self.similar[a as usize];
        if row.len() <= b as usize {
            row.resize(b as usize + 1, UNKNOWN);
        }
        row[b as usize] = result as u8;
        result
    }
}

/// A compact chase state: one interned value id per tuple position.
pub(crate) type State = Vec<u32>;

/// The interned chase engine shared by the exact and approximate cleaners.
pub(crate) struct Engine<'a, S: Scalar> {
    schema: &'a Arc<Schema<S>>,
    pub(crate) mds: Vec<ResolvedMd>,
    tables: Vec<DomainTable<'a, S>>,
    /// Domain table per relation and column.
    column_table: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    tids: Vec<Vec<Tid>>,
    mode: SimilarityMode,
    pub(crate) bound: usize,
}

impl<'a, S: Scalar> Engine<'a, S> {
    pub(crate) fn new(d0: &'a Instance<S>, sigma: &[MatchDep], mode: SimilarityMode) -> Result<(Self, State)> {
        let schema = d0.schema();
        let mds = resolve_all(schema, sigma)?;
        let mut by_name: HashMap<&str, usize> = HashMap::new();
        let mut tables: Vec<DomainTable<'a, S>> = Vec::new();
        let mut column_table = Vec::new();
        for rel in schema.relations() {
            let mut cols = Vec::new();
            for attr in &rel.attributes {
                let idx = *by_name.entry(attr.domain.name()).or_insert_with(|| {
                    tables.push(DomainTable {
                        domain: &attr.domain,
                        closure: None,
                        values: Vec::new(),
                        index: HashMap::new(),
                        merges: HashMap::new(),
                        similar: Vec::new(),
                    });
                    tables.len() - 1
                });
                cols.push(idx);
            }
            column_table.push(cols);
        }
        let mut offsets = Vec::new();
        let mut tids = Vec::new();
        let mut state = Vec::new();
        for r in 0..schema.relations().len() {
            offsets.push(state.len());
            let tuples = d0.tuples(r);
            tids.push(tuples.iter().map(|t| t.tid.clone()).collect());
            for t in tuples {
                for (c, v) in t.values.iter().enumerate() {
                    state.push(tables[column_table[r][c]].intern(v));
                }
            }
        }
        let mut height = 1;
        for table in &mut tables {
            let seeds: Vec<Value<S>> = table.values.clone();
            let closure = ActiveClosure::new(table.domain, seeds)?;
            height = height.max(closure.height());
            if mode != SimilarityMode::Plain {
                table.closure = Some(closure);
            }
        }
        let n = d0.len();
        let bound = (n * n * mds.len() * height).max(1);
        let engine = Engine {
            schema,
            mds,
            tables,
            column_table,
            offsets,
            tids,
            mode,
            bound,
        };
        Ok((engine, state))
    }

    fn pos(&self, rel: usize, tuple: usize, col: usize) -> usize {
        self.offsets[rel] + tuple * self.schema.relations()[rel].arity() + col
    }

    pub(crate) fn tuple_count(&self, rel: usize) -> usize {
        self.tids[rel].len()
    }

    pub(crate) fn locate(&self, tid: &Tid) -> Option<(usize, usize)> {
        self.tids
            .iter()
            .enumerate()
            .find_map(|(r, ts)| ts.binary_search(tid).ok().map(|i| (r, i)))
    }

    pub(crate) fn tid(&self, rel: usize, i: usize) -> &Tid {
        &self.tids[rel][i]
    }

    pub(crate) fn lhs_matches(&mut self, state: &[u32], m: usize, i: usize, j: usize) -> bool {
        let md = &self.mds[m];
        if md.left == md.right && i == j {
            return false;
        }
        for k in 0..md.lhs.len() {
            let md = &self.mds[m];
            let (c1, c2) = md.lhs[k];
            let a = state[self.pos(md.left, i, c1)];
            let b = state[self.pos(md.right, j, c2)];
            let table = self.column_table[md.left][c1];
            if a != b && !self.tables[table].similar(self.mode, a, b) {
                return false;
            }
        }
        true
    }

    pub(crate) fn rhs_equal(&self, state: &[u32], m: usize, i: usize, j: usize) -> bool {
        let md = &self.mds[m];
        state[self.pos(md.left, i, md.rhs.0)] == state[self.pos(md.right, j, md.rhs.1)]
    }

    /// Fires on `(i, j)`: the left-hand side matches and the right-hand
    /// values differ.
    pub(crate) fn applicable(&mut self, state: &[u32], m: usize, i: usize, j: usize) -> bool {
        !self.rhs_equal(state, m, i, j) && self.lhs_matches(state, m, i, j)
    }

    /// Sets both right-hand positions to the match of their values.
    pub(crate) fn apply(&mut self, state: &mut [u32], m: usize, i: usize, j: usize) -> Result<()> {
        let md = &self.mds[m];
        let p1 = self.pos(md.left, i, md.rhs.0);
        let p2 = self.pos(md.right, j, md.rhs.1);
        let table = self.column_table[md.left][md.rhs.0];
        let merged = self.tables[table].merge(state[p1], state[p2])?;
        state[p1] = merged;
        state[p2] = merged;
        Ok(())
    }

    /// All applicable triples in dependency order, then tuple order.
    pub(crate) fn applicable_triples(&mut self, state: &[u32]) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for m in 0..self.mds.len() {
            let (l, r) = (self.mds[m].left, self.mds[m].right);
            for i in 0..self.tuple_count(l) {
                for j in 0..self.tuple_count(r) {
                    if self.applicable(state, m, i, j) {
                        out.push((m, i, j));
                    }
                }
            }
        }
        out
    }

    /// The first applicable pair of dependency `m` in tuple order.
    fn first_applicable(&mut self, state: &[u32], m: usize) -> Option<(usize, usize)> {
        let (l, r) = (self.mds[m].left, self.mds[m].right);
        for i in 0..self.tuple_count(l) {
            for j in 0..self.tuple_count(r) {
                if self.applicable(state, m, i, j) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub(crate) fn is_stable(&mut self, state: &[u32]) -> bool {
        (0..self.mds.len()).all(|m| self.first_applicable(state, m).is_none())
    }

    /// Runs the chase with dependencies tried in `order`, returning the
    /// applied steps.
    pub(crate) fn run(&mut self, state: &mut State, order: &[usize]) -> Result<Vec<(usize, usize, usize)>> {
        let mut steps = Vec::new();
        'outer: loop {
            for &m in order {
                if let Some((i, j)) = self.first_applicable(state, m) {
                    if steps.len() == self.bound {
                        return Err(Error::StepBoundExceeded { bound: self.bound });
                    }
                    self.apply(state, m, i, j)?;
                    steps.push((m, i, j));
                    continue 'outer;
                }
            }
            return Ok(steps);
        }
    }

    /// Runs the chase choosing uniformly among the applicable steps.
    fn run_random(&mut self, state: &mut State, seed: u64) -> Result<Vec<(usize, usize, usize)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut steps = Vec::new();
        loop {
            let candidates = self.applicable_triples(state);
            let Some(&(m, i, j)) = candidates.choose(&mut rng) else {
                return Ok(steps);
            };
            if steps.len() == self.bound {
                return Err(Error::StepBoundExceeded { bound: self.bound });
            }
            self.apply(state, m, i, j)?;
            steps.push((m, i, j));
        }
    }

    pub(crate) fn value(&self, state: &[u32], rel: usize, i: usize, col: usize) -> &Value<S> {
        let table = self.column_table[rel][col];
        &self.tables[table].values[state[self.pos(rel, i, col)] as usize]
    }

    pub(crate) fn decode(&self, state: &[u32]) -> Instance<S> {
        let relations = self
            .schema
            .relations()
            .iter()
            .enumerate()
            .map(|(r, rel)| {
                (0..self.tuple_count(r))
                    .map(|i| Tuple {
                        tid: self.tids[r][i].clone(),
                        values: (0..rel.arity()).map(|c| self.value(state, r, i, c).clone()).collect(),
                    })
                    .collect()
            })
            .collect();
        Instance::from_parts(self.schema.clone(), relations)
    }
}

/// Orders the candidate chase steps. The chase always applies the least
/// applicable step: dependencies in policy order, then tuple pairs by
/// identifier.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum ChasePolicy {
    /// Dependencies in declaration order.
    #[default]
    MdOrder,
    /// Dependencies in reverse declaration order.
    ReverseMdOrder,
    /// The listed dependency ids first, the rest in declaration order.
    Priority(Vec<String>),
    /// A uniformly random applicable step each time, from a seeded
    /// generator.
    Random(u64),
}

impl ChasePolicy {
    fn order(&self, sigma: &[MatchDep]) -> Result<Vec<usize>> {
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        match self {
            ChasePolicy::MdOrder | ChasePolicy::Random(_) => {}
            ChasePolicy::ReverseMdOrder => order.reverse(),
            ChasePolicy::Priority(ids) => {
                let mut front = Vec::new();
                for id in ids {
                    let m = sigma
                        .iter()
                        .position(|md| &md.id == id)
                        .ok_or_else(|| Error::Contract(format!("policy names unknown md `{id}`")))?;
                    if !front.contains(&m) {
                        front.push(m);
                    }
                }
                order.retain(|m| !front.contains(m));
                front.extend(order);
                order = front;
            }
        }
        Ok(order)
    }
}

impl FromStr for ChasePolicy {
    type Err = Error;

    /// `md-order`, `reverse-md-order`, `priority:id1,id2,...` or
    /// `random:seed`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md-order" => return Ok(ChasePolicy::MdOrder),
            "reverse-md-order" => return Ok(ChasePolicy::ReverseMdOrder),
            _ => {}
        }
        if let Some(ids) = s.strip_prefix("priority:") {
            return Ok(ChasePolicy::Priority(
                ids.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
            ));
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .trim()
                .parse()
                .map(ChasePolicy::Random)
                .map_err(|_| Error::Contract(format!("`{seed}` is not a seed")));
        }
        Err(Error::Contract(format!("unknown chase policy `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChaseStep {
    pub md: String,
    pub t1: Tid,
    pub t2: Tid,
}

impl fmt::Display for ChaseStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.md, self.t1, self.t2)
    }
}

/// The steps of one chase run and the stable instance it produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseTrace<S: Scalar> {
    pub steps: Vec<ChaseStep>,
    pub result: Instance<S>,
}

impl<S: Scalar> ChaseTrace<S> {
    /// One line per step: md id, first tid, second tid.
    pub fn log(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }

    /// Applies the steps to `d0` one at a time and returns every
    /// intermediate instance, starting with `d0`.
    pub fn instances(&self, d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Vec<Instance<S>>> {
        replay_steps(d0, sigma, &self.steps)
    }

    /// Replays the steps from `d0`.
    pub fn replay(&self, d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Instance<S>> {
        Ok(self.instances(d0, sigma)?.pop().expect("d0 is always present"))
    }
}

/// Parses a step log as written by [`ChaseTrace::log`].
pub fn parse_log(text: &str) -> Result<Vec<ChaseStep>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [md, t1, t2] => Ok(ChaseStep {
                    md: md.to_string(),
                    t1: Tid::from(*t1),
                    t2: Tid::from(*t2),
                }),
                _ => Err(Error::Parse {
                    line: n + 1,
                    column: 1,
                    message: "expected `md tid tid`".into(),
                }),
            }
        })
        .collect()
}

pub fn replay_steps<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep], steps: &[ChaseStep]) -> Result<Vec<Instance<S>>> {
    let mut out = vec![d0.clone()];
    for step in steps {
        let md = find_md(sigma, &step.md)?;
        let next = chase_step(out.last().expect("non-empty"), md, &step.t1, &step.t2)?;
        out.push(next);
    }
    Ok(out)
}

pub(crate) fn find_md<'s>(sigma: &'s [MatchDep], id: &str) -> Result<&'s MatchDep> {
    sigma
        .iter()
        .find(|md| md.id == id)
        .ok_or_else(|| Error::Contract(format!("unknown md `{id}`")))
}

/// Locates `t1` in the left and `t2` in the right relation of `md`.
pub(crate) fn locate_pair<S: Scalar>(
    engine: &Engine<'_, S>,
    m: usize,
    md: &MatchDep,
    t1: &Tid,
    t2: &Tid,
) -> Result<(usize, usize)> {
    let resolved = &engine.mds[m];
    let find = |tid: &Tid, rel: usize| match engine.locate(tid) {
        Some((r, i)) if r == rel => Ok(i),
        Some(_) => Err(Error::Contract(format!(
            "tuple {tid} is not in relation `{}` as required by md `{}`",
            engine.schema.relations()[rel].name,
            md.id
        ))),
        None => Err(Error::Contract(format!("unknown tuple identifier {tid}"))),
    };
    Ok((find(t1, resolved.left)?, find(t2, resolved.right)?))
}

/// Whether `t1` and `t2` match the left-hand side of `md` in `d`. A tuple
/// never matches itself.
pub fn lhs_matches<S: Scalar>(md: &MatchDep, d: &Instance<S>, t1: &Tid, t2: &Tid) -> Result<bool> {
    let (mut engine, state) = Engine::new(d, std::slice::from_ref(md), SimilarityMode::Plain)?;
    let (i, j) = locate_pair(&engine, 0, md, t1, t2)?;
    Ok(engine.lhs_matches(&state, 0, i, j))
}

/// `(D, D) ⊨ Σ`: every matching pair already agrees on the right-hand side.
pub fn is_stable<S: Scalar>(d: &Instance<S>, sigma: &[MatchDep]) -> Result<bool> {
    let (mut engine, state) = Engine::new(d, sigma, SimilarityMode::Plain)?;
    Ok(engine.is_stable(&state))
}

/// `(D, D2) ⊨ Σ`: for every pair matching a left-hand side in `D`, the
/// right-hand values agree in `D2` and the pair still matches there.
pub fn pair_satisfies<S: Scalar>(d: &Instance<S>, d2: &Instance<S>, sigma: &[MatchDep]) -> Result<bool> {
    if !d.same_tids(d2) {
        return Err(Error::Contract("instances do not have the same tuple identifiers".into()));
    }
    let (mut e1, s1) = Engine::new(d, sigma, SimilarityMode::Plain)?;
    let (mut e2, s2) = Engine::new(d2, sigma, SimilarityMode::Plain)?;
    for m in 0..e1.mds.len() {
        let (l, r) = (e1.mds[m].left, e1.mds[m].right);
        for i in 0..e1.tuple_count(l) {
            for j in 0..e1.tuple_count(r) {
                if e1.lhs_matches(&s1, m, i, j) && !(e2.rhs_equal(&s2, m, i, j) && e2.lhs_matches(&s2, m, i, j)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Enforces `md` once on `(t1, t2)`: both right-hand values become their
/// match. Fails with [`Error::NotApplicable`] unless the left-hand side
/// matches and the right-hand values differ.
pub fn chase_step<S: Scalar>(d: &Instance<S>, md: &MatchDep, t1: &Tid, t2: &Tid) -> Result<Instance<S>> {
    let (mut engine, mut state) = Engine::new(d, std::slice::from_ref(md), SimilarityMode::Plain)?;
    let (i, j) = locate_pair(&engine, 0, md, t1, t2)?;
    if !engine.applicable(&state, 0, i, j) {
        return Err(Error::NotApplicable {
            md: md.id.clone(),
            t1: t1.to_string(),
            t2: t2.to_string(),
        });
    }
    engine.apply(&mut state, 0, i, j)?;
    Ok(engine.decode(&state))
}

/// Chases `d0` to a stable instance, always applying the least applicable
/// step under `policy`, or a random one under [`ChasePolicy::Random`].
///
/// Every step strictly grows a value inside the finite closure of the
/// initial values, so the run is bounded by `n² · |Σ| · h` steps for `n`
/// tuples and closure height `h`. Exceeding the bound is reported as
/// [`Error::StepBoundExceeded`].
pub fn chase<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep], policy: &ChasePolicy) -> Result<ChaseTrace<S>> {
    let order = policy.order(sigma)?;
    let (mut engine, mut state) = Engine::new(d0, sigma, SimilarityMode::Plain)?;
    let steps = match policy {
        ChasePolicy::Random(seed) => engine.run_random(&mut state, *seed)?,
        _ => engine.run(&mut state, &order)?,
    };
    let steps = steps
        .into_iter()
        .map(|(m, i, j)| ChaseStep {
            md: sigma[m].id.clone(),
            t1: engine.tid(engine.mds[m].left, i).clone(),
            t2: engine.tid(engine.mds[m].right, j).clone(),
        })
        .collect();
    Ok(ChaseTrace {
        steps,
        result: engine.decode(&state),
    })
}

/// The distinct clean instances reachable from `d0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration<S: Scalar> {
    /// Sorted by content.
    pub instances: Vec<Instance<S>>,
    /// More than `limit` clean instances exist, or the state budget ran
    /// out; `instances` holds those found so far.
    pub truncated: bool,
    /// Distinct intermediate states visited.
    pub explored: usize,
}

/// States visited by [`enumerate_clean`] before it gives up.
pub const DEFAULT_MAX_STATES: usize = 250_000;

/// Explores every order of chase steps from `d0`, memoizing visited states,
/// and collects the stable instances reached.
pub fn enumerate_clean<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep], limit: usize) -> Result<Enumeration<S>> {
    enumerate_clean_within(d0, sigma, limit, DEFAULT_MAX_STATES)
}

/// [`enumerate_clean`] visiting at most `max_states` distinct states.
pub fn enumerate_clean_within<S: Scalar>(
    d0: &Instance<S>,
    sigma: &[MatchDep],
    limit: usize,
    max_states: usize,
) -> Result<Enumeration<S>> {
    if limit == 0 || max_states == 0 {
        return Err(Error::Contract("enumeration limits must be at least 1".into()));
    }
    let (mut engine, start) = Engine::new(d0, sigma, SimilarityMode::Plain)?;
    let mut found: Vec<State> = Vec::new();
    let mut over_limit = false;
    let walk = explore(&mut engine, start, max_states, |_, state| {
        if found.len() == limit {
            over_limit = true;
            return ControlFlow::Break(());
        }
        found.push(state);
        ControlFlow::Continue(())
    })?;
    let mut instances: Vec<Instance<S>> = found.iter().map(|s| engine.decode(s)).collect();
    instances.sort_by_cached_key(content_key);
    Ok(Enumeration {
        instances,
        truncated: over_limit || walk.out_of_budget,
        explored: walk.explored,
    })
}

/// The outcome of [`find_clean`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Search<S: Scalar> {
    /// The first clean instance accepted by the predicate.
    pub found: Option<Instance<S>>,
    /// Every clean instance was examined.
    pub complete: bool,
    pub explored: usize,
}

/// Searches the clean instances of `d0` for one accepted by `accept`,
/// stopping at the first.
pub fn find_clean<S: Scalar>(
    d0: &Instance<S>,
    sigma: &[MatchDep],
    max_states: usize,
    mut accept: impl FnMut(&Instance<S>) -> bool,
) -> Result<Search<S>> {
    if max_states == 0 {
        return Err(Error::Contract("enumeration limits must be at least 1".into()));
    }
    let (mut engine, start) = Engine::new(d0, sigma, SimilarityMode::Plain)?;
    let mut found = None;
    let walk = explore(&mut engine, start, max_states, |engine, state| {
        let d = engine.decode(&state);
        if accept(&d) {
            found = Some(d);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(Search {
        complete: found.is_none() && !walk.out_of_budget,
        found,
        explored: walk.explored,
    })
}

struct Walk {
    out_of_budget: bool,
    explored: usize,
}

/// Depth-first search over chase states, memoizing visited ones, handing
/// each stable state to `on_clean`.
fn explore<S: Scalar>(
    engine: &mut Engine<'_, S>,
    start: State,
    max_states: usize,
    mut on_clean: impl FnMut(&Engine<'_, S>, State) -> ControlFlow<()>,
) -> Result<Walk> {
    let mut visited: HashSet<State> = HashSet::new();
    let mut stack = vec![start.clone()];
    visited.insert(start);
    while let Some(state) = stack.pop() {
        let steps = engine.applicable_triples(&state);
        if steps.is_empty() {
            if on_clean(engine, state).is_break() {
                break;
            }
            continue;
        }
        for (m, i, j) in steps.into_iter().rev() {
            let mut next = state.clone();
            engine.apply(&mut next, m, i, j)?;
            if !visited.contains(&next) {
                if visited.len() == max_states {
                    return Ok(Walk {
                        out_of_budget: true,
                        explored: visited.len(),
                    });
                }
                visited.insert(next.clone());
                stack.push(next);
            }
        }
    }
    Ok(Walk {
        out_of_budget: false,
        explored: visited.len(),
    })
}

fn content_key<S: Scalar>(d: &Instance<S>) -> Vec<(Tid, Vec<Value<S>>)> {
    d.all_tuples().map(|(_, t)| (t.tid.clone(), t.values.clone())).collect()
}

/// No dependency's right-hand attribute occurs on any left-hand side.
pub fn is_interaction_free(sigma: &[MatchDep]) -> bool {
    let lhs: HashSet<&str> = sigma.iter().flat_map(MatchDep::lhs_attributes).collect();
    sigma.iter().all(|md| md.rhs_attributes().iter().all(|a| !lhs.contains(a)))
}

/// Sufficient conditions for a single clean instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniqueCleanReport {
    pub interaction_free: bool,
    /// Every domain compared or identified by some dependency preserves
    /// similarity under matching.
    pub similarity_preserving: bool,
    /// Domains that break the similarity-preserving condition.
    pub non_preserving_domains: Vec<String>,
}

impl UniqueCleanReport {
    pub fn guarantees_unique(&self) -> bool {
        self.interaction_free || self.similarity_preserving
    }
}

pub fn check_unique_clean_preconditions<S: Scalar>(sigma: &[MatchDep], schema: &Schema<S>) -> Result<UniqueCleanReport> {
    resolve_all(schema, sigma)?;
    let mut non_preserving: Vec<String> = sigma
        .iter()
        .flat_map(|md| md.lhs_attributes().chain(md.rhs_attributes()).collect::<Vec<_>>())
        .filter_map(|a| schema.locate(a).map(|(r, c)| schema.relations()[r].domain(c)))
        .filter(|d| !d.is_similarity_preserving())
        .map(|d| d.name().to_string())
        .collect();
    non_preserving.sort();
    non_preserving.dedup();
    Ok(UniqueCleanReport {
        interaction_free: is_interaction_free(sigma),
        similarity_preserving: non_preserving.is_empty(),
        non_preserving_domains: non_preserving,
    })
}
