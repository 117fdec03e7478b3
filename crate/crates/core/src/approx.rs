//! Polynomial bounds on the clean instances: the under-clean instance lies
//! below every clean instance and the over-clean instance above all of them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::{Instance, Tid};
use crate::lattice::{ActiveClosure, Value};
use crate::md::{find_md, locate_pair, ChaseStep, Engine, MatchDep, SimilarityMode, State};
use crate::query::{eval, is_monotone_syntax, Query};
use crate::scalar::Scalar;

/// `φ → φ'` when the right-hand side of `φ` occurs on the left-hand side
/// of `φ'`; interaction is reachability along one or more edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecedenceGraph {
    ids: Vec<String>,
    precedes: Vec<Vec<bool>>,
    reach: Vec<Vec<bool>>,
}

impl PrecedenceGraph {
    pub fn new(sigma: &[MatchDep]) -> Self {
        let n = sigma.len();
        let precedes: Vec<Vec<bool>> = sigma
            .iter()
            .map(|a| {
                sigma
                    .iter()
                    .map(|b| b.lhs_attributes().any(|x| a.rhs_attributes().contains(&x)))
                    .collect()
            })
            .collect();
        let mut reach = precedes.clone();
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        PrecedenceGraph {
            ids: sigma.iter().map(|m| m.id.clone()).collect(),
            precedes,
            reach,
        }
    }

    fn index(&self, id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|m| m == id)
            .ok_or_else(|| Error::Contract(format!("unknown md `{id}`")))
    }

    pub fn precedes(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.precedes[self.index(a)?][self.index(b)?])
    }

    pub fn interacts(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.reach[self.index(a)?][self.index(b)?])
    }

    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (i, row) in self.precedes.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                if e {
                    out.push((self.ids[i].as_str(), self.ids[j].as_str()));
                }
            }
        }
        out
    }
}

/// Whether `a` interacts with `b` in `sigma`.
pub fn interacts(a: &str, b: &str, sigma: &[MatchDep]) -> Result<bool> {
    PrecedenceGraph::new(sigma).interacts(a, b)
}

/// The left-hand side of `md` matches on `(t1, t2)` in `d` and the
/// right-hand values differ.
pub fn freshly_applicable<S: Scalar>(md: &MatchDep, d: &Instance<S>, t1: &Tid, t2: &Tid) -> Result<bool> {
    let (mut engine, state) = Engine::new(d, std::slice::from_ref(md), SimilarityMode::Plain)?;
    let (i, j) = locate_pair(&engine, 0, md, t1, t2)?;
    Ok(engine.applicable(&state, 0, i, j))
}

/// `md` is freshly applicable on `(t1, t2)` in `d0` and no dependency that
/// interacts with it is freshly applicable on either tuple, paired with
/// any other tuple in either role.
pub fn safely_applicable<S: Scalar>(md: &str, sigma: &[MatchDep], d0: &Instance<S>, t1: &Tid, t2: &Tid) -> Result<bool> {
    let m = sigma
        .iter()
        .position(|x| x.id == md)
        .ok_or_else(|| Error::Contract(format!("unknown md `{md}`")))?;
    let (mut engine, state) = Engine::new(d0, sigma, SimilarityMode::Plain)?;
    let (i, j) = locate_pair(&engine, m, find_md(sigma, md)?, t1, t2)?;
    let graph = PrecedenceGraph::new(sigma);
    Ok(engine.applicable(&state, m, i, j) && !disturbed(&mut engine, &state, &graph, m, i, j))
}

/// Some dependency interacting with `m` is freshly applicable on a pair
/// involving tuple `i` or `j` of `m`.
fn disturbed<S: Scalar>(engine: &mut Engine<'_, S>, state: &[u32], graph: &PrecedenceGraph, m: usize, i: usize, j: usize) -> bool {
    let (left, right) = (engine.mds[m].left, engine.mds[m].right);
    for other in 0..engine.mds.len() {
        if !graph.reach[other][m] {
            continue;
        }
        let (ol, or) = (engine.mds[other].left, engine.mds[other].right);
        for (rel, t) in [(left, i), (right, j)] {
            if rel == ol && (0..engine.tuple_count(or)).any(|k| engine.applicable(state, other, t, k)) {
                return true;
            }
            if rel == or && (0..engine.tuple_count(ol)).any(|k| engine.applicable(state, other, k, t)) {
                return true;
            }
        }
    }
    false
}

/// The left-hand values of `(i, j)` under `m` are the same in `d0` and in
/// the over-clean instance.
fn lhs_settled<S: Scalar>(engine: &Engine<'_, S>, state: &[u32], over: &Instance<S>, m: usize, i: usize, j: usize) -> bool {
    let md = &engine.mds[m];
    md.lhs.iter().all(|&(c1, c2)| {
        *engine.value(state, md.left, i, c1) == over.tuples(md.left)[i].values[c1]
            && *engine.value(state, md.right, j, c2) == over.tuples(md.right)[j].values[c2]
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Safety {
    Literal,
    Guarded,
}

fn safe_triples<S: Scalar>(
    engine: &mut Engine<'_, S>,
    state: &[u32],
    sigma: &[MatchDep],
    d0: &Instance<S>,
    safety: Safety,
) -> Result<Vec<(usize, usize, usize)>> {
    let graph = PrecedenceGraph::new(sigma);
    let over = match safety {
        Safety::Guarded => Some(over_clean(d0, sigma)?),
        Safety::Literal => None,
    };
    let mut out = Vec::new();
    for (m, i, j) in engine.applicable_triples(state) {
        if disturbed(engine, state, &graph, m, i, j) {
            continue;
        }
        if let Some(over) = &over {
            if !lhs_settled(engine, state, over, m, i, j) {
                continue;
            }
        }
        out.push((m, i, j));
    }
    Ok(out)
}

fn to_steps<S: Scalar>(engine: &Engine<'_, S>, sigma: &[MatchDep], triples: &[(usize, usize, usize)]) -> Vec<ChaseStep> {
    triples
        .iter()
        .map(|&(m, i, j)| ChaseStep {
            md: sigma[m].id.clone(),
            t1: engine.tid(engine.mds[m].left, i).clone(),
            t2: engine.tid(engine.mds[m].right, j).clone(),
        })
        .collect()
}

/// The safely applicable steps whose left-hand values no chase can change,
/// which is every step the under-clean instance enforces.
pub fn safe_steps<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Vec<ChaseStep>> {
    let (mut engine, state) = Engine::new(d0, sigma, SimilarityMode::Plain)?;
    let triples = safe_triples(&mut engine, &state, sigma, d0, Safety::Guarded)?;
    Ok(to_steps(&engine, sigma, &triples))
}

/// Every safely applicable step of `d0`, without the stability guard.
pub fn literal_safe_steps<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Vec<ChaseStep>> {
    let (mut engine, state) = Engine::new(d0, sigma, SimilarityMode::Plain)?;
    let triples = safe_triples(&mut engine, &state, sigma, d0, Safety::Literal)?;
    Ok(to_steps(&engine, sigma, &triples))
}

/// Enforces `steps` in the given order, repeatedly, until every pair agrees
/// on its right-hand side.
fn enforce_all<S: Scalar>(engine: &mut Engine<'_, S>, state: &mut State, steps: &[(usize, usize, usize)]) -> Result<()> {
    loop {
        let mut changed = false;
        for &(m, i, j) in steps {
            if !engine.rhs_equal(state, m, i, j) {
                engine.apply(state, m, i, j)?;
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

fn under_clean_with<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep], safety: Safety, order: Option<&[usize]>) -> Result<Instance<S>> {
    let (mut engine, mut state) = Engine::new(d0, sigma, SimilarityMode::Plain)?;
    let mut triples = safe_triples(&mut engine, &state, sigma, d0, safety)?;
    if let Some(order) = order {
        let mut seen = vec![false; triples.len()];
        for &k in order {
            if k >= triples.len() || std::mem::replace(&mut seen[k], true) {
                return Err(Error::Contract(format!(
                    "order is not a permutation of the {} safe steps",
                    triples.len()
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Contract(format!(
                "order is not a permutation of the {} safe steps",
                triples.len()
            )));
        }
        triples = order.iter().map(|&k| triples[k]).collect();
    }
    enforce_all(&mut engine, &mut state, &triples)?;
    Ok(engine.decode(&state))
}

/// The under-clean instance: every step of [`safe_steps`] enforced until
/// each such pair agrees. It lies below every clean instance but need not
/// be stable.
pub fn under_clean<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Instance<S>> {
    under_clean_with(d0, sigma, Safety::Guarded, None)
}

/// As [`under_clean`], enforcing the safe steps in the order given by a
/// permutation of the indices of [`safe_steps`].
pub fn under_clean_in_order<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep], order: &[usize]) -> Result<Instance<S>> {
    under_clean_with(d0, sigma, Safety::Guarded, Some(order))
}

/// Enforces every safely applicable step without the stability guard.
///
/// A step can be safely applicable while a chain of other dependencies
/// still changes its left-hand values, so this instance is not always below
/// every clean instance.
pub fn under_clean_unguarded<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Instance<S>> {
    under_clean_with(d0, sigma, Safety::Literal, None)
}

/// Starred similarities over the active closure of an initial instance.
pub struct StarSigma<'a, S: Scalar> {
    closures: BTreeMap<String, ActiveClosure<'a, S>>,
}

/// Builds the starred similarities from the values of `d0`.
pub fn star_sigma<S: Scalar>(d0: &Instance<S>) -> Result<StarSigma<'_, S>> {
    let mut seeds: BTreeMap<String, (usize, usize, Vec<Value<S>>)> = BTreeMap::new();
    for (r, rel) in d0.schema().relations().iter().enumerate() {
        for (c, attr) in rel.attributes.iter().enumerate() {
            let entry = seeds.entry(attr.domain.name().to_string()).or_insert((r, c, Vec::new()));
            entry.2.extend(d0.tuples(r).iter().map(|t| t.values[c].clone()));
        }
    }
    let mut closures = BTreeMap::new();
    for (name, (r, c, values)) in seeds {
        let domain = d0.schema().relations()[r].domain(c);
        closures.insert(name, ActiveClosure::new(domain, values)?);
    }
    Ok(StarSigma { closures })
}

impl<'a, S: Scalar> StarSigma<'a, S> {
    fn closure(&self, domain: &str) -> Result<&ActiveClosure<'a, S>> {
        self.closures
            .get(domain)
            .ok_or_else(|| Error::Contract(format!("unknown domain `{domain}`")))
    }

    pub fn closure_of(&self, domain: &str) -> Option<&ActiveClosure<'a, S>> {
        self.closures.get(domain)
    }

    /// The similarity used by the over-clean chase: both values dominate
    /// closure elements that are similar to each other.
    pub fn similar(&self, domain: &str, a: &Value<S>, b: &Value<S>) -> Result<bool> {
        Ok(self.closure(domain)?.lifted_similar(a, b))
    }

    /// The one-sided `a ≈* b`: some closure element similar to `a` lies
    /// below `b`.
    pub fn star_similar(&self, domain: &str, a: &Value<S>, b: &Value<S>) -> Result<bool> {
        Ok(self.closure(domain)?.star_similar(a, b))
    }

    /// Whether `d` is stable when every left-hand similarity is replaced
    /// by [`StarSigma::similar`].
    pub fn is_stable(&self, d: &Instance<S>, sigma: &[MatchDep]) -> Result<bool> {
        let schema = d.schema();
        for md in sigma {
            let r = md.resolve(schema)?;
            for t1 in d.tuples(r.left) {
                for t2 in d.tuples(r.right) {
                    if r.left == r.right && t1.tid == t2.tid {
                        continue;
                    }
                    if t1.values[r.rhs.0] == t2.values[r.rhs.1] {
                        continue;
                    }
                    let mut matches = true;
                    for &(c1, c2) in &r.lhs {
                        let dom = schema.relations()[r.left].domain(c1).name();
                        let (a, b) = (&t1.values[c1], &t2.values[c2]);
                        if a != b && !self.similar(dom, a, b)? {
                            matches = false;
                            break;
                        }
                    }
                    if matches {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

fn chase_with<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep], mode: SimilarityMode) -> Result<Instance<S>> {
    let (mut engine, mut state) = Engine::new(d0, sigma, mode)?;
    let order: Vec<usize> = (0..sigma.len()).collect();
    engine.run(&mut state, &order)?;
    Ok(engine.decode(&state))
}

/// The over-clean instance: `d0` chased to stability under the starred
/// similarities of [`StarSigma::similar`]. It lies above every clean
/// instance, tuple by tuple.
pub fn over_clean<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Instance<S>> {
    chase_with(d0, sigma, SimilarityMode::Lifted)
}

/// The chase under the one-sided `≈*`. Once both compared values have
/// grown, a similarity between their seeds can be lost, so this instance
/// can miss clean instances.
pub fn over_clean_one_sided<S: Scalar>(d0: &Instance<S>, sigma: &[MatchDep]) -> Result<Instance<S>> {
    chase_with(d0, sigma, SimilarityMode::OneSidedStar)
}

/// The approximate clean answer of a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxAnswer<S: Scalar> {
    pub under: Instance<S>,
    pub over: Instance<S>,
    /// The answer on the under-clean instance, below the certain answer.
    pub lower: Instance<S>,
    /// The answer on the over-clean instance, above the possible answer.
    pub upper: Instance<S>,
    /// The query is syntactically monotone. Without it the bounds carry no
    /// guarantee.
    pub monotone: bool,
}

pub fn approx_answers<S: Scalar>(q: &Query, d0: &Instance<S>, sigma: &[MatchDep]) -> Result<ApproxAnswer<S>> {
    let under = under_clean(d0, sigma)?;
    let over = over_clean(d0, sigma)?;
    Ok(ApproxAnswer {
        lower: eval(q, &under)?,
        upper: eval(q, &over)?,
        under,
        over,
        monotone: is_monotone_syntax(q),
    })
}
