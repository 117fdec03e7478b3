#![allow(dead_code)]

use std::path::PathBuf;

use mdclean::instance::Tuple;
use mdclean::{Instance, MatchDep, Project, Query, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value as Json};

pub fn project_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("projects").join(name)
}

pub fn load(name: &str) -> Project {
    Project::load(project_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// An instance over the project's schema, one relation, values written in
/// their text form.
pub fn rows(p: &Project, relation: &str, rows: &[(&str, &[&str])]) -> Instance {
    let rel = p.schema.relation(relation).expect("relation");
    let mut d = Instance::new(p.schema.clone());
    for (tid, texts) in rows {
        let values: Vec<Value> = rel
            .attributes
            .iter()
            .zip(texts.iter())
            .map(|(a, t)| a.domain.parse_text(t).expect("value"))
            .collect();
        d.insert(relation, Tuple::new(*tid, values)).expect("insert");
    }
    d
}

/// The single relation of an answer as text rows.
pub fn answer_rows(d: &Instance) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = d
        .tuples(0)
        .iter()
        .map(|t| t.values.iter().map(ToString::to_string).collect())
        .collect();
    out.sort();
    out
}

const ATOMS: [&str; 4] = ["u", "v", "w", "x"];

fn random_atoms(rng: &mut impl Rng) -> Json {
    let n = rng.gen_range(1..=2);
    let mut chosen: Vec<&str> = ATOMS.choose_multiple(rng, n).copied().collect();
    chosen.sort();
    json!(chosen)
}

fn random_pairs(rng: &mut impl Rng) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for i in 0..ATOMS.len() {
        for j in i + 1..ATOMS.len() {
            if rng.gen_bool(0.3) {
                pairs.push((ATOMS[i].to_string(), ATOMS[j].to_string()));
            }
        }
    }
    pairs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Explicit,
    Lifted,
    Equality,
    Gap,
    Bool,
}

fn random_value(kind: Kind, rng: &mut impl Rng) -> Json {
    match kind {
        Kind::Explicit | Kind::Lifted | Kind::Equality => random_atoms(rng),
        Kind::Gap => {
            let lo = rng.gen_range(0..6);
            let hi = lo + rng.gen_range(0..3);
            json!([lo.to_string(), hi.to_string()])
        }
        Kind::Bool => json!(rng.gen_range(0..2)),
    }
}

fn domain_json(name: &str, kind: Kind, rng: &mut impl Rng) -> Json {
    match kind {
        Kind::Explicit => {
            let mut pairs: Vec<Json> = random_pairs(rng)
                .into_iter()
                .map(|(a, b)| json!([a, b]))
                .collect();
            // Occasionally relate a two-atom value to a singleton.
            if rng.gen_bool(0.3) {
                pairs.push(json!([["u", "v"], "x"]));
            }
            json!({"name": name, "kind": "atoms", "similarity": {"mode": "explicit", "pairs": pairs}})
        }
        Kind::Lifted => {
            let pairs: Vec<Json> = random_pairs(rng).into_iter().map(|(a, b)| json!([a, b])).collect();
            json!({"name": name, "kind": "atoms", "similarity": {"mode": "lifted", "pairs": pairs}})
        }
        Kind::Equality => json!({"name": name, "kind": "atoms", "similarity": {"mode": "equality"}}),
        Kind::Gap => json!({"name": name, "kind": "interval", "similarity": {"mode": "gap", "epsilon": "1"}}),
        Kind::Bool => json!({"name": name, "kind": "bool3", "similarity": {"mode": "equality"}}),
    }
}

/// A random project: up to two relations, at most 5 tuples, at most 3
/// dependencies, at most 4 atoms per domain, no bottom values.
pub fn random_project(rng: &mut impl Rng) -> Project {
    const KINDS: [Kind; 5] = [Kind::Explicit, Kind::Lifted, Kind::Equality, Kind::Gap, Kind::Bool];
    let ndom = rng.gen_range(2..=3);
    let kinds: Vec<Kind> = (0..ndom).map(|_| *KINDS.choose(rng).unwrap()).collect();
    let domains: Vec<Json> = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| domain_json(&format!("D{i}"), *k, rng))
        .collect();
    let nrel = if rng.gen_bool(0.25) { 2 } else { 1 };
    let mut relations = Vec::new();
    let mut attrs: Vec<Vec<(String, usize)>> = Vec::new();
    for r in 0..nrel {
        let name = ["R", "S"][r];
        let arity = rng.gen_range(2..=3);
        let mut list = Vec::new();
        for c in 0..arity {
            // The first two columns of every relation cover distinct
            // domains so dependencies always find comparable pairs.
            let dom = if c < ndom.min(2) { c } else { rng.gen_range(0..ndom) };
            list.push((format!("{name}{c}"), dom));
        }
        relations.push(json!({
            "name": name,
            "attributes": list.iter().map(|(a, d)| json!({"name": a, "domain": format!("D{d}")})).collect::<Vec<_>>(),
        }));
        attrs.push(list);
    }
    let total = rng.gen_range(2..=5);
    let mut data = serde_json::Map::new();
    let mut counts = vec![0; nrel];
    for k in 0..total {
        let r = if k < nrel { k } else { rng.gen_range(0..nrel) };
        counts[r] += 1;
        let values: serde_json::Map<String, Json> = attrs[r]
            .iter()
            .map(|(a, d)| (a.clone(), random_value(kinds[*d], rng)))
            .collect();
        data.entry(["R", "S"][r])
            .or_insert_with(|| json!([]))
            .as_array_mut()
            .unwrap()
            .push(json!({"tid": format!("t{}", k + 1), "values": values}));
    }
    let nmd = rng.gen_range(1..=3);
    let mut mds = Vec::new();
    for m in 0..nmd {
        let l = rng.gen_range(0..nrel);
        let r = rng.gen_range(0..nrel);
        let comparable: Vec<(String, String)> = attrs[l]
            .iter()
            .flat_map(|(a, da)| {
                attrs[r]
                    .iter()
                    .filter(move |(_, db)| db == da)
                    .map(move |(b, _)| (a.clone(), b.clone()))
            })
            .collect();
        let nlhs = rng.gen_range(1..=2.min(comparable.len()));
        let lhs: Vec<(String, String)> = comparable.choose_multiple(rng, nlhs).cloned().collect();
        let rhs = comparable.choose(rng).unwrap().clone();
        mds.push(json!({"id": format!("m{}", m + 1), "lhs": lhs, "rhs": rhs}));
    }
    let project = json!({
        "domains": domains,
        "relations": relations,
        "mds": mds,
        "data": data,
    });
    Project::from_json_str(&project.to_string()).unwrap_or_else(|e| panic!("generated project invalid: {e}\n{project}"))
}

fn attribute_names(p: &Project, relation: &str) -> Vec<String> {
    p.schema
        .relation(relation)
        .unwrap()
        .attributes
        .iter()
        .map(|a| a.name.clone())
        .collect()
}

fn text_of(v: &Value) -> String {
    v.to_string()
}

/// A random positive query over `p`, with output attributes.
pub fn random_query(p: &Project, rng: &mut impl Rng, depth: u32) -> (Query, Vec<String>) {
    let rels: Vec<String> = p.schema.relations().iter().map(|r| r.name.clone()).collect();
    let rel = rels.choose(rng).unwrap().clone();
    let attrs = attribute_names(p, &rel);
    let base = (Query::rel(rel.clone()), attrs);
    if depth == 0 {
        return base;
    }
    let (q, attrs) = random_query(p, rng, depth - 1);
    let schema_of = |a: &str| {
        let (r, c) = p.schema.locate(a).unwrap();
        p.schema.relations()[r].attributes[c].domain.clone()
    };
    match rng.gen_range(0..6) {
        0 => {
            let n = rng.gen_range(1..=attrs.len());
            let keep: Vec<String> = attrs.choose_multiple(rng, n).cloned().collect();
            (Query::project(keep.clone(), q), keep)
        }
        1 => {
            let a = attrs.choose(rng).unwrap().clone();
            let constant = constant_for(p, &a, rng);
            (Query::select_eq(a, constant, q), attrs)
        }
        2 => {
            let a = attrs.choose(rng).unwrap().clone();
            let da = schema_of(&a);
            let partners: Vec<String> = attrs
                .iter()
                .filter(|b| **b != a && schema_of(b).name() == da.name())
                .cloned()
                .collect();
            match partners.choose(rng) {
                Some(b) => (Query::select_attr_eq(a, b.clone(), q), attrs),
                None => (q, attrs),
            }
        }
        3 => {
            let a = attrs.choose(rng).unwrap().clone();
            let constant = constant_for(p, &a, rng);
            (Query::select_dom(constant, a, q), attrs)
        }
        4 => (Query::union(q.clone(), q), attrs),
        _ => {
            // Products only over a projection of a fresh base, to keep the
            // attribute names disjoint.
            let (other, other_attrs) = base;
            let fresh: Vec<String> = other_attrs.iter().filter(|a| !attrs.contains(a)).cloned().collect();
            if fresh.is_empty() {
                return (q, attrs);
            }
            let right = Query::project(fresh.clone(), other);
            let mut all = attrs;
            all.extend(fresh);
            (Query::product(q, right), all)
        }
    }
}

/// A constant drawn from the current values of `attr`, or a sub-value of
/// one.
fn constant_for(p: &Project, attr: &str, rng: &mut impl Rng) -> String {
    let (r, c) = p.schema.locate(attr).unwrap();
    let values: Vec<&Value> = p.instance.tuples(r).iter().map(|t| &t.values[c]).collect();
    match values.choose(rng) {
        Some(Value::Atoms(set)) if rng.gen_bool(0.5) => set.iter().next().unwrap().to_string(),
        Some(v) => text_of(v),
        None => "u".into(),
    }
}

/// The sigma of a project, for brevity.
pub fn sigma(p: &Project) -> &[MatchDep] {
    &p.sigma
}

/// Closure height bound of the chase: distinct non-bottom values of the
/// largest domain, plus one.
pub fn step_bound(p: &Project) -> usize {
    use std::collections::{BTreeMap, BTreeSet};
    let mut seeds: BTreeMap<String, BTreeSet<Value>> = BTreeMap::new();
    for (r, rel) in p.schema.relations().iter().enumerate() {
        for (c, attr) in rel.attributes.iter().enumerate() {
            let set = seeds.entry(attr.domain.name().to_string()).or_default();
            set.extend(p.instance.tuples(r).iter().map(|t| t.values[c].clone()).filter(|v| !v.is_bottom()));
        }
    }
    let h = seeds.values().map(|s| s.len() + 1).max().unwrap_or(1);
    let n = p.instance.len();
    (n * n * p.sigma.len() * h).max(1)
}

/// Every tuple of `a` is below the tuple with the same tid in `b`.
pub fn tid_leq(a: &Instance, b: &Instance) -> bool {
    a.all_tuples().all(|(r, t)| {
        let Some(u) = b.get(&t.tid) else { return false };
        let rel = &a.schema().relations()[r];
        mdclean::instance::tuple_leq(rel, t, u).unwrap()
    })
}

/// Checks the chase on `p`; `Ok(false)` when the enumeration oracle ran out
/// of budget and only the oracle-free checks ran.
pub fn check_chase(p: &Project) -> Result<bool, String> {
    use mdclean::instance::instance_leq;
    use mdclean::md::{chase, check_unique_clean_preconditions, enumerate_clean, is_stable};
    use mdclean::ChasePolicy;
    let bound = step_bound(p);
    let e = enumerate_clean(&p.instance, &p.sigma, 10_000).map_err(|e| e.to_string())?;
    for policy in [ChasePolicy::MdOrder, ChasePolicy::ReverseMdOrder] {
        let trace = chase(&p.instance, &p.sigma, &policy).map_err(|e| e.to_string())?;
        if !instance_leq(&p.instance, &trace.result).unwrap() || !tid_leq(&p.instance, &trace.result) {
            return Err(format!("{policy:?}: D0 is not below the chase result"));
        }
        if !is_stable(&trace.result, &p.sigma).unwrap() {
            return Err(format!("{policy:?}: chase result is not stable"));
        }
        if trace.steps.len() > bound {
            return Err(format!("{policy:?}: {} steps exceed bound {bound}", trace.steps.len()));
        }
        if trace.replay(&p.instance, &p.sigma).map_err(|e| e.to_string())? != trace.result {
            return Err(format!("{policy:?}: replay differs"));
        }
        if !e.truncated && !e.instances.contains(&trace.result) {
            return Err(format!("{policy:?}: chase result missing from the enumeration"));
        }
    }
    for d in &e.instances {
        if !is_stable(d, &p.sigma).unwrap() || !instance_leq(&p.instance, d).unwrap() {
            return Err("enumerated instance is not a clean instance".into());
        }
    }
    if e.truncated {
        return Ok(false);
    }
    let pre = check_unique_clean_preconditions(&p.sigma, &p.schema).map_err(|e| e.to_string())?;
    if pre.guarantees_unique() && e.instances.len() != 1 {
        return Err(format!("{pre:?} but {} clean instances", e.instances.len()));
    }
    Ok(true)
}

/// Checks the approximations on `p`; `Ok(false)` when the enumeration
/// oracle ran out of budget.
pub fn check_approx(p: &Project, rng: &mut impl Rng) -> Result<bool, String> {
    use mdclean::approx::{over_clean, safe_steps, star_sigma, under_clean, under_clean_in_order};
    use mdclean::instance::instance_leq;
    use mdclean::md::enumerate_clean;
    let e = enumerate_clean(&p.instance, &p.sigma, 10_000).map_err(|e| e.to_string())?;
    let under = under_clean(&p.instance, &p.sigma).map_err(|e| e.to_string())?;
    let over = over_clean(&p.instance, &p.sigma).map_err(|e| e.to_string())?;
    for d in &e.instances {
        if !instance_leq(&under, d).unwrap() || !tid_leq(&under, d) {
            return Err("under-clean instance is not below a clean instance".into());
        }
        if !instance_leq(d, &over).unwrap() || !tid_leq(d, &over) {
            return Err("a clean instance is not below the over-clean instance".into());
        }
    }
    if !star_sigma(&p.instance).unwrap().is_stable(&over, &p.sigma).unwrap() {
        return Err("over-clean instance is not stable under the starred similarities".into());
    }
    let k = safe_steps(&p.instance, &p.sigma).map_err(|e| e.to_string())?.len();
    let mut order: Vec<usize> = (0..k).collect();
    for _ in 0..10 {
        order.shuffle(rng);
        if under_clean_in_order(&p.instance, &p.sigma, &order).map_err(|e| e.to_string())? != under {
            return Err(format!("under-clean result depends on the order {order:?}"));
        }
    }
    Ok(!e.truncated)
}

/// A random pair `D ⊑ D'` of instances taken along one chase run.
pub fn random_chain(p: &Project, rng: &mut impl Rng) -> (Instance, Instance) {
    use mdclean::md::chase;
    use mdclean::ChasePolicy;
    let policy = if rng.gen_bool(0.5) { ChasePolicy::MdOrder } else { ChasePolicy::ReverseMdOrder };
    let trace = chase(&p.instance, &p.sigma, &policy).unwrap();
    let states = trace.instances(&p.instance, &p.sigma).unwrap();
    let i = rng.gen_range(0..states.len());
    let j = rng.gen_range(i..states.len());
    (states[i].clone(), states[j].clone())
}

pub fn check_monotone(p: &Project, rng: &mut impl Rng) -> Result<(), String> {
    use mdclean::instance::instance_leq;
    use mdclean::query::{eval, is_monotone_syntax, relax};
    let depth = rng.gen_range(0..=3);
    let (q, _) = random_query(p, rng, depth);
    let q = relax(&q);
    assert!(is_monotone_syntax(&q));
    let (d, d2) = random_chain(p, rng);
    let (a, b) = (eval(&q, &d).map_err(|e| e.to_string())?, eval(&q, &d2).map_err(|e| e.to_string())?);
    if !instance_leq(&a, &b).unwrap() {
        return Err(format!("{q} is not monotone"));
    }
    Ok(())
}

pub fn check_relaxation(p: &Project, rng: &mut impl Rng) -> Result<(), String> {
    use mdclean::instance::instance_leq;
    use mdclean::query::{eval, relax};
    let depth = rng.gen_range(0..=3);
    let (q, _) = random_query(p, rng, depth);
    let (d, _) = random_chain(p, rng);
    let plain = eval(&q, &d).map_err(|e| e.to_string())?;
    let relaxed = eval(&relax(&q), &d).map_err(|e| e.to_string())?;
    if !instance_leq(&plain, &relaxed).unwrap() {
        return Err(format!("{q} answers more than its relaxation"));
    }
    Ok(())
}

fn ratio(n: i64, d: i64) -> mdclean::Rational {
    mdclean::Rational::new(n, d)
}

/// A random domain with up to six seed values, and every value below some
/// element of its closure (over the seeds' atoms or endpoints).
pub fn random_closure(rng: &mut impl Rng) -> (mdclean::Domain, Vec<Value>, Vec<Value>) {
    use mdclean::lattice::{Bool3, Similarity};
    use mdclean::{Domain, ValueKind};
    let nseeds = rng.gen_range(1..=6);
    match rng.gen_range(0..3) {
        0 => {
            let dom = Domain::new("A", ValueKind::Atoms, Similarity::Equality).unwrap();
            let seeds: Vec<Value> = (0..nseeds)
                .map(|_| {
                    let n = rng.gen_range(1..=3);
                    Value::atoms(ATOMS.choose_multiple(rng, n).copied())
                })
                .collect();
            let mut universe = vec![Value::Bottom];
            for mask in 1u32..1 << ATOMS.len() {
                universe.push(Value::atoms((0..ATOMS.len()).filter(|i| mask >> i & 1 == 1).map(|i| ATOMS[i])));
            }
            (dom, seeds, universe)
        }
        1 => {
            let dom = Domain::new("I", ValueKind::Interval, Similarity::Equality).unwrap();
            let seeds: Vec<Value> = (0..nseeds)
                .map(|_| {
                    let lo = rng.gen_range(0..8);
                    let hi = lo + rng.gen_range(0..4);
                    Value::interval(ratio(lo, 2), ratio(hi, 2))
                })
                .collect();
            let mut universe = vec![Value::Bottom];
            for lo in 0..12 {
                for hi in lo..12 {
                    universe.push(Value::interval(ratio(lo, 2), ratio(hi, 2)));
                }
            }
            (dom, seeds, universe)
        }
        _ => {
            let dom = Domain::new("L", ValueKind::Bool3, Similarity::Equality).unwrap();
            let all = [Bool3::False, Bool3::True, Bool3::Top];
            let seeds = (0..nseeds).map(|_| Value::Bool(*all.choose(rng).unwrap())).collect();
            let mut universe = vec![Value::Bottom];
            universe.extend(all.map(Value::Bool));
            (dom, seeds, universe)
        }
    }
}

/// The greatest element of `universe` below both `a` and `b`, found by
/// scanning.
fn glb_oracle(dom: &mdclean::Domain, universe: &[Value], a: &Value, b: &Value) -> Option<Value> {
    let lower: Vec<&Value> = universe
        .iter()
        .filter(|u| dom.leq(u, a).unwrap() && dom.leq(u, b).unwrap())
        .collect();
    lower
        .iter()
        .find(|g| lower.iter().all(|u| dom.leq(u, g).unwrap()))
        .map(|g| (*g).clone())
}

/// Semilattice, absorption and partial-order laws over the active closure
/// of random seeds, and the glb against a scanning oracle.
pub fn check_lattice(rng: &mut impl Rng) -> Result<(), String> {
    use mdclean::lattice::ActiveClosure;
    let (dom, seeds, universe) = random_closure(rng);
    let closure = ActiveClosure::new(&dom, seeds.clone()).unwrap();
    let elems: Vec<Value> = closure.elements().into_iter().collect();
    let fail = |law: &str, args: &[&Value]| {
        let args: Vec<String> = args.iter().map(|v| v.to_string()).collect();
        Err(format!("{law} fails on ({}) in domain {}", args.join(", "), dom.name()))
    };
    for s in &seeds {
        if !closure.contains(s) {
            return fail("closure contains seeds", &[s]);
        }
    }
    let join = |a: &Value, b: &Value| dom.merge(a, b).unwrap();
    let meet = |a: &Value, b: &Value| dom.glb(a, b).unwrap();
    let leq = |a: &Value, b: &Value| dom.leq(a, b).unwrap();
    for a in &elems {
        if join(a, a) != *a {
            return fail("idempotency", &[a]);
        }
        if !leq(a, a) || !leq(&Value::Bottom, a) {
            return fail("reflexivity", &[a]);
        }
        for b in &elems {
            let ab = join(a, b);
            if ab != join(b, a) {
                return fail("commutativity", &[a, b]);
            }
            if !elems.contains(&ab) || !closure.contains(&ab) {
                return fail("closure under merge", &[a, b]);
            }
            if join(a, &meet(a, b)) != *a || meet(a, &ab) != *a {
                return fail("absorption", &[a, b]);
            }
            if leq(a, b) != (ab == *b) {
                return fail("order induced by merge", &[a, b]);
            }
            if leq(a, b) && leq(b, a) && a != b {
                return fail("antisymmetry", &[a, b]);
            }
            if Some(meet(a, b)) != glb_oracle(&dom, &universe, a, b) {
                return fail("glb oracle", &[a, b]);
            }
            for c in &elems {
                if join(&ab, c) != join(a, &join(b, c)) {
                    return fail("associativity", &[a, b, c]);
                }
                if leq(a, b) && leq(b, c) && !leq(a, c) {
                    return fail("transitivity", &[a, b, c]);
                }
            }
        }
    }
    Ok(())
}

/// Per-attribute atoms and random atom similarities.
pub struct SwooshSetup {
    pub atoms: Vec<Vec<String>>,
    pub pairs: Vec<Vec<(String, String)>>,
}

impl SwooshSetup {
    pub fn random(rng: &mut impl Rng, atoms_per_attr: &[usize]) -> Self {
        let atoms: Vec<Vec<String>> = atoms_per_attr
            .iter()
            .enumerate()
            .map(|(i, &n)| (0..n).map(|k| format!("a{i}{k}")).collect())
            .collect();
        let pairs = atoms
            .iter()
            .map(|list| {
                let mut out = Vec::new();
                for x in 0..list.len() {
                    for y in x + 1..list.len() {
                        if rng.gen_bool(0.35) {
                            out.push((list[x].clone(), list[y].clone()));
                        }
                    }
                }
                out
            })
            .collect();
        SwooshSetup { atoms, pairs }
    }

    pub fn union_merge(&self) -> mdclean::swoosh::UnionMerge {
        use mdclean::lattice::LiftedPairs;
        mdclean::swoosh::UnionMerge::new(
            self.pairs.iter().map(|p| LiftedPairs::new(p.iter().map(|(a, b)| (a.as_str(), b.as_str())))).collect(),
        )
    }

    /// Oracle similarity on atom sets: some pair of atoms is equal or listed.
    fn sets_similar(&self, attr: usize, a: &mdclean::AtomSet, b: &mdclean::AtomSet) -> bool {
        a.iter().any(|x| {
            b.iter().any(|y| {
                x == y || self.pairs[attr].iter().any(|(p, q)| (**x == *p && **y == *q) || (**x == *q && **y == *p))
            })
        })
    }

    fn matches(&self, r1: &mdclean::swoosh::SwooshRecord, r2: &mdclean::swoosh::SwooshRecord) -> bool {
        (0..self.atoms.len()).any(|i| self.sets_similar(i, &r1.0[i], &r2.0[i]))
    }

    /// Every record whose components are non-empty subsets of the atoms.
    pub fn all_records(&self) -> Vec<mdclean::swoosh::SwooshRecord> {
        let mut out = vec![Vec::new()];
        for list in &self.atoms {
            let subsets: Vec<mdclean::AtomSet> = (1u32..1 << list.len())
                .map(|mask| {
                    mdclean::AtomSet::new((0..list.len()).filter(|k| mask >> k & 1 == 1).map(|k| list[k].as_str()))
                        .unwrap()
                })
                .collect();
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<mdclean::AtomSet>| {
                    subsets.iter().map(move |s| {
                        let mut r = prefix.clone();
                        r.push(s.clone());
                        r
                    })
                })
                .collect();
        }
        out.into_iter().map(mdclean::swoosh::SwooshRecord).collect()
    }

    pub fn project(&self) -> Project {
        let domains: Vec<Json> = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| json!({"name": format!("D{i}"), "kind": "atoms", "similarity": {"mode": "lifted", "pairs": p}}))
            .collect();
        let attributes: Vec<Json> =
            (0..self.atoms.len()).map(|i| json!({"name": format!("A{i}"), "domain": format!("D{i}")})).collect();
        let text = json!({
            "domains": domains,
            "relations": [{"name": "R", "attributes": attributes}],
            "mds": [],
            "data": {},
        })
        .to_string();
        Project::from_json_str(&text).unwrap()
    }
}

fn componentwise_subset(r1: &mdclean::swoosh::SwooshRecord, r2: &mdclean::swoosh::SwooshRecord) -> bool {
    r1.0.iter().zip(&r2.0).all(|(a, b)| a.is_subset(b))
}

fn componentwise_union(r1: &mdclean::swoosh::SwooshRecord, r2: &mdclean::swoosh::SwooshRecord) -> mdclean::swoosh::SwooshRecord {
    mdclean::swoosh::SwooshRecord(r1.0.iter().zip(&r2.0).map(|(a, b)| a.union(b)).collect())
}

/// ICAR of the record match and merge, the per-attribute merge laws with
/// similarity preservation, and merge domination against componentwise
/// inclusion, over every record on the setup's atoms.
pub fn check_swoosh_exhaustive(setup: &SwooshSetup) -> Result<(), String> {
    use mdclean::swoosh::SwooshRecord;
    use mdclean::lattice::{validate_axioms, Similarity};
    let um = setup.union_merge();
    let records = setup.all_records();
    let p = setup.project();
    for (i, list) in setup.atoms.iter().enumerate() {
        let dom = &p.schema.relations()[0].attributes[i].domain;
        if !matches!(dom.similarity(), Similarity::Lifted(_)) {
            return Err("attribute domain is not lifted".into());
        }
        let sample: Vec<Value> = (1u32..1 << list.len())
            .map(|mask| Value::atoms((0..list.len()).filter(|k| mask >> k & 1 == 1).map(|k| list[k].as_str())))
            .collect();
        let report = validate_axioms(dom, &sample).unwrap();
        if !report.semilattice_ok() || !report.similarity_preservation.holds {
            return Err(format!("attribute {i}: {report:?}"));
        }
    }
    let m = |a: &SwooshRecord, b: &SwooshRecord| um.matches(a, b).unwrap();
    let mu = |a: &SwooshRecord, b: &SwooshRecord| um.merge(a, b).ok();
    for r1 in &records {
        if !m(r1, r1) || mu(r1, r1).as_ref() != Some(r1) {
            return Err(format!("idempotency fails on {r1}"));
        }
        for r2 in &records {
            if m(r1, r2) != setup.matches(r1, r2) {
                return Err(format!("match differs from the oracle on {r1}, {r2}"));
            }
            if m(r1, r2) != m(r2, r1) || mu(r1, r2) != mu(r2, r1) {
                return Err(format!("commutativity fails on {r1}, {r2}"));
            }
            if m(r1, r2) && mu(r1, r2) != Some(componentwise_union(r1, r2)) {
                return Err(format!("merge of {r1}, {r2} is not the union"));
            }
            if !m(r1, r2) && mu(r1, r2).is_some() {
                return Err(format!("merge defined on unmatched {r1}, {r2}"));
            }
            if um.merge_dominates(r1, r2).unwrap() != componentwise_subset(r1, r2) {
                return Err(format!("merge domination differs from dominance on {r1}, {r2}"));
            }
            let Some(r12) = mu(r1, r2) else { continue };
            for r3 in &records {
                let left = mu(&r12, r3);
                let right = mu(r2, r3).and_then(|r23| mu(r1, &r23));
                if let (Some(l), Some(r)) = (&left, &right) {
                    if l != r {
                        return Err(format!("associativity fails on {r1}, {r2}, {r3}"));
                    }
                }
            }
            for r4 in &records {
                if m(r1, r4) && !m(&r12, r4) {
                    return Err(format!("representativity fails on {r1}, {r2}, {r4}"));
                }
            }
        }
    }
    Ok(())
}

/// The entity resolution by its definition: the naive merge closure, and
/// its elements not strictly below another one.
pub fn entity_resolution_oracle(
    setup: &SwooshSetup,
    d: &std::collections::BTreeSet<mdclean::swoosh::SwooshRecord>,
) -> std::collections::BTreeSet<mdclean::swoosh::SwooshRecord> {
    let mut closure = d.clone();
    loop {
        let mut fresh = Vec::new();
        for r1 in &closure {
            for r2 in &closure {
                if setup.matches(r1, r2) {
                    let m = componentwise_union(r1, r2);
                    if !closure.contains(&m) {
                        fresh.push(m);
                    }
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        closure.extend(fresh);
    }
    closure
        .iter()
        .filter(|r| !closure.iter().any(|s| s != *r && componentwise_subset(r, s)))
        .cloned()
        .collect()
}

/// The clean instance of the reconstructed dependencies against the
/// entity resolution of random singleton records.
pub fn check_swoosh_correspondence(rng: &mut impl Rng) -> Result<(), String> {
    use mdclean::md::chase;
    use mdclean::swoosh::{correspondence_check, instance_of_records, md_reconstruction, record_of, SwooshRecord};
    let arity = rng.gen_range(2..=3);
    let shape: Vec<usize> = (0..arity).map(|_| rng.gen_range(2..=4)).collect();
    let setup = SwooshSetup::random(rng, &shape);
    let n = rng.gen_range(1..=6);
    let records: Vec<SwooshRecord> = (0..n)
        .map(|_| {
            SwooshRecord(
                setup
                    .atoms
                    .iter()
                    .map(|list| mdclean::AtomSet::singleton(list.choose(rng).unwrap().as_str()))
                    .collect(),
            )
        })
        .collect();
    let p = setup.project();
    let sigma = md_reconstruction(&p.schema, "R").unwrap();
    let d = instance_of_records(&p.schema, "R", &records).unwrap();
    let dm = chase(&d, &sigma, &mdclean::ChasePolicy::MdOrder).map_err(|e| e.to_string())?.result;
    let pre = mdclean::md::check_unique_clean_preconditions(&sigma, &p.schema).map_err(|e| e.to_string())?;
    if !pre.guarantees_unique() {
        return Err(format!("reconstruction is not guaranteed a unique clean instance: {pre:?}"));
    }
    let distinct = records.iter().cloned().collect();
    let ds = entity_resolution_oracle(&setup, &distinct);
    let um = setup.union_merge();
    if um.entity_resolve(&distinct).unwrap() != ds {
        return Err("entity resolution differs from the oracle".into());
    }
    let clean: Vec<SwooshRecord> = dm.tuples(0).iter().map(|t| record_of(t).unwrap()).collect();
    for r in &ds {
        if !clean.contains(r) {
            return Err(format!("resolved record {r} is not the record of a clean tuple"));
        }
    }
    for r in &clean {
        if !ds.iter().any(|s| componentwise_subset(r, s)) {
            return Err(format!("clean record {r} is not below a resolved record"));
        }
    }
    let report = correspondence_check(&um, &dm, "R", &ds).unwrap();
    if !report.passed() {
        return Err(format!("{report:?}"));
    }
    Ok(())
}

/// Every clause of three literals over `vars` variables, repeats allowed.
pub fn all_clauses(vars: u32) -> Vec<[mdclean::sat::Literal; 3]> {
    use mdclean::sat::Literal;
    let lits: Vec<Literal> = (1..=vars).flat_map(|v| [Literal::new(v, true), Literal::new(v, false)]).collect();
    let mut out = Vec::new();
    for i in 0..lits.len() {
        for j in i..lits.len() {
            for k in j..lits.len() {
                out.push([lits[i], lits[j], lits[k]]);
            }
        }
    }
    out
}

/// Every set of 1 to `max_clauses` distinct clauses over three variables;
/// with `dedup`, one representative per symmetry class.
pub fn exhaustive_formulas(max_clauses: usize, dedup: bool) -> Vec<mdclean::sat::CnfFormula> {
    use mdclean::sat::CnfFormula;
    let clauses = all_clauses(3);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    let mut pick: Vec<usize> = Vec::new();
    fn rec(
        clauses: &[[mdclean::sat::Literal; 3]],
        start: usize,
        max: usize,
        pick: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if !pick.is_empty() {
            visit(pick);
        }
        if pick.len() == max {
            return;
        }
        for k in start..clauses.len() {
            pick.push(k);
            rec(clauses, k + 1, max, pick, visit);
            pick.pop();
        }
    }
    rec(&clauses, 0, max_clauses, &mut pick, &mut |chosen| {
        let f = CnfFormula::new(chosen.iter().map(|&k| clauses[k]).collect()).unwrap();
        if !dedup {
            out.push(f);
            return;
        }
        let canon = f.canonical(3);
        if seen.insert(canon.clauses.clone()) {
            out.push(canon);
        }
    });
    out
}

pub fn random_formula(rng: &mut impl Rng, vars: u32, max_clauses: usize) -> mdclean::sat::CnfFormula {
    use mdclean::sat::{CnfFormula, Literal};
    let n = rng.gen_range(1..=max_clauses);
    let clauses = (0..n)
        .map(|_| {
            let mut vs: Vec<u32> = (1..=vars).collect();
            vs.shuffle(rng);
            [0, 1, 2].map(|k| Literal::new(vs[k], rng.gen_bool(0.5)))
        })
        .collect();
    CnfFormula::new(clauses).unwrap()
}

/// Satisfiable iff `⊤` is not certain, for one formula.
pub fn check_reduction(f: &mdclean::sat::CnfFormula) -> Result<(), String> {
    use mdclean::sat::{gen3sat, top_is_certain, SatEncoding};
    let p: Project = gen3sat(f, SatEncoding::PerLiteral).map_err(|e| e.to_string())?;
    let top = top_is_certain(&p, 1_000_000).map_err(|e| format!("{f}: {e}"))?;
    if f.is_satisfiable() == top {
        return Err(format!("{f}: satisfiable = {}, top certain = {top}", f.is_satisfiable()));
    }
    Ok(())
}
