//! Schemas, identified tuples, instances and the domination order on them.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Domain, Value};
use crate::scalar::Scalar;

/// A tuple identifier. Identifiers order naturally, so `t2 < t10`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Tid(Arc<str>);

impl Tid {
    pub fn new(id: impl Into<Arc<str>>) -> Self {
        Tid(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Tid {
    fn from(id: &str) -> Self {
        Tid::new(id)
    }
}

impl From<String> for Tid {
    fn from(id: String) -> Self {
        Tid::new(id)
    }
}

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for Tid {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Tid {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compares digit runs by numeric value and everything else bytewise.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let na = trim_zeros(&a[..da]);
                let nb = trim_zeros(&b[..db]);
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let zeros = digits.iter().take_while(|&&c| c == b'0').count();
    &digits[zeros..]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute<S: Scalar> {
    pub name: String,
    pub domain: Arc<Domain<S>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSchema<S: Scalar> {
    pub name: String,
    pub attributes: Vec<Attribute<S>>,
}

impl<S: Scalar> RelationSchema<S> {
    pub fn new(name: impl Into<String>, attributes: Vec<Attribute<S>>) -> Self {
        RelationSchema {
            name: name.into(),
            attributes,
        }
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn position(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == attribute)
    }

    pub fn domain(&self, column: usize) -> &Domain<S> {
        &self.attributes[column].domain
    }

    fn check_tuple(&self, t: &Tuple<S>) -> Result<()> {
        if t.values.len() != self.arity() {
            return Err(Error::Contract(format!(
                "tuple {} has {} values but relation `{}` has {} attributes",
                t.tid,
                t.values.len(),
                self.name,
                self.arity()
            )));
        }
        Ok(())
    }
}

/// A set of relation schemas. Attribute names are unique across the whole
/// schema, so an attribute name alone locates its relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema<S: Scalar> {
    relations: Vec<RelationSchema<S>>,
}

impl<S: Scalar> Schema<S> {
    pub fn new(relations: Vec<RelationSchema<S>>) -> Result<Self> {
        let mut problems = Vec::new();
        let mut rel_names = HashSet::new();
        let mut attr_names = HashSet::new();
        for rel in &relations {
            if !rel_names.insert(rel.name.as_str()) {
                problems.push(format!("relation `{}` is declared twice", rel.name));
            }
            for attr in &rel.attributes {
                if !attr_names.insert(attr.name.as_str()) {
                    problems.push(format!("attribute `{}` is declared twice", attr.name));
                }
            }
        }
        if problems.is_empty() {
            Ok(Schema { relations })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn relations(&self) -> &[RelationSchema<S>] {
        &self.relations
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationSchema<S>> {
        self.relations.iter().find(|r| r.name == name)
    }

    /// The relation index and column of an attribute.
    pub fn locate(&self, attribute: &str) -> Option<(usize, usize)> {
        self.relations
            .iter()
            .enumerate()
            .find_map(|(r, rel)| rel.position(attribute).map(|c| (r, c)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tuple<S> {
    pub tid: Tid,
    pub values: Vec<Value<S>>,
}

impl<S: Scalar> Tuple<S> {
    pub fn new(tid: impl Into<Tid>, values: Vec<Value<S>>) -> Self {
        Tuple {
            tid: tid.into(),
            values,
        }
    }
}

/// A finite set of identified tuples per relation. Tuples are kept sorted by
/// identifier, so two instances with the same content compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance<S: Scalar> {
    schema: Arc<Schema<S>>,
    relations: Vec<Vec<Tuple<S>>>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(schema: Arc<Schema<S>>) -> Self {
        let relations = vec![Vec::new(); schema.relations.len()];
        Instance { schema, relations }
    }

    pub fn schema(&self) -> &Arc<Schema<S>> {
        &self.schema
    }

    /// Adds a tuple after checking arity, value kinds and identifier
    /// uniqueness.
    pub fn insert(&mut self, relation: &str, tuple: Tuple<S>) -> Result<()> {
        let r = self
            .schema
            .relation_index(relation)
            .ok_or_else(|| Error::Contract(format!("unknown relation `{relation}`")))?;
        let rel = &self.schema.relations[r];
        rel.check_tuple(&tuple)?;
        for (c, v) in tuple.values.iter().enumerate() {
            rel.domain(c).check(v)?;
        }
        if self.find(&tuple.tid).is_some() {
            return Err(Error::Contract(format!("duplicate tuple identifier {}", tuple.tid)));
        }
        let at = self.relations[r].partition_point(|t| t.tid < tuple.tid);
        self.relations[r].insert(at, tuple);
        Ok(())
    }

    /// Builds an instance from tuples already known to fit the schema.
    pub(crate) fn from_parts(schema: Arc<Schema<S>>, mut relations: Vec<Vec<Tuple<S>>>) -> Self {
        for tuples in &mut relations {
            tuples.sort_by(|a, b| a.tid.cmp(&b.tid));
        }
        Instance { schema, relations }
    }

    pub fn tuples(&self, relation: usize) -> &[Tuple<S>] {
        &self.relations[relation]
    }

    pub fn relation(&self, name: &str) -> Option<&[Tuple<S>]> {
        self.schema.relation_index(name).map(|r| self.tuples(r))
    }

    pub fn all_tuples(&self) -> impl Iterator<Item = (usize, &Tuple<S>)> + '_ {
        self.relations
            .iter()
            .enumerate()
            .flat_map(|(r, ts)| ts.iter().map(move |t| (r, t)))
    }

    /// Relation index and position of a tuple identifier.
    pub fn find(&self, tid: &Tid) -> Option<(usize, usize)> {
        self.relations.iter().enumerate().find_map(|(r, ts)| {
            ts.binary_search_by(|t| t.tid.cmp(tid)).ok().map(|i| (r, i))
        })
    }

    pub fn get(&self, tid: &Tid) -> Option<&Tuple<S>> {
        self.find(tid).map(|(r, i)| &self.relations[r][i])
    }

    pub fn tids(&self) -> Vec<Tid> {
        self.all_tuples().map(|(_, t)| t.tid.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.relations.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The distinct value rows of a relation.
    pub fn rows(&self, relation: usize) -> BTreeSet<Vec<Value<S>>> {
        self.relations[relation].iter().map(|t| t.values.clone()).collect()
    }

    /// Same schema and same rows per relation, ignoring identifiers.
    pub fn equal_up_to_tids(&self, other: &Self) -> bool {
        same_schema(self, other).is_ok() && (0..self.relations.len()).all(|r| self.rows(r) == other.rows(r))
    }

    pub fn same_tids(&self, other: &Self) -> bool {
        self.relations.len() == other.relations.len()
            && self
                .relations
                .iter()
                .zip(&other.relations)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.tid == y.tid))
    }
}

fn same_schema<S: Scalar>(a: &Instance<S>, b: &Instance<S>) -> Result<()> {
    if Arc::ptr_eq(&a.schema, &b.schema) || a.schema == b.schema {
        Ok(())
    } else {
        Err(Error::Contract("instances have different schemas".into()))
    }
}

/// `t1 ⪯ t2`: attribute-wise domination.
pub fn tuple_leq<S: Scalar>(rel: &RelationSchema<S>, t1: &Tuple<S>, t2: &Tuple<S>) -> Result<bool> {
    rel.check_tuple(t1)?;
    rel.check_tuple(t2)?;
    for (c, (a, b)) in t1.values.iter().zip(&t2.values).enumerate() {
        if !rel.domain(c).leq(a, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `D1 ⊑ D2`: every tuple of `D1` is dominated by some tuple of `D2` in the
/// same relation. Identifiers play no role.
pub fn instance_leq<S: Scalar>(d1: &Instance<S>, d2: &Instance<S>) -> Result<bool> {
    same_schema(d1, d2)?;
    for (r, rel) in d1.schema.relations.iter().enumerate() {
        for t1 in &d1.relations[r] {
            let mut dominated = false;
            for t2 in &d2.relations[r] {
                if tuple_leq(rel, t1, t2)? {
                    dominated = true;
                    break;
                }
            }
            if !dominated {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Drops every tuple dominated by another one. Of several mutually
/// dominating tuples the one with the smallest identifier survives.
pub fn reduce<S: Scalar>(d: &Instance<S>) -> Instance<S> {
    let relations = d
        .schema
        .relations
        .iter()
        .zip(&d.relations)
        .map(|(rel, tuples)| reduce_tuples(rel, tuples))
        .collect();
    Instance {
        schema: d.schema.clone(),
        relations,
    }
}

fn reduce_tuples<S: Scalar>(rel: &RelationSchema<S>, tuples: &[Tuple<S>]) -> Vec<Tuple<S>> {
    let leq = |a: &Tuple<S>, b: &Tuple<S>| tuple_leq(rel, a, b).unwrap_or(false);
    tuples
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            !tuples.iter().enumerate().any(|(j, u)| {
                *i != j && leq(t, u) && (!leq(u, t) || u.tid < t.tid)
            })
        })
        .map(|(_, t)| t.clone())
        .collect()
}

/// `D1 ⋎ D2`: the reduced union, which is the least upper bound under `⊑`.
pub fn join_instances<S: Scalar>(d1: &Instance<S>, d2: &Instance<S>) -> Result<Instance<S>> {
    same_schema(d1, d2)?;
    let mut relations = d1.relations.clone();
    for (r, tuples) in d2.relations.iter().enumerate() {
        let taken: HashSet<&Tid> = d1.relations[r].iter().map(|t| &t.tid).collect();
        for t in tuples {
            let mut t = t.clone();
            while taken.contains(&t.tid) || relations[r].iter().any(|u| u.tid == t.tid) {
                t.tid = Tid::new(format!("{}'", t.tid));
            }
            relations[r].push(t);
        }
    }
    Ok(reduce(&Instance::from_parts(d1.schema.clone(), relations)))
}

/// `t1 ⋏ t2`: the attribute-wise greatest lower bound, identified by the
/// ordered pair of input identifiers.
pub fn meet_tuples<S: Scalar>(rel: &RelationSchema<S>, t1: &Tuple<S>, t2: &Tuple<S>) -> Result<Tuple<S>> {
    rel.check_tuple(t1)?;
    rel.check_tuple(t2)?;
    let values = t1
        .values
        .iter()
        .zip(&t2.values)
        .enumerate()
        .map(|(c, (a, b))| rel.domain(c).glb(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(Tuple {
        tid: Tid::new(format!("{}&{}", t1.tid, t2.tid)),
        values,
    })
}

/// `D1 ⋏ D2`: the reduced set of pairwise tuple meets, without tuples that
/// are bottom everywhere.
pub fn meet_instances<S: Scalar>(d1: &Instance<S>, d2: &Instance<S>) -> Result<Instance<S>> {
    same_schema(d1, d2)?;
    let mut relations = Vec::with_capacity(d1.relations.len());
    for (r, rel) in d1.schema.relations.iter().enumerate() {
        let mut meets = Vec::new();
        for t1 in &d1.relations[r] {
            for t2 in &d2.relations[r] {
                let m = meet_tuples(rel, t1, t2)?;
                if !m.values.iter().all(Value::is_bottom) {
                    meets.push(m);
                }
            }
        }
        meets.sort_by(|a, b| a.tid.cmp(&b.tid));
        relations.push(reduce_tuples(rel, &meets));
    }
    Ok(Instance {
        schema: d1.schema.clone(),
        relations,
    })
}
