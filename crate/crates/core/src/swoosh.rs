//! The union match-and-merge case of generic entity resolution, and its
//! reconstruction as a set of matching dependencies.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instance::{Instance, RelationSchema, Schema, Tid, Tuple};
use crate::lattice::{AtomSet, LiftedPairs, Similarity, Value};
use crate::md::MatchDep;
use crate::scalar::Scalar;

/// A record without identifier: one non-empty atom set per attribute.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwooshRecord(pub Vec<AtomSet>);

impl fmt::Display for SwooshRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| {
                let atoms: Vec<&str> = s.iter().map(|a| &**a).collect();
                format!("{{{}}}", atoms.join(","))
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Record match `M` and merge `μ` built from per-attribute atom
/// similarities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionMerge {
    similarities: Vec<LiftedPairs>,
}

impl UnionMerge {
    pub fn new(similarities: Vec<LiftedPairs>) -> Self {
        UnionMerge { similarities }
    }

    /// Reads the per-attribute similarities of a relation whose attributes
    /// all use lifted atom-set domains.
    pub fn from_relation<S: Scalar>(rel: &RelationSchema<S>) -> Result<Self> {
        let similarities = rel
            .attributes
            .iter()
            .map(|a| match a.domain.similarity() {
                Similarity::Lifted(p) => Ok(p.clone()),
                _ => Err(Error::Contract(format!(
                    "attribute `{}` must use an atom-set domain with lifted similarity",
                    a.name
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UnionMerge { similarities })
    }

    pub fn arity(&self) -> usize {
        self.similarities.len()
    }

    fn check(&self, r: &SwooshRecord) -> Result<()> {
        if r.0.len() == self.arity() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "record {r} has {} attributes, expected {}",
                r.0.len(),
                self.arity()
            )))
        }
    }

    /// `M(r1, r2)`: some attribute holds similar atoms in both records.
    pub fn matches(&self, r1: &SwooshRecord, r2: &SwooshRecord) -> Result<bool> {
        self.check(r1)?;
        self.check(r2)?;
        Ok(self
            .similarities
            .iter()
            .zip(r1.0.iter().zip(&r2.0))
            .any(|(sim, (a, b))| sim.sets_similar(a, b)))
    }

    /// `μ(r1, r2)`: the componentwise union, defined only on matching
    /// records.
    pub fn merge(&self, r1: &SwooshRecord, r2: &SwooshRecord) -> Result<SwooshRecord> {
        if !self.matches(r1, r2)? {
            return Err(Error::NotApplicable {
                md: "merge".into(),
                t1: r1.to_string(),
                t2: r2.to_string(),
            });
        }
        Ok(SwooshRecord(r1.0.iter().zip(&r2.0).map(|(a, b)| a.union(b)).collect()))
    }

    /// `r1 ≤ r2`: the records match and their merge is `r2`.
    pub fn merge_dominates(&self, r1: &SwooshRecord, r2: &SwooshRecord) -> Result<bool> {
        Ok(self.matches(r1, r2)? && self.merge(r1, r2)? == *r2)
    }

    /// The smallest superset of `d` holding the merge of every matching
    /// pair.
    pub fn merge_closure(&self, d: &BTreeSet<SwooshRecord>) -> Result<BTreeSet<SwooshRecord>> {
        let mut closure = d.clone();
        let mut all: Vec<SwooshRecord> = closure.iter().cloned().collect();
        let mut done = 0;
        while done < all.len() {
            let r = all[done].clone();
            for k in 0..=done {
                let other = all[k].clone();
                if self.matches(&r, &other)? {
                    let m = self.merge(&r, &other)?;
                    if closure.insert(m.clone()) {
                        all.push(m);
                    }
                }
            }
            done += 1;
        }
        Ok(closure)
    }

    /// The entity resolution of `d`: the records of its merge closure that
    /// no other closure record dominates.
    pub fn entity_resolve(&self, d: &BTreeSet<SwooshRecord>) -> Result<BTreeSet<SwooshRecord>> {
        let closure = self.merge_closure(d)?;
        let mut out = BTreeSet::new();
        for r in &closure {
            let mut dominated = false;
            for s in &closure {
                if s != r && self.merge_dominates(r, s)? {
                    dominated = true;
                    break;
                }
            }
            if !dominated {
                out.insert(r.clone());
            }
        }
        Ok(out)
    }
}

/// The dependencies `R[Ai] ≈ R[Ai] → R[Aj] ⇌ R[Aj]` for all attribute
/// pairs of `relation`, named `s_Ai_Aj`.
pub fn md_reconstruction<S: Scalar>(schema: &Schema<S>, relation: &str) -> Result<Vec<MatchDep>> {
    let rel = schema
        .relation(relation)
        .ok_or_else(|| Error::Contract(format!("unknown relation `{relation}`")))?;
    UnionMerge::from_relation(rel)?;
    let mut out = Vec::new();
    for ai in &rel.attributes {
        for aj in &rel.attributes {
            out.push(MatchDep::new(
                format!("s_{}_{}", ai.name, aj.name),
                vec![(ai.name.as_str(), ai.name.as_str())],
                (aj.name.as_str(), aj.name.as_str()),
            ));
        }
    }
    Ok(out)
}

/// `r(t)`: the record of a tuple.
pub fn record_of<S: Scalar>(t: &Tuple<S>) -> Result<SwooshRecord> {
    t.values
        .iter()
        .map(|v| match v {
            Value::Atoms(s) => Ok(s.clone()),
            other => Err(Error::Contract(format!("tuple {} holds {other}, not an atom set", t.tid))),
        })
        .collect::<Result<Vec<_>>>()
        .map(SwooshRecord)
}

/// The distinct records of a relation.
pub fn records_of<S: Scalar>(d: &Instance<S>, relation: &str) -> Result<BTreeSet<SwooshRecord>> {
    let tuples = d
        .relation(relation)
        .ok_or_else(|| Error::Contract(format!("unknown relation `{relation}`")))?;
    tuples.iter().map(record_of).collect()
}

/// An instance holding `records` in `relation` with tids `r1`, `r2`, ...
pub fn instance_of_records<S: Scalar>(
    schema: &Arc<Schema<S>>,
    relation: &str,
    records: &[SwooshRecord],
) -> Result<Instance<S>> {
    let mut d = Instance::new(schema.clone());
    for (k, r) in records.iter().enumerate() {
        let values = r.0.iter().map(|s| Value::Atoms(s.clone())).collect();
        d.insert(relation, Tuple::new(format!("r{}", k + 1), values))?;
    }
    Ok(d)
}

/// The outcome of comparing the chase result with the entity resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrespondenceReport {
    /// Resolved records that are not the record of any clean tuple.
    pub unmatched_records: Vec<SwooshRecord>,
    /// Clean tuples not dominated by any resolved record.
    pub undominated_tuples: Vec<Tid>,
    /// Clean tuples dominated only strictly by resolved records.
    pub strictly_dominated: Vec<Tid>,
}

impl CorrespondenceReport {
    /// Every resolved record is the record of some clean tuple.
    pub fn part_a(&self) -> bool {
        self.unmatched_records.is_empty()
    }

    /// Every clean tuple is dominated by some resolved record.
    pub fn part_b(&self) -> bool {
        self.undominated_tuples.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.part_a() && self.part_b()
    }
}

pub fn correspondence_check<S: Scalar>(
    um: &UnionMerge,
    dm: &Instance<S>,
    relation: &str,
    ds: &BTreeSet<SwooshRecord>,
) -> Result<CorrespondenceReport> {
    let tuples = dm
        .relation(relation)
        .ok_or_else(|| Error::Contract(format!("unknown relation `{relation}`")))?;
    let records: Vec<(Tid, SwooshRecord)> = tuples
        .iter()
        .map(|t| Ok((t.tid.clone(), record_of(t)?)))
        .collect::<Result<_>>()?;
    let unmatched_records = ds
        .iter()
        .filter(|r| !records.iter().any(|(_, x)| x == *r))
        .cloned()
        .collect();
    let mut undominated_tuples = Vec::new();
    let mut strictly_dominated = Vec::new();
    for (tid, r) in &records {
        if ds.contains(r) {
            continue;
        }
        let mut dominated = false;
        for s in ds {
            if um.merge_dominates(r, s)? {
                dominated = true;
                break;
            }
        }
        if dominated {
            strictly_dominated.push(tid.clone());
        } else {
            undominated_tuples.push(tid.clone());
        }
    }
    Ok(CorrespondenceReport {
        unmatched_records,
        undominated_tuples,
        strictly_dominated,
    })
}
