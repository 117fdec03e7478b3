//! Project files: domains, schema, dependencies, data and named queries in
//! one JSON document.
//!
//! ```json
//! {
//!   "strict": false,
//!   "domains": [
//!     {"name": "Name", "kind": "atoms", "similarity": {"mode": "explicit", "pairs": [["a1", "a2"]]}},
//!     {"name": "Addr", "kind": "atoms", "tokenize": true, "similarity": {"mode": "equality"}},
//!     {"name": "Age", "kind": "interval", "similarity": {"mode": "gap", "epsilon": "1"}}
//!   ],
//!   "relations": [{"name": "R", "attributes": [{"name": "A", "domain": "Name"}]}],
//!   "mds": [{"id": "phi1", "lhs": [["A", "A"]], "rhs": ["B", "B"]}],
//!   "data": {"R": [{"tid": "t1", "values": {"A": "a1"}}]},
//!   "queries": {"q": "(project (A) (rel R))"}
//! }
//! ```
//!
//! Similarity modes are `equality`, `explicit` (value pairs), `lifted` (atom
//! pairs, extended to sets sharing a similar atom pair) and `gap` (intervals
//! at most `epsilon` apart). Every attribute of every row must be given;
//! `null` stands for the bottom value.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::instance::{Attribute, Instance, RelationSchema, Schema, Tuple};
use crate::lattice::{
    validate_axioms, ActiveClosure, AxiomReport, Domain, ExplicitPairs, LiftedPairs, Similarity, Value, ValueKind,
};
use crate::md::{resolve_all, MatchDep};
use crate::query::Query;
use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProject {
    #[serde(default)]
    strict: bool,
    domains: Vec<RawDomain>,
    relations: Vec<RawRelation>,
    #[serde(default)]
    mds: Vec<RawMd>,
    #[serde(default)]
    data: BTreeMap<String, Vec<RawRow>>,
    #[serde(default)]
    queries: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    tokenize: bool,
    similarity: RawSimilarity,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
enum RawSimilarity {
    Equality,
    Explicit { pairs: Vec<(Json, Json)> },
    Lifted { pairs: Vec<(String, String)> },
    Gap { epsilon: Json },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelation {
    name: String,
    attributes: Vec<RawAttribute>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttribute {
    name: String,
    domain: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMd {
    id: String,
    lhs: Vec<(String, String)>,
    rhs: (String, String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    tid: String,
    values: BTreeMap<String, Json>,
}

/// A validated project.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Project<S: Scalar> {
    pub domains: Vec<Arc<Domain<S>>>,
    pub schema: Arc<Schema<S>>,
    pub sigma: Vec<MatchDep>,
    pub instance: Instance<S>,
    /// Query texts as written, and their parsed form.
    pub queries: BTreeMap<String, (String, Query)>,
    /// Loading also checks idempotency, commutativity and associativity of
    /// every matching function on the data.
    pub strict: bool,
}

fn kind_from_str(kind: &str) -> Option<ValueKind> {
    match kind {
        "atoms" => Some(ValueKind::Atoms),
        "interval" => Some(ValueKind::Interval),
        "bool3" => Some(ValueKind::Bool3),
        _ => None,
    }
}

fn build_domain<S: Scalar>(raw: &RawDomain) -> Result<Domain<S>> {
    let kind = kind_from_str(&raw.kind)
        .ok_or_else(|| Error::domain(&raw.name, format!("unknown kind `{}`", raw.kind)))?;
    // Explicit pairs are parsed by a provisional domain with the same kind
    // and tokenizer.
    let probe = Domain::<S>::new(raw.name.clone(), kind, Similarity::Equality)?.with_tokenizer(raw.tokenize);
    let similarity = match &raw.similarity {
        RawSimilarity::Equality => Similarity::Equality,
        RawSimilarity::Explicit { pairs } => {
            let pairs = pairs
                .iter()
                .map(|(a, b)| Ok((probe.value_from_json(a)?, probe.value_from_json(b)?)))
                .collect::<Result<Vec<_>>>()?;
            if pairs.iter().any(|(a, b)| a.is_bottom() || b.is_bottom()) {
                return Err(Error::domain(&raw.name, "similarity pairs cannot mention the bottom value"));
            }
            Similarity::Explicit(ExplicitPairs::new(pairs))
        }
        RawSimilarity::Lifted { pairs } => Similarity::Lifted(LiftedPairs::new(pairs.iter().cloned())),
        RawSimilarity::Gap { epsilon } => {
            let text = match epsilon {
                Json::String(s) => s.clone(),
                Json::Number(n) => n.to_string(),
                _ => String::new(),
            };
            let eps = S::parse_scalar(&text)
                .ok_or_else(|| Error::domain(&raw.name, format!("invalid epsilon `{epsilon}`")))?;
            Similarity::Gap(eps)
        }
    };
    Domain::new(raw.name.clone(), kind, similarity).map(|d| d.with_tokenizer(raw.tokenize))
}

fn validation_messages(e: Error) -> Vec<String> {
    match e {
        Error::Validation(v) => v,
        other => vec![other.to_string()],
    }
}

impl<S: Scalar> Project<S> {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawProject = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_raw(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    fn from_raw(raw: RawProject) -> Result<Self> {
        let mut problems = Vec::new();
        let mut domains: Vec<Arc<Domain<S>>> = Vec::new();
        for d in &raw.domains {
            if domains.iter().any(|x| x.name() == d.name) {
                problems.push(format!("domain `{}` is declared twice", d.name));
                continue;
            }
            match build_domain::<S>(d) {
                Ok(dom) => domains.push(Arc::new(dom)),
                Err(e) => problems.extend(validation_messages(e)),
            }
        }
        let mut relations = Vec::new();
        for r in &raw.relations {
            let mut attributes = Vec::new();
            for a in &r.attributes {
                match domains.iter().find(|d| d.name() == a.domain) {
                    Some(d) => attributes.push(Attribute {
                        name: a.name.clone(),
                        domain: d.clone(),
                    }),
                    None if raw.domains.iter().any(|d| d.name == a.domain) => {}
                    None => problems.push(format!(
                        "attribute `{}` of relation `{}` uses unknown domain `{}`",
                        a.name, r.name, a.domain
                    )),
                }
            }
            relations.push(RelationSchema::new(r.name.clone(), attributes));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let schema = Arc::new(Schema::new(relations)?);
        let sigma: Vec<MatchDep> = raw
            .mds
            .iter()
            .map(|m| MatchDep::new(m.id.clone(), m.lhs.clone(), m.rhs.clone()))
            .collect();
        if let Err(e) = resolve_all(&schema, &sigma) {
            problems.extend(validation_messages(e));
        }
        let mut instance = Instance::new(schema.clone());
        for (rel_name, rows) in &raw.data {
            let Some(rel) = schema.relation(rel_name) else {
                problems.push(format!("data for unknown relation `{rel_name}`"));
                continue;
            };
            for row in rows {
                let mut values = Vec::with_capacity(rel.arity());
                for attr in &rel.attributes {
                    match row.values.get(&attr.name) {
                        Some(json) => match attr.domain.value_from_json(json) {
                            Ok(v) => values.push(v),
                            Err(e) => problems.push(format!("tuple {}: {e}", row.tid)),
                        },
                        None => problems.push(format!("tuple {} has no value for `{}`", row.tid, attr.name)),
                    }
                }
                for name in row.values.keys() {
                    if rel.position(name).is_none() {
                        problems.push(format!("tuple {} sets unknown attribute `{name}`", row.tid));
                    }
                }
                if values.len() == rel.arity() {
                    if let Err(e) = instance.insert(rel_name, Tuple::new(row.tid.as_str(), values)) {
                        problems.extend(validation_messages(e));
                    }
                }
            }
        }
        let mut queries = BTreeMap::new();
        for (name, text) in &raw.queries {
            match Query::parse(text) {
                Ok(q) => {
                    queries.insert(name.clone(), (text.clone(), q));
                }
                Err(e) => problems.push(format!("query `{name}`: {e}")),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let project = Project {
            domains,
            schema,
            sigma,
            instance,
            queries,
            strict: raw.strict,
        };
        if project.strict {
            let failures: Vec<String> = project
                .axiom_reports()?
                .into_iter()
                .flat_map(|(name, report)| axiom_failures(&name, &report))
                .collect();
            if !failures.is_empty() {
                return Err(Error::Validation(failures));
            }
        }
        Ok(project)
    }

    pub fn query(&self, name: &str) -> Result<&Query> {
        self.queries
            .get(name)
            .map(|(_, q)| q)
            .ok_or_else(|| Error::Query(format!("no query named `{name}`")))
    }

    pub fn domain(&self, name: &str) -> Option<&Arc<Domain<S>>> {
        self.domains.iter().find(|d| d.name() == name)
    }

    /// The matching-function axioms of every domain, checked over a sample
    /// of the active closure of its data values.
    pub fn axiom_reports(&self) -> Result<Vec<(String, AxiomReport<S>)>> {
        let mut out = Vec::new();
        for dom in &self.domains {
            let mut seeds = BTreeSet::new();
            for (r, rel) in self.schema.relations().iter().enumerate() {
                for (c, attr) in rel.attributes.iter().enumerate() {
                    if attr.domain.name() == dom.name() {
                        seeds.extend(self.instance.tuples(r).iter().map(|t| t.values[c].clone()));
                    }
                }
            }
            let sample = axiom_sample(dom, seeds)?;
            out.push((dom.name().to_string(), validate_axioms(dom, &sample)?));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Json {
        let domains = self
            .domains
            .iter()
            .map(|d| RawDomain {
                name: d.name().to_string(),
                kind: d.kind().name().to_string(),
                tokenize: d.tokenizes(),
                similarity: match d.similarity() {
                    Similarity::Equality => RawSimilarity::Equality,
                    Similarity::Explicit(p) => RawSimilarity::Explicit {
                        pairs: p.pairs().iter().map(|(a, b)| (d.value_to_json(a), d.value_to_json(b))).collect(),
                    },
                    Similarity::Lifted(p) => RawSimilarity::Lifted {
                        pairs: p.pairs().iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
                    },
                    Similarity::Gap(eps) => RawSimilarity::Gap {
                        epsilon: Json::String(eps.to_string()),
                    },
                },
            })
            .collect();
        let relations = self
            .schema
            .relations()
            .iter()
            .map(|r| RawRelation {
                name: r.name.clone(),
                attributes: r
                    .attributes
                    .iter()
                    .map(|a| RawAttribute {
                        name: a.name.clone(),
                        domain: a.domain.name().to_string(),
                    })
                    .collect(),
            })
            .collect();
        let mds = self
            .sigma
            .iter()
            .map(|m| RawMd {
                id: m.id.clone(),
                lhs: m.lhs.clone(),
                rhs: m.rhs.clone(),
            })
            .collect();
        let raw = RawProject {
            strict: self.strict,
            domains,
            relations,
            mds,
            data: instance_rows(&self.instance),
            queries: self.queries.iter().map(|(k, (text, _))| (k.clone(), text.clone())).collect(),
        };
        serde_json::to_value(raw).expect("project serializes")
    }

    /// Canonical pretty-printed JSON.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("project serializes")
    }

    /// A copy of the project with a different instance.
    pub fn with_instance(&self, instance: Instance<S>) -> Result<Self> {
        if instance.schema() != &self.schema && **instance.schema() != *self.schema {
            return Err(Error::Contract("instance has a different schema".into()));
        }
        Ok(Project {
            instance,
            ..self.clone()
        })
    }
}

fn instance_rows<S: Scalar>(d: &Instance<S>) -> BTreeMap<String, Vec<RawRow>> {
    d.schema()
        .relations()
        .iter()
        .enumerate()
        .map(|(r, rel)| {
            let rows = d
                .tuples(r)
                .iter()
                .map(|t| RawRow {
                    tid: t.tid.to_string(),
                    values: rel
                        .attributes
                        .iter()
                        .zip(&t.values)
                        .map(|(a, v)| (a.name.clone(), a.domain.value_to_json(v)))
                        .collect(),
                })
                .collect();
            (rel.name.clone(), rows)
        })
        .collect()
}

/// The data section of a project file for `d`: relation name to rows.
pub fn instance_to_json<S: Scalar>(d: &Instance<S>) -> Json {
    serde_json::to_value(instance_rows(d)).expect("instance serializes")
}

const SAMPLE_LIMIT: usize = 40;

/// The active closure of `seeds` when it is small, otherwise the seeds
/// and their pairwise merges, capped at a fixed size.
fn axiom_sample<S: Scalar>(dom: &Domain<S>, seeds: BTreeSet<Value<S>>) -> Result<Vec<Value<S>>> {
    let closure = ActiveClosure::new(dom, seeds.iter().cloned())?;
    if closure.seeds().len() <= 5 {
        return Ok(closure.elements().into_iter().collect());
    }
    let mut sample: BTreeSet<Value<S>> = seeds.iter().take(SAMPLE_LIMIT).cloned().collect();
    sample.insert(Value::Bottom);
    let base: Vec<Value<S>> = sample.iter().cloned().collect();
    'outer: for (i, a) in base.iter().enumerate() {
        for b in &base[i + 1..] {
            if sample.len() >= SAMPLE_LIMIT {
                break 'outer;
            }
            sample.insert(dom.merge(a, b)?);
        }
    }
    Ok(sample.into_iter().collect())
}

fn axiom_failures<S: Scalar>(domain: &str, report: &AxiomReport<S>) -> Vec<String> {
    let checks = [
        ("idempotency", &report.idempotency),
        ("commutativity", &report.commutativity),
        ("associativity", &report.associativity),
    ];
    checks
        .iter()
        .filter(|(_, c)| !c.holds)
        .map(|(name, c)| {
            let witness: Vec<String> = c.counterexamples[0].iter().map(ToString::to_string).collect();
            format!("domain `{domain}` violates {name}, e.g. on ({})", witness.join(", "))
        })
        .collect()
}
