//! 3-CNF formulas and their encoding as cleaning problems: a formula is
//! satisfiable iff `⊤` is not a certain answer of `π_L(R)` over the
//! generated instance.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value as Json};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lattice::{Bool3, Value};
use crate::project::Project;
use crate::md::find_clean;
use crate::query::{certain, eval, Query};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    /// 1-based variable index.
    pub var: u32,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: u32, positive: bool) -> Self {
        Literal { var, positive }
    }

    fn dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", if self.positive { "" } else { "¬" }, self.var)
    }
}

/// A conjunction of clauses of exactly three literals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    pub clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(clauses: Vec<[Literal; 3]>) -> Result<Self> {
        if clauses.iter().flatten().any(|l| l.var == 0) {
            return Err(Error::Contract("variables are numbered from 1".into()));
        }
        Ok(CnfFormula { clauses })
    }

    pub fn num_vars(&self) -> u32 {
        self.clauses.iter().flatten().map(|l| l.var).max().unwrap_or(0)
    }

    /// Tries every assignment.
    pub fn is_satisfiable(&self) -> bool {
        let n = self.num_vars();
        assert!(n < 32, "brute force is limited to 31 variables");
        (0..1u64 << n).any(|bits| {
            self.clauses
                .iter()
                .all(|c| c.iter().any(|l| (bits >> (l.var - 1) & 1 == 1) == l.positive))
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars(), self.clauses.len());
        for c in &self.clauses {
            out.push_str(&format!("{} {} {} 0\n", c[0].dimacs(), c[1].dimacs(), c[2].dimacs()));
        }
        out
    }

    /// Parses DIMACS CNF. Comment lines start with `c`; every clause must
    /// have exactly three literals.
    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut literals = Vec::new();
        let mut clauses = Vec::new();
        let mut declared = None;
        for (n, line) in text.lines().enumerate() {
            let err = |column: usize, message: String| Error::Parse {
                line: n + 1,
                column,
                message,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('p') {
                let parts: Vec<&str> = header.split_whitespace().collect();
                match parts.as_slice() {
                    ["cnf", _, m] => declared = Some(m.parse::<usize>().map_err(|e| err(1, e.to_string()))?),
                    _ => return Err(err(1, "expected `p cnf <vars> <clauses>`".into())),
                }
                continue;
            }
            for (k, tok) in line.split_whitespace().enumerate() {
                let v: i64 = tok.parse().map_err(|_| err(k + 1, format!("`{tok}` is not a literal")))?;
                if v == 0 {
                    let clause: [Literal; 3] = literals
                        .as_slice()
                        .try_into()
                        .map_err(|_| err(k + 1, format!("clause has {} literals, expected 3", literals.len())))?;
                    clauses.push(clause);
                    literals.clear();
                } else {
                    let var = u32::try_from(v.unsigned_abs()).map_err(|_| err(k + 1, "variable out of range".into()))?;
                    literals.push(Literal::new(var, v > 0));
                }
            }
        }
        if !literals.is_empty() {
            return Err(Error::Parse {
                line: text.lines().count(),
                column: 1,
                message: "last clause is not terminated by 0".into(),
            });
        }
        if let Some(m) = declared {
            if m != clauses.len() {
                return Err(Error::Validation(vec![format!(
                    "header declares {m} clauses, found {}",
                    clauses.len()
                )]));
            }
        }
        CnfFormula::new(clauses)
    }

    /// Applies a variable permutation (`perm[v-1]` is the new index of
    /// `v`, 1-based) and flips the sign of variables with a set bit in
    /// `flips`.
    pub fn relabel(&self, perm: &[u32], flips: u32) -> CnfFormula {
        let map = |l: Literal| {
            let flip = flips >> (l.var - 1) & 1 == 1;
            Literal::new(perm[(l.var - 1) as usize], l.positive != flip)
        };
        CnfFormula {
            clauses: self.clauses.iter().map(|c| c.map(map)).collect(),
        }
    }

    /// A representative of the formula under reordering of literals and
    /// clauses, renaming of variables and flipping of signs, over the
    /// first `vars` variables.
    pub fn canonical(&self, vars: u32) -> CnfFormula {
        let mut best: Option<Vec<[Literal; 3]>> = None;
        let mut perm: Vec<u32> = (1..=vars).collect();
        loop {
            for flips in 0..1u32 << vars {
                let mut clauses: Vec<[Literal; 3]> = self
                    .relabel(&perm, flips)
                    .clauses
                    .into_iter()
                    .map(|mut c| {
                        c.sort();
                        c
                    })
                    .collect();
                clauses.sort();
                if best.as_ref().is_none_or(|b| clauses < *b) {
                    best = Some(clauses);
                }
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        CnfFormula {
            clauses: best.unwrap_or_default(),
        }
    }
}

fn next_permutation(p: &mut [u32]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let clauses: Vec<String> = self
            .clauses
            .iter()
            .map(|c| format!("({} ∨ {} ∨ {})", c[0], c[1], c[2]))
            .collect();
        write!(f, "{}", clauses.join(" ∧ "))
    }
}

impl FromStr for CnfFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CnfFormula::from_dimacs(s)
    }
}

/// How clause tuples get their `C` values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SatEncoding {
    /// One `C` value per literal occurrence, each similar to the clause's
    /// `d` value.
    #[default]
    PerLiteral,
    /// One `C` value shared by the three literal tuples of a clause. A
    /// clause holding a variable and its negation then raises `⊤` at once,
    /// so this form only agrees with satisfiability when no clause does.
    PerClause,
}

/// Builds the project for `formula`: relation `R(C, V, L)`, dependencies
/// `phi1: C ≈ C → C ⇌ C` and `phi2: CV ≈ CV → L ⇌ L`, and the query
/// `top = π_L(R)`.
///
/// `C` values are intervals. Literal tuple `k` of clause `i` holds
/// `[0, 3i+k]` and the clause's extra tuple holds `[3n+i, 4n]`; the two are
/// similar and merge to `[0, 4n]`, the same value for every clause.
pub fn gen3sat_json(formula: &CnfFormula, encoding: SatEncoding) -> Json {
    let n = formula.clauses.len();
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (i, clause) in formula.clauses.iter().enumerate() {
        let d = json!([(3 * n + i).to_string(), (4 * n).to_string()]);
        for (k, lit) in clause.iter().enumerate() {
            let hi = match encoding {
                SatEncoding::PerLiteral => 3 * i + k,
                SatEncoding::PerClause => 3 * i,
            };
            let c = json!(["0", hi.to_string()]);
            if k == 0 || encoding == SatEncoding::PerLiteral {
                pairs.push(json!([c.clone(), d.clone()]));
            }
            rows.push(json!({
                "tid": format!("t{}", 4 * i + k + 1),
                "values": {"C": c, "V": format!("x{}", lit.var), "L": if lit.positive { 1 } else { 0 }},
            }));
        }
        rows.push(json!({
            "tid": format!("t{}", 4 * i + 4),
            "values": {"C": d, "V": "y", "L": 1},
        }));
    }
    json!({
        "domains": [
            {"name": "Clause", "kind": "interval", "similarity": {"mode": "explicit", "pairs": pairs}},
            {"name": "Var", "kind": "atoms", "similarity": {"mode": "equality"}},
            {"name": "Sign", "kind": "bool3", "similarity": {"mode": "equality"}},
        ],
        "relations": [{"name": "R", "attributes": [
            {"name": "C", "domain": "Clause"},
            {"name": "V", "domain": "Var"},
            {"name": "L", "domain": "Sign"},
        ]}],
        "mds": [
            {"id": "phi1", "lhs": [["C", "C"]], "rhs": ["C", "C"]},
            {"id": "phi2", "lhs": [["C", "C"], ["V", "V"]], "rhs": ["L", "L"]},
        ],
        "data": {"R": rows},
        "queries": {"top": "(project (L) (rel R))"},
    })
}

pub fn gen3sat<S: Scalar>(formula: &CnfFormula, encoding: SatEncoding) -> Result<Project<S>> {
    Project::from_json_str(&gen3sat_json(formula, encoding).to_string())
}

/// Whether `⊤` is in the certain answer of `π_L(R)`, that is, in the
/// answer on every clean instance. Searches for a clean instance without
/// `⊤`, visiting at most `max_states` chase states.
pub fn top_is_certain<S: Scalar>(project: &Project<S>, max_states: usize) -> Result<bool> {
    let q = Query::project(["L"], Query::rel("R"));
    let mut failure = None;
    let search = find_clean(&project.instance, &project.sigma, max_states, |d| match eval(&q, d) {
        Ok(answer) => !has_top(&answer),
        Err(e) => {
            failure = Some(e);
            true
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    match search.found {
        Some(_) => Ok(false),
        None if search.complete => Ok(true),
        None => Err(Error::IncompleteEnumeration { limit: max_states }),
    }
}

/// [`top_is_certain`] computed from the full certain answer.
pub fn top_in_certain_answer<S: Scalar>(project: &Project<S>, limit: usize) -> Result<bool> {
    let q = Query::project(["L"], Query::rel("R"));
    Ok(has_top(&certain(&q, &project.instance, &project.sigma, limit)?))
}

fn has_top<S: Scalar>(answer: &Instance<S>) -> bool {
    answer.tuples(0).iter().any(|t| t.values[0] == Value::Bool(Bool3::Top))
}
