//! Data cleaning with matching dependencies over lattice-valued attributes.

pub mod approx;
pub mod error;
pub mod instance;
pub mod lattice;
pub mod md;
pub mod project;
pub mod query;
pub mod sat;
pub mod scalar;
pub mod swoosh;

pub use error::{Error, Result};
pub use instance::Tid;
pub use lattice::{Atom, AtomSet, Bool3, ValueKind};
pub use md::{ChasePolicy, ChaseStep, MatchDep};
pub use query::Query;
pub use scalar::Scalar;

/// Exact rational interval endpoints.
pub type Rational = num_rational::Ratio<i64>;

pub type Value = lattice::Value<Rational>;
pub type Interval = lattice::Interval<Rational>;
pub type Domain = lattice::Domain<Rational>;
pub type Similarity = lattice::Similarity<Rational>;
pub type Schema = instance::Schema<Rational>;
pub type RelationSchema = instance::RelationSchema<Rational>;
pub type Attribute = instance::Attribute<Rational>;
pub type Tuple = instance::Tuple<Rational>;
pub type Instance = instance::Instance<Rational>;
pub type Project = project::Project<Rational>;
