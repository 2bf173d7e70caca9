//! Queries, databases, ranking specs and the normalization rewrites.

pub mod normalize;
pub mod parse;
pub mod query;
pub mod ranking;
pub mod relation;

pub use normalize::{apply_selections, normalize, remove_self_joins};
pub use parse::{parse_query, parse_query_for, ParsedQuery, QueryError};
pub use query::{Atom, ConjunctiveQuery, Term, TermSpec, VarId};
pub use ranking::{
    load_weight_table, parse_weight_table, tuple_weight_total, Direction, RankingSpec, TermWeight, Weight,
    WeightTerm,
};
pub use relation::{Database, Relation, WEIGHT_COLUMN};
