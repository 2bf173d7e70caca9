use thiserror::Error;

use crate::analysis::CyclicError;
use crate::value::ValueKind;

/// Problems with relation data or with binding a query to a database.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("relation `{relation}`: tuple {index} has {found} values, expected {expected}")]
    TupleArity {
        relation: String,
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("relation `{relation}`: column `{column}` mixes {first} and {second} values")]
    MixedColumn {
        relation: String,
        column: String,
        first: ValueKind,
        second: ValueKind,
    },
    #[error("relation `{relation}`: {expected} columns declared but {found} names given")]
    ColumnNames {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{relation}`: weight vector has {found} entries for {expected} tuples")]
    WeightCount {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("atom {atom} over `{relation}` has {found} terms, relation arity is {expected}")]
    ArityMismatch {
        atom: usize,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("variable `{var}` joins a {first} column with a {second} column")]
    VariableKinds {
        var: String,
        first: ValueKind,
        second: ValueKind,
    },
    #[error("variable `{var}` ranges over text values; SUM/MAX needs a weight table for it")]
    TextWithoutTable { var: String },
    #[error("weight table `{table}` has no entry for value `{value}` of variable `{var}`")]
    WeightTableMiss {
        table: String,
        var: String,
        value: String,
    },
    #[error("weight table `{0}` was referenced but never loaded")]
    UnresolvedTable(String),
    #[error("{0}")]
    Load(String),
}

/// Errors raised by the enumeration entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cyclic(#[from] CyclicError),
    #[error("ranking spec is invalid for this query: {0}")]
    Spec(String),
}
