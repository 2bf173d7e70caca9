//! Naive join-then-rank evaluation and random instances, for checking the
//! engine.

mod check;
mod join;
mod random;

pub use check::{check_instance, dump_instance, minimize, order_clause, CheckFailure, CheckReport};
pub use join::{join, join_then_rank, OracleError, Row, MAX_ROWS};
pub use random::{random_instance, random_spec, InstanceConfig, Shape, SpecKind};
