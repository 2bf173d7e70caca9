//! Ranked enumeration of acyclic join queries.
//!
//! Answers come out one at a time in ranking order (lexicographic, SUM, MAX
//! or summed tuple weights) after a linear-time bottom-up pass, without
//! materializing the join.

pub mod analysis;
pub mod bench;
pub mod enumerate;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod oracle;
pub mod preprocess;
pub mod value;

pub use error::{Error, ModelError};
pub use model::{ConjunctiveQuery, Database, Direction, RankingSpec, Relation, Weight};
pub use value::Value;
pub use enumerate::{enumerate, Answer, AnswerStream, TieBreak};
