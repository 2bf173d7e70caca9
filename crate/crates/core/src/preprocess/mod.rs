//! Bottom-up pass: join indexes, dangling-tuple removal and best-extension
//! weights, then sorting every group for the enumerators.

pub mod index;
pub mod plan;
pub mod reduce;
pub mod semiring;
pub mod weights;

pub use index::JoinIndex;
pub use plan::{Node, Plan};
pub use reduce::{bottom_up, dp_preprocess, semijoin_reduce_lex, tie_ranks, Pass, Prepared};
pub use semiring::{Aggregate, Boolean, Leximax, Leximin, Semiring, SumBig, SumF64, Tropical, Unit};
pub use weights::{
    attr_weights_to_tuple_weights, charged_position, charged_term_weights, lex_rank_weight, lex_sum_tuple_weights,
    lex_to_sum_weights,
};
