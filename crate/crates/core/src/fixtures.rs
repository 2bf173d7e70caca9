//! The running example: four relations joined as
//! `R(x1,x2), S(x1,x3), T(x2,x4), U(x4,x5)`.

use crate::model::query::ConjunctiveQuery;
use crate::model::relation::{Database, Relation};

pub fn example_database() -> Database {
    Database::from_relations([
        Relation::from_ints("R", &[[1, 1], [2, 2], [0, 0]]),
        Relation::from_ints("S", &[[0, 1], [1, 1], [1, 2], [2, 3], [2, 5]]),
        Relation::from_ints("T", &[[0, 0], [1, 3], [2, 2]]),
        Relation::from_ints("U", &[[2, 1], [2, 2], [3, 8], [3, 9]]),
    ])
}

pub fn example_query() -> ConjunctiveQuery {
    ConjunctiveQuery::builder("Q")
        .atom("R", ["x1", "x2"])
        .atom("S", ["x1", "x3"])
        .atom("T", ["x2", "x4"])
        .atom("U", ["x4", "x5"])
        .build()
        .expect("static query")
}
