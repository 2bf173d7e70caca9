use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

use crate::enumerate::TieBreak;
use crate::model::query::{ConjunctiveQuery, Term};
use crate::model::ranking::{RankingSpec, Weight};
use crate::model::relation::Database;
use crate::value::Value;

/// Largest intermediate result the oracle will hold.
pub const MAX_ROWS: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("join grew past {limit} rows")]
    TooLarge { limit: usize },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub values: Vec<Value>,
    pub weight: Weight,
}

/// Every answer of `q` over `db`, sorted by `spec` and then `tie`.
///
/// The join is naive on purpose: atoms are joined left to right in
/// declaration order with a hash table per step. Constants, repeated
/// variables and self-joins are handled directly, without the engine's
/// rewrites.
pub fn join_then_rank(
    q: &ConjunctiveQuery,
    db: &Database,
    spec: &RankingSpec,
    tie: &TieBreak,
) -> Result<Vec<Row>, OracleError> {
    let joined = join(q, db, MAX_ROWS)?;
    let mut rows: Vec<(Row, Vec<f64>)> = joined
        .into_iter()
        .map(|(values, tuple_weight)| {
            let terms: Vec<f64> = spec
                .terms()
                .iter()
                .map(|t| t.weight.eval(&values[t.var]).unwrap_or(f64::NAN))
                .collect();
            let weight = match spec {
                RankingSpec::Lex { order, .. } => Weight::Lex(order.iter().map(|&v| values[v].clone()).collect()),
                RankingSpec::Sum { .. } => Weight::Real(terms.iter().sum()),
                RankingSpec::TupleWeightSum { .. } => Weight::Real(tuple_weight),
                RankingSpec::MaxAgg { .. } => Weight::Real(terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            };
            let mut sorted = terms;
            sorted.sort_by(|a, b| b.total_cmp(a));
            (Row { values, weight }, sorted)
        })
        .collect();
    let dir = spec.direction();
    rows.sort_by(|(a, ma), (b, mb)| {
        let primary = match (&a.weight, &b.weight) {
            (Weight::Real(x), Weight::Real(y)) => x.total_cmp(y),
            (Weight::Lex(x), Weight::Lex(y)) => x.cmp(y),
            _ => Ordering::Equal,
        };
        let refined = match spec {
            RankingSpec::MaxAgg { .. } => primary.then_with(|| cmp_desc_sorted(ma, mb)),
            _ => primary,
        };
        dir.apply(refined).then_with(|| {
            let t = tie
                .order
                .iter()
                .map(|&v| a.values[v].cmp(&b.values[v]))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal);
            if tie.descending {
                t.reverse()
            } else {
                t
            }
        })
    });
    Ok(rows.into_iter().map(|(r, _)| r).collect())
}

fn cmp_desc_sorted(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

/// All assignments satisfying the body, with the summed stored weight of the
/// tuples each one uses. Fails once an intermediate result exceeds `limit`.
pub fn join(q: &ConjunctiveQuery, db: &Database, limit: usize) -> Result<Vec<(Vec<Value>, f64)>, OracleError> {
    let nv = q.var_count();
    let mut partial: Vec<(Vec<Option<Value>>, f64)> = vec![(vec![None; nv], 0.0)];
    let mut bound = vec![false; nv];
    for atom in &q.atoms {
        let rel = db
            .get(&atom.relation)
            .ok_or_else(|| OracleError::UnknownRelation(atom.relation.clone()))?;
        // Columns whose variable is already bound form the probe key.
        let probe: Vec<(usize, usize)> = atom
            .terms
            .iter()
            .enumerate()
            .filter_map(|(c, t)| match t {
                Term::Var(v) if bound[*v] => Some((c, *v)),
                _ => None,
            })
            .collect();
        let mut table: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
        'tuples: for (i, t) in rel.tuples().enumerate() {
            let mut local: Vec<(usize, &Value)> = Vec::new();
            for (c, term) in atom.terms.iter().enumerate() {
                match term {
                    Term::Const(k) if t[c] != *k => continue 'tuples,
                    Term::Var(v) => {
                        if let Some((_, prev)) = local.iter().find(|(w, _)| w == v) {
                            if **prev != t[c] {
                                continue 'tuples;
                            }
                        } else {
                            local.push((*v, &t[c]));
                        }
                    }
                    _ => {}
                }
            }
            let key = probe.iter().map(|&(c, _)| t[c].clone()).collect();
            table.entry(key).or_default().push(i);
        }
        let mut next = Vec::new();
        for (assign, w) in &partial {
            let key: Vec<Value> = probe
                .iter()
                .map(|&(_, v)| assign[v].clone().expect("bound"))
                .collect();
            let Some(matches) = table.get(&key) else { continue };
            for &i in matches {
                let t = rel.tuple(i);
                let mut a = assign.clone();
                for (c, term) in atom.terms.iter().enumerate() {
                    if let Term::Var(v) = term {
                        a[*v] = Some(t[c].clone());
                    }
                }
                next.push((a, w + rel.weight(i)));
                if next.len() > limit {
                    return Err(OracleError::TooLarge { limit });
                }
            }
        }
        for v in atom.vars() {
            bound[v] = true;
        }
        partial = next;
    }
    Ok(partial
        .into_iter()
        .map(|(a, w)| (a.into_iter().map(|v| v.expect("every variable occurs in the body")).collect(), w))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::relation::Relation;

    fn ints(vs: &[i64]) -> Vec<Value> {
        vs.iter().map(|&v| Value::Int(v)).collect()
    }

    fn scan(n: usize) -> TieBreak {
        TieBreak {
            order: (0..n).collect(),
            descending: false,
        }
    }

    #[test]
    fn example_sum() {
        let rows = join_then_rank(
            &fixtures::example_query(),
            &fixtures::example_database(),
            &RankingSpec::sum_of(0..5),
            &scan(5),
        )
        .unwrap();
        let w: Vec<f64> = rows.iter().map(|r| r.weight.as_real().unwrap()).collect();
        assert_eq!(w, [10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 15.0, 16.0]);
        assert_eq!(rows[0].values, ints(&[2, 2, 3, 2, 1]));
    }

    #[test]
    fn example_lex() {
        let rows = join_then_rank(
            &fixtures::example_query(),
            &fixtures::example_database(),
            &RankingSpec::lex((0..5).collect()),
            &scan(5),
        )
        .unwrap();
        assert_eq!(rows[0].values, ints(&[1, 1, 1, 3, 8]));
    }

    #[test]
    fn empty_relation_gives_nothing() {
        let mut db = fixtures::example_database();
        db.insert(Relation::from_ints::<2>("T", &[]));
        let rows = join_then_rank(&fixtures::example_query(), &db, &RankingSpec::sum_of(0..5), &scan(5)).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn selections_and_self_joins() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("E", [crate::model::query::TermSpec::from("x"), 1.into()])
            .atom("E", ["x", "x"])
            .build()
            .unwrap();
        let db = Database::from_relations([Relation::from_ints("E", &[[1, 1], [2, 1], [2, 2], [3, 3]])]);
        let rows = join(&q, &db, 100).unwrap();
        let mut xs: Vec<Vec<Value>> = rows.into_iter().map(|r| r.0).collect();
        xs.sort();
        assert_eq!(xs, vec![ints(&[1]), ints(&[2])]);
    }

    #[test]
    fn guard_trips() {
        let r = Relation::from_ints("R", &[[1], [2], [3]]);
        let q = ConjunctiveQuery::builder("Q").atom("R", ["a"]).atom("R", ["b"]).build().unwrap();
        let err = join(&q, &Database::from_relations([r]), 5).unwrap_err();
        assert_eq!(err, OracleError::TooLarge { limit: 5 });
    }
}
