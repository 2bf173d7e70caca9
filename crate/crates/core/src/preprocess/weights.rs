use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use crate::model::query::VarId;
use crate::model::ranking::{Direction, RankingSpec, TermWeight, WeightTerm};
use crate::preprocess::plan::Plan;
use crate::value::Value;

/// The first position in the relation order whose relation contains `var`.
pub fn charged_position(plan: &Plan, var: VarId) -> usize {
    plan.nodes
        .iter()
        .position(|n| n.col_of(var).is_some())
        .expect("every variable occurs in some atom")
}

/// Per position, the `(column, weight function)` pairs of the terms charged
/// to it.
fn charges<'a>(plan: &Plan, terms: &'a [WeightTerm]) -> Vec<Vec<(usize, &'a TermWeight)>> {
    let mut out = vec![Vec::new(); plan.len()];
    for t in terms {
        let p = charged_position(plan, t.var);
        let col = plan.nodes[p].col_of(t.var).expect("charged position holds the variable");
        out[p].push((col, &t.weight));
    }
    out
}

/// Tuple weights for SUM-like specs: each term is charged to the first
/// relation holding its variable, and a tuple weighs the sum of its charged
/// terms. For `TupleWeightSum` the stored tuple weights are used as is.
pub fn attr_weights_to_tuple_weights(plan: &Plan, spec: &RankingSpec) -> Vec<Vec<f64>> {
    if let RankingSpec::TupleWeightSum { .. } = spec {
        return plan
            .nodes
            .iter()
            .map(|n| (0..n.relation.len()).map(|t| n.relation.weight(t)).collect())
            .collect();
    }
    let charges = charges(plan, spec.terms());
    plan.nodes
        .iter()
        .zip(&charges)
        .map(|(n, ch)| {
            n.relation
                .tuples()
                .map(|t| ch.iter().map(|(c, f)| f.eval(&t[*c]).unwrap_or(f64::NAN)).sum())
                .collect()
        })
        .collect()
}

/// The term weights charged to each tuple, unaggregated (for MAX).
pub fn charged_term_weights(plan: &Plan, terms: &[WeightTerm]) -> Vec<Vec<Vec<f64>>> {
    let charges = charges(plan, terms);
    plan.nodes
        .iter()
        .zip(&charges)
        .map(|(n, ch)| {
            n.relation
                .tuples()
                .map(|t| ch.iter().map(|(c, f)| f.eval(&t[*c]).unwrap_or(f64::NAN)).collect())
                .collect()
        })
        .collect()
}

/// Weight tables turning the lexicographic order `order` into a sum: the
/// `i`-th smallest value (1-based) of the `j`-th order variable (1-based)
/// weighs `i * n^(|L| - 1 - j)`. Values are ranked within the relation the
/// variable is charged to, largest first for descending order.
pub fn lex_to_sum_weights(plan: &Plan, order: &[VarId], n: usize, direction: Direction) -> Vec<HashMap<Value, BigRational>> {
    let base = BigRational::from_integer(BigInt::from(n.max(1)));
    let len = order.len() as i32;
    order
        .iter()
        .enumerate()
        .map(|(j0, &v)| {
            let node = &plan.nodes[charged_position(plan, v)];
            let col = node.col_of(v).expect("charged position holds the variable");
            let mut values: Vec<&Value> = node.relation.tuples().map(|t| &t[col]).collect();
            values.sort_unstable();
            values.dedup();
            if direction == Direction::Desc {
                values.reverse();
            }
            let scale: BigRational = Pow::pow(&base, len - 1 - (j0 as i32 + 1));
            values
                .into_iter()
                .enumerate()
                .map(|(i, val)| (val.clone(), BigRational::from_integer(BigInt::from(i + 1)) * &scale))
                .collect()
        })
        .collect()
}

/// Integer tuple weights for enumerating `order` by sum: the tables of
/// [`lex_to_sum_weights`] scaled by `n` (so the last variable's weights are
/// whole), with `n` the largest relation cardinality.
pub fn lex_sum_tuple_weights(plan: &Plan, order: &[VarId], direction: Direction) -> Vec<Vec<BigInt>> {
    let n = plan.nodes.iter().map(|nd| nd.relation.len()).max().unwrap_or(1).max(1);
    let tables = lex_to_sum_weights(plan, order, n, direction);
    let scale = BigRational::from_integer(BigInt::from(n));
    let mut charged: Vec<Vec<(usize, HashMap<&Value, BigInt>)>> = vec![Vec::new(); plan.len()];
    for (&v, table) in order.iter().zip(&tables) {
        let p = charged_position(plan, v);
        let col = plan.nodes[p].col_of(v).expect("charged position holds the variable");
        let ints = table
            .iter()
            .map(|(val, w)| {
                let scaled = w * &scale;
                debug_assert!(scaled.is_integer());
                (val, scaled.to_integer())
            })
            .collect();
        charged[p].push((col, ints));
    }
    plan.nodes
        .iter()
        .zip(&charged)
        .map(|(node, ch)| {
            node.relation
                .tuples()
                .map(|t| {
                    ch.iter().fold(BigInt::default(), |acc, (c, table)| acc + &table[&t[*c]])
                })
                .collect()
        })
        .collect()
}

/// `i * n^(|L| - 1 - j)` for one value.
pub fn lex_rank_weight(i: usize, j: usize, len: usize, n: usize) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(n));
    let e = len as i32 - 1 - j as i32;
    BigRational::from_integer(BigInt::from(i)) * if e >= 0 { Pow::pow(&base, e) } else { BigRational::one() / Pow::pow(&base, -e) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_join_tree;
    use crate::fixtures;

    fn plan() -> Plan {
        let q = fixtures::example_query();
        let t = build_join_tree(&q).unwrap();
        Plan::new(&q, &fixtures::example_database(), &t, &t.topological_rel_order())
    }

    #[test]
    fn identity_weights_charge_first_relation() {
        let p = plan();
        let w = attr_weights_to_tuple_weights(&p, &RankingSpec::sum_of(0..5));
        // R gets x1 + x2, S gets x3, T gets x4, U gets x5.
        assert_eq!(w[0], vec![2.0, 4.0, 0.0]);
        assert_eq!(w[1], vec![1.0, 1.0, 2.0, 3.0, 5.0]);
        assert_eq!(w[2], vec![0.0, 3.0, 2.0]);
        assert_eq!(w[3], vec![1.0, 2.0, 8.0, 9.0]);
    }

    #[test]
    fn single_variable_sum_lands_on_s() {
        let p = plan();
        let w = attr_weights_to_tuple_weights(&p, &RankingSpec::sum_of([2]));
        assert!(w[0].iter().chain(&w[2]).chain(&w[3]).all(|&x| x == 0.0));
        assert_eq!(w[1][4], 5.0);
    }

    #[test]
    fn literal_rank_weights() {
        let three = BigRational::from_integer(BigInt::from(3));
        assert_eq!(lex_rank_weight(3, 2, 3, 10), three);
        assert_eq!(lex_rank_weight(3, 0, 1, 7), three);
    }

    #[test]
    fn single_variable_order_weighs_rank() {
        let p = plan();
        let tables = lex_to_sum_weights(&p, &[0], 3, Direction::Asc);
        // With one variable the exponent is -1; scaled by n the weight is the rank.
        let ints = lex_sum_tuple_weights(&p, &[0], Direction::Asc);
        assert_eq!(ints[0], vec![BigInt::from(2), BigInt::from(3), BigInt::from(1)]);
        assert_eq!(tables[0].len(), 3);
    }

    #[test]
    fn each_position_outweighs_everything_after_it() {
        let p = plan();
        let n = 5;
        let tables = lex_to_sum_weights(&p, &[0, 1, 2, 3, 4], n, Direction::Asc);
        let spread: Vec<BigRational> = tables
            .iter()
            .map(|t| t.values().max().unwrap() - t.values().min().unwrap())
            .collect();
        for j in 0..tables.len() {
            let step = lex_rank_weight(1, j + 1, 5, n);
            let later: BigRational = spread[j + 1..].iter().sum();
            assert!(later < step, "position {j}");
        }
    }
}
