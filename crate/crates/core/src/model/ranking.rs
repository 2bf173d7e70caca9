use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::ModelError;
use crate::model::query::{ConjunctiveQuery, Term, VarId};
use crate::model::relation::{Database, Relation};
use crate::value::{Value, ValueKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

impl Direction {
    /// Orients an ascending comparison.
    pub fn apply(self, ord: Ordering) -> Ordering {
        match self {
            Direction::Asc => ord,
            Direction::Desc => ord.reverse(),
        }
    }
}

/// A unary weight function `f: Value -> R`.
#[derive(Clone, Debug)]
pub enum TermWeight {
    /// Numeric values weigh themselves.
    Identity,
    /// Looked up in a table that has not been loaded yet.
    Named(String),
    Table {
        name: String,
        values: Arc<HashMap<Value, f64>>,
    },
}

impl PartialEq for TermWeight {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TermWeight::Identity, TermWeight::Identity) => true,
            (TermWeight::Named(a), TermWeight::Named(b)) => a == b,
            (TermWeight::Table { name: a, .. }, TermWeight::Table { name: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl TermWeight {
    pub fn eval(&self, v: &Value) -> Option<f64> {
        match self {
            TermWeight::Identity => v.as_f64(),
            TermWeight::Named(_) => None,
            TermWeight::Table { values, .. } => values.get(v).copied(),
        }
    }

    pub fn table_name(&self) -> Option<&str> {
        match self {
            TermWeight::Identity => None,
            TermWeight::Named(n) | TermWeight::Table { name: n, .. } => Some(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightTerm {
    pub var: VarId,
    pub weight: TermWeight,
}

impl WeightTerm {
    pub fn identity(var: VarId) -> Self {
        WeightTerm {
            var,
            weight: TermWeight::Identity,
        }
    }
}

/// How answers are ordered.
#[derive(Clone, Debug, PartialEq)]
pub enum RankingSpec {
    /// Lexicographic by the listed variables.
    Lex { order: Vec<VarId>, direction: Direction },
    /// `f1(x1) + f2(x2) + ...`
    Sum { terms: Vec<WeightTerm>, direction: Direction },
    /// Sum of the stored weights of the joined tuples.
    TupleWeightSum { direction: Direction },
    /// `max(f1(x1), f2(x2), ...)`
    MaxAgg { terms: Vec<WeightTerm>, direction: Direction },
}

/// The rank of an answer, in the weight domain of its ranking spec.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Real(f64),
    Lex(Vec<Value>),
}

impl Weight {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Weight::Real(w) => Some(*w),
            Weight::Lex(_) => None,
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Real(w) => write!(f, "{w}"),
            Weight::Lex(key) => {
                let parts: Vec<String> = key.iter().map(Value::to_string).collect();
                f.write_str(&parts.join(";"))
            }
        }
    }
}

impl RankingSpec {
    pub fn lex(order: Vec<VarId>) -> Self {
        RankingSpec::Lex {
            order,
            direction: Direction::Asc,
        }
    }

    /// Ascending SUM of identity weights over `vars`.
    pub fn sum_of(vars: impl IntoIterator<Item = VarId>) -> Self {
        RankingSpec::Sum {
            terms: vars.into_iter().map(WeightTerm::identity).collect(),
            direction: Direction::Asc,
        }
    }

    pub fn max_of(vars: impl IntoIterator<Item = VarId>) -> Self {
        RankingSpec::MaxAgg {
            terms: vars.into_iter().map(WeightTerm::identity).collect(),
            direction: Direction::Asc,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            RankingSpec::Lex { direction, .. }
            | RankingSpec::Sum { direction, .. }
            | RankingSpec::TupleWeightSum { direction }
            | RankingSpec::MaxAgg { direction, .. } => *direction,
        }
    }

    pub fn terms(&self) -> &[WeightTerm] {
        match self {
            RankingSpec::Sum { terms, .. } | RankingSpec::MaxAgg { terms, .. } => terms,
            _ => &[],
        }
    }

    /// Variables the ranking reads.
    pub fn ranking_vars(&self) -> Vec<VarId> {
        match self {
            RankingSpec::Lex { order, .. } => order.clone(),
            RankingSpec::Sum { terms, .. } | RankingSpec::MaxAgg { terms, .. } => {
                terms.iter().map(|t| t.var).collect()
            }
            RankingSpec::TupleWeightSum { .. } => Vec::new(),
        }
    }

    /// Weight of a full assignment (indexed by variable id).
    ///
    /// `tuple_weight_total` is the summed stored weight of the answer's
    /// tuples; only `TupleWeightSum` reads it. Weight functions are validated
    /// against the data when a query is bound, so lookups here cannot miss
    /// for bound queries; an unbound miss yields `NaN`.
    pub fn answer_weight(&self, assignment: &[Value], tuple_weight_total: Option<f64>) -> Weight {
        match self {
            RankingSpec::Lex { order, .. } => {
                Weight::Lex(order.iter().map(|&v| assignment[v].clone()).collect())
            }
            RankingSpec::Sum { terms, .. } => Weight::Real(
                terms
                    .iter()
                    .map(|t| t.weight.eval(&assignment[t.var]).unwrap_or(f64::NAN))
                    .sum(),
            ),
            RankingSpec::MaxAgg { terms, .. } => Weight::Real(
                terms
                    .iter()
                    .map(|t| t.weight.eval(&assignment[t.var]).unwrap_or(f64::NAN))
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
            RankingSpec::TupleWeightSum { .. } => Weight::Real(tuple_weight_total.unwrap_or(f64::NAN)),
        }
    }

    /// Compares two weights of this spec, honoring its direction.
    pub fn compare(&self, a: &Weight, b: &Weight) -> Ordering {
        let ord = match (a, b) {
            (Weight::Real(x), Weight::Real(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
            (Weight::Lex(x), Weight::Lex(y)) => x.cmp(y),
            (Weight::Real(_), Weight::Lex(_)) => Ordering::Less,
            (Weight::Lex(_), Weight::Real(_)) => Ordering::Greater,
        };
        self.direction().apply(ord)
    }

    /// Replaces named weight tables by loaded ones.
    pub fn resolve_tables(&mut self, tables: &HashMap<String, Arc<HashMap<Value, f64>>>) -> Result<(), ModelError> {
        let terms = match self {
            RankingSpec::Sum { terms, .. } | RankingSpec::MaxAgg { terms, .. } => terms,
            _ => return Ok(()),
        };
        for t in terms.iter_mut() {
            if let TermWeight::Named(name) = &t.weight {
                let values = tables
                    .get(name)
                    .ok_or_else(|| ModelError::UnresolvedTable(name.clone()))?;
                t.weight = TermWeight::Table {
                    name: name.clone(),
                    values: values.clone(),
                };
            }
        }
        Ok(())
    }

    /// Checks at load time that every weight function is defined on every
    /// value its variable takes in the database.
    pub fn check_weights(&self, q: &ConjunctiveQuery, db: &Database) -> Result<(), ModelError> {
        let kinds = q.check_schema(db)?;
        for t in self.terms() {
            match &t.weight {
                TermWeight::Named(n) => return Err(ModelError::UnresolvedTable(n.clone())),
                TermWeight::Identity => {
                    if kinds[t.var] == Some(ValueKind::Text) {
                        return Err(ModelError::TextWithoutTable {
                            var: q.var_name(t.var).to_string(),
                        });
                    }
                }
                TermWeight::Table { name, values } => {
                    for (atom, col) in occurrences(q, t.var) {
                        let rel = db.get(&q.atoms[atom].relation).expect("checked by schema");
                        for tuple in rel.tuples() {
                            if !values.contains_key(&tuple[col]) {
                                return Err(ModelError::WeightTableMiss {
                                    table: name.clone(),
                                    var: q.var_name(t.var).to_string(),
                                    value: tuple[col].to_string(),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// `(atom, column)` positions where a variable occurs.
fn occurrences(q: &ConjunctiveQuery, var: VarId) -> Vec<(usize, usize)> {
    q.atoms
        .iter()
        .enumerate()
        .flat_map(|(a, atom)| {
            atom.terms
                .iter()
                .enumerate()
                .filter(move |(_, t)| **t == Term::Var(var))
                .map(move |(c, _)| (a, c))
        })
        .collect()
}

/// Loads a two-column `value,weight` CSV into a weight table. Values are
/// typed by inference, like relation columns.
pub fn load_weight_table(path: &Path) -> Result<HashMap<Value, f64>, ModelError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Load(format!("{}: {e}", path.display())))?;
    parse_weight_table(&name, &text)
}

pub fn parse_weight_table(name: &str, text: &str) -> Result<HashMap<Value, f64>, ModelError> {
    let rel = Relation::parse_csv(name, text)?;
    if rel.arity() != 2 {
        return Err(ModelError::Load(format!(
            "weight table `{name}` must have exactly two columns (value,weight)"
        )));
    }
    rel.tuples()
        .map(|t| {
            let w = t[1]
                .as_f64()
                .ok_or_else(|| ModelError::Load(format!("weight table `{name}`: non-numeric weight `{}`", t[1])))?;
            Ok((t[0].clone(), w))
        })
        .collect()
}

/// Sum of stored tuple weights for an assignment, found by scanning each
/// atom's relation. Meant for checks and small instances.
pub fn tuple_weight_total(q: &ConjunctiveQuery, db: &Database, assignment: &[Value]) -> Option<f64> {
    let mut total = 0.0;
    for atom in &q.atoms {
        let rel = db.get(&atom.relation)?;
        let i = rel.tuples().position(|t| {
            t.iter().zip(&atom.terms).all(|(v, term)| match term {
                Term::Var(x) => *v == assignment[*x],
                Term::Const(c) => v == c,
            })
        })?;
        total += rel.weight(i);
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(vs: &[i64]) -> Vec<Value> {
        vs.iter().map(|&v| Value::Int(v)).collect()
    }

    #[test]
    fn sum_of_top_answer() {
        let spec = RankingSpec::sum_of(0..5);
        assert_eq!(spec.answer_weight(&ints(&[2, 2, 3, 2, 1]), None), Weight::Real(10.0));
        assert_eq!(spec.answer_weight(&ints(&[1, 1, 1, 3, 8]), None), Weight::Real(14.0));
    }

    #[test]
    fn lex_key_is_projection() {
        let spec = RankingSpec::lex(vec![2, 0]);
        assert_eq!(
            spec.answer_weight(&ints(&[1, 5, 9]), None),
            Weight::Lex(ints(&[9, 1]))
        );
    }

    #[test]
    fn max_and_desc_compare() {
        let spec = RankingSpec::MaxAgg {
            terms: vec![WeightTerm::identity(0), WeightTerm::identity(1)],
            direction: Direction::Desc,
        };
        let w = spec.answer_weight(&ints(&[4, 7]), None);
        assert_eq!(w, Weight::Real(7.0));
        assert_eq!(spec.compare(&Weight::Real(7.0), &Weight::Real(3.0)), Ordering::Less);
    }

    #[test]
    fn weight_table_parse_and_lookup() {
        let t = parse_weight_table("w", "value,weight\nann,1.5\nbob,-2\n").unwrap();
        assert_eq!(t.get(&Value::text("bob")), Some(&-2.0));
    }
}
