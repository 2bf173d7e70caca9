use std::collections::HashMap;
use std::fmt;

use crate::error::ModelError;
use crate::model::relation::Database;
use crate::value::{Value, ValueKind};

/// Index of a variable in [`ConjunctiveQuery::vars`].
pub type VarId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(VarId),
    Const(Value),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.vars().any(|v| v == var)
    }

    /// True when every term is a variable and no variable repeats.
    pub fn is_plain(&self) -> bool {
        let mut seen = Vec::with_capacity(self.terms.len());
        self.terms.iter().all(|t| match t {
            Term::Var(v) if !seen.contains(v) => {
                seen.push(*v);
                true
            }
            _ => false,
        })
    }
}

/// A conjunctive query `Q(head) :- R1(..), ..., Rl(..)`.
///
/// Variables are numbered by first appearance in the body.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjunctiveQuery {
    pub name: String,
    vars: Vec<String>,
    pub head: Vec<VarId>,
    pub atoms: Vec<Atom>,
}

/// A term as written, before variables are numbered.
#[derive(Clone, Debug, PartialEq)]
pub enum TermSpec {
    Var(String),
    Const(Value),
}

impl From<&str> for TermSpec {
    fn from(s: &str) -> Self {
        TermSpec::Var(s.to_string())
    }
}

impl From<Value> for TermSpec {
    fn from(v: Value) -> Self {
        TermSpec::Const(v)
    }
}

impl From<i64> for TermSpec {
    fn from(v: i64) -> Self {
        TermSpec::Const(Value::Int(v))
    }
}

#[derive(Debug, Default)]
pub struct QueryBuilder {
    name: String,
    atoms: Vec<(String, Vec<TermSpec>)>,
    head: Option<Vec<String>>,
}

impl QueryBuilder {
    pub fn atom<T: Into<TermSpec>>(mut self, relation: &str, terms: impl IntoIterator<Item = T>) -> Self {
        self.atoms
            .push((relation.to_string(), terms.into_iter().map(Into::into).collect()));
        self
    }

    /// Restricts the head; by default the head holds every body variable.
    pub fn head<'a>(mut self, vars: impl IntoIterator<Item = &'a str>) -> Self {
        self.head = Some(vars.into_iter().map(str::to_string).collect());
        self
    }

    /// Fails with the offending name when a head variable is not in the body.
    pub fn build(self) -> Result<ConjunctiveQuery, String> {
        let mut vars: Vec<String> = Vec::new();
        let mut ids: HashMap<String, VarId> = HashMap::new();
        let atoms = self
            .atoms
            .into_iter()
            .map(|(relation, terms)| Atom {
                relation,
                terms: terms
                    .into_iter()
                    .map(|t| match t {
                        TermSpec::Var(name) => Term::Var(*ids.entry(name.clone()).or_insert_with(|| {
                            vars.push(name);
                            vars.len() - 1
                        })),
                        TermSpec::Const(v) => Term::Const(v),
                    })
                    .collect(),
            })
            .collect();
        let head = match self.head {
            None => (0..vars.len()).collect(),
            Some(h) => h
                .into_iter()
                .map(|name| ids.get(&name).copied().ok_or(name))
                .collect::<Result<_, _>>()?,
        };
        Ok(ConjunctiveQuery {
            name: self.name,
            vars,
            head,
            atoms,
        })
    }
}

impl ConjunctiveQuery {
    pub fn builder(name: &str) -> QueryBuilder {
        QueryBuilder {
            name: name.to_string(),
            ..QueryBuilder::default()
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name)
    }

    /// `l`, the number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// A join query keeps every body variable in its head.
    pub fn is_join_query(&self) -> bool {
        let mut h = self.head.clone();
        h.sort_unstable();
        h.dedup();
        h.len() == self.vars.len()
    }

    /// Same body with every variable in the head.
    pub fn as_join_query(&self) -> ConjunctiveQuery {
        ConjunctiveQuery {
            head: (0..self.vars.len()).collect(),
            ..self.clone()
        }
    }

    /// Variable sets of the atoms (the query hypergraph's edges).
    pub fn atom_var_sets(&self) -> Vec<Vec<VarId>> {
        self.atoms
            .iter()
            .map(|a| {
                let mut vs: Vec<VarId> = a.vars().collect();
                vs.sort_unstable();
                vs.dedup();
                vs
            })
            .collect()
    }

    /// True when the two variables share an atom.
    pub fn are_neighbors(&self, a: VarId, b: VarId) -> bool {
        self.atoms.iter().any(|at| at.contains(a) && at.contains(b))
    }

    /// Checks the query against a database: relations exist, arities match,
    /// and each variable only joins columns of one kind. Returns the kind of
    /// each variable (`None` if all its columns are empty).
    pub fn check_schema(&self, db: &Database) -> Result<Vec<Option<ValueKind>>, ModelError> {
        let mut kinds: Vec<Option<ValueKind>> = vec![None; self.vars.len()];
        for (i, atom) in self.atoms.iter().enumerate() {
            let rel = db
                .get(&atom.relation)
                .ok_or_else(|| ModelError::UnknownRelation(atom.relation.clone()))?;
            if rel.arity() != atom.terms.len() {
                return Err(ModelError::ArityMismatch {
                    atom: i,
                    relation: atom.relation.clone(),
                    expected: rel.arity(),
                    found: atom.terms.len(),
                });
            }
            for (col, term) in atom.terms.iter().enumerate() {
                let Term::Var(v) = term else { continue };
                let Some(k) = rel.column_kind(col) else { continue };
                match kinds[*v] {
                    None => kinds[*v] = Some(k),
                    Some(prev) if prev != k => {
                        return Err(ModelError::VariableKinds {
                            var: self.vars[*v].clone(),
                            first: prev,
                            second: k,
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(kinds)
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head: Vec<&str> = self.head.iter().map(|&v| self.var_name(v)).collect();
        write!(f, "{}({}) :- ", self.name, head.join(","))?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let terms: Vec<String> = a
                .terms
                .iter()
                .map(|t| match t {
                    Term::Var(v) => self.var_name(*v).to_string(),
                    Term::Const(Value::Text(s)) => format!("'{s}'"),
                    Term::Const(c) => c.to_string(),
                })
                .collect();
            write!(f, "{}({})", a.relation, terms.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::relation::Relation;

    #[test]
    fn builder_numbers_vars_by_first_appearance() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("R", ["x1", "x2"])
            .atom("S", ["x1", "x3"])
            .build()
            .unwrap();
        assert_eq!(q.vars(), &["x1", "x2", "x3"]);
        assert!(q.is_join_query());
        assert!(q.are_neighbors(0, 2));
        assert!(!q.are_neighbors(1, 2));
    }

    #[test]
    fn unknown_head_variable() {
        let err = ConjunctiveQuery::builder("Q")
            .atom("R", ["x"])
            .head(["y"])
            .build()
            .unwrap_err();
        assert_eq!(err, "y");
    }

    #[test]
    fn schema_check_reports_arity() {
        let q = ConjunctiveQuery::builder("Q").atom("R", ["x"]).build().unwrap();
        let db = Database::from_relations([Relation::from_ints("R", &[[1, 2]])]);
        assert!(matches!(
            q.check_schema(&db),
            Err(ModelError::ArityMismatch { expected: 2, found: 1, .. })
        ));
    }

    #[test]
    fn schema_check_reports_kind_clash() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("R", ["x"])
            .atom("S", ["x"])
            .build()
            .unwrap();
        let db = Database::from_relations([
            Relation::from_ints("R", &[[1]]),
            Relation::from_rows("S", 1, vec![vec![Value::text("a")]]).unwrap(),
        ]);
        assert!(matches!(q.check_schema(&db), Err(ModelError::VariableKinds { .. })));
    }

    #[test]
    fn display_round_trips_shape() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("R", [TermSpec::from("x"), TermSpec::from(1)])
            .build()
            .unwrap();
        assert_eq!(q.to_string(), "Q(x) :- R(x,1)");
    }
}
