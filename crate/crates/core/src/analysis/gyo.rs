use std::fmt;

use thiserror::Error;

use crate::model::query::{ConjunctiveQuery, VarId};

/// The query hypergraph could not be reduced to a single edge.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct CyclicError {
    /// Atom indices left after reduction, with the variables they still hold.
    pub residual: Vec<(usize, Vec<String>)>,
}

impl fmt::Display for CyclicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("query is cyclic; irreducible part:")?;
        for (atom, vars) in &self.residual {
            write!(f, " #{atom}{{{}}}", vars.join(","))?;
        }
        Ok(())
    }
}

/// GYO reduction: repeatedly drops variables that occur in a single edge and
/// edges contained in another edge. Returns the surviving edges (index and
/// reduced variable set); the hypergraph is acyclic iff at most one survives.
pub fn gyo_residual(edges: &[Vec<VarId>]) -> Vec<(usize, Vec<VarId>)> {
    let mut live: Vec<(usize, Vec<VarId>)> = edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mut e = e.clone();
            e.sort_unstable();
            e.dedup();
            (i, e)
        })
        .collect();
    loop {
        let mut changed = false;
        let mut counts = std::collections::HashMap::<VarId, usize>::new();
        for (_, e) in &live {
            for &v in e {
                *counts.entry(v).or_default() += 1;
            }
        }
        for (_, e) in live.iter_mut() {
            let before = e.len();
            e.retain(|v| counts[v] > 1);
            changed |= e.len() != before;
        }
        let mut i = 0;
        while i < live.len() {
            let covered = (0..live.len()).any(|j| {
                j != i
                    && is_subset(&live[i].1, &live[j].1)
                    && (live[i].1.len() < live[j].1.len() || j < i)
            });
            if covered && live.len() > 1 {
                live.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            return live;
        }
    }
}

fn is_subset(a: &[VarId], b: &[VarId]) -> bool {
    a.iter().all(|v| b.binary_search(v).is_ok())
}

pub fn is_acyclic(q: &ConjunctiveQuery) -> bool {
    gyo_residual(&q.atom_var_sets()).len() <= 1
}

pub(crate) fn cyclic_error(q: &ConjunctiveQuery) -> Option<CyclicError> {
    let residual = gyo_residual(&q.atom_var_sets());
    (residual.len() > 1).then(|| CyclicError {
        residual: residual
            .into_iter()
            .map(|(i, vs)| (i, vs.into_iter().map(|v| q.var_name(v).to_string()).collect()))
            .collect(),
    })
}

/// Acyclic, and still acyclic with an extra atom over the head variables.
pub fn is_free_connex(q: &ConjunctiveQuery) -> bool {
    let mut edges = q.atom_var_sets();
    if gyo_residual(&edges).len() > 1 {
        return false;
    }
    edges.push(q.head.clone());
    gyo_residual(&edges).len() <= 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(atoms: &[(&str, &[&str])], head: &[&str]) -> ConjunctiveQuery {
        let mut b = ConjunctiveQuery::builder("Q");
        for (r, vs) in atoms {
            b = b.atom(r, vs.iter().copied());
        }
        b.head(head.iter().copied()).build().unwrap()
    }

    #[test]
    fn triangle_is_cyclic() {
        let q = query(&[("R", &["x", "y"]), ("S", &["y", "z"]), ("T", &["z", "x"])], &["x"]);
        assert!(!is_acyclic(&q));
        let err = cyclic_error(&q).unwrap();
        assert_eq!(err.residual.len(), 3);
    }

    #[test]
    fn covered_triangle_is_acyclic() {
        let q = query(
            &[("R", &["x", "y"]), ("S", &["y", "z"]), ("T", &["z", "x"]), ("A", &["x", "y", "z"])],
            &["x"],
        );
        assert!(is_acyclic(&q));
    }

    #[test]
    fn free_connex_examples() {
        let path = [("R", &["x1", "x2"][..]), ("S", &["x2", "x3"][..])];
        assert!(!is_free_connex(&query(&path, &["x1", "x3"])));
        assert!(is_free_connex(&query(&path, &["x1", "x2"])));
        assert!(is_free_connex(&query(&path, &["x1", "x2", "x3"])));
    }

    #[test]
    fn cyclic_query_is_not_free_connex() {
        let q = query(&[("R", &["x", "y"]), ("S", &["y", "z"]), ("T", &["z", "x"])], &["x", "y", "z"]);
        assert!(!is_free_connex(&q));
    }
}
