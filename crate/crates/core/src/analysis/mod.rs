//! Structural analysis of queries: acyclicity, join trees, variable orders.

mod gyo;
mod lex;
mod tree;

use std::fmt;

pub use gyo::{gyo_residual, is_acyclic, is_free_connex, CyclicError};
pub use lex::{has_disruptive_trio, l_consistent_join_tree, LexPlan, NotAchievable, Trio};
pub use tree::{build_join_tree, JoinTree};

use crate::model::query::ConjunctiveQuery;
use crate::model::ranking::RankingSpec;

/// Which enumeration strategy a query and ranking get.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Stack-driven depth-first enumeration over an order-consistent tree.
    Lex,
    /// Priority-queue enumeration.
    Sum,
    /// Lexicographic order encoded as sum weights.
    LexViaSum,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Lex => "LEX",
            Algorithm::Sum => "SUM",
            Algorithm::LexViaSum => "LEX-via-SUM",
        })
    }
}

pub fn choose_algorithm(q: &ConjunctiveQuery, spec: &RankingSpec) -> Algorithm {
    match spec {
        RankingSpec::Lex { order, .. } => {
            if has_disruptive_trio(q, order).is_none() && l_consistent_join_tree(q, order).is_ok() {
                Algorithm::Lex
            } else {
                Algorithm::LexViaSum
            }
        }
        _ => Algorithm::Sum,
    }
}

/// Everything `anyk analyze` reports about a normalized query.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub query: ConjunctiveQuery,
    pub acyclic: bool,
    pub free_connex: bool,
    pub tree: Option<JoinTree>,
    pub rel: Vec<usize>,
    pub trio: Option<Trio>,
    pub algorithm: Option<Algorithm>,
    pub cyclic: Option<CyclicError>,
}

pub fn analyze(q: &ConjunctiveQuery, spec: &RankingSpec) -> Analysis {
    let cyclic = gyo::cyclic_error(q);
    let trio = match spec {
        RankingSpec::Lex { order, .. } => has_disruptive_trio(q, order),
        _ => None,
    };
    let (tree, rel, algorithm) = if cyclic.is_some() {
        (None, Vec::new(), None)
    } else {
        let algorithm = choose_algorithm(q, spec);
        let (tree, rel) = match (spec, algorithm) {
            (RankingSpec::Lex { order, .. }, Algorithm::Lex) => {
                let plan = l_consistent_join_tree(q, order).expect("checked by choose_algorithm");
                (plan.tree, plan.rel)
            }
            _ => {
                let t = build_join_tree(q).expect("acyclic");
                let rel = t.topological_rel_order();
                (t, rel)
            }
        };
        (Some(tree), rel, Some(algorithm))
    };
    Analysis {
        query: q.clone(),
        acyclic: cyclic.is_none(),
        free_connex: is_free_connex(q),
        tree,
        rel,
        trio,
        algorithm,
        cyclic,
    }
}

impl Analysis {
    /// `key=value` lines for scripts.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let q = &self.query;
        let yes = |b: bool| if b { "yes" } else { "no" }.to_string();
        let mut out = vec![
            ("acyclic".to_string(), yes(self.acyclic)),
            ("free_connex".to_string(), yes(self.free_connex)),
        ];
        if let Some(t) = &self.tree {
            let parents: Vec<String> = (0..t.len())
                .filter_map(|n| t.parent(n).map(|p| format!("{}<-{}", q.atoms[p].relation, q.atoms[n].relation)))
                .collect();
            out.push(("root".into(), q.atoms[t.root()].relation.clone()));
            out.push(("parents".into(), parents.join(",")));
            let rel: Vec<&str> = self.rel.iter().map(|&a| q.atoms[a].relation.as_str()).collect();
            out.push(("rel".into(), rel.join(",")));
        }
        out.push((
            "trio".into(),
            match self.trio {
                Some(t) => format!("{},{},{}", q.var_name(t.a), q.var_name(t.b), q.var_name(t.c)),
                None => "none".into(),
            },
        ));
        if let Some(a) = self.algorithm {
            out.push(("algorithm".into(), a.to_string()));
        }
        out
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "query: {}", self.query)?;
        if let Some(err) = &self.cyclic {
            writeln!(f, "{err}")?;
        }
        for (k, v) in self.key_values() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_of_example() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("R", ["x1", "x2"])
            .atom("S", ["x1", "x3"])
            .atom("T", ["x2", "x4"])
            .atom("U", ["x4", "x5"])
            .build()
            .unwrap();
        let a = analyze(&q, &RankingSpec::lex(vec![0, 3, 1]));
        let kv: std::collections::HashMap<_, _> = a.key_values().into_iter().collect();
        assert_eq!(kv["acyclic"], "yes");
        assert_eq!(kv["trio"], "x1,x4,x2");
        assert_eq!(kv["algorithm"], "LEX-via-SUM");
        assert_eq!(kv["rel"], "R,S,T,U");
        assert_eq!(analyze(&q, &RankingSpec::sum_of([0])).algorithm, Some(Algorithm::Sum));
    }
}
