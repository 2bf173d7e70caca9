use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::query::{ConjunctiveQuery, VarId};
use crate::model::ranking::{Direction, RankingSpec, WeightTerm};
use crate::model::relation::{Database, Relation};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `R1(x1,x2), R2(x2,x3), ...`
    Path,
    /// `R1(x0,x1), R2(x0,x2), ...`
    Star,
    /// Each atom after the first joins a random earlier one on one variable.
    Tree,
}

impl FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "path" => Ok(Shape::Path),
            "star" => Ok(Shape::Star),
            "tree" => Ok(Shape::Tree),
            _ => Err(format!("unknown shape `{s}` (path, star, tree)")),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Path => "path",
            Shape::Star => "star",
            Shape::Tree => "tree",
        })
    }
}

#[derive(Clone, Debug)]
pub struct InstanceConfig {
    pub shape: Shape,
    pub atoms: usize,
    /// Tuples drawn per relation (before duplicates are dropped).
    pub tuples: usize,
    /// Values are drawn from `0..domain`.
    pub domain: i64,
    /// Stored tuple weights are drawn from this range.
    pub weights: (i64, i64),
    /// Chance that a tuple is replaced by a uniformly random one.
    pub dangling: f64,
    pub seed: u64,
}

impl InstanceConfig {
    pub fn new(shape: Shape, atoms: usize, tuples: usize, seed: u64) -> Self {
        InstanceConfig {
            shape,
            atoms,
            tuples,
            domain: (tuples as i64 / 2).max(2),
            weights: (-5, 20),
            dangling: 0.2,
            seed,
        }
    }
}

/// Builds a query of the requested shape and a database for it.
///
/// Tuples are the projections of random full assignments, so without
/// dangling replacements every tuple takes part in some answer. Each tuple is
/// then swapped for a uniformly random one with probability `dangling`.
pub fn random_instance(cfg: &InstanceConfig) -> (ConjunctiveQuery, Database) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let l = cfg.atoms.max(1);
    let atom_vars: Vec<(String, String)> = match cfg.shape {
        Shape::Path => (1..=l).map(|i| (format!("x{i}"), format!("x{}", i + 1))).collect(),
        Shape::Star => (1..=l).map(|i| ("x0".to_string(), format!("x{i}"))).collect(),
        Shape::Tree => {
            let mut out = vec![("x0".to_string(), "x1".to_string())];
            for i in 1..l {
                let (a, b) = out[rng.gen_range(0..i)].clone();
                let shared = if rng.gen_bool(0.5) { a } else { b };
                out.push((shared, format!("x{}", i + 1)));
            }
            out
        }
    };
    let mut builder = ConjunctiveQuery::builder("Q");
    for (i, (a, b)) in atom_vars.iter().enumerate() {
        builder = builder.atom(&format!("R{}", i + 1), [a.as_str(), b.as_str()]);
    }
    let q = builder.build().expect("generated query is well formed");
    let assignments: Vec<Vec<i64>> = (0..cfg.tuples)
        .map(|_| (0..q.var_count()).map(|_| rng.gen_range(0..cfg.domain)).collect())
        .collect();
    let relations = q.atoms.iter().map(|atom| {
        let vars: Vec<VarId> = atom.vars().collect();
        let mut rows = Vec::with_capacity(cfg.tuples);
        let mut weights = Vec::with_capacity(cfg.tuples);
        for a in &assignments {
            let row: Vec<Value> = if rng.gen_bool(cfg.dangling) {
                vars.iter().map(|_| Value::Int(rng.gen_range(0..cfg.domain))).collect()
            } else {
                vars.iter().map(|&v| Value::Int(a[v])).collect()
            };
            rows.push(row);
            weights.push(rng.gen_range(cfg.weights.0..=cfg.weights.1) as f64);
        }
        Relation::new(atom.relation.clone(), vec!["a".into(), "b".into()], rows, Some(weights))
            .expect("generated rows are well formed")
    });
    let db = Database::from_relations(relations.collect::<Vec<_>>());
    (q, db)
}

/// The five ranking kinds exercised by the differential tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecKind {
    /// Lexicographic over a prefix of the first-appearance order (no trio).
    Lex,
    /// Lexicographic with a disruptive trio (falls back to sum weights).
    LexTrio,
    Sum,
    Max,
    TupleWeight,
}

impl SpecKind {
    pub const ALL: [SpecKind; 5] = [
        SpecKind::Lex,
        SpecKind::LexTrio,
        SpecKind::Sum,
        SpecKind::Max,
        SpecKind::TupleWeight,
    ];
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecKind::Lex => "lex",
            SpecKind::LexTrio => "lex-trio",
            SpecKind::Sum => "sum",
            SpecKind::Max => "max",
            SpecKind::TupleWeight => "tupleweight",
        })
    }
}

/// A random ranking of the given kind for `q`. `LexTrio` returns `None` when
/// the query has no disruptive trio at all.
pub fn random_spec(q: &ConjunctiveQuery, kind: SpecKind, seed: u64) -> Option<RankingSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = q.var_count();
    let direction = if rng.gen_bool(0.3) { Direction::Desc } else { Direction::Asc };
    let mut subset = || {
        let mut vs: Vec<VarId> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
        if vs.is_empty() {
            vs.push(rng.gen_range(0..n));
        }
        vs.into_iter().map(WeightTerm::identity).collect::<Vec<_>>()
    };
    Some(match kind {
        SpecKind::Lex => {
            let len = rng.gen_range(1..=n);
            RankingSpec::Lex {
                order: (0..len).collect(),
                direction,
            }
        }
        SpecKind::LexTrio => {
            let (a, b, c) = find_trio(q)?;
            let mut order = vec![a, b, c];
            let mut rest: Vec<VarId> = (0..n).filter(|v| !order.contains(v)).collect();
            rest.shuffle(&mut rng);
            order.extend(rest);
            RankingSpec::Lex { order, direction }
        }
        SpecKind::Sum => RankingSpec::Sum {
            terms: subset(),
            direction,
        },
        SpecKind::Max => RankingSpec::MaxAgg {
            terms: subset(),
            direction,
        },
        SpecKind::TupleWeight => RankingSpec::TupleWeightSum { direction },
    })
}

/// Two variables sharing no atom and a third sharing one with each.
fn find_trio(q: &ConjunctiveQuery) -> Option<(VarId, VarId, VarId)> {
    let n = q.var_count();
    for a in 0..n {
        for b in a + 1..n {
            if q.are_neighbors(a, b) {
                continue;
            }
            if let Some(c) = (0..n).find(|&c| c != a && c != b && q.are_neighbors(a, c) && q.are_neighbors(b, c)) {
                return Some((a, b, c));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::has_disruptive_trio;

    #[test]
    fn same_seed_same_instance() {
        let cfg = InstanceConfig::new(Shape::Path, 3, 10, 1);
        let (q1, d1) = random_instance(&cfg);
        let (q2, d2) = random_instance(&cfg);
        assert_eq!(q1, q2);
        for r in d1.relations() {
            let other = d2.get(r.name()).unwrap();
            assert_eq!(r.tuples().collect::<Vec<_>>(), other.tuples().collect::<Vec<_>>());
        }
    }

    #[test]
    fn path_mimics_chained_citations() {
        let (q, _) = random_instance(&InstanceConfig::new(Shape::Path, 3, 10, 7));
        assert_eq!(q.to_string(), "Q(x1,x2,x3,x4) :- R1(x1,x2), R2(x2,x3), R3(x3,x4)");
    }

    #[test]
    fn trio_spec_has_a_trio() {
        for shape in [Shape::Path, Shape::Star, Shape::Tree] {
            let (q, _) = random_instance(&InstanceConfig::new(shape, 4, 10, 3));
            let spec = random_spec(&q, SpecKind::LexTrio, 5).unwrap();
            let RankingSpec::Lex { order, .. } = spec else { unreachable!() };
            assert!(has_disruptive_trio(&q, &order).is_some(), "{shape}");
        }
    }
}
