use std::cmp::Ordering;

use crate::model::query::VarId;
use crate::model::ranking::Direction;
use crate::preprocess::index::{no_group, JoinIndex};
use crate::preprocess::plan::Plan;
use crate::preprocess::semiring::{Aggregate, Boolean, Semiring, Tropical};
use crate::value::{Value, ValueKind};

/// Result of one bottom-up pass: a semiring value per tuple and an index per
/// tree edge over the children that survived.
#[derive(Debug)]
pub struct Pass<S: Semiring> {
    /// `value[i][t]` for tuple `t` of the relation at position `i`.
    pub value: Vec<Vec<S::Elem>>,
    /// `index[i]` groups the relation at position `i` by its parent key;
    /// `None` for the root.
    pub index: Vec<Option<JoinIndex>>,
    /// How many group values were folded. At most one per group.
    pub memo_evaluations: usize,
}

impl<S: Semiring> Pass<S> {
    pub fn alive(&self, pos: usize, t: usize) -> bool {
        !S::is_zero(&self.value[pos][t])
    }

    pub fn survivors(&self, pos: usize) -> usize {
        self.value[pos].iter().filter(|v| !S::is_zero(v)).count()
    }
}

/// Visits relations in reverse order. A tuple's value starts at `init` and is
/// multiplied by, for each child edge, the sum over the child group its key
/// selects (zero when there is none). Group sums are computed on first use and
/// reused. Tuples whose value is zero are dead; they are left out of the
/// indexes built for their parent.
pub fn bottom_up<S: Semiring>(plan: &Plan, init: impl Fn(usize, usize) -> S::Elem) -> Pass<S> {
    let l = plan.len();
    let mut value: Vec<Vec<S::Elem>> = vec![Vec::new(); l];
    let mut index: Vec<Option<JoinIndex>> = vec![None; l];
    let mut memo_evaluations = 0;
    let mut buf = Vec::new();
    for i in (0..l).rev() {
        let node = &plan.nodes[i];
        let mut vals: Vec<S::Elem> = (0..node.relation.len()).map(|t| init(i, t)).collect();
        for &c in &node.children {
            let child = &plan.nodes[c];
            let child_vals = &value[c];
            let mut ix = JoinIndex::build(&child.relation, &child.key_cols, |t| !S::is_zero(&child_vals[t]));
            let mut memo: Vec<Option<S::Elem>> = vec![None; ix.group_count()];
            let mut parent_group = vec![no_group(); vals.len()];
            for (t, v) in vals.iter_mut().enumerate() {
                if S::is_zero(v) {
                    continue;
                }
                let tuple = node.relation.tuple(t);
                buf.clear();
                buf.extend(child.parent_key_cols.iter().map(|&col| tuple[col].clone()));
                let Some(g) = ix.lookup(&buf) else {
                    *v = S::zero();
                    continue;
                };
                parent_group[t] = g;
                let m = memo[g as usize].get_or_insert_with(|| {
                    memo_evaluations += 1;
                    ix.group(g)
                        .iter()
                        .fold(S::zero(), |acc, &m| S::add(&acc, &child_vals[m as usize]))
                });
                *v = S::mul(v, m);
            }
            ix.set_parent_groups(parent_group);
            index[c] = Some(ix);
        }
        value[i] = vals;
    }
    Pass {
        value,
        index,
        memo_evaluations,
    }
}

/// Preprocessed input for the enumerators: surviving root tuples and indexes,
/// all groups sorted in the order the enumerator should try them.
#[derive(Debug)]
pub struct Prepared<W> {
    pub plan: Plan,
    pub root: Vec<u32>,
    pub index: Vec<Option<JoinIndex>>,
    /// Best extension weight through the subtree (`None` for dead tuples).
    pub opt: Vec<Vec<Option<W>>>,
    /// Each tuple's own weight.
    pub weight: Vec<Vec<W>>,
    /// Tie ranks from `tie_ranks` (empty for lexicographic preprocessing).
    pub tie_rank: Vec<Vec<u32>>,
    pub memo_evaluations: usize,
}

impl<W> Prepared<W> {
    pub fn is_empty(&self) -> bool {
        self.root.is_empty()
    }

    pub fn survivors(&self, pos: usize) -> usize {
        self.opt[pos].iter().filter(|o| o.is_some()).count()
    }

    fn sort_groups(&mut self, cmp: impl Fn(usize, u32, u32) -> Ordering) {
        self.root.sort_unstable_by(|&a, &b| cmp(0, a, b));
        for (i, ix) in self.index.iter_mut().enumerate() {
            if let Some(ix) = ix {
                for g in ix.groups_mut() {
                    g.sort_unstable_by(|&a, &b| cmp(i, a, b));
                }
            }
        }
    }
}

fn alive_roots<T>(vals: &[Option<T>]) -> Vec<u32> {
    (0..vals.len() as u32).filter(|&t| vals[t as usize].is_some()).collect()
}

/// Semijoin reduction for lexicographic enumeration. Groups and the root are
/// sorted by `order` (which must cover every variable), reversed for
/// descending order.
pub fn semijoin_reduce_lex(plan: Plan, order: &[VarId], direction: Direction) -> Prepared<()> {
    let pass = bottom_up::<Boolean>(&plan, |_, _| true);
    let sort_cols: Vec<Vec<usize>> = plan
        .nodes
        .iter()
        .map(|n| order.iter().filter_map(|&v| n.col_of(v)).collect())
        .collect();
    let opt: Vec<Vec<Option<()>>> = pass
        .value
        .iter()
        .map(|vs| vs.iter().map(|&a| a.then_some(())).collect())
        .collect();
    let mut prep = Prepared {
        root: alive_roots(&opt[0]),
        weight: opt.iter().map(|v| vec![(); v.len()]).collect(),
        tie_rank: Vec::new(),
        opt,
        index: pass.index,
        memo_evaluations: pass.memo_evaluations,
        plan,
    };
    let rels: Vec<_> = prep.plan.nodes.iter().map(|n| n.relation.clone()).collect();
    prep.sort_groups(|i, a, b| {
        let (ta, tb) = (rels[i].tuple(a as usize), rels[i].tuple(b as usize));
        let ord = sort_cols[i].iter().map(|&c| ta[c].cmp(&tb[c])).find(|o| o.is_ne());
        direction.apply(ord.unwrap_or(Ordering::Equal))
    });
    prep
}

/// Dynamic programming for ranked enumeration: `opt(t)` combines the tuple's
/// own weight with the best group value of each child edge. Groups and the
/// root are sorted by `opt`, ties by the values of the variables each relation
/// introduces.
pub fn dp_preprocess<A: Aggregate>(plan: Plan, weight: Vec<Vec<A::W>>) -> Prepared<A::W> {
    let pass = bottom_up::<Tropical<A>>(&plan, |i, t| Some(weight[i][t].clone()));
    let mut prep = Prepared {
        root: alive_roots(&pass.value[0]),
        opt: pass.value,
        index: pass.index,
        weight,
        tie_rank: tie_ranks(&plan),
        memo_evaluations: pass.memo_evaluations,
        plan,
    };
    let opt = std::mem::take(&mut prep.opt);
    let ranks = std::mem::take(&mut prep.tie_rank);
    prep.sort_groups(|i, a, b| {
        let (oa, ob) = (&opt[i][a as usize], &opt[i][b as usize]);
        A::cmp(oa.as_ref().expect("alive"), ob.as_ref().expect("alive"))
            .then(ranks[i][a as usize].cmp(&ranks[i][b as usize]))
    });
    prep.tie_rank = ranks;
    prep.opt = opt;
    prep
}

/// Dense rank of every tuple by the values of its fresh columns, per position,
/// so that tie-breaking compares small integers instead of tuples.
pub fn tie_ranks(plan: &Plan) -> Vec<Vec<u32>> {
    plan
        .nodes
        .iter()
        .map(|node| {
            let rel = &node.relation;
            let mut rank = vec![0; rel.len()];
            let f = node.fresh_cols.len();
            if node.fresh_cols.iter().all(|&c| rel.column_kind(c) == Some(ValueKind::Int)) {
                // Integer columns: compare packed keys instead of values.
                let keys: Vec<i64> = (0..rel.len())
                    .flat_map(|t| {
                        node.fresh_cols.iter().map(move |&c| match rel.tuple(t)[c] {
                            Value::Int(v) => v,
                            _ => unreachable!("integer column"),
                        })
                    })
                    .collect();
                let key = |t: u32| &keys[t as usize * f..][..f];
                let mut ids: Vec<u32> = (0..rel.len() as u32).collect();
                if f == 1 {
                    ids.sort_unstable_by_key(|&t| keys[t as usize]);
                } else {
                    ids.sort_unstable_by(|&s, &t| key(s).cmp(key(t)));
                }
                let mut r = 0;
                for j in 1..ids.len() {
                    r += u32::from(key(ids[j - 1]) != key(ids[j]));
                    rank[ids[j] as usize] = r;
                }
                return rank;
            }
            let cmp = |s: u32, t: u32| {
                let (ts, tt) = (rel.tuple(s as usize), rel.tuple(t as usize));
                for &c in &node.fresh_cols {
                    let o = ts[c].cmp(&tt[c]);
                    if o.is_ne() {
                        return o;
                    }
                }
                Ordering::Equal
            };
            let mut ids: Vec<u32> = (0..rel.len() as u32).collect();
            ids.sort_unstable_by(|&s, &t| cmp(s, t));
            let mut r = 0;
            for j in 1..ids.len() {
                r += u32::from(cmp(ids[j - 1], ids[j]).is_ne());
                rank[ids[j] as usize] = r;
            }
            rank
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_join_tree;
    use crate::fixtures;
    use crate::preprocess::semiring::SumF64;
    use crate::preprocess::weights::attr_weights_to_tuple_weights;
    use crate::model::ranking::RankingSpec;
    use crate::value::Value;

    fn example_plan() -> Plan {
        let q = fixtures::example_query();
        let t = build_join_tree(&q).unwrap();
        Plan::new(&q, &fixtures::example_database(), &t, &t.topological_rel_order())
    }

    fn alive_tuples<W>(p: &Prepared<W>, pos: usize) -> Vec<Vec<i64>> {
        let rel = &p.plan.nodes[pos].relation;
        (0..rel.len())
            .filter(|&t| p.opt[pos][t].is_some())
            .map(|t| {
                rel.tuple(t)
                    .iter()
                    .map(|v| match v {
                        Value::Int(i) => *i,
                        _ => unreachable!(),
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn semijoin_on_example() {
        let p = semijoin_reduce_lex(example_plan(), &[0, 1, 2, 3, 4], Direction::Asc);
        assert_eq!(alive_tuples(&p, 0), vec![vec![1, 1], vec![2, 2]]);
        assert_eq!(alive_tuples(&p, 1).len(), 5, "S(0,1) dangles but is kept");
        assert_eq!(alive_tuples(&p, 2), vec![vec![1, 3], vec![2, 2]]);
        assert_eq!(alive_tuples(&p, 3).len(), 4);
    }

    #[test]
    fn cascade_through_two_edges() {
        let q = fixtures::example_query();
        let mut db = fixtures::example_database();
        db.insert(crate::model::relation::Relation::from_ints("U", &[[2, 1], [2, 2]]));
        let t = build_join_tree(&q).unwrap();
        let plan = Plan::new(&q, &db, &t, &t.topological_rel_order());
        let p = semijoin_reduce_lex(plan, &[0, 1, 2, 3, 4], Direction::Asc);
        assert_eq!(alive_tuples(&p, 2), vec![vec![2, 2]]);
        assert_eq!(alive_tuples(&p, 0), vec![vec![2, 2]]);
    }

    #[test]
    fn dp_on_example() {
        let plan = example_plan();
        let w = attr_weights_to_tuple_weights(&plan, &RankingSpec::sum_of(0..5));
        let p = dp_preprocess::<SumF64>(plan, w);
        // T(2,2) is tuple 2 of T, R(2,2) tuple 1 of R.
        assert_eq!(p.opt[2][2], Some(3.0));
        assert_eq!(p.opt[0][1], Some(10.0));
        assert_eq!(p.opt[3][0], Some(1.0), "leaf opt is own weight");
        assert_eq!(p.root, vec![1, 0]);
    }

    #[test]
    fn group_values_are_memoized() {
        let p = semijoin_reduce_lex(example_plan(), &[0, 1, 2, 3, 4], Direction::Asc);
        let groups: usize = p.index.iter().flatten().map(JoinIndex::group_count).sum();
        assert!(p.memo_evaluations <= groups);
    }

    #[test]
    fn boolean_and_tropical_agree_on_survivors() {
        let plan = example_plan();
        let b = bottom_up::<Boolean>(&plan, |_, _| true);
        let t = bottom_up::<Tropical<SumF64>>(&plan, |_, _| Some(1.0));
        for i in 0..plan.len() {
            for tup in 0..plan.nodes[i].relation.len() {
                assert_eq!(b.alive(i, tup), t.alive(i, tup));
            }
        }
    }
}
