use thiserror::Error;

use crate::analysis::tree::{search_order, JoinTree};
use crate::model::query::{ConjunctiveQuery, VarId};

/// Three order variables `a` before `b` before `c` where `a` and `b` share no
/// atom but `c` shares one with each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trio {
    pub a: VarId,
    pub b: VarId,
    pub c: VarId,
}

/// First disruptive trio in scan order over positions of `a`, `b`, then `c`.
pub fn has_disruptive_trio(q: &ConjunctiveQuery, order: &[VarId]) -> Option<Trio> {
    for (i, &a) in order.iter().enumerate() {
        for (j, &b) in order.iter().enumerate().skip(i + 1) {
            if q.are_neighbors(a, b) {
                continue;
            }
            for &c in &order[j + 1..] {
                if q.are_neighbors(a, c) && q.are_neighbors(b, c) {
                    return Some(Trio { a, b, c });
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("no join tree visits the variables in the requested order")]
pub struct NotAchievable;

/// A join tree and relation order under which the stack enumerator emits
/// answers sorted by the requested variable order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexPlan {
    pub tree: JoinTree,
    pub rel: Vec<usize>,
    /// The requested order followed by the remaining variables in the order
    /// `rel` introduces them. Groups are sorted by this order, so it is also
    /// the order answers come out in.
    pub full_order: Vec<VarId>,
}

/// Searches for an order of the atoms in which each atom introduces either a
/// run of consecutive order variables continuing the ones bound so far, or
/// (only once the order is exhausted) variables outside it.
///
/// An atom whose new variables mix order and non-order variables is allowed
/// only when its order variables finish the order. This is stricter than
/// checking that order variables are first met in sequence, which is not
/// enough when the order is partial: with `R(x1,x2), S(x2,x3)` and order
/// `x1, x3`, groups of `S` would be sorted under `x2` first.
pub fn l_consistent_join_tree(q: &ConjunctiveQuery, order: &[VarId]) -> Result<LexPlan, NotAchievable> {
    let sets = q.atom_var_sets();
    let mut pos_in_order = vec![None; q.var_count()];
    for (i, &v) in order.iter().enumerate() {
        pos_in_order[v] = Some(i);
    }
    let mut accept = |_: &[usize], next: usize, bound: &[bool]| {
        let done = bound.iter().enumerate().filter(|&(v, &b)| b && pos_in_order[v].is_some()).count();
        let fresh: Vec<VarId> = sets[next].iter().copied().filter(|&v| !bound[v]).collect();
        let mut ranks: Vec<usize> = fresh.iter().filter_map(|&v| pos_in_order[v]).collect();
        ranks.sort_unstable();
        let contiguous = ranks.iter().enumerate().all(|(k, &r)| r == done + k);
        let others = fresh.len() > ranks.len();
        contiguous && (!others || done + ranks.len() == order.len())
    };
    let (tree, rel) = search_order(q, &mut accept).ok_or(NotAchievable)?;
    let full_order = complete_order(q, &rel, order);
    let plan = LexPlan { tree, rel, full_order };
    debug_assert!(plan.check(q, order));
    Ok(plan)
}

/// `order` followed by the other variables as `rel` introduces them.
pub(crate) fn complete_order(q: &ConjunctiveQuery, rel: &[usize], order: &[VarId]) -> Vec<VarId> {
    let mut full = order.to_vec();
    for &a in rel {
        for v in q.atoms[a].vars() {
            if !full.contains(&v) {
                full.push(v);
            }
        }
    }
    full
}

impl LexPlan {
    /// Post-check: the tree is a valid join tree, `rel` respects it, and
    /// concatenating each atom's new variables (sorted by `full_order`) along
    /// `rel` reproduces `full_order`, which starts with `order`.
    pub fn check(&self, q: &ConjunctiveQuery, order: &[VarId]) -> bool {
        if !self.tree.is_connected_for(q) || !self.tree.respects(&self.rel) {
            return false;
        }
        if !self.full_order.starts_with(order) {
            return false;
        }
        let rank = |v: VarId| self.full_order.iter().position(|&w| w == v);
        let mut seen = vec![false; q.var_count()];
        let mut walk = Vec::new();
        for &a in &self.rel {
            let mut fresh: Vec<VarId> = q.atoms[a].vars().filter(|&v| !seen[v]).collect();
            fresh.sort_unstable();
            fresh.dedup();
            for &v in &fresh {
                seen[v] = true;
            }
            fresh.sort_by_key(|&v| rank(v));
            walk.extend(fresh);
        }
        walk == self.full_order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> ConjunctiveQuery {
        ConjunctiveQuery::builder("Q")
            .atom("R", ["x1", "x2"])
            .atom("S", ["x1", "x3"])
            .atom("T", ["x2", "x4"])
            .atom("U", ["x4", "x5"])
            .build()
            .unwrap()
    }

    fn vars(q: &ConjunctiveQuery, names: &[&str]) -> Vec<VarId> {
        names.iter().map(|n| q.var_id(n).unwrap()).collect()
    }

    #[test]
    fn trio_examples() {
        let q = example();
        let t = has_disruptive_trio(&q, &vars(&q, &["x1", "x4", "x2"])).unwrap();
        assert_eq!((t.a, t.b, t.c), (0, 3, 1));
        let t = has_disruptive_trio(&q, &vars(&q, &["x1", "x3", "x4", "x5", "x2"])).unwrap();
        assert_eq!(t.c, 1);
        assert_eq!(has_disruptive_trio(&q, &vars(&q, &["x1", "x2", "x3", "x4", "x5"])), None);
    }

    #[test]
    fn natural_order_plan() {
        let q = example();
        let l = vars(&q, &["x1", "x2", "x3", "x4", "x5"]);
        let plan = l_consistent_join_tree(&q, &l).unwrap();
        assert_eq!(plan.rel, vec![0, 1, 2, 3]);
        assert_eq!(plan.tree.children(0), &[1, 2]);
        assert!(plan.check(&q, &l));
    }

    #[test]
    fn s_last_plan() {
        let q = example();
        let l = vars(&q, &["x1", "x2", "x4", "x5", "x3"]);
        let plan = l_consistent_join_tree(&q, &l).unwrap();
        assert_eq!(plan.rel, vec![0, 2, 3, 1]);
        assert_eq!(plan.tree, l_consistent_join_tree(&q, &vars(&q, &["x1", "x2"])).unwrap().tree);
    }

    #[test]
    fn root_sorted_by_x2_first() {
        let q = example();
        let l = vars(&q, &["x2", "x1", "x3", "x4", "x5"]);
        let plan = l_consistent_join_tree(&q, &l).unwrap();
        assert_eq!(plan.rel, vec![0, 1, 2, 3]);
        assert_eq!(&plan.full_order[..2], &l[..2]);
    }

    #[test]
    fn partial_order_needing_a_hidden_variable_is_rejected() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("R", ["x1", "x2"])
            .atom("S", ["x2", "x3"])
            .build()
            .unwrap();
        assert_eq!(has_disruptive_trio(&q, &[0, 2]), None);
        assert_eq!(l_consistent_join_tree(&q, &[0, 2]), Err(NotAchievable));
        assert!(l_consistent_join_tree(&q, &[0, 1]).is_ok());
    }

    #[test]
    fn partial_order_fills_remaining_variables() {
        let q = example();
        let plan = l_consistent_join_tree(&q, &[1]).unwrap();
        assert_eq!(plan.full_order[0], 1);
        assert_eq!(plan.full_order.len(), 5);
    }
}
