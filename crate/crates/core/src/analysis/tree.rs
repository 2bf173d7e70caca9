use std::collections::HashSet;

use crate::analysis::gyo::{cyclic_error, CyclicError};
use crate::model::query::{ConjunctiveQuery, VarId};

/// A rooted join tree over the atoms of a query. Nodes are atom indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinTree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl JoinTree {
    /// Builds a tree from a parent map; children are kept in atom order.
    pub fn from_parents(root: usize, parent: Vec<Option<usize>>) -> Self {
        let mut children = vec![Vec::new(); parent.len()];
        for (c, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(c);
            }
        }
        JoinTree { root, parent, children }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Reorders the children of `node`; `order` must be a permutation of them.
    pub fn with_child_order(mut self, node: usize, order: &[usize]) -> Self {
        let mut a = order.to_vec();
        let mut b = self.children[node].clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b, "not a permutation of the children of {node}");
        self.children[node] = order.to_vec();
        self
    }

    /// Preorder traversal, children in stored order.
    pub fn topological_rel_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children[n].iter().rev());
        }
        out
    }

    /// Variables shared by a node and its parent (empty for the root).
    pub fn join_vars(&self, q: &ConjunctiveQuery, node: usize) -> Vec<VarId> {
        let Some(p) = self.parent[node] else { return Vec::new() };
        let mut shared: Vec<VarId> = q.atoms[node].vars().filter(|v| q.atoms[p].contains(*v)).collect();
        shared.sort_unstable();
        shared.dedup();
        shared
    }

    /// Every variable's atoms form a connected subtree: exactly one of them
    /// has a parent that lacks the variable (or is the root).
    pub fn is_connected_for(&self, q: &ConjunctiveQuery) -> bool {
        (0..q.var_count()).all(|x| {
            let tops = (0..self.len())
                .filter(|&n| q.atoms[n].contains(x))
                .filter(|&n| self.parent[n].map_or(true, |p| !q.atoms[p].contains(x)))
                .count();
            tops == 1
        })
    }

    /// True when `rel` lists every node once, root first, parents before
    /// children.
    pub fn respects(&self, rel: &[usize]) -> bool {
        let mut pos = vec![usize::MAX; self.len()];
        for (i, &n) in rel.iter().enumerate() {
            if n >= self.len() || pos[n] != usize::MAX {
                return false;
            }
            pos[n] = i;
        }
        rel.len() == self.len()
            && rel.first() == Some(&self.root)
            && (0..self.len()).all(|n| self.parent[n].map_or(n == self.root, |p| pos[p] < pos[n]))
    }
}

/// Builds a join tree rooted at the first atom, or reports the cyclic core.
pub fn build_join_tree(q: &ConjunctiveQuery) -> Result<JoinTree, CyclicError> {
    if let Some(err) = cyclic_error(q) {
        return Err(err);
    }
    let (tree, _) = search_order(q, &mut |_, _, _| true).expect("acyclic queries have a join tree");
    Ok(tree)
}

/// Depth-first search for a running-intersection ordering of the atoms.
///
/// Atoms are added one at a time; an atom may follow the current prefix when
/// its variables already bound all sit in one earlier atom, which becomes its
/// parent. `accept(prefix, next, bound)` can veto a step. Candidates are tried
/// in atom order (roots too), and failed prefixes are memoized by atom set.
pub(crate) fn search_order(
    q: &ConjunctiveQuery,
    accept: &mut dyn FnMut(&[usize], usize, &[bool]) -> bool,
) -> Option<(JoinTree, Vec<usize>)> {
    let l = q.len();
    assert!(l <= 128, "queries are limited to 128 atoms");
    if l == 0 {
        return None;
    }
    let sets = q.atom_var_sets();
    let mut st = Search {
        sets: &sets,
        vars: q.var_count(),
        failed: HashSet::new(),
        order: Vec::with_capacity(l),
        parent: vec![None; l],
    };
    for root in 0..l {
        let bound = vec![false; st.vars];
        if accept(&[], root, &bound) {
            st.order.push(root);
            if st.extend(1u128 << root, accept) {
                let tree = JoinTree::from_parents(root, st.parent.clone());
                return Some((tree, st.order));
            }
            st.order.pop();
        }
    }
    None
}

struct Search<'a> {
    sets: &'a [Vec<VarId>],
    vars: usize,
    failed: HashSet<u128>,
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
}

impl Search<'_> {
    fn extend(&mut self, used: u128, accept: &mut dyn FnMut(&[usize], usize, &[bool]) -> bool) -> bool {
        let l = self.sets.len();
        if self.order.len() == l {
            return true;
        }
        if self.failed.contains(&used) {
            return false;
        }
        let mut bound = vec![false; self.vars];
        for &a in &self.order {
            for &v in &self.sets[a] {
                bound[v] = true;
            }
        }
        for next in 0..l {
            if used & (1 << next) != 0 {
                continue;
            }
            let shared: Vec<VarId> = self.sets[next].iter().copied().filter(|&v| bound[v]).collect();
            let Some(&p) = self
                .order
                .iter()
                .find(|&&a| shared.iter().all(|v| self.sets[a].binary_search(v).is_ok()))
            else {
                continue;
            };
            if !accept(&self.order, next, &bound) {
                continue;
            }
            self.order.push(next);
            self.parent[next] = Some(p);
            if self.extend(used | (1 << next), accept) {
                return true;
            }
            self.order.pop();
            self.parent[next] = None;
        }
        self.failed.insert(used);
        false
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

    #[test]
    fn example_tree_shape() {
        let q = example();
        let t = build_join_tree(&q).unwrap();
        assert_eq!(t.root(), 0);
        assert_eq!(t.children(0), &[1, 2]);
        assert_eq!(t.children(2), &[3]);
        assert_eq!(t.join_vars(&q, 1), vec![0]);
        assert_eq!(t.join_vars(&q, 2), vec![1]);
        assert_eq!(t.join_vars(&q, 3), vec![3]);
        assert!(t.is_connected_for(&q));
    }

    #[test]
    fn rel_orders() {
        let t = build_join_tree(&example()).unwrap();
        assert_eq!(t.topological_rel_order(), vec![0, 1, 2, 3]);
        let swapped = t.with_child_order(0, &[2, 1]);
        assert_eq!(swapped.topological_rel_order(), vec![0, 2, 3, 1]);
        assert!(swapped.respects(&[0, 2, 3, 1]));
        assert!(!swapped.respects(&[0, 3, 2, 1]));
    }

    #[test]
    fn single_atom_tree() {
        let q = ConjunctiveQuery::builder("Q").atom("R", ["x"]).build().unwrap();
        let t = build_join_tree(&q).unwrap();
        assert_eq!(t.topological_rel_order(), vec![0]);
    }

    #[test]
    fn triangle_has_no_tree() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("R", ["x", "y"])
            .atom("S", ["y", "z"])
            .atom("T", ["z", "x"])
            .build()
            .unwrap();
        assert!(build_join_tree(&q).is_err());
    }

    #[test]
    fn greedy_dead_end_is_backtracked() {
        // Starting from B and adding C first leaves D with no single parent.
        let q = ConjunctiveQuery::builder("Q")
            .atom("B", ["x", "y"])
            .atom("C", ["y", "z"])
            .atom("D", ["x", "z"])
            .atom("A", ["x", "y", "z"])
            .build()
            .unwrap();
        let t = build_join_tree(&q).unwrap();
        assert!(t.is_connected_for(&q));
    }

    #[test]
    fn cross_product_is_a_tree() {
        let q = ConjunctiveQuery::builder("Q")
            .atom("R", ["x"])
            .atom("S", ["y"])
            .build()
            .unwrap();
        let t = build_join_tree(&q).unwrap();
        assert_eq!(t.parent(1), Some(0));
        assert!(t.join_vars(&q, 1).is_empty());
    }
}
