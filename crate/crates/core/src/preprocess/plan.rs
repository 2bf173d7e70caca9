use crate::analysis::JoinTree;
use crate::model::query::{ConjunctiveQuery, VarId};
use crate::model::relation::{Database, Relation};

/// One relation of the query, at its position in the relation order.
#[derive(Clone, Debug)]
pub struct Node {
    pub atom: usize,
    pub relation: Relation,
    /// Position of the parent in the relation order.
    pub parent: Option<usize>,
    /// Positions of the children, ascending.
    pub children: Vec<usize>,
    /// Columns holding the variables shared with the parent, and the parent
    /// columns holding the same variables.
    pub key_cols: Vec<usize>,
    pub parent_key_cols: Vec<usize>,
    /// Columns of variables no earlier relation binds, in column order.
    pub fresh_cols: Vec<usize>,
    /// `(variable, column)` for each distinct variable of the atom.
    pub var_cols: Vec<(VarId, usize)>,
}

/// A normalized join query laid out along a relation order `rel`, a
/// topological sort of a join tree (the root comes first).
#[derive(Clone, Debug)]
pub struct Plan {
    pub nodes: Vec<Node>,
    pub var_count: usize,
}

impl Plan {
    pub fn new(q: &ConjunctiveQuery, db: &Database, tree: &JoinTree, rel: &[usize]) -> Plan {
        assert!(tree.respects(rel), "relation order does not respect the tree");
        let mut pos = vec![0; q.len()];
        for (i, &a) in rel.iter().enumerate() {
            pos[a] = i;
        }
        let mut bound = vec![false; q.var_count()];
        let mut nodes: Vec<Node> = Vec::with_capacity(rel.len());
        for &a in rel {
            let atom = &q.atoms[a];
            let relation = db.get(&atom.relation).expect("schema checked").clone();
            let mut var_cols: Vec<(VarId, usize)> = Vec::new();
            for (c, v) in atom.terms.iter().enumerate().filter_map(|(c, t)| match t {
                crate::model::query::Term::Var(v) => Some((c, *v)),
                crate::model::query::Term::Const(_) => None,
            }) {
                if !var_cols.iter().any(|&(w, _)| w == v) {
                    var_cols.push((v, c));
                }
            }
            let fresh_cols = var_cols.iter().filter(|&&(v, _)| !bound[v]).map(|&(_, c)| c).collect();
            let parent = tree.parent(a);
            let (key_cols, parent_key_cols) = match parent {
                None => (Vec::new(), Vec::new()),
                Some(p) => {
                    let shared = tree.join_vars(q, a);
                    let col_of = |at: usize, v: VarId| {
                        q.atoms[at]
                            .terms
                            .iter()
                            .position(|t| *t == crate::model::query::Term::Var(v))
                            .expect("shared variable")
                    };
                    (
                        shared.iter().map(|&v| col_of(a, v)).collect(),
                        shared.iter().map(|&v| col_of(p, v)).collect(),
                    )
                }
            };
            for &(v, _) in &var_cols {
                bound[v] = true;
            }
            nodes.push(Node {
                atom: a,
                relation,
                parent: parent.map(|p| pos[p]),
                children: Vec::new(),
                key_cols,
                parent_key_cols,
                fresh_cols,
                var_cols,
            });
        }
        for i in 1..nodes.len() {
            let p = nodes[i].parent.expect("non-root has a parent");
            nodes[p].children.push(i);
        }
        Plan {
            nodes,
            var_count: q.var_count(),
        }
    }

    /// Number of relations `l`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Variables in the order the relation order first binds them, each
    /// relation's in column order.
    pub fn scan_order(&self) -> Vec<VarId> {
        self.nodes
            .iter()
            .flat_map(|n| n.fresh_cols.iter().map(move |&c| n.var_of(c)))
            .collect()
    }
}

impl Node {
    pub fn var_of(&self, col: usize) -> VarId {
        self.var_cols.iter().find(|&&(_, c)| c == col).expect("variable column").0
    }

    pub fn col_of(&self, var: VarId) -> Option<usize> {
        self.var_cols.iter().find(|&&(v, _)| v == var).map(|&(_, c)| c)
    }
}
