//! Rewrites every algorithm assumes: one atom per relation name, and atoms
//! made only of distinct variables.

use std::collections::{HashMap, HashSet};

use crate::model::query::{ConjunctiveQuery, Term};
use crate::model::relation::Database;

/// Gives every atom its own relation. A relation used by `k > 1` atoms is
/// replaced by copies `Name1..Namek` (tuple storage is shared).
pub fn remove_self_joins(q: &ConjunctiveQuery, db: &Database) -> (ConjunctiveQuery, Database) {
    let mut uses: HashMap<&str, usize> = HashMap::new();
    for a in &q.atoms {
        *uses.entry(a.relation.as_str()).or_default() += 1;
    }
    if uses.values().all(|&c| c == 1) {
        return (q.clone(), db.clone());
    }
    let mut out_q = q.clone();
    let mut out_db = db.clone();
    let mut taken: HashSet<String> = q.atoms.iter().map(|a| a.relation.clone()).collect();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for atom in out_q.atoms.iter_mut() {
        if uses[atom.relation.as_str()] < 2 {
            continue;
        }
        let Some(rel) = db.get(&atom.relation) else { continue };
        let k = seen.entry(atom.relation.clone()).or_default();
        *k += 1;
        let name = out_db.fresh_name(&format!("{}{}", atom.relation, k), &taken);
        taken.insert(name.clone());
        out_db.insert(rel.renamed(name.clone()));
        atom.relation = name;
    }
    for (name, &c) in &uses {
        if c > 1 {
            out_db.remove(name);
        }
    }
    (out_q, out_db)
}

/// Filters away constants and repeated variables inside atoms. Each affected
/// atom gets a filtered, projected relation named after the original with a
/// trailing `'`, which replaces the original. Expects self-joins removed.
pub fn apply_selections(q: &ConjunctiveQuery, db: &Database) -> (ConjunctiveQuery, Database) {
    let mut out_q = q.clone();
    let mut out_db = db.clone();
    let mut taken: HashSet<String> = q.atoms.iter().map(|a| a.relation.clone()).collect();
    for atom in out_q.atoms.iter_mut() {
        if atom.is_plain() {
            continue;
        }
        let Some(rel) = db.get(&atom.relation) else { continue };
        // First column holding each variable; later ones must equal it.
        let mut keep_cols = Vec::new();
        let mut first: HashMap<usize, usize> = HashMap::new();
        let mut checks: Vec<(usize, Check)> = Vec::new();
        for (col, term) in atom.terms.iter().enumerate() {
            match term {
                Term::Const(c) => checks.push((col, Check::Const(c.clone()))),
                Term::Var(v) => match first.get(v) {
                    Some(&f) => checks.push((col, Check::Same(f))),
                    None => {
                        first.insert(*v, col);
                        keep_cols.push(col);
                    }
                },
            }
        }
        let name = out_db.fresh_name(&format!("{}'", atom.relation), &taken);
        taken.insert(name.clone());
        let filtered = rel.filter_project(name.clone(), &keep_cols, |t| {
            checks.iter().all(|(col, check)| match check {
                Check::Const(c) => t[*col] == *c,
                Check::Same(f) => t[*col] == t[*f],
            })
        });
        out_db.remove(&atom.relation);
        out_db.insert(filtered);
        atom.terms = keep_cols.iter().map(|&c| atom.terms[c].clone()).collect();
        atom.relation = name;
    }
    (out_q, out_db)
}

enum Check {
    Const(crate::value::Value),
    Same(usize),
}

/// Both rewrites, in order.
pub fn normalize(q: &ConjunctiveQuery, db: &Database) -> (ConjunctiveQuery, Database) {
    let (q, db) = remove_self_joins(q, db);
    apply_selections(&q, &db)
}
