use std::fmt::Write;

use thiserror::Error;

use crate::analysis::Algorithm;
use crate::enumerate::{Answer, AnswerStream};
use crate::error::Error;
use crate::model::query::ConjunctiveQuery;
use crate::model::ranking::{Direction, RankingSpec, TermWeight};
use crate::model::relation::{Database, Relation};
use crate::oracle::join::{join_then_rank, OracleError, Row};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub answers: usize,
    pub algorithm: Algorithm,
    /// Largest `frontier / (k * l)` seen after the `k`-th answer.
    pub frontier_peak_ratio: f64,
    /// Incremental priorities that disagreed with recomputation.
    pub prio_mismatches: u64,
}

#[derive(Debug, Error)]
pub enum CheckFailure {
    #[error("answer {position}: oracle has {expected:?}, engine has {found:?}")]
    Mismatch {
        position: usize,
        expected: Option<Row>,
        found: Option<Answer>,
    },
    #[error("frontier held {len} partial answers after {k} answers (l = {l})")]
    Frontier { k: u64, len: usize, l: usize },
    #[error("{0} incremental priorities disagreed with recomputation")]
    Priority(u64),
    #[error(transparent)]
    Engine(#[from] Error),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CheckFailure {
    /// A wrong answer rather than an input the check could not run on.
    pub fn is_disagreement(&self) -> bool {
        matches!(
            self,
            CheckFailure::Mismatch { .. } | CheckFailure::Frontier { .. } | CheckFailure::Priority(_)
        )
    }
}

/// Enumerates everything and compares it, answer by answer, with the oracle
/// sorted under the engine's tie-break. Also checks the frontier bound
/// `|frontier| <= k * l` after every answer and the incremental priorities.
pub fn check_instance(q: &ConjunctiveQuery, db: &Database, spec: &RankingSpec) -> Result<CheckReport, CheckFailure> {
    let mut stream = AnswerStream::new(q, db, spec)?;
    stream.set_verify(true);
    let expected = join_then_rank(q, db, spec, stream.tie_break())?;
    let l = stream.relation_count();
    let algorithm = stream.algorithm();
    let mut peak: f64 = 0.0;
    let mut position = 0;
    loop {
        let found = stream.next();
        let want = expected.get(position);
        match (&found, want) {
            (None, None) => break,
            (Some(a), Some(r)) if a.values == r.values && a.weight == r.weight => {}
            _ => {
                return Err(CheckFailure::Mismatch {
                    position,
                    expected: want.cloned(),
                    found,
                })
            }
        }
        position += 1;
        let k = stream.emitted();
        let len = stream.frontier_len();
        peak = peak.max(len as f64 / (k as f64 * l as f64));
        if len as u64 > k * l as u64 {
            return Err(CheckFailure::Frontier { k, len, l });
        }
    }
    if stream.prio_mismatches() > 0 {
        return Err(CheckFailure::Priority(stream.prio_mismatches()));
    }
    Ok(CheckReport {
        answers: position,
        algorithm,
        frontier_peak_ratio: peak,
        prio_mismatches: 0,
    })
}

/// Drops tuples one at a time while `fails` keeps holding.
pub fn minimize(db: &Database, mut fails: impl FnMut(&Database) -> bool) -> Database {
    let mut cur = db.clone();
    let names: Vec<String> = cur.relations().map(|r| r.name().to_string()).collect();
    for name in names {
        let mut i = 0;
        while i < cur.get(&name).map_or(0, Relation::len) {
            let candidate = without_tuple(&cur, &name, i);
            if fails(&candidate) {
                cur = candidate;
            } else {
                i += 1;
            }
        }
    }
    cur
}

fn without_tuple(db: &Database, name: &str, skip: usize) -> Database {
    let rel = db.get(name).expect("relation exists");
    let keep: Vec<usize> = (0..rel.len()).filter(|&i| i != skip).collect();
    let rows = keep.iter().map(|&i| rel.tuple(i).to_vec()).collect();
    let weights = rel.weights().map(|_| keep.iter().map(|&i| rel.weight(i)).collect());
    let mut out = db.clone();
    out.insert(Relation::new(name, rel.columns().to_vec(), rows, weights).expect("subset of a valid relation"));
    out
}

/// The `ORDER BY` clause for a spec, in query-file syntax.
pub fn order_clause(q: &ConjunctiveQuery, spec: &RankingSpec) -> String {
    let term = |t: &crate::model::ranking::WeightTerm| match &t.weight {
        TermWeight::Identity => q.var_name(t.var).to_string(),
        w => format!("w:{}({})", w.table_name().unwrap_or_default(), q.var_name(t.var)),
    };
    let mut s = match spec {
        RankingSpec::Lex { order, .. } => {
            let names: Vec<&str> = order.iter().map(|&v| q.var_name(v)).collect();
            format!("ORDER BY LEX {}", names.join(", "))
        }
        RankingSpec::Sum { terms, .. } => {
            format!("ORDER BY SUM {}", terms.iter().map(term).collect::<Vec<_>>().join(" + "))
        }
        RankingSpec::MaxAgg { terms, .. } => {
            format!("ORDER BY MAX {}", terms.iter().map(term).collect::<Vec<_>>().join(", "))
        }
        RankingSpec::TupleWeightSum { .. } => "ORDER BY TUPLEWEIGHT".to_string(),
    };
    if spec.direction() == Direction::Desc {
        s.push_str(" DESC");
    }
    s
}

/// A readable dump: the query file followed by each relation as CSV.
pub fn dump_instance(q: &ConjunctiveQuery, db: &Database, spec: &RankingSpec) -> String {
    let mut out = format!("{} ;\n{} ;\n", q, order_clause(q, spec));
    for rel in db.relations() {
        let _ = writeln!(out, "\n# {}", rel.name());
        let mut header = rel.columns().to_vec();
        if rel.weights().is_some() {
            header.push(crate::model::relation::WEIGHT_COLUMN.to_string());
        }
        let _ = writeln!(out, "{}", header.join(","));
        for (i, t) in rel.tuples().enumerate() {
            let mut cells: Vec<String> = t.iter().map(ToString::to_string).collect();
            if rel.weights().is_some() {
                cells.push(rel.weight(i).to_string());
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
    }
    out
}
