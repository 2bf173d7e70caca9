//! Top-down phase: streams answers in ranking order.

mod engine;
mod frontier;

use std::sync::Arc;

pub use engine::Engine;
pub use frontier::{Heap, Link};

use crate::analysis::{
    build_join_tree, has_disruptive_trio, is_acyclic, l_consistent_join_tree, Algorithm, CyclicError,
};
use crate::error::Error;
use crate::model::normalize::normalize;
use crate::model::query::{ConjunctiveQuery, VarId};
use crate::model::ranking::{Direction, RankingSpec, Weight};
use crate::model::relation::Database;
use crate::preprocess::{
    attr_weights_to_tuple_weights, charged_term_weights, dp_preprocess, lex_sum_tuple_weights, semijoin_reduce_lex,
    Aggregate, Leximax, Leximin, Plan, Prepared, SumBig, SumF64, Unit,
};
use crate::value::Value;

/// A query answer: a value for every variable (indexed by variable id) and
/// its rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    pub values: Vec<Value>,
    pub weight: Weight,
}

/// How answers of equal weight are ordered: by their values on `order`,
/// descending if `descending`.
///
/// For MAX, weights are first refined by the full multiset of term weights
/// sorted largest first (compared lexicographically, in the ranking's
/// direction); the variable order only separates answers whose multisets are
/// equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieBreak {
    pub order: Vec<VarId>,
    pub descending: bool,
}

/// A partial answer waiting in the frontier.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingAnswer {
    /// Chosen tuples by relation position, as `(relation, tuple)`.
    pub prefix: Vec<(String, Vec<Value>)>,
    /// Weight of its best completion (`None` in lexicographic mode).
    pub priority: Option<Weight>,
}

/// Sizes reported by `anyk run --explain`.
#[derive(Clone, Debug, PartialEq)]
pub struct Explain {
    pub algorithm: Algorithm,
    /// `(relation, tuples, survivors)` in relation order.
    pub relations: Vec<(String, usize, usize)>,
    /// `(parent, child, groups)` per tree edge.
    pub edges: Vec<(String, String, usize)>,
}

#[derive(Debug)]
enum Inner {
    Lex(Engine<Unit>),
    LexViaSum(Engine<SumBig>),
    Sum(Engine<SumF64>),
    Max(Engine<Leximax>),
    MaxDesc(Engine<Leximin>),
}

macro_rules! each {
    ($inner:expr, $e:ident => $body:expr) => {
        match $inner {
            Inner::Lex($e) => $body,
            Inner::LexViaSum($e) => $body,
            Inner::Sum($e) => $body,
            Inner::Max($e) => $body,
            Inner::MaxDesc($e) => $body,
        }
    };
}

/// Answers of a query in ranking order, computed lazily.
#[derive(Debug)]
pub struct AnswerStream {
    inner: Inner,
    spec: RankingSpec,
    algorithm: Algorithm,
    tie: TieBreak,
    limit: Option<u64>,
    var_count: usize,
}

/// Prepares `q` over `db` and returns its answers in `spec` order, at most
/// `limit` of them.
pub fn enumerate(
    q: &ConjunctiveQuery,
    db: &Database,
    spec: &RankingSpec,
    limit: Option<usize>,
) -> Result<AnswerStream, Error> {
    let mut s = AnswerStream::new(q, db, spec)?;
    s.limit = limit.map(|k| k as u64);
    Ok(s)
}

/// Checks that `spec` fits `q` and that both fit `db`.
pub fn validate(q: &ConjunctiveQuery, db: &Database, spec: &RankingSpec) -> Result<(), Error> {
    if q.is_empty() {
        return Err(Error::Spec("query has no atoms".into()));
    }
    if !q.is_join_query() {
        return Err(Error::Spec("enumeration needs every body variable in the head".into()));
    }
    let vars = spec.ranking_vars();
    if let Some(&v) = vars.iter().find(|&&v| v >= q.var_count()) {
        return Err(Error::Spec(format!("ranking refers to unknown variable #{v}")));
    }
    if let RankingSpec::Lex { order, .. } = spec {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != order.len() {
            return Err(Error::Spec("lexicographic order repeats a variable".into()));
        }
    }
    spec.check_weights(q, db)?;
    Ok(())
}

impl AnswerStream {
    pub fn new(q: &ConjunctiveQuery, db: &Database, spec: &RankingSpec) -> Result<Self, Error> {
        Self::build(q, db, spec, false)
    }

    /// Enumerates a lexicographic ranking through its SUM encoding even when
    /// a direct traversal would do.
    pub fn lex_via_sum(q: &ConjunctiveQuery, db: &Database, spec: &RankingSpec) -> Result<Self, Error> {
        if !matches!(spec, RankingSpec::Lex { .. }) {
            return Err(Error::Spec("not a lexicographic ranking".into()));
        }
        Self::build(q, db, spec, true)
    }

    fn build(q: &ConjunctiveQuery, db: &Database, spec: &RankingSpec, force_sum: bool) -> Result<Self, Error> {
        validate(q, db, spec)?;
        let (q, db) = normalize(q, db);
        if !is_acyclic(&q) {
            return Err(Error::Cyclic(cyclic(&q)));
        }
        let direction = spec.direction();
        let default_plan = || {
            let t = build_join_tree(&q).expect("acyclic");
            Plan::new(&q, &db, &t, &t.topological_rel_order())
        };
        let (inner, algorithm, tie) = match spec {
            RankingSpec::Lex { order, .. } => {
                let plan = if !force_sum && has_disruptive_trio(&q, order).is_none() {
                    l_consistent_join_tree(&q, order).ok()
                } else {
                    None
                };
                match plan {
                    Some(lp) => {
                        let plan = Plan::new(&q, &db, &lp.tree, &lp.rel);
                        let prep = semijoin_reduce_lex(plan, &lp.full_order, direction);
                        let tie = TieBreak {
                            order: lp.full_order,
                            descending: direction == Direction::Desc,
                        };
                        (Inner::Lex(Engine::stack(Arc::new(prep))), Algorithm::Lex, tie)
                    }
                    None => {
                        let plan = default_plan();
                        let tie = ascending(&plan);
                        let w = lex_sum_tuple_weights(&plan, order, direction);
                        let prep = dp_preprocess::<SumBig>(plan, w);
                        (Inner::LexViaSum(Engine::queue(Arc::new(prep))), Algorithm::LexViaSum, tie)
                    }
                }
            }
            RankingSpec::Sum { .. } | RankingSpec::TupleWeightSum { .. } => {
                let plan = default_plan();
                let tie = ascending(&plan);
                let mut w = attr_weights_to_tuple_weights(&plan, spec);
                if direction == Direction::Desc {
                    w.iter_mut().flatten().for_each(|x| *x = 0.0 - *x);
                }
                let prep = dp_preprocess::<SumF64>(plan, w);
                (Inner::Sum(Engine::queue(Arc::new(prep))), Algorithm::Sum, tie)
            }
            RankingSpec::MaxAgg { terms, .. } => {
                let plan = default_plan();
                let tie = ascending(&plan);
                let mut w = charged_term_weights(&plan, terms);
                let inner = if direction == Direction::Desc {
                    w.iter_mut().flatten().flatten().for_each(|x| *x = 0.0 - *x);
                    Inner::MaxDesc(Engine::queue(Arc::new(dp_preprocess::<Leximin>(plan, multisets::<Leximin>(w)))))
                } else {
                    Inner::Max(Engine::queue(Arc::new(dp_preprocess::<Leximax>(plan, multisets::<Leximax>(w)))))
                };
                (inner, Algorithm::Sum, tie)
            }
        };
        Ok(AnswerStream {
            inner,
            spec: spec.clone(),
            algorithm,
            tie,
            limit: None,
            var_count: q.var_count(),
        })
    }

    /// Stops after `k` answers in total.
    pub fn with_limit(mut self, k: usize) -> Self {
        self.limit = Some(k as u64);
        self
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn tie_break(&self) -> &TieBreak {
        &self.tie
    }

    /// Number of relations `l`.
    pub fn relation_count(&self) -> usize {
        each!(&self.inner, e => e.prepared().plan.len())
    }

    pub fn frontier_len(&self) -> usize {
        each!(&self.inner, e => e.frontier_len())
    }

    pub fn emitted(&self) -> u64 {
        each!(&self.inner, e => e.emitted())
    }

    /// Also recompute priorities from scratch and count disagreements.
    pub fn set_verify(&mut self, on: bool) {
        each!(&mut self.inner, e => e.set_verify(on))
    }

    pub fn prio_mismatches(&self) -> u64 {
        each!(&self.inner, e => e.prio_mismatches())
    }

    pub fn memo_evaluations(&self) -> usize {
        each!(&self.inner, e => e.prepared().memo_evaluations)
    }

    pub fn explain(&self) -> Explain {
        each!(&self.inner, e => explain(e.prepared(), self.algorithm))
    }

    /// The partial answers currently waiting, in no particular order.
    pub fn pending(&self) -> Vec<PendingAnswer> {
        let desc = self.spec.direction() == Direction::Desc;
        each!(&self.inner, e => pending(e, desc))
    }

    /// Computes the next answer without materializing it; false when done.
    /// Meant for timing runs.
    pub fn advance(&mut self) -> bool {
        if self.limit.is_some_and(|k| self.emitted() >= k) {
            return false;
        }
        each!(&mut self.inner, e => e.next_answer().is_some())
    }
}

/// Reports engine weights in the ranking's own weight domain.
trait Reported: Aggregate {
    fn real(w: &Self::W, desc: bool) -> Option<f64>;
}

impl Reported for Unit {
    fn real(_: &(), _: bool) -> Option<f64> {
        None
    }
}

impl Reported for SumBig {
    fn real(_: &num_bigint::BigInt, _: bool) -> Option<f64> {
        None
    }
}

impl Reported for SumF64 {
    fn real(w: &f64, desc: bool) -> Option<f64> {
        Some(if desc { 0.0 - w } else { *w })
    }
}

impl Reported for Leximax {
    fn real(w: &Vec<f64>, _: bool) -> Option<f64> {
        Some(w.first().copied().unwrap_or(f64::NEG_INFINITY))
    }
}

impl Reported for Leximin {
    fn real(w: &Vec<f64>, _: bool) -> Option<f64> {
        Some(w.first().map_or(f64::NEG_INFINITY, |x| 0.0 - x))
    }
}

fn next_answer<A: Reported>(e: &mut Engine<A>, spec: &RankingSpec, var_count: usize) -> Option<Answer> {
    let prep = e.prepared().clone();
    let (tuples, prio) = e.next_answer()?;
    let mut values = vec![Value::Int(0); var_count];
    for (node, &t) in prep.plan.nodes.iter().zip(tuples) {
        let tuple = node.relation.tuple(t as usize);
        for &(v, c) in &node.var_cols {
            values[v] = tuple[c].clone();
        }
    }
    let weight = match spec {
        RankingSpec::Lex { order, .. } => Weight::Lex(order.iter().map(|&v| values[v].clone()).collect()),
        _ => Weight::Real(A::real(&prio, spec.direction() == Direction::Desc).expect("weighted mode")),
    };
    Some(Answer { values, weight })
}

fn pending<A: Reported>(e: &Engine<A>, desc: bool) -> Vec<PendingAnswer> {
    let plan = &e.prepared().plan;
    e.frontier_entries()
        .into_iter()
        .map(|(tuples, prio)| PendingAnswer {
            prefix: tuples
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let n = &plan.nodes[i];
                    (n.relation.name().to_string(), n.relation.tuple(t as usize).to_vec())
                })
                .collect(),
            priority: A::real(&prio, desc).map(Weight::Real),
        })
        .collect()
}

fn ascending(plan: &Plan) -> TieBreak {
    TieBreak {
        order: plan.scan_order(),
        descending: false,
    }
}

fn cyclic(q: &ConjunctiveQuery) -> CyclicError {
    build_join_tree(q).expect_err("cyclic")
}

fn multisets<A: Aggregate<W = Vec<f64>>>(w: Vec<Vec<Vec<f64>>>) -> Vec<Vec<Vec<f64>>> {
    w.into_iter()
        .map(|rel| {
            rel.into_iter()
                .map(|terms| terms.into_iter().fold(A::identity(), |acc, x| A::combine(&acc, &vec![x])))
                .collect()
        })
        .collect()
}

fn explain<W>(prep: &Prepared<W>, algorithm: Algorithm) -> Explain {
    let nodes = &prep.plan.nodes;
    Explain {
        algorithm,
        relations: nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.relation.name().to_string(), n.relation.len(), prep.survivors(i)))
            .collect(),
        edges: nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| {
                let p = n.parent?;
                let groups = prep.index[i].as_ref().map_or(0, |ix| ix.group_count());
                Some((nodes[p].relation.name().to_string(), n.relation.name().to_string(), groups))
            })
            .collect(),
    }
}

impl Iterator for AnswerStream {
    type Item = Answer;

    fn next(&mut self) -> Option<Answer> {
        if self.limit.is_some_and(|k| self.emitted() >= k) {
            return None;
        }
        let (spec, n) = (&self.spec, self.var_count);
        each!(&mut self.inner, e => next_answer(e, spec, n))
    }
}
