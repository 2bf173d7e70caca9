//! TT(k) measurements: the any-k engine against join-first (materialize the
//! whole join, sort it, then answer).

use std::cmp::Ordering;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{build_join_tree, is_acyclic};
use crate::enumerate::AnswerStream;
use crate::error::Error;
use crate::model::normalize::normalize;
use crate::model::query::ConjunctiveQuery;
use crate::model::ranking::{Direction, RankingSpec};
use crate::model::relation::{Database, Relation};
use crate::oracle::{join_then_rank, OracleError};
use crate::preprocess::{attr_weights_to_tuple_weights, bottom_up, Boolean, Plan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Competitor {
    AnyK,
    JoinFirst,
}

impl Competitor {
    pub fn name(self) -> &'static str {
        match self {
            Competitor::AnyK => "anyk",
            Competitor::JoinFirst => "joinfirst",
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("run exceeded {0:?}")]
    Timeout(Duration),
    #[error("join-first only ranks by SUM or tuple weights")]
    Unsupported,
    #[error("answer {0} differs from the oracle")]
    Incorrect(usize),
    #[error(transparent)]
    Engine(#[from] Error),
}

/// One `(k, elapsed)` sample. The last sample of a series is the full output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    pub competitor: Competitor,
    pub n: usize,
    pub k: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct TtkCurve {
    pub samples: Vec<Sample>,
}

impl TtkCurve {
    pub fn series(&self, c: Competitor) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.competitor == c)
    }

    /// Time to the `k`-th answer, from the first checkpoint at or past `k`.
    pub fn tt(&self, c: Competitor, k: u64) -> Option<Duration> {
        self.series(c).find(|s| s.k >= k).map(|s| s.elapsed)
    }

    /// Time to the last answer.
    pub fn tt_full(&self, c: Competitor) -> Option<Duration> {
        self.series(c).last().map(|s| s.elapsed)
    }

    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["competitor", "n", "k", "elapsed_ns"])?;
        for s in &self.samples {
            w.write_record([
                s.competitor.name().to_string(),
                s.n.to_string(),
                s.k.to_string(),
                s.elapsed.as_nanos().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    /// Record TT(k) at these k (ascending); the full output is always recorded.
    pub checkpoints: Vec<u64>,
    pub timeout: Duration,
    /// Materialize and write every answer (to a sink) while timing.
    pub flush_answers: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            checkpoints: (0..10).map(|e| 10u64.pow(e)).collect(),
            timeout: Duration::from_secs(120),
            flush_answers: false,
        }
    }
}

/// Times each competitor on one instance. `n` only labels the samples.
pub fn measure_ttk(
    q: &ConjunctiveQuery,
    db: &Database,
    spec: &RankingSpec,
    n: usize,
    competitors: &[Competitor],
    opts: &BenchOptions,
) -> Result<TtkCurve, BenchError> {
    let mut curve = TtkCurve::default();
    for &c in competitors {
        match c {
            Competitor::AnyK => curve.samples.extend(time_anyk(q, db, spec, n, opts)?),
            Competitor::JoinFirst => {
                let start = Instant::now();
                let out = join_first(q, db, spec)?;
                let elapsed = start.elapsed();
                let total = out.len() as u64;
                // Join-first answers nothing before it is done.
                for &k in opts.checkpoints.iter().filter(|&&k| k < total) {
                    curve.samples.push(Sample { competitor: c, n, k, elapsed });
                }
                curve.samples.push(Sample { competitor: c, n, k: total, elapsed });
            }
        }
    }
    Ok(curve)
}

fn time_anyk(
    q: &ConjunctiveQuery,
    db: &Database,
    spec: &RankingSpec,
    n: usize,
    opts: &BenchOptions,
) -> Result<Vec<Sample>, BenchError> {
    let mut samples = Vec::new();
    let start = Instant::now();
    let mut stream = AnswerStream::new(q, db, spec)?;
    let mut sink = std::io::sink();
    let mut next_cp = opts.checkpoints.iter().copied().peekable();
    let record = |k: u64, samples: &mut Vec<Sample>| {
        samples.push(Sample {
            competitor: Competitor::AnyK,
            n,
            k,
            elapsed: start.elapsed(),
        })
    };
    let mut k = 0u64;
    loop {
        while next_cp.peek() == Some(&k) {
            next_cp.next();
            record(k, &mut samples);
        }
        let more = if opts.flush_answers {
            match stream.next() {
                Some(a) => {
                    let _ = writeln!(sink, "{:?},{}", a.values, a.weight);
                    true
                }
                None => false,
            }
        } else {
            stream.advance()
        };
        if !more {
            break;
        }
        k += 1;
        if k % 4096 == 0 && start.elapsed() > opts.timeout {
            return Err(BenchError::Timeout(opts.timeout));
        }
    }
    if samples.last().map_or(true, |s| s.k != k) {
        record(k, &mut samples);
    }
    Ok(samples)
}

/// The whole ranked output as tuple ids per relation position, computed the
/// conventional way: semijoin reduction, full materialization, one sort. Only
/// SUM-like rankings are supported. Ties are ordered like the engine orders
/// them.
pub fn join_first(q: &ConjunctiveQuery, db: &Database, spec: &RankingSpec) -> Result<Vec<Vec<u32>>, BenchError> {
    if !matches!(spec, RankingSpec::Sum { .. } | RankingSpec::TupleWeightSum { .. }) {
        return Err(BenchError::Unsupported);
    }
    crate::enumerate::validate(q, db, spec)?;
    let (q, db) = normalize(q, db);
    if !is_acyclic(&q) {
        return Err(Error::Cyclic(build_join_tree(&q).expect_err("cyclic")).into());
    }
    let tree = build_join_tree(&q).expect("acyclic");
    let plan = Plan::new(&q, &db, &tree, &tree.topological_rel_order());
    let mut weights = attr_weights_to_tuple_weights(&plan, spec);
    if spec.direction() == Direction::Desc {
        weights.iter_mut().flatten().for_each(|w| *w = 0.0 - *w);
    }
    let pass = bottom_up::<Boolean>(&plan, |_, _| true);
    let l = plan.len();
    let mut flat: Vec<u32> = Vec::new();
    let mut total: Vec<f64> = Vec::new();
    let mut cur = vec![0u32; l];
    let roots: Vec<u32> = (0..plan.nodes[0].relation.len() as u32).filter(|&t| pass.value[0][t as usize]).collect();
    // Iterative depth-first expansion over the reduced indexes.
    let mut stack: Vec<(usize, u32)> = roots.iter().rev().map(|&t| (0, t)).collect();
    let mut acc = vec![0.0; l + 1];
    while let Some((pos, t)) = stack.pop() {
        cur[pos] = t;
        acc[pos + 1] = acc[pos] + weights[pos][t as usize];
        if pos + 1 == l {
            flat.extend_from_slice(&cur);
            total.push(acc[l]);
            continue;
        }
        let next = pos + 1;
        let parent = plan.nodes[next].parent.expect("non-root");
        let ix = pass.index[next].as_ref().expect("non-root index");
        stack.extend(ix.matches(cur[parent]).iter().rev().map(|&m| (next, m)));
    }
    let count = total.len();
    let mut order: Vec<u32> = (0..count as u32).collect();
    let nodes = &plan.nodes;
    order.sort_unstable_by(|&a, &b| {
        total[a as usize].total_cmp(&total[b as usize]).then_with(|| {
            let (ra, rb) = (&flat[a as usize * l..][..l], &flat[b as usize * l..][..l]);
            for (i, node) in nodes.iter().enumerate() {
                if ra[i] == rb[i] {
                    continue;
                }
                let (ta, tb) = (node.relation.tuple(ra[i] as usize), node.relation.tuple(rb[i] as usize));
                for &c in &node.fresh_cols {
                    let o = ta[c].cmp(&tb[c]);
                    if o.is_ne() {
                        return o;
                    }
                }
            }
            Ordering::Equal
        })
    });
    Ok(order.iter().map(|&i| flat[i as usize * l..][..l].to_vec()).collect())
}

/// Compares the first `k` engine answers with the oracle. Skips (returns
/// `Ok(false)`) when the oracle would have to materialize more than
/// `max_rows`.
pub fn verify_prefix(
    q: &ConjunctiveQuery,
    db: &Database,
    spec: &RankingSpec,
    k: usize,
    max_rows: usize,
) -> Result<bool, BenchError> {
    let stream = AnswerStream::new(q, db, spec)?;
    let tie = stream.tie_break().clone();
    let expected = match crate::oracle::join(q, db, max_rows) {
        Ok(_) => join_then_rank(q, db, spec, &tie).expect("fits"),
        Err(OracleError::TooLarge { .. }) => return Ok(false),
        Err(e) => panic!("oracle failed: {e}"),
    };
    for (i, a) in stream.take(k).enumerate() {
        let r = expected.get(i).ok_or(BenchError::Incorrect(i))?;
        if r.values != a.values || r.weight != a.weight {
            return Err(BenchError::Incorrect(i));
        }
    }
    Ok(true)
}

/// A path whose output is quadratic: `R1(i, i mod m)`, `R2(i mod m, i)`,
/// then `Rj(i, i)`. Every relation has `n` tuples and the join has `n^2 / m`
/// answers.
pub fn worst_case_path(atoms: usize, n: usize, m: usize) -> (ConjunctiveQuery, Database) {
    assert!(atoms >= 2, "needs at least two atoms");
    let mut b = ConjunctiveQuery::builder("Q");
    for j in 1..=atoms {
        b = b.atom(&format!("R{j}"), [format!("x{j}").as_str(), format!("x{}", j + 1).as_str()]);
    }
    let q = b.build().expect("static shape");
    let rel = |name: String, f: &dyn Fn(i64) -> [i64; 2]| {
        let rows: Vec<[i64; 2]> = (0..n as i64).map(f).collect();
        Relation::from_ints(&name, &rows)
    };
    let m = m as i64;
    let mut rels = vec![rel("R1".into(), &|i| [i, i % m]), rel("R2".into(), &|i| [i % m, i])];
    for j in 3..=atoms {
        rels.push(rel(format!("R{j}"), &|i| [i, i]));
    }
    (q, Database::from_relations(rels))
}

/// A path over `n` uniformly random pairs from `0..domain` per relation.
/// Expected output is about `n^l / domain^(l-1)`.
pub fn uniform_path(atoms: usize, n: usize, domain: i64, seed: u64) -> (ConjunctiveQuery, Database) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ConjunctiveQuery::builder("Q");
    for j in 1..=atoms {
        b = b.atom(&format!("R{j}"), [format!("x{j}").as_str(), format!("x{}", j + 1).as_str()]);
    }
    let q = b.build().expect("static shape");
    let rels: Vec<Relation> = (1..=atoms)
        .map(|j| {
            let rows: Vec<[i64; 2]> = (0..n).map(|_| [rng.gen_range(0..domain), rng.gen_range(0..domain)]).collect();
            Relation::from_ints(&format!("R{j}"), &rows)
        })
        .collect();
    (q, Database::from_relations(rels))
}

/// Median TT(1) and TT(full) per `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub answers: u64,
    pub tt1: Duration,
    pub tt_full: Duration,
}

impl ScalingRow {
    /// `(TT(1) ratio, TT(full) ratio)` against the previous row.
    pub fn ratios(prev: &ScalingRow, next: &ScalingRow) -> (f64, f64) {
        (
            next.tt1.as_secs_f64() / prev.tt1.as_secs_f64(),
            next.tt_full.as_secs_f64() / prev.tt_full.as_secs_f64(),
        )
    }
}

/// Medians over `reps` TT(1) runs (stopping after one answer) and
/// `full_reps` full runs per `n`, after one untimed warm-up run each.
/// Repetitions are interleaved across `n`, and every run gets a freshly built
/// instance, so that neither a noisy stretch of machine time nor an unlucky
/// memory layout lands on a single size.
pub fn scaling_report(
    instance: impl Fn(usize) -> (ConjunctiveQuery, Database),
    spec: &RankingSpec,
    ns: &[usize],
    reps: usize,
    full_reps: usize,
    timeout: Duration,
) -> Result<Vec<ScalingRow>, BenchError> {
    let full_opts = BenchOptions {
        checkpoints: Vec::new(),
        timeout,
        flush_answers: false,
    };
    let mut tt1 = vec![Vec::new(); ns.len()];
    let mut full = vec![Vec::new(); ns.len()];
    let mut answers = vec![0; ns.len()];
    for &n in ns {
        let (q, db) = instance(n);
        let mut s = AnswerStream::new(&q, &db, spec)?;
        while s.advance() {}
    }
    for rep in 0..reps.max(full_reps).max(1) {
        for (i, &n) in ns.iter().enumerate() {
            if rep < reps.max(1) {
                let (q, db) = instance(n);
                let start = Instant::now();
                let mut s = AnswerStream::new(&q, &db, spec)?.with_limit(1);
                s.advance();
                tt1[i].push(start.elapsed());
            }
            if rep < full_reps.max(1) {
                let (q, db) = instance(n);
                let samples = time_anyk(&q, &db, spec, n, &full_opts)?;
                let last = samples.last().expect("full sample");
                answers[i] = last.k;
                full[i].push(last.elapsed);
            }
        }
    }
    Ok(ns
        .iter()
        .enumerate()
        .map(|(i, &n)| ScalingRow {
            n,
            answers: answers[i],
            tt1: median(&mut tt1[i]),
            tt_full: median(&mut full[i]),
        })
        .collect())
}

pub fn median(xs: &mut [Duration]) -> Duration {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn worst_case_output_size() {
        let (q, db) = worst_case_path(3, 64, 8);
        let n = AnswerStream::new(&q, &db, &RankingSpec::sum_of(0..4)).unwrap().count();
        assert_eq!(n, 64 * 64 / 8);
    }

    #[test]
    fn join_first_matches_engine_order() {
        let q = fixtures::example_query();
        let db = fixtures::example_database();
        let spec = RankingSpec::sum_of(0..5);
        let jf = join_first(&q, &db, &spec).unwrap();
        assert_eq!(jf.len(), 8);
        let (q2, db2) = uniform_path(3, 200, 40, 9);
        let spec2 = RankingSpec::sum_of(0..4);
        let engine: Vec<_> = AnswerStream::new(&q2, &db2, &spec2).unwrap().map(|a| a.values).collect();
        let jf2 = join_first(&q2, &db2, &spec2).unwrap();
        assert_eq!(engine.len(), jf2.len());
        let rels: Vec<_> = ["R1", "R2", "R3"].iter().map(|r| db2.get(r).unwrap()).collect();
        for (a, ids) in engine.iter().zip(&jf2) {
            let vals: Vec<_> = vec![
                rels[0].tuple(ids[0] as usize)[0].clone(),
                rels[0].tuple(ids[0] as usize)[1].clone(),
                rels[1].tuple(ids[1] as usize)[1].clone(),
                rels[2].tuple(ids[2] as usize)[1].clone(),
            ];
            assert_eq!(a, &vals);
        }
    }

    #[test]
    fn curve_has_checkpoints_and_csv() {
        let (q, db) = worst_case_path(3, 32, 4);
        let opts = BenchOptions {
            checkpoints: vec![0, 1, 10],
            ..BenchOptions::default()
        };
        let curve = measure_ttk(&q, &db, &RankingSpec::sum_of(0..4), 32, &[Competitor::AnyK, Competitor::JoinFirst], &opts)
            .unwrap();
        let ks: Vec<u64> = curve.series(Competitor::AnyK).map(|s| s.k).collect();
        assert_eq!(ks, [0, 1, 10, 256]);
        assert_eq!(curve.tt_full(Competitor::JoinFirst), curve.tt(Competitor::JoinFirst, 1));
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("competitor,n,k,elapsed_ns\nanyk,32,0,"));
    }

    #[test]
    fn prefix_verified_against_oracle() {
        let (q, db) = uniform_path(3, 100, 20, 4);
        assert!(verify_prefix(&q, &db, &RankingSpec::sum_of(0..4), 100, 100_000).unwrap());
    }
}
