//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p anyk-core --test acceptance`; exits nonzero if any fails.

use std::cmp::Ordering;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyk::analysis::{build_join_tree, has_disruptive_trio, Algorithm};
use anyk::bench::{measure_ttk, scaling_report, uniform_path, worst_case_path, BenchOptions, Competitor, ScalingRow};
use anyk::enumerate::PendingAnswer;
use anyk::fixtures::{example_database, example_query};
use anyk::oracle::{check_instance, join, random_instance, random_spec, InstanceConfig, Shape, SpecKind, MAX_ROWS};
use anyk::preprocess::{attr_weights_to_tuple_weights, dp_preprocess, semijoin_reduce_lex, Plan, Prepared, SumF64};
use anyk::{AnswerStream, Direction, RankingSpec, Value, Weight};

// Doubling-ratio windows for the worst-case 3-path.
const TT1_RATIO: (f64, f64) = (1.5, 3.0);
const TT_FULL_RATIO: (f64, f64) = (3.0, 5.5);
// 4-path against join-first.
const TT1_FRACTION: f64 = 0.05;
const TT_FULL_FACTOR: f64 = 4.0;
const SEMIJOIN_BUDGET: Duration = Duration::from_millis(1);
const DIFFERENTIAL_BUDGET: Duration = Duration::from_secs(300);
const SCALING_BUDGET: Duration = Duration::from_secs(600);

type Outcome = Result<String, String>;

fn ints(vals: &[Value]) -> Vec<i64> {
    vals.iter()
        .map(|v| match v {
            Value::Int(i) => *i,
            other => panic!("non-integer {other:?}"),
        })
        .collect()
}

fn example_plan() -> Plan {
    let q = example_query();
    let t = build_join_tree(&q).expect("acyclic");
    Plan::new(&q, &example_database(), &t, &t.topological_rel_order())
}

fn alive<W>(p: &Prepared<W>, pos: usize) -> Vec<Vec<i64>> {
    let rel = &p.plan.nodes[pos].relation;
    (0..rel.len()).filter(|&t| p.opt[pos][t].is_some()).map(|t| ints(rel.tuple(t))).collect()
}

fn semijoin() -> Outcome {
    let mut times = Vec::new();
    let mut prep = None;
    for _ in 0..7 {
        let plan = example_plan();
        let start = Instant::now();
        let p = semijoin_reduce_lex(plan, &[0, 1, 2, 3, 4], Direction::Asc);
        times.push(start.elapsed());
        prep = Some(p);
    }
    times.sort();
    let elapsed = times[times.len() / 2];
    let p = prep.unwrap();
    let names: Vec<&str> = p.plan.nodes.iter().map(|n| n.relation.name()).collect();
    let by_name = |n: &str| alive(&p, names.iter().position(|&x| x == n).unwrap());
    let (r, s, t, u) = (by_name("R"), by_name("S"), by_name("T"), by_name("U"));
    let ok = r == [[1, 1], [2, 2]]
        && s.len() == 5
        && s.contains(&vec![0, 1])
        && t == [[1, 3], [2, 2]]
        && u.len() == 4
        && elapsed < SEMIJOIN_BUDGET;
    let msg = format!("R={r:?} T={t:?} |S|={} |U|={} in {elapsed:?}", s.len(), u.len());
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lex_first_five() -> Outcome {
    let got: Vec<Vec<i64>> = AnswerStream::new(&example_query(), &example_database(), &RankingSpec::lex(vec![0, 1, 2, 3, 4]))
        .map_err(|e| e.to_string())?
        .take(5)
        .map(|a| ints(&a.values))
        .collect();
    let want = [[1, 1, 1, 3, 8], [1, 1, 1, 3, 9], [1, 1, 2, 3, 8], [1, 1, 2, 3, 9], [2, 2, 3, 2, 1]];
    if got == want {
        Ok(format!("{got:?}"))
    } else {
        Err(format!("got {got:?}"))
    }
}

fn dp_values() -> Outcome {
    let plan = example_plan();
    let w = attr_weights_to_tuple_weights(&plan, &RankingSpec::sum_of(0..5));
    let p = dp_preprocess::<SumF64>(plan, w);
    let opt_of = |rel: &str, tuple: [i64; 2]| {
        let pos = p.plan.nodes.iter().position(|n| n.relation.name() == rel).unwrap();
        let r = &p.plan.nodes[pos].relation;
        let t = (0..r.len()).find(|&t| ints(r.tuple(t)) == tuple).unwrap();
        p.opt[pos][t]
    };
    let (t22, r22) = (opt_of("T", [2, 2]), opt_of("R", [2, 2]));
    let msg = format!("opt(T(2,2))={t22:?} opt(R(2,2))={r22:?}");
    if t22 == Some(3.0) && r22 == Some(10.0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sum_top_two() -> Outcome {
    let mut s = AnswerStream::new(&example_query(), &example_database(), &RankingSpec::sum_of(0..5)).map_err(|e| e.to_string())?;
    let first = s.next().ok_or("no first answer")?;
    let pending = s.pending();
    let second = s.next().ok_or("no second answer")?;
    let swapped = pending.iter().find(|p: &&PendingAnswer| {
        let has = |rel: &str, t: [i64; 2]| p.prefix.iter().any(|(n, v)| n == rel && ints(v) == t);
        has("R", [2, 2]) && has("S", [2, 5])
    });
    let prio = swapped.and_then(|p| p.priority.clone());
    let ok = ints(&first.values) == [2, 2, 3, 2, 1]
        && first.weight == Weight::Real(10.0)
        && ints(&second.values) == [2, 2, 3, 2, 2]
        && second.weight == Weight::Real(11.0)
        && prio == Some(Weight::Real(12.0));
    let msg = format!(
        "top1 {:?} w={} top2 {:?} w={} S(2,5) candidate {:?}",
        ints(&first.values),
        first.weight,
        ints(&second.values),
        second.weight,
        prio
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn trios() -> Outcome {
    let q = example_query();
    let a = has_disruptive_trio(&q, &[0, 3, 1]);
    let b = has_disruptive_trio(&q, &[0, 2, 3, 4, 1]);
    let c = has_disruptive_trio(&q, &[0, 1, 2, 3, 4]);
    let msg = format!("x1,x4,x2: {a:?}; x1,x3,x4,x5,x2: {b:?}; x1..x5: {c:?}");
    if a.is_some() && b.is_some() && c.is_none() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// `(query, database, spec)` for every seed, shape and ranking kind.
fn differential_cases() -> Vec<(anyk::ConjunctiveQuery, anyk::Database, SpecKind, RankingSpec)> {
    let mut cases = Vec::new();
    for shape in [Shape::Path, Shape::Star, Shape::Tree] {
        for seed in 0..170u64 {
            let atoms = 2 + (seed % 4) as usize;
            let tuples = 10 + (seed * 37 % 191) as usize;
            let (q, db) = random_instance(&InstanceConfig::new(shape, atoms, tuples, seed + 1000 * shape as u64));
            for (i, kind) in SpecKind::ALL.into_iter().enumerate() {
                if let Some(spec) = random_spec(&q, kind, seed * 10 + i as u64) {
                    cases.push((q.clone(), db.clone(), kind, spec));
                }
            }
        }
    }
    cases
}

fn differential_and_frontier() -> (Outcome, Outcome) {
    let start = Instant::now();
    let cases = differential_cases();
    let instances = cases.len() / SpecKind::ALL.len();
    let mut failures = Vec::new();
    let mut wrong_route = 0;
    let mut frontier_failures = 0;
    let mut peak: f64 = 0.0;
    let mut answers = 0;
    for (q, db, kind, spec) in &cases {
        match check_instance(q, db, spec) {
            Ok(r) => {
                peak = peak.max(r.frontier_peak_ratio);
                answers += r.answers;
                let want = match kind {
                    SpecKind::Lex => Algorithm::Lex,
                    SpecKind::LexTrio => Algorithm::LexViaSum,
                    _ => Algorithm::Sum,
                };
                if r.algorithm != want {
                    wrong_route += 1;
                }
            }
            Err(e) => {
                if matches!(e, anyk::oracle::CheckFailure::Frontier { .. }) {
                    frontier_failures += 1;
                }
                failures.push(format!("{kind}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let diff = format!(
        "{} cases ({instances} instances x {} kinds), {answers} answers, {} mismatches, {wrong_route} misrouted, {elapsed:.1?}",
        cases.len(),
        SpecKind::ALL.len(),
        failures.len()
    );
    let ok = instances >= 500 && failures.is_empty() && wrong_route == 0 && elapsed < DIFFERENTIAL_BUDGET;
    let diff = if ok {
        Ok(diff)
    } else {
        Err(format!("{diff}; first: {:?}", failures.first()))
    };
    let frontier = format!("peak |frontier|/(k*l) = {peak:.3} over {} cases", cases.len());
    let frontier = if frontier_failures == 0 && peak <= 1.0 {
        Ok(frontier)
    } else {
        Err(format!("{frontier}, {frontier_failures} violations"))
    };
    (diff, frontier)
}

fn scaling() -> Outcome {
    let start = Instant::now();
    let ns: Vec<usize> = (12..=15).map(|e| 1 << e).collect();
    let spec = RankingSpec::sum_of(0..4);
    let rows = scaling_report(|n| worst_case_path(3, n, 256), &spec, &ns, 11, 7, SCALING_BUDGET).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for w in rows.windows(2) {
        let (r1, rf) = ScalingRow::ratios(&w[0], &w[1]);
        ok &= (TT1_RATIO.0..=TT1_RATIO.1).contains(&r1) && (TT_FULL_RATIO.0..=TT_FULL_RATIO.1).contains(&rf);
        parts.push(format!("n={} tt1 x{r1:.2} full x{rf:.2}", w[1].n));
    }

    let (q, db) = uniform_path(4, 1 << 14, 4096, 7);
    let spec = RankingSpec::sum_of(0..5);
    let opts = BenchOptions {
        checkpoints: vec![1],
        timeout: SCALING_BUDGET,
        flush_answers: false,
    };
    let mut any1 = Vec::new();
    let mut anyf = Vec::new();
    let mut jf = Vec::new();
    let mut counts = (0, 0);
    for _ in 0..3 {
        let c = measure_ttk(&q, &db, &spec, 1 << 14, &[Competitor::AnyK, Competitor::JoinFirst], &opts)
            .map_err(|e| e.to_string())?;
        any1.push(c.tt(Competitor::AnyK, 1).unwrap());
        anyf.push(c.tt_full(Competitor::AnyK).unwrap());
        jf.push(c.tt_full(Competitor::JoinFirst).unwrap());
        counts = (
            c.series(Competitor::AnyK).last().unwrap().k,
            c.series(Competitor::JoinFirst).last().unwrap().k,
        );
    }
    let med = |v: &mut Vec<Duration>| anyk::bench::median(v).as_secs_f64();
    let (a1, af, j) = (med(&mut any1), med(&mut anyf), med(&mut jf));
    ok &= counts.0 >= 1_000_000 && counts.0 == counts.1 && a1 <= TT1_FRACTION * j && af <= TT_FULL_FACTOR * j;
    parts.push(format!(
        "4-path {} answers: tt1 {:.4} of join-first, full {:.2}x",
        counts.0,
        a1 / j,
        af / j
    ));
    let elapsed = start.elapsed();
    ok &= elapsed < SCALING_BUDGET;
    let msg = format!("{}; {elapsed:.1?}", parts.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Lexicographic comparison on `order`, written independently of the engine.
fn lex_cmp(a: &[Value], b: &[Value], order: &[usize], desc: bool) -> Ordering {
    for &v in order {
        let o = a[v].cmp(&b[v]);
        if o.is_ne() {
            return if desc { o.reverse() } else { o };
        }
    }
    Ordering::Equal
}

fn lex_via_sum() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut seed = 0u64;
    while checked < 100 {
        seed += 1;
        let shape = [Shape::Path, Shape::Star, Shape::Tree][seed as usize % 3];
        let (q, db) = random_instance(&InstanceConfig::new(shape, 1 + (seed % 5) as usize, 10 + (seed * 53 % 150) as usize, 7000 + seed));
        let kind = if seed % 2 == 0 { SpecKind::Lex } else { SpecKind::LexTrio };
        let Some(mut spec) = random_spec(&q, kind, seed) else { continue };
        if seed % 4 == 1 {
            if let RankingSpec::Lex { direction, .. } = &mut spec {
                *direction = Direction::Desc;
            }
        }
        let RankingSpec::Lex { order, direction } = &spec else { unreachable!() };
        let desc = *direction == Direction::Desc;
        let stream = AnswerStream::lex_via_sum(&q, &db, &spec).map_err(|e| e.to_string())?;
        let tie = stream.tie_break().clone();
        let mut rows: Vec<Vec<Value>> = join(&q, &db, MAX_ROWS).map_err(|e| e.to_string())?.into_iter().map(|r| r.0).collect();
        rows.sort_by(|a, b| lex_cmp(a, b, order, desc).then_with(|| lex_cmp(a, b, &tie.order, tie.descending)));
        let got: Vec<Vec<Value>> = stream.map(|a| a.values).collect();
        if got != rows {
            bad.push(seed);
        }
        checked += 1;
    }
    let msg = format!("{checked} instances, {} mismatches", bad.len());
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}: seeds {bad:?}"))
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, what: &str, r: Outcome| {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                all = false;
                ("FAIL", d)
            }
        };
        println!("criterion {n} {tag}: {what}: {detail}");
    };
    report(1, "semijoin reduction on the example", semijoin());
    report(2, "first five lexicographic answers", lex_first_five());
    report(3, "DP best-completion weights", dp_values());
    report(4, "SUM top-2 and swapped candidate", sum_top_two());
    report(5, "disruptive trios", trios());
    let (diff, frontier) = differential_and_frontier();
    report(6, "differential oracle suite", diff);
    report(7, "frontier bound k*l", frontier);
    report(8, "TT(k) growth and join-first comparison", scaling());
    report(9, "lex via SUM equals lexicographic sort", lex_via_sum());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
