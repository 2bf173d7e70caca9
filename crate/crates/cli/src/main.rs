use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyk::analysis::analyze;
use anyk::bench::{
    measure_ttk, uniform_path, verify_prefix, worst_case_path, BenchOptions, Competitor, TtkCurve,
};
use anyk::model::parse::attach_tables;
use anyk::model::{load_weight_table, parse_query, ParsedQuery};
use anyk::oracle::{
    check_instance, dump_instance, minimize, random_instance, random_spec, InstanceConfig, Shape,
    SpecKind,
};
use anyk::{AnswerStream, ConjunctiveQuery, Database, RankingSpec, Relation};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "anyk",
    version,
    about = "Ranked enumeration of acyclic join queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream answers in ranking order as CSV.
    Run {
        #[arg(long)]
        query: PathBuf,
        /// Directory of `<relation>.csv` files.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Print the plan and per-relation sizes to stderr.
        #[arg(long)]
        explain: bool,
        /// Directory of `<table>.csv` weight tables (defaults to --data).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Report the structure of a query.
    Analyze {
        #[arg(long)]
        query: PathBuf,
    },
    /// Compare the engine with the join-then-rank oracle on random instances.
    Check {
        #[arg(long, value_parser = parse_range)]
        seed_range: Range<u64>,
    },
    /// Record TT(k) curves for the engine and join-first.
    Bench {
        #[arg(long, value_enum, default_value_t = BenchShape::Path)]
        shape: BenchShape,
        #[arg(long, default_value_t = 4)]
        atoms: usize,
        /// Tuples per relation: `N`, `2^a`, or a doubling range `2^a..2^b`.
        #[arg(long)]
        n: String,
        #[arg(long, value_enum, default_value_t = BenchSpec::Sum)]
        spec: BenchSpec,
        /// Join-key domain for `path` (defaults to n).
        #[arg(long)]
        domain: Option<i64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 120)]
        timeout_secs: u64,
        /// Format every answer while timing instead of only counting.
        #[arg(long)]
        flush_answers: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchShape {
    /// Uniformly random pairs.
    Path,
    /// Quadratic output.
    Worst,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchSpec {
    Sum,
    Max,
    Lex,
    Tupleweight,
}

fn parse_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if a >= b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok(a..b)
}

fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    match s.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base.parse().map_err(|e| format!("{s}: {e}"))?;
            let exp: u32 = exp.parse().map_err(|e| format!("{s}: {e}"))?;
            base.checked_pow(exp)
                .ok_or_else(|| format!("{s} overflows"))
        }
        None => s.parse().map_err(|e| format!("{s}: {e}")),
    }
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, String> {
    let Some((a, b)) = s.split_once("..") else {
        return Ok(vec![parse_size(s)?]);
    };
    let (mut n, hi) = (parse_size(a)?, parse_size(b)?);
    if n == 0 || n > hi {
        return Err(format!("bad size range {s}"));
    }
    let mut out = Vec::new();
    while n <= hi {
        out.push(n);
        n *= 2;
    }
    Ok(out)
}

fn load_database(dir: &Path) -> Result<Database, String> {
    let mut db = Database::new();
    let entries = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for entry in entries {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or("bad file name")?;
            db.insert(Relation::load_csv(name, &path).map_err(|e| e.to_string())?);
        }
    }
    Ok(db)
}

fn load_query(path: &Path) -> Result<ParsedQuery, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_query(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn run(
    query: &Path,
    data: &Path,
    k: Option<usize>,
    explain: bool,
    weights: Option<&Path>,
) -> Result<(), String> {
    let mut parsed = load_query(query)?;
    let db = load_database(data)?;
    parsed.check_schema(&db).map_err(|e| e.to_string())?;
    let tables_dir = weights.unwrap_or(data);
    let mut tables = HashMap::new();
    for name in parsed.weight_tables() {
        let t = load_weight_table(&tables_dir.join(format!("{name}.csv")))
            .map_err(|e| e.to_string())?;
        tables.insert(name, Arc::new(t));
    }
    attach_tables(&mut parsed, &tables).map_err(|e| e.to_string())?;
    let q = &parsed.query;
    let mut stream = AnswerStream::new(q, &db, &parsed.ranking).map_err(|e| e.to_string())?;
    if let Some(k) = k {
        stream = stream.with_limit(k);
    }
    if explain {
        let ex = stream.explain();
        eprintln!("algorithm={}", ex.algorithm);
        for (name, tuples, survivors) in &ex.relations {
            eprintln!("relation {name} tuples={tuples} survivors={survivors}");
        }
        for (parent, child, groups) in &ex.edges {
            eprintln!("edge {parent}->{child} groups={groups}");
        }
    }
    let head: Vec<usize> = parsed.query.head.clone();
    let mut out = csv::Writer::from_writer(io::stdout().lock());
    for a in stream {
        let mut row: Vec<String> = head.iter().map(|&v| a.values[v].to_string()).collect();
        row.push(a.weight.to_string());
        out.write_record(&row).map_err(|e| e.to_string())?;
        out.flush().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn check(seeds: Range<u64>) -> Result<bool, String> {
    let kinds = [
        SpecKind::Lex,
        SpecKind::LexTrio,
        SpecKind::Sum,
        SpecKind::Max,
        SpecKind::TupleWeight,
    ];
    let shapes = [Shape::Path, Shape::Star, Shape::Tree];
    let mut cases = 0;
    for seed in seeds {
        for shape in shapes {
            let atoms = 2 + (seed % 4) as usize;
            let tuples = 10 + (seed * 37 % 191) as usize;
            let (q, db) = random_instance(&InstanceConfig::new(shape, atoms, tuples, seed));
            for kind in kinds {
                let Some(spec) = random_spec(&q, kind, seed) else {
                    continue;
                };
                cases += 1;
                match check_instance(&q, &db, &spec) {
                    Ok(_) => {}
                    Err(e) if e.is_disagreement() => {
                        println!("seed {seed} ({shape:?}, {kind:?}): {e}");
                        let fails = |d: &Database| {
                            check_instance(&q, d, &spec).is_err_and(|e| e.is_disagreement())
                        };
                        let small = minimize(&db, fails);
                        println!("{}", dump_instance(&q, &small, &spec));
                        return Ok(false);
                    }
                    Err(e) => return Err(format!("seed {seed}: {e}")),
                }
            }
        }
    }
    println!("{cases} cases agree with the oracle");
    Ok(true)
}

fn bench_spec(q: &ConjunctiveQuery, spec: BenchSpec) -> RankingSpec {
    let all = 0..q.var_count();
    match spec {
        BenchSpec::Sum => RankingSpec::sum_of(all),
        BenchSpec::Max => RankingSpec::max_of(all),
        BenchSpec::Lex => RankingSpec::lex(all.collect()),
        BenchSpec::Tupleweight => RankingSpec::TupleWeightSum {
            direction: anyk::Direction::Asc,
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn bench(
    shape: BenchShape,
    atoms: usize,
    ns: &[usize],
    spec: BenchSpec,
    domain: Option<i64>,
    seed: u64,
    timeout: Duration,
    flush_answers: bool,
    out: Option<&Path>,
) -> Result<(), String> {
    if ns.is_empty() {
        return Err("--n is required".into());
    }
    if atoms < 2 {
        return Err("--atoms must be at least 2".into());
    }
    let opts = BenchOptions {
        timeout,
        flush_answers,
        ..BenchOptions::default()
    };
    let mut curve = TtkCurve::default();
    eprintln!("n,answers,anyk_tt1_ns,anyk_full_ns,joinfirst_ns");
    for &n in ns {
        let (q, db) = match shape {
            BenchShape::Path => uniform_path(atoms, n, domain.unwrap_or(n as i64).max(1), seed),
            BenchShape::Worst => worst_case_path(atoms, n, 256.min(n)),
        };
        let spec = bench_spec(&q, spec);
        verify_prefix(&q, &db, &spec, 100, 200_000).map_err(|e| e.to_string())?;
        let competitors: &[Competitor] = match spec {
            RankingSpec::Sum { .. } | RankingSpec::TupleWeightSum { .. } => {
                &[Competitor::AnyK, Competitor::JoinFirst]
            }
            _ => &[Competitor::AnyK],
        };
        let c = measure_ttk(&q, &db, &spec, n, competitors, &opts).map_err(|e| e.to_string())?;
        let ns_of = |d: Option<Duration>| d.map_or(String::new(), |d| d.as_nanos().to_string());
        let answers = c.series(Competitor::AnyK).last().map_or(0, |s| s.k);
        eprintln!(
            "{n},{answers},{},{},{}",
            ns_of(c.tt(Competitor::AnyK, 1)),
            ns_of(c.tt_full(Competitor::AnyK)),
            ns_of(c.tt_full(Competitor::JoinFirst)),
        );
        curve.samples.extend(c.samples);
    }
    match out {
        Some(path) => {
            let f = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            curve
                .write_csv(io::BufWriter::new(f))
                .map_err(|e| e.to_string())
        }
        None => curve
            .write_csv(io::stdout().lock())
            .map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            query,
            data,
            k,
            explain,
            weights,
        } => run(&query, &data, k, explain, weights.as_deref()).map(|_| true),
        Command::Analyze { query } => load_query(&query).map(|p| {
            print!("{}", analyze(&p.query, &p.ranking));
            true
        }),
        Command::Check { seed_range } => check(seed_range),
        Command::Bench {
            shape,
            atoms,
            n,
            spec,
            domain,
            seed,
            timeout_secs,
            flush_answers,
            out,
        } => parse_sizes(&n)
            .and_then(|ns| {
                bench(
                    shape,
                    atoms,
                    &ns,
                    spec,
                    domain,
                    seed,
                    Duration::from_secs(timeout_secs),
                    flush_answers,
                    out.as_deref(),
                )
            })
            .map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(2)
        }
    }
}
