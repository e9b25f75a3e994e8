use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use lipfilter::bench::{self, BenchConfig, FilterKind};
use lipfilter::filter_l0::LocalFilter0;
use lipfilter::filter_l1::{default_slack, Budgets, LocalFilter1};
use lipfilter::function::{Clip, ExprFunction, TableFunction};
use lipfilter::hard::{AnchorsFile, HardInstance, HardParams, DEFAULT_ANCHORS, DEFAULT_RETRY_CAP};
use lipfilter::oracles::{exact_l0_distance, exact_l1_distance, DEFAULT_COVER_CAP};
use lipfilter::privacy::{binary_search_mechanism, FilterMechanism, MechanismParams, NoiseSource};
use lipfilter::tester::{tolerant_test, TesterParams};
use lipfilter::{Error, FunctionOracle, Graph, Rational, Result, Seed, Vertex};

#[derive(Parser)]
#[command(name = "lipfilter", version, about = "Local Lipschitz filters, private mechanisms and a tolerant tester")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Query a local filter.
    Filter(FilterArgs),
    /// Answer queries through a differentially private mechanism.
    Mechanism(MechanismArgs),
    /// Run the tolerant tester on a hypercube function.
    Test(TestArgs),
    /// Lookups per query on hard instances.
    Bench(BenchArgs),
    /// Sample a hard instance.
    GenHard(GenHardArgs),
    /// Exact distances to the Lipschitz class.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct FunctionArgs {
    /// A function-table or anchors JSON file, or an expression over x1..xd.
    #[arg(long = "fn")]
    function: String,
    /// Hypergrid `n,d` for expressions.
    #[arg(long, conflicts_with = "cube")]
    domain: Option<String>,
    /// Hypercube dimension for expressions.
    #[arg(long)]
    cube: Option<usize>,
    /// Declared range `[0, r]` for expressions.
    #[arg(long)]
    r: Option<Rational>,
    /// Clip values into the declared range instead of failing on violations.
    #[arg(long)]
    clip: bool,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long, default_value = "l0")]
    kind: FilterKind,
    #[command(flatten)]
    function: FunctionArgs,
    /// ℓ1 filter slack.
    #[arg(long)]
    slack: Option<Rational>,
    /// 64 hex digits or a decimal integer; drawn from system entropy if omitted.
    #[arg(long)]
    seed: Option<String>,
    /// A vertex, or `all`; repeatable.
    #[arg(long, required = true)]
    query: Vec<String>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MechanismMode {
    Filter,
    BinarySearch,
}

#[derive(Args)]
struct MechanismArgs {
    #[arg(long, value_enum, default_value = "filter")]
    mode: MechanismMode,
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.001)]
    delta: f64,
    /// Range bound `r`, or `inf`.
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    noise_seed: Option<String>,
    /// Add no noise (test mode).
    #[arg(long)]
    no_noise: bool,
    #[arg(long, required = true)]
    query: Vec<String>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Filter seed.
    #[arg(long)]
    seed: Option<String>,
    /// Seed for pivots and sample points.
    #[arg(long)]
    sample_seed: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "l0")]
    kind: FilterKind,
    /// Range diameter, or an inclusive range `a..b` to sweep.
    #[arg(long)]
    r: String,
    /// Dimension, or an inclusive range `a..b` to sweep.
    #[arg(long)]
    d: String,
    #[arg(long, default_value_t = 64)]
    queries: usize,
    #[arg(long, default_value_t = 4)]
    anchors: usize,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum HardFormat {
    Table,
    Anchors,
}

#[derive(Args)]
struct GenHardArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    r: u64,
    #[arg(long)]
    b: u8,
    #[arg(long, default_value_t = DEFAULT_ANCHORS)]
    m: usize,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    enforce_separation: bool,
    #[arg(long, default_value_t = DEFAULT_RETRY_CAP)]
    retry_cap: usize,
    /// `table` needs d ≤ 20; defaults to `table` up to d = 12.
    #[arg(long, value_enum)]
    format: Option<HardFormat>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long)]
    l0: bool,
    #[arg(long)]
    l1: bool,
    #[arg(long, default_value_t = DEFAULT_COVER_CAP)]
    cap: usize,
}

fn parse_seed(text: Option<&str>) -> Result<Seed> {
    match text {
        None => Ok(Seed::from_entropy()),
        Some(s) => match s.parse::<u64>() {
            Ok(n) => Ok(Seed::from_u64(n)),
            Err(_) => s.parse(),
        },
    }
}

fn parse_domain(text: &str) -> Result<Graph> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Error::InvalidParam(format!("domain {text:?} is not of the form n,d"));
    let [n, d] = parts.as_slice() else { return Err(bad()) };
    Graph::hypergrid(n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?)
}

fn parse_span<T: std::str::FromStr + Copy + Into<u64> + TryFrom<u64>>(text: &str) -> Result<Vec<T>> {
    let bad = || Error::InvalidParam(format!("{text:?} is neither a number nor a range a..b"));
    let one = |s: &str| s.trim().parse::<T>().map_err(|_| bad());
    match text.split_once("..") {
        None => Ok(vec![one(text)?]),
        Some((a, b)) => {
            let (a, b): (u64, u64) = (one(a)?.into(), one(b.trim_start_matches('='))?.into());
            if a > b {
                return Err(bad());
            }
            (a..=b).map(|v| T::try_from(v).map_err(|_| bad())).collect()
        }
    }
}

/// A loaded function with its domain.
struct Loaded {
    graph: Graph,
    oracle: Box<dyn FunctionOracle>,
}

impl FunctionArgs {
    fn load(&self) -> Result<Loaded> {
        let path = Path::new(&self.function);
        let (graph, oracle): (Graph, Box<dyn FunctionOracle>) = if path.is_file() {
            let text = std::fs::read_to_string(path)?;
            let raw: Json = serde_json::from_str(&text)?;
            if raw.get("A").is_some() {
                let inst = HardInstance::from_file(&serde_json::from_value::<AnchorsFile>(raw)?)?;
                (inst.graph()?, Box::new(inst))
            } else {
                let (graph, table) = TableFunction::from_json(&text)?;
                (graph, Box::new(table))
            }
        } else {
            let graph = match (&self.domain, self.cube) {
                (Some(domain), None) => parse_domain(domain)?,
                (None, Some(d)) => Graph::hypercube(d)?,
                _ => {
                    return Err(Error::InvalidParam(format!(
                        "{:?} is not a file; an expression needs --domain n,d or --cube d",
                        self.function
                    )))
                }
            };
            let bounds = self.r.clone().map(|r| (Rational::zero(), r));
            let expr = ExprFunction::parse(&self.function, &graph, bounds)?;
            (graph, Box::new(expr))
        };
        if path.is_file() {
            if let Some(domain) = &self.domain {
                if parse_domain(domain)? != graph {
                    return Err(Error::InvalidParam(format!("--domain {domain} does not match the file's domain")));
                }
            }
        }
        let oracle: Box<dyn FunctionOracle> = if self.clip {
            let (lo, hi) = match (&self.r, oracle.bounds()) {
                (Some(r), _) => (Rational::zero(), r.clone()),
                (None, Some(b)) => b,
                (None, None) => return Err(Error::InvalidParam("--clip needs a range (--r)".into())),
            };
            Box::new(Clip::new(oracle, lo, hi)?)
        } else {
            oracle
        };
        Ok(Loaded { graph, oracle })
    }
}

fn queries(graph: &Graph, specs: &[String]) -> Result<Vec<Vertex>> {
    let mut out = Vec::new();
    for spec in specs {
        if spec == "all" {
            out.extend(graph.vertices());
        } else {
            out.push(graph.parse_vertex(spec)?);
        }
    }
    Ok(out)
}

fn run_filter(args: &FilterArgs) -> Result<Json> {
    let Loaded { graph, oracle } = args.function.load()?;
    let seed = parse_seed(args.seed.as_deref())?;
    let slack = args.slack.clone().unwrap_or_else(default_slack);
    let budgets = Budgets::default();
    let points = queries(&graph, &args.query)?;
    let mut results = Vec::with_capacity(points.len());
    let mut answer = |query: &dyn Fn(Vertex) -> Result<String>| -> Result<()> {
        for &x in &points {
            let before = oracle.lookups();
            let value = query(x)?;
            results.push(json!({ "query": graph.encode(x), "value": value, "lookups": oracle.lookups() - before }));
        }
        Ok(())
    };
    match args.kind {
        FilterKind::L0 => {
            let filter = LocalFilter0::new(&graph, &*oracle, &seed, budgets)?;
            answer(&|x| Ok(filter.query(x)?.to_string()))?;
        }
        FilterKind::L1 => {
            let filter = LocalFilter1::new(&graph, &*oracle, &slack, &seed, budgets)?;
            answer(&|x| Ok(filter.query(x)?.to_string()))?;
        }
    }
    let mut out = json!({
        "kind": args.kind.to_string(),
        "seed": seed.to_hex(),
        "results": results,
        "lookups": oracle.lookups(),
    });
    if args.kind == FilterKind::L1 {
        out["slack"] = json!(slack.to_string());
    }
    Ok(out)
}

fn run_mechanism(args: &MechanismArgs) -> Result<Json> {
    let Loaded { graph, oracle } = args.function.load()?;
    let seed = parse_seed(args.seed.as_deref())?;
    let noise_seed = parse_seed(args.noise_seed.as_deref())?;
    let mut noise = if args.no_noise { NoiseSource::disabled() } else { NoiseSource::new(&noise_seed) };
    let range = match args.range.as_deref() {
        None | Some("inf") => None,
        Some(r) => Some(r.parse::<Rational>()?),
    };
    let points = queries(&graph, &args.query)?;
    let budgets = Budgets::default();
    let mut results = Vec::new();
    match args.mode {
        MechanismMode::Filter => {
            let r = range
                .or_else(|| oracle.bounds().map(|(_, hi)| hi))
                .ok_or_else(|| Error::InvalidParam("the filter mechanism needs --range".into()))?;
            let mech = FilterMechanism::new(&graph, &*oracle, r, args.eps, args.delta, &seed, budgets)?;
            for &x in &points {
                let out = mech.query(x, &mut noise)?;
                results.push(json!({ "query": graph.encode(x), "value": out.value, "lookups": out.lookups, "iterations": out.iterations }));
            }
        }
        MechanismMode::BinarySearch => {
            let params = MechanismParams::new(&graph, range, args.eps, args.delta)?;
            for &x in &points {
                let out = binary_search_mechanism(&graph, &*oracle, x, &params, &seed, &mut noise, budgets)?;
                results.push(json!({ "query": graph.encode(x), "value": out.value, "lookups": out.lookups, "iterations": out.iterations }));
            }
        }
    }
    let mut out = json!({ "seed": seed.to_hex(), "results": results });
    if !args.no_noise {
        out["noise_seed"] = json!(noise_seed.to_hex());
    }
    Ok(out)
}

fn run_test(args: &TestArgs) -> Result<Json> {
    let Loaded { graph, oracle } = args.function.load()?;
    let Some(d) = (match graph {
        Graph::Hypercube { d } => Some(d),
        _ => None,
    }) else {
        return Err(Error::InvalidParam("the tester needs a hypercube domain".into()));
    };
    let mut params = TesterParams::new(d, args.eps)?;
    if let Some(m) = args.samples {
        params = params.with_samples(m)?;
    }
    if let Some(reps) = args.reps {
        params = params.with_reps(reps)?;
    }
    let seed = parse_seed(args.seed.as_deref())?;
    let sample_seed = parse_seed(args.sample_seed.as_deref())?;
    let report = tolerant_test(&graph, &*oracle, &params, &mut sample_seed.rng("tester"), &seed)?;
    let runs: Vec<Json> = report
        .runs
        .iter()
        .map(|run| {
            json!({
                "decision": if run.accept { "accept" } else { "reject" },
                "pivot": graph.encode(run.pivot),
                "interval": [run.interval.0.to_string(), run.interval.1.to_string()],
                "omega_hat": run.omega_hat,
                "lookups": run.lookups,
                "failure": run.failure,
            })
        })
        .collect();
    Ok(json!({
        "decision": if report.accept { "accept" } else { "reject" },
        "seed": seed.to_hex(),
        "sample_seed": sample_seed.to_hex(),
        "threshold": params.threshold(),
        "half_width": params.half_width.to_string(),
        "runs": runs,
        "lookups": report.lookups(),
    }))
}

fn run_bench(args: &BenchArgs) -> Result<Json> {
    let seed = parse_seed(args.seed.as_deref())?;
    let config = BenchConfig { anchors: args.anchors, queries: args.queries, ..BenchConfig::new(args.kind, seed.clone()) };
    let rs: Vec<u64> = parse_span(&args.r)?;
    let ds: Vec<u64> = parse_span(&args.d)?;
    let rows = match (rs.as_slice(), ds.as_slice()) {
        ([r], ds) => {
            let ds: Vec<usize> = ds.iter().map(|&d| d as usize).collect();
            bench::sweep_d(*r, &ds, &config)?
        }
        (rs, [d]) => bench::sweep_r(*d as usize, rs, &config)?,
        _ => return Err(Error::InvalidParam("sweep either --r or --d, not both".into())),
    };
    Ok(json!({
        "kind": args.kind.to_string(),
        "seed": seed.to_hex(),
        "queries": args.queries,
        "anchors": args.anchors,
        "rows": rows,
        "loglog_slope": bench::loglog_slope(&rows),
    }))
}

fn run_gen_hard(args: &GenHardArgs) -> Result<Json> {
    let seed = parse_seed(args.seed.as_deref())?;
    let params = HardParams {
        m: args.m,
        enforce_separation: args.enforce_separation,
        retry_cap: args.retry_cap,
        ..HardParams::new(args.d, args.r, args.b)
    };
    let inst = HardInstance::sample(params, &mut seed.rng("hard"))?;
    let format = args.format.unwrap_or(if args.d <= 12 { HardFormat::Table } else { HardFormat::Anchors });
    let body = match format {
        HardFormat::Anchors => serde_json::to_value(inst.to_file())?,
        HardFormat::Table => {
            if args.d > 20 {
                return Err(Error::SizeExceeded(format!("a table for d = {} is too large; use --format anchors", args.d)));
            }
            let graph = inst.graph()?;
            serde_json::to_value(TableFunction::from_oracle(&graph, &inst)?.to_file(&graph))?
        }
    };
    Ok(json!({ "seed": seed.to_hex(), "separated": inst.is_separated(), "function": body }))
}

fn run_oracle(args: &OracleArgs) -> Result<Json> {
    let Loaded { graph, oracle } = args.function.load()?;
    let (want0, want1) = if args.l0 || args.l1 { (args.l0, args.l1) } else { (true, true) };
    let mut out = json!({});
    if want0 {
        let (dist, cover) = exact_l0_distance(&graph, &*oracle, args.cap)?;
        out["l0"] = json!(dist.to_string());
        out["cover"] = json!(cover.iter().map(|v| graph.encode(*v)).collect::<Vec<_>>());
    }
    if want1 {
        let (dist, h) = exact_l1_distance(&graph, &*oracle)?;
        out["l1"] = json!(dist.to_string());
        out["witness"] = json!(h.iter().map(|q| q.to_string()).collect::<Vec<_>>());
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Filter(args) => run_filter(args),
        Command::Mechanism(args) => run_mechanism(args),
        Command::Test(args) => run_test(args),
        Command::Bench(args) => run_bench(args),
        Command::GenHard(args) => run_gen_hard(args),
        Command::Oracle(args) => run_oracle(args),
    };
    match result {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", json!({ "error": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
