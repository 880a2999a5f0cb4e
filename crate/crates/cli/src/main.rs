//! `adjustkit` command-line interface.
//!
//! Exit codes: 0 on success, 2 for bad input (usage, schema, graph, size),
//! 3 for numerical failure (singular covariance, every subset singular).

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use adjustkit::analysis::{StructureReport, DEFAULT_MAX_BLOCK};
use adjustkit::dag::{catalog_graph, CATALOG};
use adjustkit::sim::{run_benchmark, sample_model, BenchmarkConfig, ModelSpec};
use adjustkit::{
    criterion_table_over, estimate_ate, select, CandidateOptions, CriterionConfig, Dag, Dataset, Error,
    Hints, Method, Node, SelectorConfig, SubsetId, Variant,
};

const THREADS_ENV: &str = "ADJUSTKIT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "adjustkit", version, about = "Exhaustive search for sufficient adjustment sets")]
struct Cli {
    /// Worker threads (falls back to ADJUSTKIT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score every predictor subset and select the sufficient ones.
    Select(SelectArgs),
    /// Exact adjustment sets and structure of a DAG.
    Oracle(OracleArgs),
    /// Run the simulation benchmark.
    Simulate(SimulateArgs),
    /// Write one simulated dataset as CSV.
    Generate(GenerateArgs),
    /// Matching estimate of the average treatment effect.
    Ate(AteArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Mn,
    Gc,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Mn => Variant::Normal,
            VariantArg::Gc => Variant::Copula,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Sir,
    Save,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sir => Method::Sir,
            MethodArg::Save => Method::Save,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ArmArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Both,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// CSV with columns T, Y, X1..Xp.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "mn")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "both")]
    arm: ArmArg,
    #[arg(long, value_enum, default_value = "sir")]
    method_y: MethodArg,
    #[arg(long, value_enum, default_value = "sir")]
    method_t: MethodArg,
    /// Slices for a continuous outcome.
    #[arg(long, default_value_t = 5)]
    slices: usize,
    /// Optional ridge added to covariances before inversion.
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long, default_value_t = adjustkit::selection::DEFAULT_C0)]
    c0: f64,
    /// Ratio shift; defaults to 0.2 n^(-1/2) log n.
    #[arg(long)]
    cn: Option<f64>,
    /// JSON file with known_forks, pure_colliders, pure_noncolliders.
    #[arg(long)]
    hints: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_BLOCK)]
    max_block: usize,
    /// Directory for the per-arm outputs.
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Edge-list file.
    #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
    dag: Option<PathBuf>,
    /// Built-in graph name.
    #[arg(long)]
    graph: Option<String>,
    /// Also test whether Y and T are d-separated by these indices (e.g. `1,5`).
    #[arg(long)]
    query: Option<String>,
    /// List every adjustment set.
    #[arg(long)]
    list: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_BLOCK)]
    max_block: usize,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    models: Vec<u8>,
    #[arg(long = "n", value_delimiter = ',', default_value = "400,800")]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Variants to run; repeat or comma-separate.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mn,gc")]
    variant: Vec<VariantArg>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_BLOCK)]
    max_block: usize,
    /// CSV destination; the rendered table always goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    model: u8,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replication index (RNG stream).
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct AteArgs {
    #[arg(long)]
    input: PathBuf,
    /// Adjustment set for imputing Y(0), e.g. `2,3`; empty for none.
    #[arg(long, default_value = "")]
    a0: String,
    /// Adjustment set for imputing Y(1).
    #[arg(long, default_value = "")]
    a1: String,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Lib(Error::AllSingular)
            | Failure::Lib(Error::SingularCovariance { .. })
            | Failure::Lib(Error::SingularBlock { .. }) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Usage(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Ate(a) => cmd_ate(a),
    }
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_select(a: SelectArgs) -> CliResult<()> {
    let data = Dataset::from_csv_path(&a.input)?;
    let p = data.p();
    let selector = SelectorConfig::new(
        a.c0,
        a.cn.unwrap_or_else(|| adjustkit::selection::default_cn(data.n())),
    )?;
    if a.slices < 2 {
        return Err(Failure::Usage("--slices must be at least 2".into()));
    }
    let config = CriterionConfig {
        method_y: a.method_y.into(),
        method_t: a.method_t.into(),
        candidate: CandidateOptions {
            slices: a.slices,
            ridge: a.ridge,
        },
    };
    let universe = match &a.hints {
        Some(path) => {
            let hints: Hints = serde_json::from_str(&fs::read_to_string(path)?)?;
            hints.universe(p)?
        }
        None => adjustkit::subset::enumerate_subsets(p)?.collect(),
    };
    let arms: &[u8] = match a.arm {
        ArmArg::Zero => &[0],
        ArmArg::One => &[1],
        ArmArg::Both => &[0, 1],
    };
    fs::create_dir_all(&a.output)?;
    let variant: Variant = a.variant.into();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for &arm in arms {
        let table = criterion_table_over(&data, arm, variant, &config, &universe)?;
        let result = select(&table, &selector)?;
        let report = StructureReport::new(&result.selected, a.max_block);

        let json = serde_json::json!({
            "selection": result.document(10),
            "report": report.document(),
        });
        let mut w = create(&a.output.join(format!("selection_t{arm}.json")))?;
        serde_json::to_writer_pretty(&mut w, &json)?;
        writeln!(w)?;
        w.flush()?;
        result.write_table_csv(create(&a.output.join(format!("criterion_t{arm}.csv")))?)?;
        result.write_scree_csv(create(&a.output.join(format!("scree_t{arm}.csv")))?)?;

        writeln!(
            out,
            "arm {arm}: {} of {} subsets selected (tau = {}, cn = {:.4})",
            result.selected.len(),
            result.order.len(),
            result.tau,
            selector.cn
        )?;
        let minimal: Vec<String> = report.locally_minimal.iter().map(|s| s.to_string()).collect();
        writeln!(out, "  locally minimal: {}", minimal.join(" "))?;
        writeln!(
            out,
            "  colliders: {}  refined: {}",
            report.colliders, report.refined_colliders
        )?;
        if table.singular > 0 {
            writeln!(out, "  {} subsets had singular blocks", table.singular)?;
        }
    }
    Ok(())
}

fn parse_indices(text: &str, p: usize) -> CliResult<SubsetId> {
    let mut idx = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let i: usize = part
            .parse()
            .map_err(|_| Failure::Usage(format!("`{part}` is not a predictor index")))?;
        idx.push(i);
    }
    SubsetId::from_indices(&idx, p).map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_oracle(a: OracleArgs) -> CliResult<()> {
    let dag = match (&a.dag, &a.graph) {
        (Some(path), _) => Dag::from_path(path)?,
        (None, Some(name)) => catalog_graph(name).map_err(|_| {
            let names: Vec<&str> = CATALOG.iter().map(|(n, _)| *n).collect();
            Failure::Usage(format!("unknown graph `{name}`; built-in graphs: {}", names.join(", ")))
        })?,
        (None, None) => unreachable!("clap requires one of --dag, --graph"),
    };
    let collection = dag.true_collection()?;
    let report = StructureReport::new(&collection, a.max_block);
    let boundary_y = dag.markov_boundary(Node::Y)?;
    let boundary_t = dag.markov_boundary(Node::T)?;
    let query = a
        .query
        .as_deref()
        .map(|q| parse_indices(q, dag.p()))
        .transpose()?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    if a.json {
        let mut doc = serde_json::json!({
            "report": report.document(),
            "markov_boundary_y": boundary_y.indices(),
            "markov_boundary_t": boundary_t.indices(),
        });
        if a.list {
            let sets: Vec<Vec<usize>> = collection.iter().map(|s| s.indices()).collect();
            doc["adjustment_sets"] = serde_json::json!(sets);
        }
        if let Some(z) = query {
            doc["query"] = serde_json::json!({
                "set": z.indices(),
                "d_separated": dag.d_separated(Node::Y, Node::T, z),
            });
        }
        serde_json::to_writer_pretty(&mut out, &doc)?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(out, "p = {}, {} adjustment sets", dag.p(), collection.len())?;
    if a.list || dag.p() <= 4 {
        let mut sets: Vec<SubsetId> = collection.iter().collect();
        sets.sort_by_key(|s| (s.len(), s.mask()));
        let text: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        writeln!(out, "adjustment sets: {}", text.join(" "))?;
    }
    let minimal: Vec<String> = report.locally_minimal.iter().map(|s| s.to_string()).collect();
    writeln!(out, "locally minimal: {}", minimal.join(" "))?;
    match report.unique_minimal {
        Some(u) => writeln!(out, "unique minimal: {u}")?,
        None => writeln!(out, "unique minimal: none")?,
    }
    writeln!(out, "markov boundary of Y: {boundary_y}")?;
    writeln!(out, "markov boundary of T: {boundary_t}")?;
    writeln!(out, "colliders: {}", report.colliders)?;
    writeln!(out, "refined colliders: {}", report.refined_colliders)?;
    writeln!(out, "non-colliders: {}", report.noncolliders)?;
    if let Some(z) = query {
        writeln!(out, "Y and T d-separated by {z}: {}", dag.d_separated(Node::Y, Node::T, z))?;
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let config = BenchmarkConfig {
        models: a.models,
        ns: a.ns,
        variants: a.variant.into_iter().map(Variant::from).collect(),
        reps: a.reps,
        seed: a.seed,
        p: a.p,
        max_block: a.max_block,
    };
    let results = run_benchmark(&config)?;
    if let Some(path) = &a.output {
        results.write_csv(create(path)?)?;
    }
    print!("{}", results.render_table());
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> CliResult<()> {
    let spec = ModelSpec::new(a.model, a.n, a.seed)?.with_p(a.p)?.with_stream(a.rep);
    let sample = sample_model(&spec)?;
    sample.data.write_csv(create(&a.output)?)?;
    Ok(())
}

fn cmd_ate(a: AteArgs) -> CliResult<()> {
    let data = Dataset::from_csv_path(&a.input)?;
    let a0 = parse_indices(&a.a0, data.p())?;
    let a1 = parse_indices(&a.a1, data.p())?;
    let ate = estimate_ate(&data, a0, a1)?;
    println!("ate = {ate:.6}  (A0 = {a0}, A1 = {a1})");
    Ok(())
}
