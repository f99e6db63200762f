use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hybridqe_core::data::{read_vectors, Metric};
use hybridqe_core::exec::{lower, ExecMode, ExecOptions};
use hybridqe_core::index::HnswParams;
use hybridqe_core::plan::optimize;
use hybridqe_core::sql::plan_sql;
use hybridqe_core::workload::bench::{
    bind, default_k, format_table, run_bench, write_csv, BenchConfig, RANGE_TARGET, SELECTIVITIES,
};
use hybridqe_core::workload::{
    calibrate_threshold, example_catalog, example_params, from_vectors, generate, items_schema, load, oracle,
    queries_schema, Dataset, DatasetConfig, QueryParams, Template,
};
use hybridqe_core::{Catalog, Error};

/// Exit code for configuration and input errors.
const EXIT_CONFIG: u8 = 2;
/// Exit code when a measured value misses a requested floor.
const EXIT_THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(name = "hybridqe", version, about = "Hybrid relational/vector query engine workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it to a directory.
    Gen {
        #[command(flatten)]
        data: DataArgs,
        /// Output directory.
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Run templates and report latency, recall and operator counters.
    Bench(BenchArgs),
    /// Print a template's logical plan before and after rewriting.
    Explain(ExplainArgs),
    /// Print the brute-force answer of a template as CSV.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Target table rows.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Query table rows.
    #[arg(long, default_value_t = 100)]
    nq: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Distinct values of the category column.
    #[arg(long, default_value_t = 10)]
    categories: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Load tables written by `gen` instead of generating.
    #[arg(long, conflicts_with = "vectors")]
    data: Option<PathBuf>,
    /// Binary vector file to use as item embeddings.
    #[arg(long, requires = "query_vectors")]
    vectors: Option<PathBuf>,
    /// Binary vector file to use as query embeddings.
    #[arg(long, requires = "vectors")]
    query_vectors: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ann,
    Exact,
    Unoptimized,
}

impl From<Mode> for ExecMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Ann => ExecMode::Ann,
            Mode::Exact => ExecMode::Exact,
            Mode::Unoptimized => ExecMode::Unoptimized,
        }
    }
}

fn parse_template(s: &str) -> std::result::Result<Template, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Template to run; all six when omitted.
    #[arg(long, value_parser = parse_template)]
    template: Option<Template>,
    /// K for top-k templates (default 50 for q1/q4, 10 for q5/q6).
    #[arg(long)]
    k: Option<usize>,
    /// Range threshold; calibrated to ~120 in-range rows when omitted.
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated selectivities.
    #[arg(long, value_delimiter = ',')]
    selectivity: Vec<f64>,
    #[arg(long, value_enum, default_value = "ann")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "on")]
    rewrites: Switch,
    #[arg(long, value_enum, default_value = "on")]
    feedback: Switch,
    #[arg(long, default_value_t = 8)]
    threads: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Query vectors per single-query template.
    #[arg(long, default_value_t = 20)]
    queries: usize,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    ef_construction: usize,
    #[arg(long, default_value_t = 48)]
    ef_search: usize,
    /// Consecutive out-of-range probes before a range scan stops.
    #[arg(long)]
    patience: Option<usize>,
    /// CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 3 if any row's recall is below this value.
    #[arg(long)]
    min_recall: Option<f64>,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long, value_parser = parse_template, required_unless_present = "sql")]
    template: Option<Template>,
    /// Explain this SQL (over the example schemas) instead of a template.
    #[arg(long)]
    sql: Option<String>,
    /// Use the benchmark form of the template (over items/queries).
    #[arg(long)]
    bench: bool,
    #[arg(long, value_enum, default_value = "on")]
    rewrites: Switch,
    /// Also lower the plan and print its pipelines (generates data).
    #[arg(long)]
    physical: bool,
    #[arg(long, value_enum, default_value = "ann")]
    mode: Mode,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_template)]
    template: Template,
    /// Query row for single-query templates.
    #[arg(long, default_value_t = 0)]
    query: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    selectivity: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dataset(args: &DataArgs) -> Result<Dataset> {
    let config = DatasetConfig {
        n: args.n,
        nq: args.nq,
        dim: args.dim,
        categories: args.categories,
        seed: args.seed,
    };
    if let Some(dir) = &args.data {
        return load(dir, &config).with_context(|| format!("loading {}", dir.display()));
    }
    if let (Some(items), Some(queries)) = (&args.vectors, &args.query_vectors) {
        let (dim, iv) = read_vectors(items).with_context(|| format!("reading {}", items.display()))?;
        let (qdim, qv) = read_vectors(queries).with_context(|| format!("reading {}", queries.display()))?;
        if dim != qdim {
            return Err(Error::Dimension {
                expected: dim,
                actual: qdim,
            }
            .into());
        }
        return Ok(from_vectors(&config, dim, &iv, &qv)?);
    }
    Ok(generate(&config)?)
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_gen(data: &DataArgs, out: &PathBuf) -> Result<u8> {
    let d = dataset(data)?;
    for path in d.write_files(out)? {
        println!("{}", path.display());
    }
    Ok(0)
}

fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let mode: ExecMode = a.mode.into();
    let config = BenchConfig {
        templates: a.template.map_or_else(|| Template::ALL.to_vec(), |t| vec![t]),
        selectivities: if a.selectivity.is_empty() {
            SELECTIVITIES.to_vec()
        } else {
            a.selectivity.clone()
        },
        mode,
        rewrites: a.rewrites.on(),
        feedback: a.feedback.on(),
        k: a.k,
        threshold: a.threshold,
        threads: a.threads,
        reps: a.reps,
        queries: a.queries,
        index: HnswParams {
            m: a.m,
            ef_construction: a.ef_construction,
            ef_search: a.ef_search,
            ..HnswParams::default()
        },
        patience: a.patience,
    };
    config.validate()?;
    let data = dataset(&a.data)?;
    let index = (mode == ExecMode::Ann).then_some(config.index);
    let catalog = data.catalog(index)?;
    let threshold = match config.threshold {
        Some(t) => t,
        None => {
            let t = calibrate_threshold(&data, RANGE_TARGET, data.queries.row_count())?;
            eprintln!("threshold {t:.6} (calibrated to ~{RANGE_TARGET} rows in range)");
            t
        }
    };
    let config = BenchConfig {
        threshold: Some(threshold),
        ..config
    };
    let rows = run_bench(&config, &data, &catalog)?;
    print!("{}", format_table(&rows));
    if let Some(path) = &a.out {
        write_csv(File::create(path).with_context(|| format!("creating {}", path.display()))?, &rows)?;
    }
    if let Some(floor) = a.min_recall {
        let misses: Vec<_> = rows.iter().filter(|r| r.recall < floor).collect();
        if !misses.is_empty() {
            for r in misses {
                eprintln!(
                    "recall {:.4} below {floor} for {} at selectivity {}",
                    r.recall, r.template, r.selectivity
                );
            }
            return Ok(EXIT_THRESHOLD);
        }
    }
    Ok(0)
}

fn bench_catalog(dim: usize) -> Result<Catalog> {
    let mut c = Catalog::new();
    c.register_schema("items", items_schema(dim));
    c.register_schema("queries", queries_schema(dim));
    c.set_metric("items", Metric::L2)?;
    c.set_metric("queries", Metric::L2)?;
    Ok(c)
}

fn cmd_explain(a: &ExplainArgs) -> Result<u8> {
    let dim = a.data.dim;
    let params = QueryParams {
        query: 0,
        k: a.template.map_or(10, default_k),
        threshold: 0.5,
        price_cut: f64::MAX,
    };
    let (plan, catalog, data) = if a.bench || a.physical {
        let Some(t) = a.template else {
            bail!(Error::Config("--bench and --physical need --template".into()));
        };
        let data = if a.physical { Some(dataset(&a.data)?) } else { None };
        let catalog = match &data {
            Some(d) => d.catalog((a.physical && matches!(a.mode, Mode::Ann)).then(HnswParams::default))?,
            None => bench_catalog(dim)?,
        };
        let params = match &data {
            Some(d) => bind(t, d, &params),
            None => bind_without_data(t, dim, &params),
        };
        (plan_sql(t.bench_sql(), &catalog, &params)?, catalog, data)
    } else {
        let catalog = example_catalog(dim);
        let sql = match (&a.sql, a.template) {
            (Some(s), _) => s.as_str(),
            (None, Some(t)) => t.example_sql(),
            (None, None) => unreachable!("clap requires one"),
        };
        (plan_sql(sql, &catalog, &example_params(dim))?, catalog, None)
    };
    println!("-- logical\n{}", plan.explain());
    let plan = if a.rewrites.on() {
        let rewritten = optimize(&plan, &catalog)?;
        println!("-- rewritten\n{}", rewritten.explain());
        rewritten
    } else {
        plan
    };
    if data.is_some() {
        let options = ExecOptions::new(a.mode.into());
        println!("-- pipelines\n{}", lower(&plan, &catalog, &options)?.describe_pipelines());
    }
    Ok(0)
}

fn bind_without_data(t: Template, dim: usize, p: &QueryParams) -> hybridqe_core::sql::Params {
    use hybridqe_core::plan::ParamValue;
    use hybridqe_core::ScalarValue;
    let mut params = hybridqe_core::sql::Params::new();
    params.insert("price_cut".into(), ParamValue::Scalar(ScalarValue::Float(p.price_cut)));
    params.insert("threshold".into(), ParamValue::Scalar(ScalarValue::Float(p.threshold)));
    params.insert("k".into(), ParamValue::Scalar(ScalarValue::Int(p.k as i64)));
    if !t.is_join() {
        params.insert("query_embedding".into(), ParamValue::vector(vec![0.0; dim]));
    }
    params
}

fn columns(t: Template) -> &'static [&'static str] {
    match t {
        Template::Q1 | Template::Q2 => &["id"],
        Template::Q3 | Template::Q4 => &["qid", "tid"],
        Template::Q5 => &["qid", "category"],
        Template::Q6 => &["qid", "category", "tid"],
    }
}

fn cmd_oracle(a: &OracleArgs) -> Result<u8> {
    let data = dataset(&a.data)?;
    let threshold = match a.threshold {
        Some(t) => t,
        None => calibrate_threshold(&data, RANGE_TARGET, data.queries.row_count())?,
    };
    let p = QueryParams {
        query: a.query,
        k: a.k.unwrap_or_else(|| default_k(a.template)),
        threshold,
        price_cut: data.price_cut(a.selectivity)?,
    };
    let rows = oracle(a.template, &data, &p)?;
    let mut out = output(a.out.as_ref())?;
    writeln!(out, "{}", columns(a.template).join(","))?;
    for r in rows {
        let cells: Vec<String> = r.iter().map(ToString::to_string).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(0)
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<Error>(),
            Some(
                Error::Config(_)
                    | Error::Parse { .. }
                    | Error::Plan(_)
                    | Error::Unsupported(_)
                    | Error::Type(_)
                    | Error::Dimension { .. }
                    | Error::Lowering { .. }
            )
        )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen { data, out } => cmd_gen(data, out),
        Command::Bench(a) => cmd_bench(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { EXIT_CONFIG } else { 1 })
        }
    }
}
