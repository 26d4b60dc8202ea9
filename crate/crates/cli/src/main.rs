use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use chase_escape::analytics::exact_distribution_w;
use chase_escape::graph::Graph;
use chase_escape::harness::{
    estimate, record_engine, write_trajectory_csv, ConfigFile, Engine, Estimator, ExactReport, ExperimentConfig,
};
use chase_escape::verify::{run_suite, Level};
use chase_escape::{InitMode, Params64, StreamRng};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "chase-escape", version, about = "Chase-escape with conversions on complete graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record one trajectory as CSV (or JSON).
    Simulate(ExperimentArgs),
    /// Run a Monte Carlo experiment and print its summary as JSON.
    Estimate(ExperimentArgs),
    /// Print the exact law of W from the dynamic program.
    Exact(ExperimentArgs),
    /// Run the verification suite; exits with 1 if any criterion fails.
    Verify {
        #[arg(long, default_value = "fast")]
        level: Level,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Number of white vertices at time zero.
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value = "standard")]
    init: InitMode,
    #[arg(long, default_value = "chain")]
    engine: Engine,
    /// Defaults to 1 for `simulate` and 1000 for `estimate`.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long, default_value = "extinction-prob")]
    estimator: Estimator,
    /// Edge list for the graph engine, one `u v` pair per line.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// JSON file whose fields take precedence over the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Everything a subcommand needs after flags and config are merged.
struct Resolved {
    params: Params64,
    engine: Engine,
    trials: Option<u64>,
    seed: u64,
    parallelism: usize,
    estimator: Estimator,
    graph_file: Option<PathBuf>,
}

fn resolve(args: &ExperimentArgs) -> chase_escape::Result<Resolved> {
    let file = args.config.as_ref().map(ConfigFile::load).transpose()?.unwrap_or_default();
    let p = file.params.unwrap_or_default();
    let params = Params64::new(
        p.n.unwrap_or(args.n),
        p.lambda.unwrap_or(args.lambda),
        p.alpha.unwrap_or(args.alpha),
        p.init_mode.unwrap_or(args.init),
    )?;
    Ok(Resolved {
        params,
        engine: file.engine.unwrap_or(args.engine),
        trials: file.trials.or(args.trials),
        seed: file.seed.unwrap_or(args.seed),
        parallelism: file.parallelism.unwrap_or(args.parallelism),
        estimator: file.estimator.unwrap_or(args.estimator),
        graph_file: file.graph_file.map(PathBuf::from).or_else(|| args.graph_file.clone()),
    })
}

fn load_graph(r: &Resolved) -> chase_escape::Result<Option<Graph>> {
    r.graph_file.as_ref().map(Graph::load).transpose()
}

fn open_output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(path: Option<&PathBuf>, text: &str) -> chase_escape::Result<()> {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn usage(msg: impl Into<String>) -> chase_escape::Error {
    chase_escape::Error::InvalidInput(msg.into())
}

fn simulate(args: &ExperimentArgs) -> chase_escape::Result<()> {
    let r = resolve(args)?;
    if r.trials.is_some_and(|t| t != 1) {
        return Err(usage("simulate records exactly one trajectory; use --trials 1 or omit it"));
    }
    let graph = load_graph(&r)?;
    if graph.is_some() && r.engine != Engine::Graph {
        return Err(usage("--graph-file requires --engine graph"));
    }
    let traj = record_engine(r.engine, &r.params, graph.as_ref(), &mut StreamRng::for_trial(r.seed, 0))?;
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = open_output(args.output.as_ref())?;
            write_trajectory_csv(&traj, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Format::Json => emit(args.output.as_ref(), &serde_json::to_string_pretty(&traj)?),
    }
}

fn run_estimate(args: &ExperimentArgs) -> chase_escape::Result<()> {
    if args.format == Some(Format::Csv) {
        return Err(usage("estimate only emits JSON"));
    }
    let r = resolve(args)?;
    let mut config = ExperimentConfig::new(r.params.clone(), r.trials.unwrap_or(1000), r.seed, r.estimator, r.engine)?
        .with_parallelism(r.parallelism)?;
    if let Some(g) = load_graph(&r)? {
        config = config.with_graph(g)?;
    }
    emit(args.output.as_ref(), &estimate(&config)?.to_json()?)
}

fn exact(args: &ExperimentArgs) -> chase_escape::Result<()> {
    let r = resolve(args)?;
    let report = ExactReport::new(&r.params, exact_distribution_w(&r.params)?);
    match args.format.unwrap_or(Format::Json) {
        Format::Json => emit(args.output.as_ref(), &report.to_json()?),
        Format::Csv => {
            let mut text = String::from("k,probability\n");
            for (k, p) in report.distribution.iter().enumerate() {
                text.push_str(&format!("{k},{p}\n"));
            }
            emit(args.output.as_ref(), &text)
        }
    }
}

fn verify(level: Level, output: Option<&PathBuf>) -> chase_escape::Result<bool> {
    let report = run_suite(level);
    for c in &report.criteria {
        eprintln!("{}", c.summary_line());
    }
    emit(output, &serde_json::to_string_pretty(&report)?)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a).map(|()| true),
        Command::Estimate(a) => run_estimate(a).map(|()| true),
        Command::Exact(a) => exact(a).map(|()| true),
        Command::Verify { level, output } => verify(*level, output.as_ref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
