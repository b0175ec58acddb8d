use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use citkit::coverage::measure;
use citkit::generator::{generate_greedy_with, generate_pso, PsoConfig, DEFAULT_CANDIDATE_ATTEMPTS};
use citkit::plan::{load_scripts, multiplex};
use citkit::runner::{run, serialize_report, ReportFormat, RunOptions, RunReport};
use citkit::synth::{variant_ids, write_stub_scripts, FaultProfile};
use citkit::{attribution_chain, parse_model, Model, TestSuite};
use clap::{Parser, Subcommand, ValueEnum};

/// Exit status for usage, input and I/O errors.
const USAGE_ERROR: u8 = 3;

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "citkit", version, about = "Combinatorial interaction testing pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a t-way covering suite for a model.
    Generate(GenerateArgs),
    /// Measure s-way coverage of an existing suite.
    Measure(MeasureArgs),
    /// Run every suite row against every variant script.
    Run(RunArgs),
    /// Attribute failures to suspicious tuples across strengths.
    Analyze(AnalyzeArgs),
    /// Write stub variant scripts that fail on planted tuples.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Greedy,
    Pso,
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Model file (text or JSON).
    #[arg(long)]
    model: PathBuf,
    /// Interaction strength.
    #[arg(short = 't', long)]
    strength: usize,
    #[arg(long, value_enum, default_value = "pso")]
    generator: Generator,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    swarm_size: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    inertia_start: Option<f64>,
    #[arg(long)]
    inertia_end: Option<f64>,
    #[arg(long)]
    cognitive: Option<f64>,
    #[arg(long)]
    social: Option<f64>,
    /// Random candidates scored per row.
    #[arg(long)]
    candidate_attempts: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct MeasureArgs {
    #[arg(long)]
    model: PathBuf,
    /// Suite file (CSV or JSON).
    #[arg(long)]
    suite: PathBuf,
    /// Strengths to measure.
    #[arg(short = 's', long = "strength", value_delimiter = ',', required = true)]
    strengths: Vec<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    suite: PathBuf,
    /// Script manifest (JSON) or directory of executables.
    #[arg(long)]
    scripts: PathBuf,
    #[arg(long, env = "CITKIT_PARALLELISM", default_value_t = 1)]
    parallelism: usize,
    /// Default per-entry timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "tap,json,xunit")]
    format: Vec<ReportFormat>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Parent of per-entry scratch directories; defaults to OUT/work.
    #[arg(long)]
    work_dir: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Run report per strength, as STRENGTH=PATH.
    #[arg(long = "report", value_parser = parse_report_arg, required = true)]
    reports: Vec<(usize, PathBuf)>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long)]
    model: PathBuf,
    /// Fault profile (JSON list of planted tuples); no faults if omitted.
    #[arg(long)]
    faults: Option<PathBuf>,
    /// Number of variant scripts.
    #[arg(long, default_value_t = 192)]
    variants: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_report_arg(arg: &str) -> std::result::Result<(usize, PathBuf), String> {
    let (t, path) = arg.split_once('=').ok_or("expected STRENGTH=PATH")?;
    let t = t.parse().map_err(|_| format!("invalid strength `{t}`"))?;
    Ok((t, PathBuf::from(path)))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

fn load_model(path: &Path) -> Result<Model> {
    parse_model(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_suite(path: &Path, model: &Model) -> Result<TestSuite> {
    TestSuite::parse(&read(path)?, model).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn generate(args: GenerateArgs) -> Result<u8> {
    let model = load_model(&args.model)?;
    model.check_strength(args.strength)?;
    let defaults = PsoConfig::with_seed(args.seed);
    let attempts = args.candidate_attempts.unwrap_or(DEFAULT_CANDIDATE_ATTEMPTS);
    let suite = match args.generator {
        Generator::Greedy => generate_greedy_with(&model, args.strength, args.seed, attempts)?,
        Generator::Pso => {
            let config = PsoConfig {
                swarm_size: args.swarm_size.unwrap_or(defaults.swarm_size),
                iterations: args.iterations.unwrap_or(defaults.iterations),
                inertia_start: args.inertia_start.unwrap_or(defaults.inertia_start),
                inertia_end: args.inertia_end.unwrap_or(defaults.inertia_end),
                cognitive: args.cognitive.unwrap_or(defaults.cognitive),
                social: args.social.unwrap_or(defaults.social),
                candidate_attempts: attempts,
                ..defaults
            };
            generate_pso(&model, args.strength, &config)?
        }
    };
    let stem = format!("suite-t{}", args.strength);
    let csv = write(&args.out, &format!("{stem}.csv"), suite.to_csv(&model)?)?;
    write(&args.out, &format!("{stem}.json"), suite.to_json(&model)?)?;
    println!("{} rows at strength {} -> {}", suite.len(), args.strength, csv.display());
    Ok(0)
}

fn measure_cmd(args: MeasureArgs) -> Result<u8> {
    let model = load_model(&args.model)?;
    let suite = load_suite(&args.suite, &model)?;
    for &s in &args.strengths {
        model.check_strength(s)?;
    }
    let report = measure(&suite, &model, &args.strengths)?;
    let table = report.to_table();
    write(&args.out, "coverage.json", report.to_json())?;
    write(&args.out, "coverage.txt", &table)?;
    print!("{table}");
    Ok(0)
}

fn run_cmd(args: RunArgs) -> Result<u8> {
    if args.parallelism == 0 {
        return Err("parallelism must be at least 1".into());
    }
    let model = load_model(&args.model)?;
    let suite = load_suite(&args.suite, &model)?;
    let scripts = load_scripts(&args.scripts)?;
    let plan = multiplex(&model, &suite, &scripts)?;
    let work_dir = args.work_dir.unwrap_or_else(|| args.out.join("work"));
    let mut options = RunOptions::new(work_dir).parallelism(args.parallelism);
    if let Some(secs) = args.timeout {
        let timeout = Duration::try_from_secs_f64(secs).map_err(|_| format!("invalid timeout {secs}"))?;
        options = options.default_timeout(timeout);
    }
    let report = run(&plan, &options);
    for format in args.format {
        write(&args.out, &format!("report.{}", format.extension()), serialize_report(&report, format))?;
    }
    let t = report.totals;
    println!(
        "{} entries: {} pass, {} fail, {} error, {} timeout",
        report.records.len(),
        t.pass,
        t.fail,
        t.error,
        t.timeout
    );
    Ok(report.exit_code() as u8)
}

fn analyze(args: AnalyzeArgs) -> Result<u8> {
    let mut reports = BTreeMap::new();
    for (t, path) in args.reports {
        let report = RunReport::from_json(&read(&path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        if reports.insert(t, report).is_some() {
            return Err(format!("strength {t} given more than once").into());
        }
    }
    let model = reports.values().next().expect("at least one report").model.clone();
    let attribution = attribution_chain(&reports, &model)?;
    let table = attribution.to_table();
    write(&args.out, "attribution.json", attribution.to_json(&model))?;
    write(&args.out, "attribution.txt", &table)?;
    print!("{table}");
    Ok(0)
}

fn synth(args: SynthArgs) -> Result<u8> {
    let model = load_model(&args.model)?;
    let profile = match &args.faults {
        Some(path) => FaultProfile::parse(&read(path)?, &model).map_err(|e| format!("{}: {e}", path.display()))?,
        None => FaultProfile::default(),
    };
    let scripts = write_stub_scripts(&model, &profile, &variant_ids(args.variants), &args.out)?;
    println!("{} stub scripts -> {}", scripts.len(), args.out.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Measure(args) => measure_cmd(args),
        Command::Run(args) => run_cmd(args),
        Command::Analyze(args) => analyze(args),
        Command::Synth(args) => synth(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("citkit: {e}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
