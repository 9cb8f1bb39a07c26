use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use argos::engine::{solve, EngineConfig, EngineError, Event, Trace};
use argos::harness::{
    generate_kinship, kinship, load_corpus, load_problem, run_suite, write_corpus, write_reports, CorpusConfig, System,
    KB_FILE,
};
use argos::llm::{
    LlmBackend, OracleBackend, OracleConfig, OracleKb, PromptStyle, UnknownPolicy, WireBackend, WireConfig,
};

pub const EXIT_LOAD: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "argos", version, about = "Abductive reasoning over SAT backbones")]
pub struct Cli {
    /// TOML file with `[engine]` and `[backend]` tables; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem file.
    Solve(SolveArgs),
    /// Run systems over a corpus directory and write metrics.
    Bench(BenchArgs),
    /// Generate a kinship corpus.
    Gen(GenArgs),
    /// Print a trace file in readable form.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
struct EngineFlags {
    /// Chain-of-thought samples per vote [default: 5]
    #[arg(long)]
    k: Option<usize>,
    /// Initial vote threshold [default: 1.0]
    #[arg(long)]
    gamma: Option<f64>,
    /// Threshold decrease per accepted clause [default: 0.1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Clause score threshold [default: 0.3]
    #[arg(long)]
    tau: Option<f64>,
    /// Hard cap on chain-of-thought requests per problem
    #[arg(long)]
    max_cot: Option<usize>,
    /// Generation requests per antecedent [default: 3]
    #[arg(long)]
    max_candidates: Option<usize>,
    /// Seed for every stochastic choice [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Prompt variant, overriding the corpus setting
    #[arg(long, value_enum)]
    prompt_style: Option<StyleArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StyleArg {
    General,
    Kinship,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BackendKind {
    Oracle,
    Wire,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Abstain,
    Guess,
}

#[derive(Debug, Args)]
struct BackendFlags {
    /// Language model backend [default: oracle]
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Completions URL for the wire backend (env: ARGOS_ENDPOINT)
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name for the wire backend (env: ARGOS_MODEL)
    #[arg(long)]
    model: Option<String>,
    /// Oracle knowledge base [default: kb.json beside the input]
    #[arg(long)]
    oracle_kb: Option<PathBuf>,
    /// Oracle forward-chaining rounds [default: 0]
    #[arg(long)]
    oracle_depth: Option<usize>,
    /// Oracle flip probability [default: 0]
    #[arg(long)]
    oracle_noise: Option<f64>,
    /// Oracle answer when it cannot derive one [default: abstain]
    #[arg(long, value_enum)]
    oracle_policy: Option<PolicyArg>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem JSON file
    problem: PathBuf,
    #[command(flatten)]
    engine: EngineFlags,
    #[command(flatten)]
    backend: BackendFlags,
    /// Write the event log here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Corpus directory, e.g. the output of `argos gen`
    corpus: PathBuf,
    #[command(flatten)]
    engine: EngineFlags,
    #[command(flatten)]
    backend: BackendFlags,
    /// Comma-separated systems: argos, sat, scN
    #[arg(long, default_value = "argos,sat,sc5", value_delimiter = ',')]
    systems: Vec<System>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory for CSVs and traces
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of problems; labels are split evenly
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Maximum chain depth (at least 2)
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..))]
    depth: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus directory to create
    #[arg(long)]
    out: PathBuf,
    /// Replace an existing output directory
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Trace written by `solve --trace` or `bench`
    path: PathBuf,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct BackendFile {
    kind: Option<BackendKind>,
    endpoint: Option<String>,
    model: Option<String>,
    api_key: Option<String>,
    timeout_secs: Option<u64>,
    retries: Option<u32>,
    oracle_kb: Option<PathBuf>,
    oracle_depth: Option<usize>,
    oracle_noise: Option<f64>,
    oracle_policy: Option<UnknownPolicy>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    engine: Option<EngineConfig>,
    backend: BackendFile,
}

/// Everything a run needs, after merging flags, the config file and the
/// environment (in that order of precedence).
#[derive(Debug, Serialize)]
struct Resolved {
    engine: EngineConfig,
    backend: BackendFile,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn load(message: impl ToString) -> Self {
        Failure {
            code: EXIT_LOAD,
            message: message.to_string(),
        }
    }
}

fn read_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::load(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::load(format!("{}: {e}", path.display())))
}

fn resolve(
    file: FileConfig,
    e: &EngineFlags,
    b: &BackendFlags,
    default_kb: Option<PathBuf>,
) -> Result<Resolved, Failure> {
    let mut engine = file.engine.unwrap_or_default();
    engine.k = e.k.unwrap_or(engine.k);
    engine.gamma0 = e.gamma.unwrap_or(engine.gamma0);
    engine.alpha = e.alpha.unwrap_or(engine.alpha);
    engine.tau = e.tau.unwrap_or(engine.tau);
    engine.max_cot = e.max_cot.or(engine.max_cot);
    engine.max_candidates_per_pair = e.max_candidates.unwrap_or(engine.max_candidates_per_pair);
    engine.seed = e.seed.unwrap_or(engine.seed);
    if let Some(s) = e.prompt_style {
        engine.prompt_style = Some(match s {
            StyleArg::General => PromptStyle::General,
            StyleArg::Kinship => PromptStyle::Kinship,
        });
    }
    engine.validate().map_err(Failure::load)?;

    let f = file.backend;
    let env = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
    let backend = BackendFile {
        kind: Some(b.backend.or(f.kind).unwrap_or(BackendKind::Oracle)),
        endpoint: b.endpoint.clone().or(f.endpoint).or_else(|| env("ARGOS_ENDPOINT")),
        model: b.model.clone().or(f.model).or_else(|| env("ARGOS_MODEL")),
        api_key: f.api_key.or_else(|| env("ARGOS_API_KEY")),
        timeout_secs: f.timeout_secs,
        retries: f.retries,
        oracle_kb: b.oracle_kb.clone().or(f.oracle_kb).or(default_kb),
        oracle_depth: Some(b.oracle_depth.or(f.oracle_depth).unwrap_or(0)),
        oracle_noise: Some(b.oracle_noise.or(f.oracle_noise).unwrap_or(0.0)),
        oracle_policy: Some(
            b.oracle_policy
                .map(|p| match p {
                    PolicyArg::Abstain => UnknownPolicy::Abstain,
                    PolicyArg::Guess => UnknownPolicy::Guess,
                })
                .or(f.oracle_policy)
                .unwrap_or_default(),
        ),
    };
    let noise = backend.oracle_noise.unwrap_or(0.0);
    if !(0.0..1.0).contains(&noise) {
        return Err(Failure::load(format!("oracle noise {noise} is outside [0, 1)")));
    }
    Ok(Resolved { engine, backend })
}

fn log_config(r: &Resolved) {
    let mut shown = toml::Value::try_from(r).expect("config serializes");
    if let Some(key) = shown
        .get_mut("backend")
        .and_then(|b| b.as_table_mut())
        .and_then(|t| t.get_mut("api_key"))
    {
        *key = toml::Value::String("<redacted>".into());
    }
    log::info!(
        "resolved configuration:\n{}",
        toml::to_string(&shown).unwrap_or_default()
    );
}

fn build_backend(r: &Resolved) -> Result<Box<dyn LlmBackend>, Failure> {
    let b = &r.backend;
    match b.kind.unwrap_or(BackendKind::Oracle) {
        BackendKind::Oracle => {
            let path = b
                .oracle_kb
                .as_ref()
                .ok_or_else(|| Failure::load("the oracle backend needs --oracle-kb"))?;
            let kb = OracleKb::load(path).map_err(|e| Failure::load(format!("{}: {e}", path.display())))?;
            Ok(Box::new(OracleBackend::new(
                kb,
                OracleConfig {
                    reasoning_depth: b.oracle_depth.unwrap_or(0),
                    noise: b.oracle_noise.unwrap_or(0.0),
                    seed: r.engine.seed,
                    unknown_policy: b.oracle_policy.unwrap_or_default(),
                },
            )))
        }
        BackendKind::Wire => {
            let endpoint = b
                .endpoint
                .clone()
                .ok_or_else(|| Failure::load("the wire backend needs --endpoint or ARGOS_ENDPOINT"))?;
            let model = b
                .model
                .clone()
                .ok_or_else(|| Failure::load("the wire backend needs --model or ARGOS_MODEL"))?;
            let mut cfg = WireConfig::new(endpoint, model);
            cfg.api_key = b.api_key.clone();
            if let Some(t) = b.timeout_secs {
                cfg.timeout = Duration::from_secs(t);
            }
            if let Some(n) = b.retries {
                cfg.retries = n;
            }
            Ok(Box::new(WireBackend::new(cfg)))
        }
    }
}

fn beside(path: &Path, name: &str) -> Option<PathBuf> {
    let dir = if path.is_dir() { path } else { path.parent()? };
    let p = dir.join(name);
    p.exists().then_some(p)
}

fn cmd_solve(cfg: FileConfig, a: SolveArgs) -> Result<(), Failure> {
    let problem = load_problem(&a.problem).map_err(Failure::load)?;
    let r = resolve(cfg, &a.engine, &a.backend, beside(&a.problem, KB_FILE))?;
    log_config(&r);
    let backend = build_backend(&r)?;
    let result = solve(&problem, &r.engine, backend.as_ref()).map_err(|e| match e {
        EngineError::Backend(_) => Failure {
            code: EXIT_BACKEND,
            message: e.to_string(),
        },
        other => Failure::load(other),
    })?;
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{result}");
    for (i, c) in result.commonsense.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {}. {}  (commonsense {:.3}, relevance {:.3})",
            i + 1,
            c.text(),
            c.commonsense_score,
            c.relevance_score
        );
    }
    let _ = writeln!(out, "confidence: {:.3}", result.confidence);
    let _ = writeln!(out, "cot calls: {}", result.cot_calls);
    if result.inconsistent {
        let _ = writeln!(out, "note: premises became inconsistent; answered by the vote");
    }
    if let Some(e) = &result.error {
        let _ = writeln!(out, "note: backend failed, last vote used: {e}");
    }
    if let Some(path) = &a.trace {
        fs::write(path, result.trace.to_jsonl()).map_err(|e| Failure::load(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_bench(cfg: FileConfig, a: BenchArgs) -> Result<(), Failure> {
    let problems = load_corpus(&a.corpus).map_err(Failure::load)?;
    let r = resolve(cfg, &a.engine, &a.backend, beside(&a.corpus, KB_FILE))?;
    log_config(&r);
    let needs_backend = a.systems.iter().any(|s| *s != System::PureSat) && !problems.is_empty();
    let backend: Box<dyn LlmBackend> = if needs_backend {
        build_backend(&r)?
    } else {
        Box::new(OracleBackend::new(OracleKb::default(), OracleConfig::default()))
    };
    let report = run_suite(&problems, &r.engine, backend.as_ref(), &a.systems, a.jobs);
    write_reports(&report, &a.out).map_err(|e| Failure::load(format!("{}: {e}", a.out.display())))?;
    fs::write(a.out.join("config.toml"), toml::to_string(&r).unwrap_or_default())
        .map_err(|e| Failure::load(format!("{}: {e}", a.out.display())))?;

    let mut out = io::stdout().lock();
    let _ = writeln!(
        out,
        "{:<8} {:>8} {:>9} {:>9} {:>8} {:>7}",
        "system", "problems", "accuracy", "mean_cot", "by_sat", "errors"
    );
    for run in &report.runs {
        let n = run.records.len().max(1) as f64;
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>9.3} {:>9.2} {:>8} {:>7}",
            run.system.to_string(),
            run.records.len(),
            run.accuracy,
            run.records.iter().map(|r| r.cot_calls).sum::<usize>() as f64 / n,
            run.records.iter().filter(|r| r.decided_by == "sat").count(),
            run.errors
        );
    }
    if let Some(f) = &report.flips {
        let _ = writeln!(
            out,
            "flips vs sc: {} correct, {} incorrect",
            f.correct_flips, f.incorrect_flips
        );
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let (problems, kb) = generate_kinship(a.count, a.depth as usize, a.seed).map_err(Failure::load)?;
    write_corpus(
        &a.out,
        &problems,
        Some(&kb),
        CorpusConfig {
            prompt_style: PromptStyle::Kinship,
        },
        &kinship::exemplars(),
        a.force,
    )
    .map_err(Failure::load)?;
    println!(
        "wrote {} problems and {} to {}",
        problems.len(),
        KB_FILE,
        a.out.display()
    );
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> Result<(), Failure> {
    let file = fs::File::open(&a.path).map_err(|e| Failure::load(format!("{}: {e}", a.path.display())))?;
    let trace =
        Trace::read_from(BufReader::new(file)).map_err(|e| Failure::load(format!("{}: {e}", a.path.display())))?;
    let mut out = io::stdout().lock();
    for e in &trace.events {
        let line = match &e.event {
            Event::Sat {
                conclusion,
                backbone_size,
                budget_exhausted,
            } => format!(
                "sat: {conclusion}, backbone {backbone_size}{}",
                if *budget_exhausted { " (budget exhausted)" } else { "" }
            ),
            Event::Vote {
                answer,
                vote_fraction,
                weighted_confidence,
                degenerate,
                gamma,
            } => format!(
                "vote: {answer} at {vote_fraction:.2} (weighted {weighted_confidence:.2}) vs gamma {gamma:.2}{}",
                if *degenerate { ", all abstained" } else { "" }
            ),
            Event::Candidate {
                clause,
                commonsense,
                relevance,
                accepted,
            } => format!(
                "{} {clause}  ({commonsense:.3}, {relevance:.3})",
                if *accepted { "accept" } else { "reject" }
            ),
            Event::Filtered { clause, reason } => format!("skip   {clause}  ({reason:?})"),
            Event::Accepted { clause } => format!("added  {clause}"),
            Event::Gamma { gamma } => format!("gamma -> {gamma:.2}"),
            Event::Warning { message } => format!("warning: {message}"),
            Event::Inconsistent => "premises inconsistent".to_string(),
            Event::Result {
                verdict,
                decided_by,
                confidence,
                clauses,
            } => format!("result: {verdict} by {decided_by}, confidence {confidence:.3}, {clauses} clauses"),
        };
        let _ = writeln!(out, "[{:>2} {:>3}] {line}", e.iter, e.cot);
    }
    Ok(())
}

pub fn run(cli: Cli) -> ExitCode {
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Trace(a) => cmd_trace(a),
        command => read_config(cli.config.as_deref()).and_then(|cfg| match command {
            Command::Solve(a) => cmd_solve(cfg, a),
            Command::Bench(a) => cmd_bench(cfg, a),
            _ => unreachable!("handled above"),
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
