use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tracing_subscriber::EnvFilter;

use tootsim::config::{load_config, ConfigError, SimConfig};
use tootsim::eval::{emit_report, evaluate_run, read_report, EvalError, MockScorer, Scorer, SidecarScorer};
use tootsim::exec::Execution;
use tootsim::llm::{BackendKind, LlmError};
use tootsim::retrieval::{convert_hotpotqa, write_knowledge};
use tootsim::sim::{build_backend, enrich_seed_file, run_experiment, SimError};

#[derive(Parser)]
#[command(name = "tootsim", version, about = "Persona-driven social media simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Remote,
    Scripted,
    Heuristic,
}

impl From<Backend> for BackendKind {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Remote => BackendKind::Remote,
            Backend::Scripted => BackendKind::Scripted,
            Backend::Heuristic => BackendKind::Heuristic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerKind {
    Mock,
    Sidecar,
}

#[derive(Subcommand)]
enum Command {
    /// Enrich persona seeds into a persona store.
    Enrich {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "heuristic")]
        backend: Backend,
        /// Fixture table for the scripted backend.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Convert HotpotQA examples into a knowledge corpus.
    Ingest {
        #[arg(long)]
        hotpotqa: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the two-stage experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long = "t-k")]
        t_k: Option<f64>,
        #[arg(long = "t-p")]
        t_p: Option<f64>,
        #[arg(long = "stage-hours")]
        stage_hours: Option<u64>,
        /// Write every completion to completions.jsonl.
        #[arg(long)]
        record: bool,
        /// Disable data-parallel work.
        #[arg(long)]
        sequential: bool,
    },
    /// Compute metrics for a run directory and write report.json into it.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value = "mock")]
        scorer: ScorerKind,
        #[arg(long = "sidecar-url")]
        sidecar_url: Option<String>,
    },
    /// Render report.csv and report.md from a run's report.json.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(ConfigError),
    Sim(SimError),
    Eval(EvalError),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Config(_) => 1,
            Failure::Sim(SimError::Config(_) | SimError::Backend(LlmError::Config(_))) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Config(_) | Failure::Sim(SimError::Config(_) | SimError::Backend(LlmError::Config(_))) => "config",
            Failure::Sim(_) => "run",
            Failure::Eval(EvalError::Missing(_)) => "missing",
            Failure::Eval(_) => "evaluate",
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m.clone(),
            Failure::Config(e) => e.to_string(),
            Failure::Sim(e) => e.to_string(),
            Failure::Eval(e) => e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::Sim(e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::Eval(e)
    }
}

fn run_overrides(
    seed: Option<u64>,
    backend: Option<Backend>,
    fixtures: Option<&Path>,
    t_k: Option<f64>,
    t_p: Option<f64>,
    stage_hours: Option<u64>,
    record: bool,
) -> Result<Vec<(String, Value)>, Failure> {
    let mut out = Vec::new();
    if let Some(s) = seed {
        out.push(("seed".into(), json!(s)));
    }
    if let Some(b) = backend {
        out.push(("backend".into(), json!(BackendKind::from(b))));
    }
    if let Some(f) = fixtures {
        // Flag paths are relative to the working directory, not the config.
        let f = std::path::absolute(f).map_err(|e| Failure::Io(format!("{}: {e}", f.display())))?;
        out.push(("fixtures".into(), json!(f)));
    }
    if let Some(t) = t_k {
        out.push(("t_k".into(), json!(t)));
    }
    if let Some(t) = t_p {
        out.push(("t_p".into(), json!(t)));
    }
    if let Some(h) = stage_hours {
        out.push(("stage_hours".into(), json!(h)));
    }
    if record {
        out.push(("record_completions".into(), json!(true)));
    }
    Ok(out)
}

fn dispatch(command: Command) -> Result<Value, Failure> {
    match command {
        Command::Enrich {
            seeds,
            out,
            backend,
            fixtures,
        } => {
            if !seeds.exists() {
                return Err(Failure::Eval(EvalError::Missing(seeds.display().to_string())));
            }
            let config = SimConfig {
                backend: backend.into(),
                fixtures,
                ..SimConfig::default()
            };
            config.check_paths()?;
            let llm = build_backend(&config)?;
            let written = enrich_seed_file(&seeds, &out, llm.as_ref(), Execution::default())?;
            Ok(json!({"personas": written.len(), "out": out}))
        }
        Command::Ingest { hotpotqa, out } => {
            let content =
                fs::read_to_string(&hotpotqa).map_err(|_| EvalError::Missing(hotpotqa.display().to_string()))?;
            let records = convert_hotpotqa(&content).map_err(SimError::Knowledge)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Failure::Io(format!("{}: {e}", parent.display())))?;
            }
            let file = fs::File::create(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            write_knowledge(&records, std::io::BufWriter::new(file))
                .map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            Ok(json!({"records": records.len(), "out": out}))
        }
        Command::Run {
            config,
            out,
            seed,
            backend,
            fixtures,
            t_k,
            t_p,
            stage_hours,
            record,
            sequential,
        } => {
            let overrides = run_overrides(seed, backend, fixtures.as_deref(), t_k, t_p, stage_hours, record)?;
            let config = load_config(&config, &overrides)?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let artifacts = run_experiment(&config, &out, exec)?;
            Ok(json!({"out": artifacts.dir, "summary": artifacts.summary}))
        }
        Command::Evaluate {
            run,
            scorer,
            sidecar_url,
        } => {
            let scorer: Box<dyn Scorer> = match scorer {
                ScorerKind::Mock => Box::new(MockScorer),
                ScorerKind::Sidecar => {
                    let url =
                        sidecar_url.ok_or_else(|| Failure::Usage("--scorer sidecar needs --sidecar-url".into()))?;
                    Box::new(SidecarScorer::connect(&url)?)
                }
            };
            let report = evaluate_run(&run, scorer.as_ref(), Execution::default())?;
            let path = run.join("report.json");
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            Ok(json!({"report": path}))
        }
        Command::Report { run } => {
            let path = run.join("report.json");
            if !path.exists() {
                return Err(EvalError::Missing("report.json".into()).into());
            }
            let report = read_report(&path)?;
            emit_report(&report, &run)?;
            Ok(json!({"csv": run.join("report.csv"), "markdown": run.join("report.md")}))
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "usage", "message": first}));
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", json!({"error": f.kind(), "message": f.message()}));
            ExitCode::from(f.exit_code())
        }
    }
}
