//! Command-line entry points.
//!
//! Exit status is 0 on success, 1 for usage or environment problems (bad
//! flags, missing files, unreachable backends, unbindable ports) and 2 for
//! bad data (malformed corpora or result files, unparseable model output).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::engine::{
    run_end_to_end, run_interactive, run_iterative, BackendCounter, Backends, EngineError,
    GenerationParams, GenerationResult, IterationStep, ModelKind, MAX_INPUT_TOKENS,
    MAX_OUTPUT_TOKENS,
};
use crate::filter::{apply_policy, FilterPolicy, GroundingMethod, GroundingPolicy};
use crate::fixtures::write_fixtures;
use crate::retrieval::{
    load_corpus, retrieve, Bm25Ranker, Corpus, FetchLimits, RetrievalConfig, RetrievalError,
};
use crate::service::{serve, AppState, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "blueprint",
    version,
    about = "Query-focused summarization steered by question-answer plans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Retrieve from a local corpus and write a generation result.
    Summarize(SummarizeArgs),
    /// Drop plan pairs whose answers are not found in the corpus.
    Filter(FilterArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Write the bundled corpora and example plans to a directory.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct BackendArgs {
    /// `stub`, or the base URL of a generation server.
    #[arg(long, env = "BLUEPRINT_BACKEND", default_value = "stub")]
    pub backend: String,
    /// Seconds to wait for a remote backend.
    #[arg(long, env = "BLUEPRINT_BACKEND_TIMEOUT", default_value_t = 120)]
    pub backend_timeout: u64,
}

impl BackendArgs {
    fn backends(&self) -> Result<Backends, Failure> {
        Backends::from_spec(&self.backend, Duration::from_secs(self.backend_timeout))
            .map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub query: String,
    /// JSON-lines corpus of `{url, title, body}` records.
    #[arg(long)]
    pub corpus: PathBuf,
    /// `end_to_end`, `iterative` or `interactive`.
    #[arg(long, default_value = "end_to_end", value_parser = clap::value_parser!(ModelKind))]
    pub model: ModelKind,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, default_value_t = 8)]
    pub max_pairs: usize,
    #[arg(long, default_value_t = MAX_INPUT_TOKENS)]
    pub max_input_tokens: usize,
    #[arg(long, default_value_t = MAX_OUTPUT_TOKENS)]
    pub max_output_tokens: usize,
    /// Iterative model: sentence cap.
    #[arg(long, default_value_t = 8)]
    pub max_sentences: usize,
    /// Interactive model: a question to use as the plan. Repeatable.
    #[arg(long = "question")]
    pub questions: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value_t = 5)]
    pub passage_window: usize,
    #[arg(long, default_value_t = 5)]
    pub max_docs: usize,
    #[arg(long, default_value = "result.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Substring,
    #[value(name = "token_overlap")]
    TokenOverlap,
}

#[derive(Debug, Clone, clap::Args)]
pub struct FilterArgs {
    /// A result file written by `summarize`.
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "substring")]
    pub method: MethodArg,
    /// Token-overlap method: fraction of answer tokens that must appear.
    #[arg(long, default_value_t = crate::filter::DEFAULT_OVERLAP_THRESHOLD)]
    pub threshold: f64,
    /// Also drop pairs that repeat an earlier question.
    #[arg(long)]
    pub dedup: bool,
    /// Keep at most this many pairs after filtering.
    #[arg(long)]
    pub num_pairs: Option<usize>,
    /// Defaults to `<result stem>.filtered.json` next to the result.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    #[arg(long, env = "BLUEPRINT_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Corpus used when a retrieve request carries no URLs.
    #[arg(long, env = "BLUEPRINT_CORPUS")]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Idle seconds before a session is dropped.
    #[arg(long, env = "BLUEPRINT_SESSION_TTL", default_value_t = 1800)]
    pub session_ttl: u64,
    #[arg(long, env = "BLUEPRINT_SESSION_SEED", default_value_t = 0)]
    pub session_seed: u64,
    /// Browser origin allowed by CORS. Any origin when unset.
    #[arg(long, env = "BLUEPRINT_CORS_ORIGIN")]
    pub cors_origin: Option<String>,
    #[arg(long, env = "BLUEPRINT_FETCH_CONCURRENCY", default_value_t = 8)]
    pub fetch_concurrency: usize,
    /// Seconds per page fetch.
    #[arg(long, env = "BLUEPRINT_FETCH_TIMEOUT", default_value_t = 10)]
    pub fetch_timeout: u64,
    #[arg(long, env = "BLUEPRINT_FETCH_MAX_BYTES", default_value_t = 2 * 1024 * 1024)]
    pub fetch_max_bytes: usize,
    #[arg(long, default_value_t = MAX_INPUT_TOKENS)]
    pub max_input_tokens: usize,
}

#[derive(Debug, Clone, clap::Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<RetrievalError> for Failure {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::MalformedRecord { .. }
            | RetrievalError::EmptyCorpus
            | RetrievalError::NoPassages => Failure::data(e.to_string()),
            other => Failure::usage(other.to_string()),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Corpus, Failure> {
    if !path.is_file() {
        return Err(Failure::usage(format!(
            "corpus file {} does not exist",
            path.display()
        )));
    }
    let ingested = load_corpus(path)?;
    if ingested.skipped_empty > 0 {
        eprintln!(
            "warning: skipped {} record(s) with an empty body",
            ingested.skipped_empty
        );
    }
    Ok(ingested.corpus)
}

/// Written in place of a result when the model output cannot be parsed.
#[derive(Serialize)]
struct ParseFailureReport<'a> {
    error_code: &'static str,
    message: String,
    raw_output: &'a str,
    #[serde(skip_serializing_if = "<[IterationStep]>::is_empty")]
    steps: &'a [IterationStep],
}

fn cmd_summarize(args: &SummarizeArgs) -> Result<(), Failure> {
    let backends = args.backend.backends()?;
    let corpus = load(&args.corpus)?;
    let model = args.model;
    let backend = backends.for_model(model);
    let config = RetrievalConfig {
        top_k: args.top_k,
        passage_window: args.passage_window,
        max_docs: args.max_docs,
    };
    let retrieved = retrieve(
        &args.query,
        &corpus,
        &Bm25Ranker::default(),
        &config,
        args.max_input_tokens,
        &BackendCounter(backend),
    )?;
    let params = GenerationParams {
        max_output_tokens: args.max_output_tokens,
        max_pairs: args.max_pairs,
        max_sentences: args.max_sentences,
    };
    if !args.questions.is_empty() && model != ModelKind::Interactive {
        return Err(Failure::usage(
            "--question is only accepted with --model interactive",
        ));
    }
    let input = &retrieved.input;
    let outcome: Result<GenerationResult, EngineError> = match model {
        ModelKind::EndToEnd => run_end_to_end(input, backend, &params),
        ModelKind::Iterative => run_iterative(input, backend, &params),
        ModelKind::Interactive => {
            let questions = (!args.questions.is_empty()).then_some(args.questions.as_slice());
            run_interactive(input, questions, backend, &params)
        }
    };
    match outcome {
        Ok(result) => {
            write_json(&args.out, &result)?;
            println!(
                "wrote {}: {} pair(s), {} sentence(s)",
                args.out.display(),
                result.blueprint.len(),
                result.summary.len()
            );
            Ok(())
        }
        Err(e @ EngineError::Parse { .. }) => {
            let EngineError::Parse {
                source,
                raw_output,
                steps,
            } = &e
            else {
                unreachable!()
            };
            write_json(
                &args.out,
                &ParseFailureReport {
                    error_code: "ParseFailure",
                    message: source.to_string(),
                    raw_output,
                    steps,
                },
            )?;
            Err(Failure::data(format!(
                "{e}; raw output written to {}",
                args.out.display()
            )))
        }
        Err(e) => Err(Failure::usage(e.to_string())),
    }
}

fn cmd_filter(args: &FilterArgs) -> Result<(), Failure> {
    let method = match args.method {
        MethodArg::Substring => GroundingMethod::NormalizedSubstring,
        MethodArg::TokenOverlap => GroundingMethod::TokenOverlap,
    };
    let grounding =
        GroundingPolicy::new(method, args.threshold).map_err(|e| Failure::usage(e.to_string()))?;
    let text = fs::read_to_string(&args.result)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.result.display())))?;
    let result: GenerationResult = serde_json::from_str(&text)
        .map_err(|e| Failure::data(format!("{}: not a result file: {e}", args.result.display())))?;
    let corpus = load(&args.corpus)?;
    let corpus_text = corpus
        .documents
        .iter()
        .map(|d| format!("{} {}", d.title, d.body))
        .collect::<Vec<_>>()
        .join("\n");

    let policy = FilterPolicy {
        grounding,
        dedup: args.dedup,
        num_pairs: args.num_pairs,
        strict: false,
    };
    let filtered = apply_policy(&result.blueprint, &corpus_text, &policy)
        .map_err(|e| Failure::data(e.to_string()))?;
    let out = args.out.clone().unwrap_or_else(|| {
        let stem = args
            .result
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        args.result.with_file_name(format!("{stem}.filtered.json"))
    });
    write_json(&out, &filtered)?;
    println!(
        "removed {} pair(s)",
        result.blueprint.len() - filtered.len()
    );
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = terminate => {}
    }
}

fn cmd_serve(args: &ServeArgs) -> Result<(), Failure> {
    let backends = args.backend.backends()?;
    let corpus = args.corpus.as_deref().map(load).transpose()?;
    let config = ServiceConfig {
        session_ttl: Duration::from_secs(args.session_ttl),
        fetch_limits: FetchLimits {
            concurrency: args.fetch_concurrency,
            timeout: Duration::from_secs(args.fetch_timeout),
            max_bytes: args.fetch_max_bytes,
        },
        retrieval: RetrievalConfig::default(),
        max_input_tokens: args.max_input_tokens,
        session_seed: args.session_seed,
        cors_origin: args.cors_origin.clone(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::usage(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr)
            .await
            .map_err(|e| Failure::usage(format!("cannot bind {}: {e}", args.addr)))?;
        let local = listener
            .local_addr()
            .map_err(|e| Failure::usage(e.to_string()))?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        serve(
            listener,
            AppState::new(backends, corpus, config),
            shutdown_signal(),
        )
        .await
        .map_err(|e| Failure::usage(e.to_string()))
    })
}

fn cmd_fixtures(args: &FixturesArgs) -> Result<(), Failure> {
    let written = write_fixtures(&args.out_dir)
        .map_err(|e| Failure::usage(format!("cannot write fixtures: {e}")))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Summarize(a) => cmd_summarize(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Fixtures(a) => cmd_fixtures(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
