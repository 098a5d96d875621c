use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relcrowd_cli::http::{router, AppState};
use relcrowd_cli::pipeline::{self, AnalyzeSpec, Format, RecordedInput, RunSpec};
use relcrowd_cli::{CliError, ExitStatus};
use relcrowd_core::corpus::synthetic::{generate, SyntheticSpec};
use relcrowd_core::corpus::write_corpus;
use relcrowd_core::PassThreshold;

#[derive(Parser)]
#[command(name = "relcrowd", version, about = "Crowd annotation campaigns for drug-disease relations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a corpus, run a simulated campaign, and write report artifacts.
    Run(RunArgs),
    /// Analyze recorded judgments or an event log against gold.
    Analyze(AnalyzeArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Write a synthetic corpus with the given consensus shape.
    #[command(hide = true)]
    SynthCorpus(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn formats(args: &[FormatArg]) -> Vec<Format> {
    if args.is_empty() {
        return vec![Format::Json, Format::Csv];
    }
    args.iter()
        .map(|f| match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        })
        .collect()
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 60)]
    sample: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    workers: usize,
    #[arg(long, default_value_t = 10)]
    judgments_per_unit: usize,
    #[arg(long, default_value = "7/10")]
    pass_threshold: PassThreshold,
    #[arg(long, default_value_t = 5)]
    interleave: u32,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Artifact formats; repeat for several. Defaults to all.
    #[arg(long, value_enum)]
    format: Vec<FormatArg>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Accepted judgments as written by `run` (judgments.jsonl).
    #[arg(long, conflicts_with = "events", required_unless_present = "events")]
    judgments: Option<PathBuf>,
    /// A campaign event log.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Corpus holding the gold records.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Vec<FormatArg>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Corpus to offer for campaigns, named by its file stem. Repeatable.
    #[arg(long)]
    corpus: Vec<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 81)]
    unanimous: usize,
    #[arg(long, default_value_t = 163)]
    majority: usize,
    #[arg(long, default_value_t = 0)]
    majority_unpublished: usize,
    #[arg(long, default_value_t = 0)]
    singleton: usize,
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let spec = RunSpec {
        corpus: args.corpus,
        sample: args.sample,
        seed: args.seed,
        workers: args.workers,
        judgments_per_unit: args.judgments_per_unit,
        pass_threshold: args.pass_threshold,
        interleave: args.interleave,
        out: args.out,
        formats: formats(&args.format),
    };
    let output = pipeline::run(&spec)?;
    for path in output.written {
        println!("{}", path.display());
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let input = match (args.judgments, args.events) {
        (Some(j), _) => RecordedInput::Judgments(j),
        (None, Some(e)) => RecordedInput::Events(e),
        (None, None) => unreachable!("clap requires one input"),
    };
    let spec = AnalyzeSpec { input, gold: args.gold, out: args.out, formats: formats(&args.format) };
    let output = pipeline::analyze(&spec)?;
    for path in output.written {
        println!("{}", path.display());
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let mut corpora = HashMap::new();
    for path in &args.corpus {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::validation("ingest", format!("{}: unusable file name", path.display())))?
            .to_string();
        corpora.insert(name, pipeline::load_corpus(path)?);
    }
    let app = AppState::open(&args.data_dir, corpora).map_err(|e| CliError::runtime("serve", e))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::runtime("serve", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", args.port))
            .await
            .map_err(|e| CliError::runtime("serve", format!("cannot bind port {}: {e}", args.port)))?;
        let addr = listener.local_addr().map_err(|e| CliError::runtime("serve", e))?;
        // Handlers go in before the address is announced so an early signal still shuts down cleanly.
        let shutdown = shutdown_signal().map_err(|e| CliError::runtime("serve", e))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        axum::serve(listener, router(Arc::new(app)))
            .with_graceful_shutdown(shutdown)
            .await
            .map_err(|e| CliError::runtime("serve", e))
    })
}

fn shutdown_signal() -> std::io::Result<impl std::future::Future<Output = ()>> {
    #[cfg(unix)]
    let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())?;
    let ctrl_c = tokio::signal::ctrl_c();
    Ok(async move {
        #[cfg(unix)]
        tokio::select! {
            _ = ctrl_c => {}
            _ = term.recv() => {}
        }
        #[cfg(not(unix))]
        let _ = ctrl_c.await;
    })
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        unanimous: args.unanimous,
        majority: args.majority,
        majority_unpublished: args.majority_unpublished,
        singleton: args.singleton,
    };
    let corpus = generate(&spec, args.seed);
    let file = std::fs::File::create(&args.out)
        .map_err(|e| CliError::runtime("write", format!("{}: {e}", args.out.display())))?;
    write_corpus(&corpus, std::io::BufWriter::new(file)).map_err(|e| CliError::runtime("write", e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(ExitStatus::Usage as u8),
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Analyze(a) => analyze(a),
        Command::Serve(a) => serve(a),
        Command::SynthCorpus(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.status as u8)
        }
    }
}
