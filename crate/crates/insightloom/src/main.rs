use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use insightloom::bundle::Bundle;
use insightloom::pipeline::{
    analyze, build_bundle, load_spec, run_pipeline, stub_backend, BackendChoice, PipelineOptions,
};
use insightloom::server::{serve, AppState};
use insightloom_core::llm::{ChatBackend, LlmParams, RemoteBackend, RetryPolicy};
use insightloom_core::narrative::SelectionStrategy;
use insightloom_core::network::DateMatch;
use insightloom_core::scoring::load_score_spec;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "insightloom",
    version,
    about = "Dashboard insight networks and grounded summaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Detect insights and print them as JSON.
    Generate,
    /// Build the insight network.
    Network,
    /// Score every insight.
    Score,
    /// Select and order the top insights.
    Select,
    /// Summarize the selection; with --dry-run, print the prompt instead.
    Summarize,
    /// Write the full bundle.
    Export,
    /// Serve the HTTP API over a bundle or a spec.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Serve a previously exported bundle instead of running the spec.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Earliest,
    Fill,
}

#[derive(Clone, Copy, ValueEnum)]
enum DateMode {
    Overlap,
    Exact,
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 4)]
    min: usize,
    #[arg(long, global = true, default_value_t = 15)]
    max: usize,
    #[arg(long, global = true, value_enum, default_value_t = Strategy::Earliest)]
    strategy: Strategy,
    /// Comma-separated link kinds or categories, or `all`.
    #[arg(long, global = true)]
    kinds: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = DateMode::Overlap)]
    date_match: DateMode,
    #[arg(long, global = true)]
    score_spec: Option<PathBuf>,
    #[arg(long, global = true)]
    dry_run: bool,
    /// Use the offline scripted backend.
    #[arg(long, global = true)]
    stub: bool,
    #[arg(long, global = true)]
    stub_script: Option<PathBuf>,
    #[arg(long, global = true)]
    include_titles: bool,
}

impl Common {
    fn spec(&self) -> Result<&PathBuf, String> {
        self.spec.as_ref().ok_or_else(|| "--spec is required".to_string())
    }

    fn pipeline(&self) -> PipelineOptions {
        let mut o = PipelineOptions::default();
        o.selection.min = self.min;
        o.selection.max = self.max;
        o.selection.strategy = match self.strategy {
            Strategy::Earliest => SelectionStrategy::Earliest,
            Strategy::Fill => SelectionStrategy::Fill,
        };
        o.network.kinds = self.kinds.as_ref().map(|k| vec![k.clone()]);
        o.network.date_match = match self.date_match {
            DateMode::Overlap => DateMatch::Overlap,
            DateMode::Exact => DateMatch::Exact,
        };
        o.score_spec = self.score_spec.clone();
        o.prompt.include_titles = self.include_titles;
        o.dry_run = self.dry_run;
        o.backend = if self.stub {
            BackendChoice::Stub {
                script: self.stub_script.clone(),
            }
        } else {
            BackendChoice::Remote
        };
        o
    }
}

fn emit(opts: &Common, text: String) -> Result<(), String> {
    match &opts.out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| format!("stage=write: {e}")),
        None => print_out(&text),
    }
}

/// Writes to standard output, treating a closed pipe as success.
fn print_out(text: &str) -> Result<(), String> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("stage=write: {e}")),
        _ => Ok(()),
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

fn run(cli: Cli) -> Result<(), String> {
    let opts = &cli.opts;
    let mut popts = opts.pipeline();
    match &cli.command {
        Command::Generate | Command::Network | Command::Score | Command::Select => {
            let spec = load_spec(opts.spec()?).map_err(|e| e.to_string())?;
            let score_spec = match &opts.score_spec {
                Some(p) => {
                    let doc = std::fs::read_to_string(p).map_err(|e| format!("stage=score: {e}"))?;
                    Some(load_score_spec(&doc).map_err(|e| format!("stage=score: {e}"))?)
                }
                None => None,
            };
            let a = analyze(&spec, &popts, score_spec.as_ref()).map_err(|e| e.to_string())?;
            let text = match cli.command {
                Command::Generate => pretty(&a.insights),
                Command::Network => pretty(&a.network),
                Command::Score => pretty(&a.scores),
                _ => pretty(&a.selection),
            };
            emit(opts, text)
        }
        Command::Summarize => {
            popts.out = None;
            let b = run_pipeline(opts.spec()?, &popts).map_err(|e| e.to_string())?;
            if opts.dry_run {
                return emit(opts, b.prompt.text);
            }
            emit(
                opts,
                pretty(&serde_json::json!({
                    "prompt": b.prompt.text,
                    "summary": b.summary,
                    "grounding": b.grounding,
                    "baseline": b.baseline,
                })),
            )
        }
        Command::Export => {
            popts.out = opts.out.clone();
            let b = run_pipeline(opts.spec()?, &popts).map_err(|e| e.to_string())?;
            match opts.out {
                Some(_) => Ok(()),
                None => print_out(&b.to_json()),
            }
        }
        Command::Serve { port, bundle } => {
            let (b, backend, params): (Bundle, Arc<dyn ChatBackend>, LlmParams) = match bundle {
                Some(path) => {
                    let doc = std::fs::read_to_string(path).map_err(|e| format!("stage=load: {e}"))?;
                    let b = Bundle::from_json(&doc).map_err(|e| format!("stage=load: {e}"))?;
                    let (backend, params) = backend_for(opts, opts.spec.as_deref())?;
                    (b, backend, params)
                }
                None => {
                    let spec_path = opts.spec()?;
                    let (backend, params) = backend_for(opts, Some(spec_path))?;
                    let spec = load_spec(spec_path).map_err(|e| e.to_string())?;
                    let p = params.clone();
                    let b = build_bundle(spec, &popts, None, backend.as_ref(), move |max_tokens| LlmParams {
                        max_tokens,
                        ..p.clone()
                    })
                    .map_err(|e| e.to_string())?;
                    (b, backend, params)
                }
            };
            let state = AppState::new(b, backend, params, RetryPolicy::default());
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(serve(state, *port)).map_err(|e| e.to_string())
        }
    }
}

fn backend_for(opts: &Common, spec: Option<&std::path::Path>) -> Result<(Arc<dyn ChatBackend>, LlmParams), String> {
    if opts.stub {
        let b = match (spec, &opts.stub_script) {
            (Some(s), script) => stub_backend(s, script.as_deref()).map_err(|e| e.to_string())?,
            (None, Some(script)) => stub_backend(script, Some(script)).map_err(|e| e.to_string())?,
            (None, None) => Default::default(),
        };
        Ok((Arc::new(b), LlmParams::new(1)))
    } else {
        let params = LlmParams::from_env(1).map_err(|e| format!("stage=summarize: {e}"))?;
        Ok((Arc::new(RemoteBackend::for_params(&params)), params))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
