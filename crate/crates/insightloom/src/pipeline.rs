//! The end-to-end run: load, detect, link, score, select, prompt,
//! summarize, verify and write.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use insightloom_core::dashboard::{load_dashboard, DashboardSpec};
use insightloom_core::insight::{generate_insights, DetectorConfig, Insight};
use insightloom_core::llm::{
    generate_summary, verify_grounding, ChatBackend, LlmParams, RemoteBackend, RetryPolicy, RunMode, StubBackend,
};
use insightloom_core::narrative::{build_prompt, build_selection, concat_baseline, PromptOptions, SelectionOptions};
use insightloom_core::network::{build_network, NetworkConfig};
use insightloom_core::scoring::{
    load_score_spec, priorities, rank_by, ranking_keys, score_cards, ScoreSpec, ValueScoreOptions,
};

use crate::bundle::{Bundle, BundleSummary, NetworkExport, PromptExport, ScoresExport, Timing, BUNDLE_FORMAT};
use crate::story::story_component;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Detect,
    Network,
    Score,
    Select,
    Summarize,
    Bundle,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Detect => "detect",
            Stage::Network => "network",
            Stage::Score => "score",
            Stage::Select => "select",
            Stage::Summarize => "summarize",
            Stage::Bundle => "bundle",
            Stage::Write => "write",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage={stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    fn at<E: std::error::Error + Send + Sync + 'static>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
        move |e| PipelineError {
            stage,
            source: Box::new(e),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("the dashboard produced no insights to select from")]
pub struct EmptyPool;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BackendChoice {
    /// Scripted responses; the script defaults to `<spec>.stub.json` next to
    /// the spec when that file exists.
    Stub { script: Option<PathBuf> },
    #[default]
    Remote,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub detector: DetectorConfig,
    pub network: NetworkConfig,
    pub values: ValueScoreOptions,
    pub score_spec: Option<PathBuf>,
    pub selection: SelectionOptions,
    pub prompt: PromptOptions,
    pub backend: BackendChoice,
    pub dry_run: bool,
    pub retry: RetryPolicy,
    pub out: Option<PathBuf>,
}

pub fn default_stub_script(spec_path: &Path) -> PathBuf {
    spec_path.with_extension("stub.json")
}

pub fn load_spec(spec_path: &Path) -> Result<DashboardSpec, PipelineError> {
    let doc = std::fs::read_to_string(spec_path).map_err(PipelineError::at(Stage::Load))?;
    load_dashboard(&doc).map_err(PipelineError::at(Stage::Load))
}

pub fn stub_backend(spec_path: &Path, script: Option<&Path>) -> Result<StubBackend, PipelineError> {
    let path = match script {
        Some(p) => p.to_path_buf(),
        None => {
            let p = default_stub_script(spec_path);
            if !p.exists() {
                return Ok(StubBackend::default());
            }
            p
        }
    };
    let doc = std::fs::read_to_string(&path).map_err(PipelineError::at(Stage::Load))?;
    StubBackend::from_json(&doc).map_err(PipelineError::at(Stage::Load))
}

/// Loads the spec and the backend named in `opts`, then runs every stage.
pub fn run_pipeline(spec_path: &Path, opts: &PipelineOptions) -> Result<Bundle, PipelineError> {
    let started = Instant::now();
    let spec = load_spec(spec_path)?;
    let score_spec = match &opts.score_spec {
        Some(p) => {
            let doc = std::fs::read_to_string(p).map_err(PipelineError::at(Stage::Score))?;
            Some(load_score_spec(&doc).map_err(PipelineError::at(Stage::Score))?)
        }
        None => None,
    };
    let mut bundle = match &opts.backend {
        BackendChoice::Stub { script } => {
            let backend = stub_backend(spec_path, script.as_deref())?;
            build_bundle(spec, opts, score_spec.as_ref(), &backend, LlmParams::new)?
        }
        BackendChoice::Remote => {
            let base = LlmParams::from_env(1).map_err(PipelineError::at(Stage::Summarize))?;
            let backend = RemoteBackend::for_params(&base);
            build_bundle(spec, opts, score_spec.as_ref(), &backend, |max_tokens| LlmParams {
                max_tokens,
                ..base.clone()
            })?
        }
    };
    bundle.timing.elapsed_ms = started.elapsed().as_millis() as u64;
    if let Some(out) = &opts.out {
        std::fs::write(out, bundle.to_json()).map_err(PipelineError::at(Stage::Write))?;
    }
    Ok(bundle)
}

/// Insights, network, scores and selection without any summarization.
pub struct Analysis {
    pub insights: Vec<Insight>,
    pub network: NetworkExport,
    pub scores: ScoresExport,
    pub selection: insightloom_core::narrative::Selection,
}

pub fn analyze(
    spec: &DashboardSpec,
    opts: &PipelineOptions,
    score_spec: Option<&ScoreSpec>,
) -> Result<Analysis, PipelineError> {
    let insights = generate_insights(spec, &opts.detector).map_err(PipelineError::at(Stage::Detect))?;
    let mut net = build_network(&insights, &opts.network).map_err(PipelineError::at(Stage::Network))?;
    let (context, cards) = score_cards(&insights, spec.grid(), opts.values);
    let prio = priorities(&cards);
    net.attach_priority_chain(&rank_by(&prio));
    let keys = match score_spec {
        Some(s) => ranking_keys(s, &cards),
        None => prio,
    };
    let selection = build_selection(&keys, &insights, opts.selection);
    Ok(Analysis {
        network: NetworkExport::new(&net, &cards),
        scores: ScoresExport { cards, context },
        selection,
        insights,
    })
}

/// Runs every stage after loading against an explicit backend.
pub fn build_bundle(
    spec: DashboardSpec,
    opts: &PipelineOptions,
    score_spec: Option<&ScoreSpec>,
    backend: &dyn ChatBackend,
    params_for: impl Fn(usize) -> LlmParams,
) -> Result<Bundle, PipelineError> {
    let started = Instant::now();
    let generated_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let a = analyze(&spec, opts, score_spec)?;
    if a.selection.reading_order.is_empty() {
        return Err(PipelineError::at(Stage::Select)(EmptyPool));
    }
    let order = &a.selection.reading_order;
    let prompt = build_prompt(order, &a.insights, &spec, &opts.prompt);
    let baseline = concat_baseline(order, &a.insights);

    let summary = if opts.dry_run {
        None
    } else {
        let params = params_for(prompt.token_budget.max(1));
        let s = generate_summary(&prompt, &params, backend, RunMode::Live, opts.retry)
            .map_err(PipelineError::at(Stage::Summarize))?;
        Some(s)
    };
    let selected: Vec<Insight> = order
        .iter()
        .filter_map(|id| a.insights.iter().find(|n| &n.id == id).cloned())
        .collect();
    let grounding = summary.as_ref().map(|s| verify_grounding(&s.summary_text, &selected));

    let story_components = selected
        .iter()
        .map(|n| story_component(n, &spec))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PipelineError::at(Stage::Bundle))?;

    let bundle = Bundle {
        format: BUNDLE_FORMAT.to_string(),
        prompt: PromptExport {
            text: prompt.text(),
            doc: prompt,
        },
        summary: summary.as_ref().map(BundleSummary::from),
        grounding,
        baseline,
        story_components,
        timing: Timing {
            generated_at,
            elapsed_ms: started.elapsed().as_millis() as u64,
            llm_latency_ms: summary.as_ref().map(|s| s.latency_ms),
        },
        spec,
        insights: a.insights,
        network: a.network,
        scores: a.scores,
        selection: a.selection,
    };
    bundle.check_ids().map_err(PipelineError::at(Stage::Bundle))?;
    Ok(bundle)
}
