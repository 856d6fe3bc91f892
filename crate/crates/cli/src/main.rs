use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use peerarg_core::adapters::{
    AspectPromptTemplate, Completion, CompletionClient, CompletionEndpoint, CompletionError, KeywordAspectClassifier,
    LlmAspectClassifier, PromptTemplate, RuleBasedSentiment,
};
use peerarg_core::aggregation::DecisionTrace;
use peerarg_core::datasets::{adapt_source, load_jsonl, write_jsonl, AdapterOptions, DatasetSource, PaperRecord, ReviewRecord};
use peerarg_core::e2e::E2EPrimer;
use peerarg_core::evaluation::{
    emit_report, enumerate_combos, run_e2e, run_grid, run_paper, ClassificationCache,
    ClassificationSource, GridOptions, HyperparamCombo, PipelineSettings, ReportFormat, DEGRADED_FAILURE_SHARE,
};
use peerarg_core::extraction::{build_review_qbaf, BaseScoreMode, ExtractionConfig};
use peerarg_core::{export_dot, SemanticsKind};

#[derive(Parser, Debug)]
#[command(name = "peerarg", version, about = "Aggregate peer reviews into accept/reject decisions")]
struct Cli {
    /// JSON configuration file; its values override flags and environment.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Maximum number of papers processed in parallel.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    endpoint: EndpointArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct EndpointArgs {
    /// Completion service URL.
    #[arg(long, global = true, env = "PEERARG_ENDPOINT")]
    endpoint: Option<String>,
    /// Credential sent as a bearer token.
    #[arg(long, global = true, env = "PEERARG_API_KEY", hide_env_values = true)]
    api_key: Option<String>,
    /// Model name sent with each request.
    #[arg(long, global = true, default_value = "default")]
    model: String,
    /// Per-request timeout in milliseconds.
    #[arg(long, global = true, default_value_t = 60_000)]
    timeout_ms: u64,
    /// Retries after a failed request.
    #[arg(long, global = true, default_value_t = 3)]
    max_retries: usize,
    /// Concurrent requests allowed.
    #[arg(long, global = true, default_value_t = 4)]
    max_in_flight: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and evaluate review frameworks.
    Extract(ExtractArgs),
    /// Predict one decision per paper with a single combination.
    Predict(PredictArgs),
    /// Evaluate combinations of hyperparameters on a dataset.
    Grid(GridArgs),
    /// Run the end-to-end few-shot baseline.
    E2e(E2eArgs),
    /// Check a dataset, or convert raw corpus files into one.
    ValidateDataset(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Port {
    /// Gold sentence annotations from the dataset.
    Oracle,
    /// Aspects from the completion service, rule-based sentiment.
    Completion,
    /// Deterministic keyword aspects and rule-based sentiment.
    Fixture,
}

#[derive(Args, Debug)]
struct PortArgs {
    /// Where sentence aspects and sentiments come from.
    #[arg(long, value_enum, default_value = "oracle")]
    port: Port,
    /// Aspect prompt template file with a {SENTENCE} marker.
    #[arg(long)]
    aspect_template: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Dataset (JSONL), single review (JSON) or raw review text.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    port: PortArgs,
    /// Base score mode: default or sentiment.
    #[arg(long, default_value = "sentiment")]
    base_score: String,
    /// Review framework semantics: dfquad or mlp.
    #[arg(long, default_value = "dfquad")]
    semantics: String,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one DOT file per review next to the output.
    #[arg(long, requires = "out")]
    dot: bool,
}

#[derive(Args, Debug)]
struct ComboArgs {
    /// Combination by reference or canonical name (e.g. best-overall).
    #[arg(long, conflicts_with_all = ["base_score", "qbaf_semantics", "path"])]
    combo: Option<String>,
    /// Base score mode: default or sentiment.
    #[arg(long)]
    base_score: Option<String>,
    /// Review framework semantics: dfquad or mlp.
    #[arg(long)]
    qbaf_semantics: Option<String>,
    /// Aggregation path: path1/<dfquad|mlp> or path2/<binary|5-level>/<majority|all-accept>.
    #[arg(long)]
    path: Option<String>,
    /// Use each review's aspect ratings as aspect base scores.
    #[arg(long)]
    aspect_scores: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Dataset in JSONL form.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    combo: ComboArgs,
    #[command(flatten)]
    port: PortArgs,
    /// Output JSONL file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Dataset in JSONL form.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    port: PortArgs,
    /// Comma-separated combination names, or "all".
    #[arg(long, default_value = "all")]
    combos: String,
    /// Also run every combination with review aspect ratings injected.
    #[arg(long)]
    with_aspect_scores: bool,
    /// CSV report path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Dataset identifier recorded in the report; defaults to the file stem.
    #[arg(long)]
    dataset_id: Option<String>,
    /// Timestamp recorded in the report.
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args, Debug)]
struct E2eArgs {
    /// Dataset in JSONL form.
    #[arg(long)]
    dataset: PathBuf,
    /// Primer papers (JSON); the bundled primer when absent.
    #[arg(long)]
    primer: Option<PathBuf>,
    /// Answer every prompt with this text instead of calling a service.
    #[arg(long)]
    stub_response: Option<String>,
    /// Decisions JSONL path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics JSON path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Files to check (JSONL) or, with --from, raw corpus files to convert.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Raw corpus layout: pra, peerread or moprd.
    #[arg(long)]
    from: Option<String>,
    /// Where to write the converted dataset.
    #[arg(long, requires = "from")]
    write: Option<PathBuf>,
    /// Lowest value of the raw aspect rating scale.
    #[arg(long, default_value_t = 1.0)]
    scale_min: f64,
    /// Highest value of the raw aspect rating scale.
    #[arg(long, default_value_t = 5.0)]
    scale_max: f64,
}

/// Values read from `--config`; each present key replaces the flag value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    endpoint: Option<String>,
    api_key: Option<String>,
    model: Option<String>,
    timeout_ms: Option<u64>,
    max_retries: Option<usize>,
    max_in_flight: Option<usize>,
    jobs: Option<usize>,
    port: Option<Port>,
    aspect_template: Option<PathBuf>,
    combos: Option<Vec<String>>,
    with_aspect_scores: Option<bool>,
    primer: Option<PathBuf>,
    settings: Option<PipelineSettings>,
}

/// Error class deciding the exit status.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Status {
    Ok,
    Degraded,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Degraded) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(mut cli: Cli) -> Result<Status, Failure> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    apply_file_config(&mut cli, &file);
    let settings = file.settings.unwrap_or_default();

    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(anyhow!("--jobs must be at least 1").into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .context("configuring worker pool")?;

    let endpoint = &cli.endpoint;
    match &cli.command {
        Command::Extract(a) => cmd_extract(a, endpoint, &settings),
        Command::Predict(a) => cmd_predict(a, endpoint, &settings),
        Command::Grid(a) => cmd_grid(a, endpoint, &settings),
        Command::E2e(a) => cmd_e2e(a, endpoint),
        Command::ValidateDataset(a) => cmd_validate(a),
    }
}

fn apply_file_config(cli: &mut Cli, file: &FileConfig) {
    let e = &mut cli.endpoint;
    if let Some(v) = &file.endpoint {
        e.endpoint = Some(v.clone());
    }
    if let Some(v) = &file.api_key {
        e.api_key = Some(v.clone());
    }
    if let Some(v) = &file.model {
        e.model = v.clone();
    }
    if let Some(v) = file.timeout_ms {
        e.timeout_ms = v;
    }
    if let Some(v) = file.max_retries {
        e.max_retries = v;
    }
    if let Some(v) = file.max_in_flight {
        e.max_in_flight = v;
    }
    if let Some(v) = file.jobs {
        cli.jobs = Some(v);
    }
    let port_args = match &mut cli.command {
        Command::Extract(a) => Some(&mut a.port),
        Command::Predict(a) => Some(&mut a.port),
        Command::Grid(a) => {
            if let Some(v) = &file.combos {
                a.combos = v.join(",");
            }
            if let Some(v) = file.with_aspect_scores {
                a.with_aspect_scores = v;
            }
            Some(&mut a.port)
        }
        Command::E2e(a) => {
            if let Some(v) = &file.primer {
                a.primer = Some(v.clone());
            }
            None
        }
        Command::ValidateDataset(_) => None,
    };
    if let Some(p) = port_args {
        if let Some(v) = file.port {
            p.port = v;
        }
        if let Some(v) = &file.aspect_template {
            p.aspect_template = Some(v.clone());
        }
    }
}

fn completion_client(args: &EndpointArgs) -> Result<Arc<dyn Completion>, Failure> {
    let url = args
        .endpoint
        .clone()
        .ok_or_else(|| anyhow!("no completion endpoint: pass --endpoint or set PEERARG_ENDPOINT"))?;
    let mut ep = CompletionEndpoint::new(url, args.model.clone());
    ep.timeout = Duration::from_millis(args.timeout_ms);
    ep.max_retries = args.max_retries;
    ep.max_in_flight = args.max_in_flight;
    ep.api_key = args.api_key.clone();
    let client = CompletionClient::new(ep).map_err(|e| anyhow!(e))?;
    Ok(Arc::new(client))
}

fn classification_source(port: &PortArgs, endpoint: &EndpointArgs) -> Result<ClassificationSource, Failure> {
    Ok(match port.port {
        Port::Oracle => ClassificationSource::Oracle,
        Port::Fixture => ClassificationSource::Ports {
            classifier: Arc::new(KeywordAspectClassifier),
            sentiment: Arc::new(RuleBasedSentiment),
        },
        Port::Completion => {
            let template = match &port.aspect_template {
                Some(path) => PromptTemplate::load(path).map_err(|e| anyhow!("{}: {e}", path.display()))?,
                None => AspectPromptTemplate::default_template().compile(),
            };
            ClassificationSource::Ports {
                classifier: Arc::new(LlmAspectClassifier::new(completion_client(endpoint)?, template)),
                sentiment: Arc::new(RuleBasedSentiment),
            }
        }
    })
}

fn load_dataset(path: &Path, port: Option<Port>) -> Result<Vec<PaperRecord>, Failure> {
    let papers = load_jsonl(path).with_context(|| format!("loading {}", path.display()))?;
    if papers.is_empty() {
        return Err(anyhow!("{} contains no papers", path.display()).into());
    }
    if port == Some(Port::Oracle) {
        let missing = papers
            .iter()
            .flat_map(|p| &p.reviews)
            .find(|r| r.sentence_annotations.is_none());
        if let Some(r) = missing {
            return Err(anyhow!("the oracle port needs sentence annotations; review {} has none", r.review_id).into());
        }
    }
    Ok(papers)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Reviews named in an extract input: (paper id, review).
fn extract_inputs(path: &Path) -> Result<Vec<(Option<String>, ReviewRecord)>, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(review) = serde_json::from_str::<ReviewRecord>(&text) {
        return Ok(vec![(None, review)]);
    }
    let looks_like_json = text.trim_start().starts_with('{') || text.trim_start().starts_with('[');
    if looks_like_json {
        let papers = load_jsonl(path).with_context(|| format!("loading {}", path.display()))?;
        return Ok(papers
            .into_iter()
            .flat_map(|p| {
                let id = p.paper_id;
                p.reviews.into_iter().map(move |r| (Some(id.clone()), r))
            })
            .collect());
    }
    let stem = path.file_stem().map_or("review".into(), |s| s.to_string_lossy().into_owned());
    Ok(vec![(None, ReviewRecord { review_id: stem, text, sentence_annotations: None, aspect_scores: None })])
}

#[derive(Serialize)]
struct ExtractedReview {
    #[serde(skip_serializing_if = "Option::is_none")]
    paper_id: Option<String>,
    review_id: String,
    framework: serde_json::Value,
    strengths: peerarg_core::StrengthAssignment,
    rescored_bases: std::collections::BTreeMap<peerarg_core::AspectLabel, f64>,
    decision_strength: f64,
}

fn dot_file_name(out: &Path, paper_id: Option<&str>, review_id: &str) -> PathBuf {
    let stem = out.file_stem().map_or("extract".into(), |s| s.to_string_lossy().into_owned());
    let id: String = [paper_id.unwrap_or(""), review_id]
        .iter()
        .filter(|s| !s.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join("-")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    out.with_file_name(format!("{stem}.{id}.dot"))
}

fn cmd_extract(a: &ExtractArgs, endpoint: &EndpointArgs, settings: &PipelineSettings) -> Result<Status, Failure> {
    let base: BaseScoreMode = a.base_score.parse().map_err(|e: String| anyhow!(e))?;
    let kind: SemanticsKind = a.semantics.parse().map_err(|e| anyhow!("{e}"))?;
    let inputs = extract_inputs(&a.input)?;
    if a.port.port == Port::Oracle {
        if let Some((_, r)) = inputs.iter().find(|(_, r)| r.sentence_annotations.is_none()) {
            return Err(anyhow!("the oracle port needs sentence annotations; review {} has none", r.review_id).into());
        }
    }
    let source = classification_source(&a.port, endpoint)?;
    let mut cfg = ExtractionConfig::new(base, settings.semantics(kind));
    cfg.decision_base_score = settings.decision_base_score;

    let mut results = Vec::new();
    let mut failed = 0;
    for (paper_id, review) in &inputs {
        let outcome = source
            .classify(review)
            .map_err(anyhow::Error::from)
            .and_then(|c| build_review_qbaf(&c, &cfg).map_err(anyhow::Error::from));
        match outcome {
            Ok(ex) => {
                if a.dot {
                    let out = a.out.as_deref().expect("clap enforces --out with --dot");
                    let path = dot_file_name(out, paper_id.as_deref(), &review.review_id);
                    std::fs::write(&path, export_dot(ex.qbaf.qbaf(), Some(&ex.strengths)))
                        .with_context(|| format!("writing {}", path.display()))
                        .map_err(runtime)?;
                }
                results.push(ExtractedReview {
                    paper_id: paper_id.clone(),
                    review_id: review.review_id.clone(),
                    framework: ex.qbaf.qbaf().to_json_value(),
                    decision_strength: ex.decision_strength(),
                    strengths: ex.strengths,
                    rescored_bases: ex.rescored_bases,
                })
            }
            Err(e) => {
                failed += 1;
                log::error!("review {}: {e:#}", review.review_id);
            }
        }
    }
    let mut w = output(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &results).map_err(runtime)?;
    writeln!(w).and_then(|_| w.flush()).map_err(runtime)?;
    if failed == inputs.len() {
        return Err(runtime(anyhow!("no review could be extracted")));
    }
    Ok(if failed > 0 { Status::Degraded } else { Status::Ok })
}

fn parse_combo(a: &ComboArgs) -> Result<HyperparamCombo, Failure> {
    if let Some(name) = &a.combo {
        let mut c: HyperparamCombo = name.parse().map_err(anyhow::Error::from)?;
        c.use_review_aspect_scores |= a.aspect_scores;
        return Ok(c);
    }
    let (Some(base), Some(sem), Some(path)) = (&a.base_score, &a.qbaf_semantics, &a.path) else {
        return Err(anyhow!("select a combination with --combo, or give --base-score, --qbaf-semantics and --path").into());
    };
    let mut name = format!("{base}/{sem}/{path}");
    if a.aspect_scores {
        name.push_str("+aspect-scores");
    }
    Ok(name.parse().map_err(anyhow::Error::from)?)
}

fn degraded(failures: usize, total: usize) -> bool {
    failures as f64 > DEGRADED_FAILURE_SHARE * total as f64
}

fn cmd_predict(a: &PredictArgs, endpoint: &EndpointArgs, settings: &PipelineSettings) -> Result<Status, Failure> {
    use rayon::prelude::*;
    let combo = parse_combo(&a.combo)?;
    let papers = load_dataset(&a.dataset, Some(a.port.port))?;
    let source = classification_source(&a.port, endpoint)?;
    let cache = ClassificationCache::new();
    let decisions: Vec<_> = papers
        .par_iter()
        .map(|p| run_paper(p, &combo, &source, &cache, settings))
        .collect();
    let mut w = output(a.out.as_deref())?;
    let mut failures = 0;
    for (paper, d) in papers.iter().zip(decisions) {
        let decision = d.unwrap_or_else(|e| {
            failures += 1;
            log::error!("paper {}: {e}", paper.paper_id);
            peerarg_core::FinalDecision::new(0.0, combo.name(), DecisionTrace::Failed { error: e.to_string() })
        });
        let line = peerarg_core::PaperDecision { paper_id: paper.paper_id.clone(), decision };
        serde_json::to_writer(&mut w, &line).map_err(runtime)?;
        writeln!(w).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    Ok(if degraded(failures, papers.len()) { Status::Degraded } else { Status::Ok })
}

fn select_combos(list: &str, with_aspect_scores: bool) -> Result<Vec<HyperparamCombo>, Failure> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(enumerate_combos(with_aspect_scores));
    }
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c: HyperparamCombo = name.parse().map_err(anyhow::Error::from)?;
        out.push(c);
        if with_aspect_scores && !c.use_review_aspect_scores {
            out.push(HyperparamCombo { use_review_aspect_scores: true, ..c });
        }
    }
    if out.is_empty() {
        return Err(anyhow!("--combos selects nothing").into());
    }
    Ok(out)
}

fn cmd_grid(a: &GridArgs, endpoint: &EndpointArgs, settings: &PipelineSettings) -> Result<Status, Failure> {
    let combos = select_combos(&a.combos, a.with_aspect_scores)?;
    let papers = load_dataset(&a.dataset, Some(a.port.port))?;
    let source = classification_source(&a.port, endpoint)?;
    let opts = GridOptions {
        dataset_id: a
            .dataset_id
            .clone()
            .unwrap_or_else(|| a.dataset.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned())),
        timestamp: a.timestamp.clone(),
        settings: *settings,
    };
    let report = run_grid(&papers, &combos, &source, &opts).map_err(runtime)?;
    if let Some(p) = &a.csv {
        emit_report(&report, ReportFormat::Csv, p).map_err(runtime)?;
    }
    if let Some(p) = &a.json {
        emit_report(&report, ReportFormat::Json, p).map_err(runtime)?;
    }
    if a.csv.is_none() && a.json.is_none() {
        let mut out = std::io::stdout().lock();
        for row in &report.rows {
            writeln!(out, "{}\taccuracy={:.4}\tmacro_f1={:.4}\tfailures={}", row.name, row.accuracy, row.macro_f1, row.failures)
                .map_err(runtime)?;
        }
    }
    for row in report.rows.iter().filter(|r| r.degraded) {
        log::warn!("{} degraded: {} of {} papers failed", row.name, row.failures, report.paper_count);
    }
    Ok(if report.rows.iter().any(|r| r.degraded) { Status::Degraded } else { Status::Ok })
}

struct FixedCompletion(String);

impl Completion for FixedCompletion {
    fn complete(&self, _prompt: &str) -> Result<String, CompletionError> {
        Ok(self.0.clone())
    }

    fn config_id(&self) -> String {
        format!("fixed:{}", self.0)
    }
}

fn cmd_e2e(a: &E2eArgs, endpoint: &EndpointArgs) -> Result<Status, Failure> {
    let primer = match &a.primer {
        Some(p) => E2EPrimer::load(p).map_err(|e| anyhow!("primer {}: {e}", p.display()))?,
        None => E2EPrimer::default_primer(),
    };
    let papers = load_dataset(&a.dataset, None)?;
    let completion: Arc<dyn Completion> = match &a.stub_response {
        Some(text) => Arc::new(FixedCompletion(text.clone())),
        None => completion_client(endpoint)?,
    };
    let summary = run_e2e(&papers, &primer, completion.as_ref()).map_err(runtime)?;
    let mut w = output(a.out.as_deref())?;
    for d in &summary.decisions {
        serde_json::to_writer(&mut w, d).map_err(runtime)?;
        writeln!(w).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    if let Some(p) = &a.summary {
        #[derive(Serialize)]
        struct Metrics<'a> {
            papers: usize,
            accuracy: f64,
            macro_f1: f64,
            unparseable: usize,
            failures: usize,
            confusion: &'a peerarg_core::evaluation::Confusion,
        }
        let m = Metrics {
            papers: papers.len(),
            accuracy: summary.accuracy,
            macro_f1: summary.macro_f1,
            unparseable: summary.unparseable,
            failures: summary.failures,
            confusion: &summary.confusion,
        };
        std::fs::write(p, serde_json::to_string_pretty(&m).map_err(runtime)?)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(runtime)?;
    }
    eprintln!(
        "papers={} accuracy={:.4} macro_f1={:.4} unparseable={} failures={}",
        papers.len(),
        summary.accuracy,
        summary.macro_f1,
        summary.unparseable,
        summary.failures
    );
    Ok(if degraded(summary.failures, papers.len()) { Status::Degraded } else { Status::Ok })
}

fn cmd_validate(a: &ValidateArgs) -> Result<Status, Failure> {
    let papers = match &a.from {
        Some(kind) => {
            let kind: DatasetSource = kind.parse().map_err(|e: String| anyhow!(e))?;
            let opts = AdapterOptions { scale_min: a.scale_min, scale_max: a.scale_max, ..AdapterOptions::default() };
            let papers = adapt_source(&a.inputs, kind, &opts).map_err(anyhow::Error::from)?;
            if let Some(out) = &a.write {
                write_jsonl(out, &papers).map_err(runtime)?;
            }
            papers
        }
        None => {
            let mut all = Vec::new();
            for p in &a.inputs {
                all.extend(load_jsonl(p).with_context(|| format!("loading {}", p.display()))?);
            }
            all
        }
    };
    let reviews: usize = papers.iter().map(|p| p.reviews.len()).sum();
    let annotated = papers
        .iter()
        .flat_map(|p| &p.reviews)
        .filter(|r| r.sentence_annotations.is_some())
        .count();
    let accepted = papers
        .iter()
        .filter(|p| p.gold_decision == peerarg_core::Verdict::Accept)
        .count();
    println!(
        "papers={} reviews={} annotated_reviews={} accepted={} rejected={}",
        papers.len(),
        reviews,
        annotated,
        accepted,
        papers.len() - accepted
    );
    Ok(Status::Ok)
}
