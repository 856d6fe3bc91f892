//! Metrics, the hyperparameter grid, and run reports.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::Completion;
use crate::aggregation::{
    combine, decide_path1, decide_path2, trim_extraction, AggregationError, DecisionTrace, FinalDecision,
    Interpretation, PaperDecision, Verdict, VoteAggregation,
};
use crate::datasets::{PaperRecord, ReviewRecord};
use crate::e2e::{predict_e2e, E2EPrimer};
use crate::extraction::{
    build_review_qbaf, classify_review, split_and_clean, AspectClassifier, BaseScoreMode, ClassifiedSentence,
    ExtractionConfig, ExtractionError, SentimentAnalyzer,
};
use crate::adapters::OracleAnnotations;
use crate::semantics::{SemanticsConfig, SemanticsKind};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and gold lists differ in length ({pred} vs {gold})")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("no predictions to score")]
    Empty,
    #[error("no papers to evaluate")]
    NoPapers,
    #[error("no hyperparameter combinations selected")]
    NoCombos,
    #[error("unknown combination {0:?}")]
    UnknownCombo(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("review {0} has no sentence annotations; the oracle port needs annotated data")]
    NoAnnotations(String),
    #[error("review {review_id}: {source}")]
    Extraction {
        review_id: String,
        #[source]
        source: ExtractionError,
    },
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
}

/// Binary confusion counts with accept as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pred: &[Verdict], gold: &[Verdict]) -> Result<Self, EvalError> {
        if pred.len() != gold.len() {
            return Err(EvalError::LengthMismatch { pred: pred.len(), gold: gold.len() });
        }
        if pred.is_empty() {
            return Err(EvalError::Empty);
        }
        let mut c = Confusion::default();
        for (p, g) in pred.iter().zip(gold) {
            match (p, g) {
                (Verdict::Accept, Verdict::Accept) => c.tp += 1,
                (Verdict::Accept, Verdict::Reject) => c.fp += 1,
                (Verdict::Reject, Verdict::Reject) => c.tn += 1,
                (Verdict::Reject, Verdict::Accept) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Mean of the accept and reject F1 scores. A class with no true
    /// positives, false positives or false negatives scores 0.
    pub fn macro_f1(&self) -> f64 {
        let f1 = |tp: usize, fp: usize, fn_: usize| {
            let denom = 2 * tp + fp + fn_;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        };
        let accept = f1(self.tp, self.fp, self.fn_);
        let reject = f1(self.tn, self.fn_, self.fp);
        (accept + reject) / 2.0
    }
}

pub fn macro_f1(pred: &[Verdict], gold: &[Verdict]) -> Result<f64, EvalError> {
    Confusion::from_pairs(pred, gold).map(|c| c.macro_f1())
}

pub fn accuracy(pred: &[Verdict], gold: &[Verdict]) -> Result<f64, EvalError> {
    Confusion::from_pairs(pred, gold).map(|c| c.accuracy())
}

/// How the pre-MPAF is turned into a decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum AggregationPath {
    /// Average into an MPAF and evaluate it.
    Argumentation { semantics: SemanticsKind },
    /// Interpret each review's decision strength and vote.
    Voting { interpretation: Interpretation, aggregation: VoteAggregation },
}

/// One cell of the hyperparameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HyperparamCombo {
    pub base_score_mode: BaseScoreMode,
    pub qbaf_semantics: SemanticsKind,
    pub path: AggregationPath,
    /// Use each review's own aspect ratings as aspect base scores.
    pub use_review_aspect_scores: bool,
}

impl HyperparamCombo {
    /// Canonical name, e.g. `sentiment/dfquad/path2/5-level/majority`, with a
    /// `+aspect-scores` suffix when review ratings are injected.
    pub fn name(&self) -> String {
        let path = match self.path {
            AggregationPath::Argumentation { semantics } => format!("path1/{}", semantics.name()),
            AggregationPath::Voting { interpretation, aggregation } => {
                format!("path2/{}/{}", interpretation.name(), aggregation.name())
            }
        };
        let suffix = if self.use_review_aspect_scores { "+aspect-scores" } else { "" };
        format!("{}/{}/{}{}", self.base_score_mode.name(), self.qbaf_semantics.name(), path, suffix)
    }

    /// The four reference combinations by name: `pra-best`,
    /// `peerread-best`, `peerread-ratings-best`, `best-overall`.
    pub fn named(name: &str) -> Option<Self> {
        let voting = |interpretation, aggregation| AggregationPath::Voting { interpretation, aggregation };
        let combo = |base, sem, path, scores| HyperparamCombo {
            base_score_mode: base,
            qbaf_semantics: sem,
            path,
            use_review_aspect_scores: scores,
        };
        use BaseScoreMode::*;
        use SemanticsKind::*;
        Some(match name {
            "pra-best" => combo(Sentiment, MlpBased, voting(Interpretation::Binary, VoteAggregation::Majority), false),
            "peerread-best" => {
                combo(Sentiment, DfQuad, AggregationPath::Argumentation { semantics: DfQuad }, false)
            }
            "peerread-ratings-best" => {
                combo(Default, DfQuad, voting(Interpretation::FiveLevel, VoteAggregation::AllAccept), true)
            }
            "best-overall" => combo(Sentiment, DfQuad, voting(Interpretation::FiveLevel, VoteAggregation::Majority), false),
            _ => return None,
        })
    }

    pub const NAMED: [&'static str; 4] = ["pra-best", "peerread-best", "peerread-ratings-best", "best-overall"];
}

impl fmt::Display for HyperparamCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for HyperparamCombo {
    type Err = EvalError;

    /// Accepts a reference name or a canonical name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(c) = HyperparamCombo::named(s) {
            return Ok(c);
        }
        let unknown = || EvalError::UnknownCombo(s.to_string());
        let (body, scores) = match s.strip_suffix("+aspect-scores") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let parts: Vec<&str> = body.split('/').collect();
        let (base, sem, path) = match parts.as_slice() {
            [base, sem, "path1", agg] => (base, sem, AggregationPath::Argumentation {
                semantics: agg.parse().map_err(|_| unknown())?,
            }),
            [base, sem, "path2", interp, agg] => (base, sem, AggregationPath::Voting {
                interpretation: interp.parse().map_err(|_| unknown())?,
                aggregation: agg.parse().map_err(|_| unknown())?,
            }),
            _ => return Err(unknown()),
        };
        Ok(HyperparamCombo {
            base_score_mode: base.parse().map_err(|_| unknown())?,
            qbaf_semantics: sem.parse().map_err(|_| unknown())?,
            path,
            use_review_aspect_scores: scores,
        })
    }
}

/// All 24 combinations (base score × QBAF semantics × six aggregation
/// paths); with `include_aspect_scores`, each appears with and without
/// review aspect-score injection.
pub fn enumerate_combos(include_aspect_scores: bool) -> Vec<HyperparamCombo> {
    let mut paths = Vec::new();
    for semantics in [SemanticsKind::DfQuad, SemanticsKind::MlpBased] {
        paths.push(AggregationPath::Argumentation { semantics });
    }
    for interpretation in [Interpretation::Binary, Interpretation::FiveLevel] {
        for aggregation in [VoteAggregation::Majority, VoteAggregation::AllAccept] {
            paths.push(AggregationPath::Voting { interpretation, aggregation });
        }
    }
    let flags: &[bool] = if include_aspect_scores { &[false, true] } else { &[false] };
    let mut out = Vec::new();
    for &use_review_aspect_scores in flags {
        for base_score_mode in [BaseScoreMode::Default, BaseScoreMode::Sentiment] {
            for qbaf_semantics in [SemanticsKind::DfQuad, SemanticsKind::MlpBased] {
                for &path in &paths {
                    out.push(HyperparamCombo { base_score_mode, qbaf_semantics, path, use_review_aspect_scores });
                }
            }
        }
    }
    out
}

/// Where sentence aspects and sentiments come from.
#[derive(Clone)]
pub enum ClassificationSource {
    /// Gold sentence annotations carried by the dataset.
    Oracle,
    /// Split the raw review text and call the two ports.
    Ports {
        classifier: Arc<dyn AspectClassifier>,
        sentiment: Arc<dyn SentimentAnalyzer>,
    },
}

impl ClassificationSource {
    pub fn config_id(&self) -> String {
        match self {
            ClassificationSource::Oracle => "oracle".into(),
            ClassificationSource::Ports { classifier, sentiment } => {
                format!("{}|{}", classifier.config_id(), sentiment.config_id())
            }
        }
    }

    pub fn classify(&self, review: &ReviewRecord) -> Result<Vec<ClassifiedSentence>, PipelineError> {
        let wrap = |source| PipelineError::Extraction { review_id: review.review_id.clone(), source };
        match self {
            ClassificationSource::Oracle => {
                let ann = review
                    .sentence_annotations
                    .clone()
                    .ok_or_else(|| PipelineError::NoAnnotations(review.review_id.clone()))?;
                let oracle = OracleAnnotations::new(ann);
                classify_review(&oracle.sentences(), &oracle, &oracle).map_err(wrap)
            }
            ClassificationSource::Ports { classifier, sentiment } => {
                classify_review(&split_and_clean(&review.text), classifier.as_ref(), sentiment.as_ref()).map_err(wrap)
            }
        }
    }
}

/// Classified sentences keyed by (review content hash, source configuration).
#[derive(Default)]
pub struct ClassificationCache {
    entries: Mutex<HashMap<(String, String), Arc<Vec<ClassifiedSentence>>>>,
}

impl ClassificationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_classify(
        &self,
        review: &ReviewRecord,
        source: &ClassificationSource,
    ) -> Result<Arc<Vec<ClassifiedSentence>>, PipelineError> {
        let content = serde_json::to_string(&(&review.text, &review.sentence_annotations))
            .expect("review content serializes");
        let key = (crate::sha256_hex(content.as_bytes()), source.config_id());
        if let Some(hit) = self.entries.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        let classified = Arc::new(source.classify(review)?);
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, classified.clone());
        Ok(classified)
    }
}

/// Numeric settings shared by every combination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub convergence_epsilon: f64,
    pub max_iterations: usize,
    pub logit_clamp_epsilon: f64,
    pub decision_base_score: f64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        let s = SemanticsConfig::df_quad();
        PipelineSettings {
            convergence_epsilon: s.convergence_epsilon,
            max_iterations: s.max_iterations,
            logit_clamp_epsilon: s.logit_clamp_epsilon,
            decision_base_score: 0.5,
        }
    }
}

impl PipelineSettings {
    pub fn semantics(&self, kind: SemanticsKind) -> SemanticsConfig {
        SemanticsConfig {
            kind,
            convergence_epsilon: self.convergence_epsilon,
            max_iterations: self.max_iterations,
            logit_clamp_epsilon: self.logit_clamp_epsilon,
        }
    }

    pub fn extraction_config(&self, combo: &HyperparamCombo, review: &ReviewRecord) -> ExtractionConfig {
        ExtractionConfig {
            base_score_mode: combo.base_score_mode,
            semantics: self.semantics(combo.qbaf_semantics),
            aspect_base_scores: if combo.use_review_aspect_scores { review.aspect_scores.clone() } else { None },
            decision_base_score: self.decision_base_score,
        }
    }
}

/// Runs extraction, combination and aggregation for one paper whose reviews
/// have already been classified (one entry per review, in order).
pub fn predict_paper(
    paper: &PaperRecord,
    classified: &[Arc<Vec<ClassifiedSentence>>],
    combo: &HyperparamCombo,
    settings: &PipelineSettings,
) -> Result<FinalDecision, PipelineError> {
    let mut trimmed = Vec::with_capacity(paper.reviews.len());
    for (review, sentences) in paper.reviews.iter().zip(classified) {
        let cfg = settings.extraction_config(combo, review);
        let extraction = build_review_qbaf(sentences, &cfg)
            .map_err(|source| PipelineError::Extraction { review_id: review.review_id.clone(), source })?;
        trimmed.push(trim_extraction(&extraction));
    }
    let pre = combine(&trimmed)?;
    let mut decision = match combo.path {
        AggregationPath::Argumentation { semantics } => decide_path1(&pre, &settings.semantics(semantics))?,
        AggregationPath::Voting { interpretation, aggregation } => decide_path2(&pre, interpretation, aggregation)?,
    };
    decision.path = combo.name();
    Ok(decision)
}

/// Classifies (through the cache) and predicts one paper.
pub fn run_paper(
    paper: &PaperRecord,
    combo: &HyperparamCombo,
    source: &ClassificationSource,
    cache: &ClassificationCache,
    settings: &PipelineSettings,
) -> Result<FinalDecision, PipelineError> {
    let classified = paper
        .reviews
        .iter()
        .map(|r| cache.get_or_classify(r, source))
        .collect::<Result<Vec<_>, _>>()?;
    predict_paper(paper, &classified, combo, settings)
}

fn failed_decision(path: String, error: impl fmt::Display) -> FinalDecision {
    FinalDecision::new(0.0, path, DecisionTrace::Failed { error: error.to_string() })
}

/// Scores and bookkeeping for one combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComboReport {
    pub name: String,
    pub combo: HyperparamCombo,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub failures: usize,
    pub degraded: bool,
    pub decisions: Vec<PaperDecision>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset_id: String,
    #[serde(default)]
    pub timestamp: Option<String>,
    pub config_hash: String,
    pub paper_count: usize,
    pub rows: Vec<ComboReport>,
}

#[derive(Clone, Debug, Default)]
pub struct GridOptions {
    pub dataset_id: String,
    pub timestamp: Option<String>,
    pub settings: PipelineSettings,
}

/// Share of failed papers above which a combination is flagged degraded.
pub const DEGRADED_FAILURE_SHARE: f64 = 0.10;

fn score_row(combo: HyperparamCombo, papers: &[PaperRecord], outcomes: Vec<Result<FinalDecision, String>>) -> ComboReport {
    let mut failures = 0;
    let decisions: Vec<PaperDecision> = papers
        .iter()
        .zip(outcomes)
        .map(|(p, outcome)| {
            let decision = outcome.unwrap_or_else(|e| {
                failures += 1;
                log::warn!("{}: paper {} failed: {e}", combo.name(), p.paper_id);
                failed_decision(combo.name(), e)
            });
            PaperDecision { paper_id: p.paper_id.clone(), decision }
        })
        .collect();
    let pred: Vec<Verdict> = decisions.iter().map(|d| d.decision.verdict).collect();
    let gold: Vec<Verdict> = papers.iter().map(|p| p.gold_decision).collect();
    let confusion = Confusion::from_pairs(&pred, &gold).expect("non-empty, equal lengths");
    ComboReport {
        name: combo.name(),
        combo,
        confusion,
        accuracy: confusion.accuracy(),
        macro_f1: confusion.macro_f1(),
        failures,
        degraded: failures as f64 > DEGRADED_FAILURE_SHARE * papers.len() as f64,
        decisions,
    }
}

/// Runs every combination over every paper. Reviews are classified once per
/// source configuration and reused across combinations. Per-paper failures
/// count as rejections and are recorded in the row.
pub fn run_grid(
    papers: &[PaperRecord],
    combos: &[HyperparamCombo],
    source: &ClassificationSource,
    opts: &GridOptions,
) -> Result<RunReport, EvalError> {
    if papers.is_empty() {
        return Err(EvalError::NoPapers);
    }
    if combos.is_empty() {
        return Err(EvalError::NoCombos);
    }
    let cache = ClassificationCache::new();
    let classified: Vec<Result<Vec<Arc<Vec<ClassifiedSentence>>>, String>> = papers
        .par_iter()
        .map(|p| {
            p.reviews
                .iter()
                .map(|r| cache.get_or_classify(r, source))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut rows: Vec<ComboReport> = combos
        .iter()
        .map(|combo| {
            let outcomes = papers
                .par_iter()
                .zip(classified.par_iter())
                .map(|(paper, c)| {
                    let c = c.as_ref().map_err(Clone::clone)?;
                    predict_paper(paper, c, combo, &opts.settings).map_err(|e| e.to_string())
                })
                .collect();
            score_row(*combo, papers, outcomes)
        })
        .collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    rows.dedup_by(|a, b| a.name == b.name);

    let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    let fingerprint = serde_json::to_string(&(&names, source.config_id(), &opts.settings)).expect("serializable");
    Ok(RunReport {
        dataset_id: opts.dataset_id.clone(),
        timestamp: opts.timestamp.clone(),
        config_hash: crate::sha256_hex(fingerprint.as_bytes()),
        paper_count: papers.len(),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    combo: &'a str,
    base_score: &'a str,
    qbaf_semantics: &'a str,
    path: &'a str,
    interpretation: &'a str,
    aggregation: &'a str,
    aspect_scores: bool,
    papers: usize,
    tp: usize,
    fp: usize,
    tn: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    accuracy: f64,
    macro_f1: f64,
    failures: usize,
    degraded: bool,
}

/// Writes `r` as pretty JSON or as one CSV line per combination.
pub fn emit_report(r: &RunReport, format: ReportFormat, path: &Path) -> Result<(), EvalError> {
    match format {
        ReportFormat::Json => {
            std::fs::write(path, serde_json::to_string_pretty(r)?)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for row in &r.rows {
                let c = &row.combo;
                let (p, interp, agg) = match c.path {
                    AggregationPath::Argumentation { semantics } => ("path1", "-", semantics.name()),
                    AggregationPath::Voting { interpretation, aggregation } => {
                        ("path2", interpretation.name(), aggregation.name())
                    }
                };
                w.serialize(CsvRow {
                    combo: &row.name,
                    base_score: c.base_score_mode.name(),
                    qbaf_semantics: c.qbaf_semantics.name(),
                    path: p,
                    interpretation: interp,
                    aggregation: agg,
                    aspect_scores: c.use_review_aspect_scores,
                    papers: row.confusion.total(),
                    tp: row.confusion.tp,
                    fp: row.confusion.fp,
                    tn: row.confusion.tn,
                    fn_: row.confusion.fn_,
                    accuracy: row.accuracy,
                    macro_f1: row.macro_f1,
                    failures: row.failures,
                    degraded: row.degraded,
                })?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn load_report(path: &Path) -> Result<RunReport, EvalError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Results of the end-to-end baseline on a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E2eSummary {
    pub confusion: Confusion,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub unparseable: usize,
    pub failures: usize,
    pub decisions: Vec<PaperDecision>,
}

/// Runs the end-to-end baseline on every paper. Service failures are
/// recorded as rejections.
pub fn run_e2e(
    papers: &[PaperRecord],
    primer: &E2EPrimer,
    completion: &dyn Completion,
) -> Result<E2eSummary, EvalError> {
    if papers.is_empty() {
        return Err(EvalError::NoPapers);
    }
    let outcomes: Vec<Result<FinalDecision, String>> = papers
        .par_iter()
        .map(|p| {
            let reviews: Vec<String> = p.reviews.iter().map(|r| r.text.clone()).collect();
            predict_e2e(&reviews, primer, completion).map_err(|e| e.to_string())
        })
        .collect();
    let mut failures = 0;
    let decisions: Vec<PaperDecision> = papers
        .iter()
        .zip(outcomes)
        .map(|(p, o)| PaperDecision {
            paper_id: p.paper_id.clone(),
            decision: o.unwrap_or_else(|e| {
                failures += 1;
                failed_decision("e2e".into(), e)
            }),
        })
        .collect();
    let unparseable = decisions
        .iter()
        .filter(|d| matches!(d.decision.trace, DecisionTrace::EndToEnd { unparseable: true, .. }))
        .count();
    let pred: Vec<Verdict> = decisions.iter().map(|d| d.decision.verdict).collect();
    let gold: Vec<Verdict> = papers.iter().map(|p| p.gold_decision).collect();
    let confusion = Confusion::from_pairs(&pred, &gold)?;
    Ok(E2eSummary {
        confusion,
        accuracy: confusion.accuracy(),
        macro_f1: confusion.macro_f1(),
        unparseable,
        failures,
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Verdict::*;

    #[test]
    fn macro_f1_examples() {
        assert_eq!(macro_f1(&[Accept, Reject, Reject], &[Accept, Reject, Reject]).unwrap(), 1.0);
        assert!((macro_f1(&[Accept, Accept], &[Accept, Reject]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(macro_f1(&[Reject, Accept], &[Accept, Reject]).unwrap(), 0.0);
        assert!(matches!(macro_f1(&[Accept], &[]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(macro_f1(&[], &[]), Err(EvalError::Empty)));
    }

    #[test]
    fn accuracy_counts() {
        assert_eq!(accuracy(&[Accept, Reject, Accept, Reject], &[Accept, Accept, Reject, Reject]).unwrap(), 0.5);
    }

    #[test]
    fn grid_has_24_cells() {
        let combos = enumerate_combos(false);
        assert_eq!(combos.len(), 24);
        let names: std::collections::BTreeSet<_> = combos.iter().map(|c| c.name()).collect();
        assert_eq!(names.len(), 24);
        assert!(combos.contains(&HyperparamCombo::named("best-overall").unwrap()));
        assert!(combos.contains(&HyperparamCombo::named("pra-best").unwrap()));
        assert_eq!(enumerate_combos(true).len(), 48);
    }

    #[test]
    fn combo_names_round_trip() {
        for c in enumerate_combos(true) {
            assert_eq!(c.name().parse::<HyperparamCombo>().unwrap(), c);
        }
        for n in HyperparamCombo::NAMED {
            assert_eq!(n.parse::<HyperparamCombo>().unwrap(), HyperparamCombo::named(n).unwrap());
        }
        assert_eq!(
            HyperparamCombo::named("best-overall").unwrap().name(),
            "sentiment/dfquad/path2/5-level/majority"
        );
        assert!("nonsense".parse::<HyperparamCombo>().is_err());
    }
}
