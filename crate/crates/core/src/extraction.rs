//! Review → review QBAF.
//!
//! Sentences are classified into aspects and sentiment through two ports,
//! turned into text arguments attacking or supporting aspect arguments, and
//! evaluated in two stages: first the text → aspect layer to obtain aspect
//! strengths, then a reduced aspect → decision layer in which each aspect
//! carries a re-scored base `2·|s − 0.5|` and attacks the decision when its
//! strength is below 0.5, supporting it otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::qbaf::{ArgumentId, ArgumentKind, AspectLabel, Qbaf, QbafError, Relation, ReviewQbaf};
use crate::semantics::{evaluate, SemanticsConfig, SemanticsError, StrengthAssignment};

/// A cleaned review sentence and its position in the review.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReviewSentence {
    pub index: usize,
    pub text: String,
}

/// Classifier output label: one of the seven aspects, or `OTHER`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AspectClass {
    Aspect(AspectLabel),
    Other,
}

impl AspectClass {
    pub fn code(self) -> &'static str {
        match self {
            AspectClass::Aspect(a) => a.code(),
            AspectClass::Other => "OTHER",
        }
    }
}

impl fmt::Display for AspectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AspectClass {
    type Err = QbafError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("OTHER") {
            Ok(AspectClass::Other)
        } else {
            s.parse().map(AspectClass::Aspect)
        }
    }
}

impl Serialize for AspectClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for AspectClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Makes a label set well formed: empty becomes `{OTHER}`, and `OTHER` is
/// dropped when real aspects are present.
pub fn normalize_aspects(mut set: BTreeSet<AspectClass>) -> BTreeSet<AspectClass> {
    if set.len() > 1 {
        set.remove(&AspectClass::Other);
    }
    if set.is_empty() {
        set.insert(AspectClass::Other);
    }
    set
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Neutral,
    Negative,
}

impl FromStr for Sentiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" => Ok(Sentiment::Positive),
            "neutral" | "neu" => Ok(Sentiment::Neutral),
            "negative" | "neg" => Ok(Sentiment::Negative),
            other => Err(format!("unknown sentiment {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSentence {
    pub sentence: ReviewSentence,
    pub aspects: BTreeSet<AspectClass>,
    pub sentiment: Sentiment,
    pub confidence: f64,
}

#[derive(Debug, Error)]
pub enum PortError {
    #[error("no annotation for sentence {0}")]
    MissingAnnotation(usize),
    #[error(transparent)]
    Completion(#[from] crate::adapters::CompletionError),
    #[error("{0}")]
    Other(String),
}

/// Assigns aspect labels to one sentence. Implementations return at least
/// one label.
pub trait AspectClassifier: Send + Sync {
    fn classify(&self, sentence: &ReviewSentence) -> Result<BTreeSet<AspectClass>, PortError>;

    /// Identifies the classifier configuration, for caching.
    fn config_id(&self) -> String;
}

/// Labels one sentence with a sentiment and a confidence in `[0, 1]`.
pub trait SentimentAnalyzer: Send + Sync {
    fn analyze(&self, sentence: &ReviewSentence) -> Result<(Sentiment, f64), PortError>;

    fn config_id(&self) -> String;
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("sentence {index}: {source}")]
    Port {
        index: usize,
        #[source]
        source: PortError,
    },
    #[error("sentence {index}: confidence {value} outside [0, 1]")]
    BadConfidence { index: usize, value: f64 },
    #[error("strength {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid extraction configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Framework(#[from] QbafError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseScoreMode {
    /// Every text argument starts at 0.5.
    Default,
    /// Text arguments start at the sentiment confidence.
    Sentiment,
}

impl BaseScoreMode {
    pub fn name(self) -> &'static str {
        match self {
            BaseScoreMode::Default => "default",
            BaseScoreMode::Sentiment => "sentiment",
        }
    }
}

impl FromStr for BaseScoreMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "default" => Ok(BaseScoreMode::Default),
            "sentiment" => Ok(BaseScoreMode::Sentiment),
            _ => Err(format!("unknown base score mode {s:?} (expected default or sentiment)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub base_score_mode: BaseScoreMode,
    pub semantics: SemanticsConfig,
    /// Aspect base scores, e.g. normalized reviewer ratings. Aspects missing
    /// from the map start at 0.5.
    #[serde(default)]
    pub aspect_base_scores: Option<BTreeMap<AspectLabel, f64>>,
    pub decision_base_score: f64,
}

impl ExtractionConfig {
    pub fn new(base_score_mode: BaseScoreMode, semantics: SemanticsConfig) -> Self {
        ExtractionConfig {
            base_score_mode,
            semantics,
            aspect_base_scores: None,
            decision_base_score: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), ExtractionError> {
        self.semantics.validate()?;
        if let Some(map) = &self.aspect_base_scores {
            if let Some((a, v)) = map.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(ExtractionError::InvalidConfig(format!("aspect base score {a} = {v} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.decision_base_score) {
            return Err(ExtractionError::InvalidConfig(format!(
                "decision base score {} outside [0, 1]",
                self.decision_base_score
            )));
        }
        Ok(())
    }

    fn aspect_base(&self, aspect: AspectLabel) -> f64 {
        self.aspect_base_scores
            .as_ref()
            .and_then(|m| m.get(&aspect).copied())
            .unwrap_or(0.5)
    }
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self::new(BaseScoreMode::Default, SemanticsConfig::df_quad())
    }
}

/// Splits a review into sentences and cleans each one: newlines become
/// spaces, backslashes are removed, leading dashes are stripped and runs of
/// whitespace collapse. Empty sentences are dropped.
pub fn split_and_clean(review_text: &str) -> Vec<ReviewSentence> {
    let flattened: String = review_text
        .chars()
        .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
        .collect();
    flattened
        .split_sentence_bounds()
        .filter_map(clean_sentence)
        .enumerate()
        .map(|(index, text)| ReviewSentence { index, text })
        .collect()
}

fn clean_sentence(raw: &str) -> Option<String> {
    let without_backslashes: String = raw.chars().filter(|&c| c != '\\').collect();
    let stripped = without_backslashes
        .trim_start_matches(|c: char| c.is_whitespace() || matches!(c, '-' | '\u{2013}' | '\u{2014}'));
    let text = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    (!text.is_empty()).then_some(text)
}

/// Runs both ports over every sentence. Calls are issued in parallel and
/// results come back in sentence order.
pub fn classify_review(
    sentences: &[ReviewSentence],
    classifier: &dyn AspectClassifier,
    sentiment: &dyn SentimentAnalyzer,
) -> Result<Vec<ClassifiedSentence>, ExtractionError> {
    sentences
        .par_iter()
        .map(|s| {
            let port = |source| ExtractionError::Port { index: s.index, source };
            let aspects = normalize_aspects(classifier.classify(s).map_err(port)?);
            let (label, confidence) = sentiment.analyze(s).map_err(port)?;
            if !(0.0..=1.0).contains(&confidence) {
                return Err(ExtractionError::BadConfidence { index: s.index, value: confidence });
            }
            Ok(ClassifiedSentence { sentence: s.clone(), aspects, sentiment: label, confidence })
        })
        .collect()
}

/// Relation of an aspect to the decision, and its re-scored base, given the
/// aspect's strength: attack below 0.5, support otherwise; base `2·|s − 0.5|`.
pub fn resolve_aspect_relation(strength: f64) -> Result<(Relation, f64), ExtractionError> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(ExtractionError::OutOfRange(strength));
    }
    let relation = if strength < 0.5 { Relation::Attack } else { Relation::Support };
    Ok((relation, 2.0 * (strength - 0.5).abs()))
}

/// A built review framework and its evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ReviewExtraction {
    /// The full three-level framework. Base scores are the initial ones;
    /// aspect → decision edges carry the resolved polarity.
    pub qbaf: ReviewQbaf,
    /// Text and aspect strengths from the text → aspect stage, and the
    /// decision strength from the aspect → decision stage.
    pub strengths: StrengthAssignment,
    /// Re-scored aspect bases used in the aspect → decision stage.
    pub rescored_bases: BTreeMap<AspectLabel, f64>,
}

impl ReviewExtraction {
    pub fn decision_strength(&self) -> f64 {
        self.strengths
            .get(&ArgumentId::decision())
            .expect("decision strength is always assigned")
    }
}

/// Builds and evaluates the review QBAF for one review's classified sentences.
///
/// Sentences classified `OTHER` or with neutral sentiment produce no text
/// argument. A sentence with several aspects is one argument with one edge
/// per aspect.
pub fn build_review_qbaf(
    classified: &[ClassifiedSentence],
    cfg: &ExtractionConfig,
) -> Result<ReviewExtraction, ExtractionError> {
    cfg.validate()?;

    let mut layer = Qbaf::builder();
    let mut text_edges = Vec::new();
    for c in classified {
        if c.sentiment == Sentiment::Neutral || c.aspects.contains(&AspectClass::Other) {
            continue;
        }
        if !(0.0..=1.0).contains(&c.confidence) {
            return Err(ExtractionError::BadConfidence { index: c.sentence.index, value: c.confidence });
        }
        let id = ArgumentId::text(c.sentence.index);
        let base = match cfg.base_score_mode {
            BaseScoreMode::Default => 0.5,
            BaseScoreMode::Sentiment => c.confidence,
        };
        let relation = if c.sentiment == Sentiment::Positive { Relation::Support } else { Relation::Attack };
        layer = layer.text(id.clone(), base);
        for aspect in &c.aspects {
            if let AspectClass::Aspect(a) = aspect {
                text_edges.push((id.clone(), ArgumentId::aspect(*a), relation));
            }
        }
    }
    for a in AspectLabel::ALL {
        layer = layer.argument(ArgumentId::aspect(a), ArgumentKind::Aspect(a), cfg.aspect_base(a));
    }
    let full_nodes = layer.clone();
    for (from, to, rel) in &text_edges {
        layer = layer.relation(from.clone(), to.clone(), *rel);
    }
    let text_layer = layer.build()?;
    let mut strengths = evaluate(&text_layer, &cfg.semantics)?;

    let decision = ArgumentId::decision();
    let mut reduced = Qbaf::builder();
    let mut decision_edges = Vec::new();
    let mut rescored_bases = BTreeMap::new();
    for a in AspectLabel::ALL {
        let id = ArgumentId::aspect(a);
        let s = strengths.get(&id).expect("aspect evaluated");
        let (rel, base) = resolve_aspect_relation(s)?;
        rescored_bases.insert(a, base);
        reduced = reduced
            .argument(id.clone(), ArgumentKind::Aspect(a), base)
            .relation(id.clone(), decision.clone(), rel);
        decision_edges.push((id, rel));
    }
    let reduced = reduced
        .argument(decision.clone(), ArgumentKind::Decision, cfg.decision_base_score)
        .build()?;
    let decision_strength = evaluate(&reduced, &cfg.semantics)?
        .get(&decision)
        .expect("decision evaluated");
    strengths.insert(decision.clone(), decision_strength);

    let mut full = full_nodes.argument(decision.clone(), ArgumentKind::Decision, cfg.decision_base_score);
    for (from, to, rel) in text_edges {
        full = full.relation(from, to, rel);
    }
    for (id, rel) in decision_edges {
        full = full.relation(id, decision.clone(), rel);
    }
    let qbaf = ReviewQbaf::new(full.build()?)?;

    Ok(ReviewExtraction { qbaf, strengths, rescored_bases })
}
