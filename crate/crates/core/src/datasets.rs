//! Normalized review corpus: one paper per JSON line.
//!
//! Source adapters read user-provided files shaped like the PRA, PeerRead
//! and MOPRD corpora and emit [`PaperRecord`]s. Each source file holds one
//! JSON object (a paper) or a JSON array of papers.
//!
//! * PRA: `{paper_id, venue?, decision, reviews: [{review_id?, sentences:
//!   [{text, aspects: [..], sentiment, confidence?}]}]}`
//! * PeerRead: `{id, conference?, accepted, reviews: [{comments,
//!   APPROPRIATENESS?, CLARITY?, ORIGINALITY?, SOUNDNESS_CORRECTNESS?,
//!   MEANINGFUL_COMPARISON?, SUBSTANCE?, IMPACT?}]}`, ratings as numbers or
//!   numeric strings
//! * MOPRD: `{paper_id, venue?, decision, reviews: [{review_id?, text}]}`

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::aggregation::Verdict;
use crate::extraction::{split_and_clean, AspectClass, Sentiment};
use crate::qbaf::AspectLabel;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{path}: {message}")]
    Layout { path: PathBuf, message: String },
    #[error("raw score {raw} outside declared scale [{min}, {max}]")]
    ScoreOutOfScale { raw: f64, min: f64, max: f64 },
    #[error("invalid scale [{min}, {max}]")]
    InvalidScale { min: f64, max: f64 },
    #[error("{0}")]
    Schema(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetSource {
    #[serde(rename = "PRA")]
    Pra,
    PeerRead,
    #[serde(rename = "MOPRD")]
    Moprd,
    Synthetic,
}

impl FromStr for DatasetSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pra" => Ok(DatasetSource::Pra),
            "peerread" => Ok(DatasetSource::PeerRead),
            "moprd" => Ok(DatasetSource::Moprd),
            "synthetic" => Ok(DatasetSource::Synthetic),
            _ => Err(format!("unknown source {s:?} (expected pra, peerread, moprd or synthetic)")),
        }
    }
}

/// Gold aspect and sentiment labels of one review sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    pub text: String,
    pub aspects: Vec<AspectClass>,
    pub sentiment: Sentiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewRecord {
    pub review_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_annotations: Option<Vec<SentenceAnnotation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_scores: Option<BTreeMap<AspectLabel, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperRecord {
    pub paper_id: String,
    pub venue: String,
    pub reviews: Vec<ReviewRecord>,
    pub gold_decision: Verdict,
    pub source: DatasetSource,
}

impl PaperRecord {
    /// Checks the invariants serde cannot express.
    pub fn validate(&self) -> Result<(), String> {
        if self.reviews.is_empty() {
            return Err(format!("paper {} has no reviews", self.paper_id));
        }
        for r in &self.reviews {
            if let Some(scores) = &r.aspect_scores {
                if let Some((a, v)) = scores.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                    return Err(format!("review {}: aspect score {a} = {v} outside [0, 1]", r.review_id));
                }
            }
            for (i, ann) in r.sentence_annotations.iter().flatten().enumerate() {
                if let Some(c) = ann.confidence {
                    if !(0.0..=1.0).contains(&c) {
                        return Err(format!("review {}: sentence {i} confidence {c} outside [0, 1]", r.review_id));
                    }
                }
                if ann.text.trim().is_empty() {
                    return Err(format!("review {}: sentence {i} is empty", r.review_id));
                }
            }
        }
        Ok(())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Reads one record per non-blank line, validating each.
pub fn load_jsonl(path: &Path) -> Result<Vec<PaperRecord>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |message: String| DatasetError::Line { line: i + 1, message };
        let record: PaperRecord = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        record.validate().map_err(at)?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, records: &[PaperRecord]) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| DatasetError::Schema(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Linear min-max mapping of a rating onto `[0, 1]`.
pub fn normalize_aspect_score(raw: f64, scale_min: f64, scale_max: f64) -> Result<f64, DatasetError> {
    if !(scale_min < scale_max) {
        return Err(DatasetError::InvalidScale { min: scale_min, max: scale_max });
    }
    if !(scale_min..=scale_max).contains(&raw) {
        return Err(DatasetError::ScoreOutOfScale { raw, min: scale_min, max: scale_max });
    }
    Ok((raw - scale_min) / (scale_max - scale_min))
}

/// Adapter settings.
#[derive(Clone, Debug, PartialEq)]
pub struct AdapterOptions {
    /// Rating scale of PeerRead aspect scores.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Venue used when a source record has none.
    pub default_venue: String,
}

impl Default for AdapterOptions {
    fn default() -> Self {
        AdapterOptions { scale_min: 1.0, scale_max: 5.0, default_venue: "unknown".into() }
    }
}

const PEERREAD_ASPECT_FIELDS: [(&str, AspectLabel); 7] = [
    ("APPROPRIATENESS", AspectLabel::Appropriateness),
    ("CLARITY", AspectLabel::Clarity),
    ("ORIGINALITY", AspectLabel::Novelty),
    ("SOUNDNESS_CORRECTNESS", AspectLabel::Soundness),
    ("MEANINGFUL_COMPARISON", AspectLabel::Comparison),
    ("SUBSTANCE", AspectLabel::Substance),
    ("IMPACT", AspectLabel::Impact),
];

/// Converts source files of the given kind into normalized records.
pub fn adapt_source(
    files: &[PathBuf],
    kind: DatasetSource,
    opts: &AdapterOptions,
) -> Result<Vec<PaperRecord>, DatasetError> {
    let mut out = Vec::new();
    for path in files {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| DatasetError::Layout { path: path.clone(), message: e.to_string() })?;
        let papers = match doc {
            Value::Array(items) => items,
            other => vec![other],
        };
        for (i, paper) in papers.iter().enumerate() {
            let ctx = Ctx { path, item: i };
            let record = match kind {
                DatasetSource::Pra => adapt_pra(&ctx, paper, opts)?,
                DatasetSource::PeerRead => adapt_peerread(&ctx, paper, opts)?,
                DatasetSource::Moprd => adapt_moprd(&ctx, paper, opts)?,
                DatasetSource::Synthetic => serde_json::from_value(paper.clone()).map_err(|e| ctx.err(e.to_string()))?,
            };
            record.validate().map_err(|m| ctx.err(m))?;
            out.push(record);
        }
    }
    Ok(out)
}

struct Ctx<'a> {
    path: &'a Path,
    item: usize,
}

impl Ctx<'_> {
    fn err(&self, message: impl Into<String>) -> DatasetError {
        DatasetError::Layout { path: self.path.to_path_buf(), message: format!("paper #{}: {}", self.item, message.into()) }
    }

    fn field<'v>(&self, obj: &'v Value, name: &str) -> Result<&'v Value, DatasetError> {
        obj.get(name).ok_or_else(|| self.err(format!("missing field \"{name}\"")))
    }

    fn string(&self, obj: &Value, name: &str) -> Result<String, DatasetError> {
        match self.field(obj, name)? {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(self.err(format!("field \"{name}\" must be a string"))),
        }
    }

    fn array<'v>(&self, obj: &'v Value, name: &str) -> Result<&'v Vec<Value>, DatasetError> {
        self.field(obj, name)?
            .as_array()
            .ok_or_else(|| self.err(format!("field \"{name}\" must be an array")))
    }

    fn decision(&self, obj: &Value, name: &str) -> Result<Verdict, DatasetError> {
        match self.field(obj, name)? {
            Value::Bool(true) => Ok(Verdict::Accept),
            Value::Bool(false) => Ok(Verdict::Reject),
            Value::String(s) => s.parse().map_err(|e: String| self.err(e)),
            _ => Err(self.err(format!("field \"{name}\" must be a decision"))),
        }
    }
}

fn venue(obj: &Value, key: &str, opts: &AdapterOptions) -> String {
    obj.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .unwrap_or_else(|| opts.default_venue.clone())
}

fn review_id(obj: &Value, paper_id: &str, j: usize) -> String {
    match obj.get("review_id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => format!("{paper_id}-r{}", j + 1),
    }
}

fn adapt_pra(ctx: &Ctx, paper: &Value, opts: &AdapterOptions) -> Result<PaperRecord, DatasetError> {
    let paper_id = ctx.string(paper, "paper_id")?;
    let mut reviews = Vec::new();
    for (j, r) in ctx.array(paper, "reviews")?.iter().enumerate() {
        let mut annotations = Vec::new();
        for s in ctx.array(r, "sentences")? {
            let ann: SentenceAnnotation =
                serde_json::from_value(s.clone()).map_err(|e| ctx.err(format!("review {}: {e}", j + 1)))?;
            // keep the same cleaning the pipeline applies to raw text
            let cleaned = split_and_clean(&ann.text);
            let text = cleaned.into_iter().map(|s| s.text).collect::<Vec<_>>().join(" ");
            if text.is_empty() {
                continue;
            }
            annotations.push(SentenceAnnotation { text, ..ann });
        }
        let text = annotations.iter().map(|a| a.text.as_str()).collect::<Vec<_>>().join(" ");
        reviews.push(ReviewRecord {
            review_id: review_id(r, &paper_id, j),
            text,
            sentence_annotations: Some(annotations),
            aspect_scores: None,
        });
    }
    Ok(PaperRecord {
        venue: venue(paper, "venue", opts),
        gold_decision: ctx.decision(paper, "decision")?,
        paper_id,
        reviews,
        source: DatasetSource::Pra,
    })
}

fn rating(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn adapt_peerread(ctx: &Ctx, paper: &Value, opts: &AdapterOptions) -> Result<PaperRecord, DatasetError> {
    let paper_id = ctx.string(paper, "id")?;
    let mut reviews = Vec::new();
    for (j, r) in ctx.array(paper, "reviews")?.iter().enumerate() {
        let text = ctx.string(r, "comments")?;
        let mut scores = BTreeMap::new();
        for (field, aspect) in PEERREAD_ASPECT_FIELDS {
            match r.get(field).and_then(rating) {
                Some(raw) => {
                    let v = normalize_aspect_score(raw, opts.scale_min, opts.scale_max)
                        .map_err(|e| ctx.err(format!("review {} {field}: {e}", j + 1)))?;
                    scores.insert(aspect, v);
                }
                None => log::warn!("{}: paper {paper_id} review {} has no {field}; using 0.5", ctx.path.display(), j + 1),
            }
        }
        reviews.push(ReviewRecord {
            review_id: review_id(r, &paper_id, j),
            text,
            sentence_annotations: None,
            aspect_scores: Some(scores),
        });
    }
    Ok(PaperRecord {
        venue: venue(paper, "conference", opts),
        gold_decision: ctx.decision(paper, "accepted")?,
        paper_id,
        reviews,
        source: DatasetSource::PeerRead,
    })
}

fn adapt_moprd(ctx: &Ctx, paper: &Value, opts: &AdapterOptions) -> Result<PaperRecord, DatasetError> {
    let paper_id = ctx.string(paper, "paper_id")?;
    let reviews = ctx
        .array(paper, "reviews")?
        .iter()
        .enumerate()
        .map(|(j, r)| {
            Ok(ReviewRecord {
                review_id: review_id(r, &paper_id, j),
                text: ctx.string(r, "text")?,
                sentence_annotations: None,
                aspect_scores: None,
            })
        })
        .collect::<Result<_, DatasetError>>()?;
    Ok(PaperRecord {
        venue: venue(paper, "venue", opts),
        gold_decision: ctx.decision(paper, "decision")?,
        paper_id,
        reviews,
        source: DatasetSource::Moprd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_aspect_score(3.0, 1.0, 5.0).unwrap(), 0.5);
        assert_eq!(normalize_aspect_score(5.0, 1.0, 5.0).unwrap(), 1.0);
        assert_eq!(normalize_aspect_score(1.0, 1.0, 5.0).unwrap(), 0.0);
        assert!(matches!(normalize_aspect_score(6.0, 1.0, 5.0), Err(DatasetError::ScoreOutOfScale { .. })));
        assert!(matches!(normalize_aspect_score(1.0, 5.0, 5.0), Err(DatasetError::InvalidScale { .. })));
    }

    #[test]
    fn record_invariants() {
        let mut p = PaperRecord {
            paper_id: "p".into(),
            venue: "v".into(),
            reviews: vec![],
            gold_decision: Verdict::Accept,
            source: DatasetSource::Synthetic,
        };
        assert!(p.validate().is_err());
        let mut scores = BTreeMap::new();
        scores.insert(AspectLabel::Clarity, 1.5);
        p.reviews.push(ReviewRecord {
            review_id: "r".into(),
            text: "t".into(),
            sentence_annotations: None,
            aspect_scores: Some(scores),
        });
        assert!(p.validate().is_err());
    }
}
