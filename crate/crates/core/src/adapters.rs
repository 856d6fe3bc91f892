//! Port implementations: a text-completion client with the few-shot aspect
//! prompt, a dataset-annotation oracle, and deterministic rule-based doubles.

use std::collections::BTreeSet;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::SentenceAnnotation;
use crate::extraction::{
    normalize_aspects, AspectClass, AspectClassifier, PortError, ReviewSentence, Sentiment, SentimentAnalyzer,
};

const SENTENCE_MARKER: &str = "{SENTENCE}";
const DEFAULT_PREAMBLE: &str = include_str!("../templates/aspect_preamble.txt");
const DEFAULT_PRIMER: &str = include_str!("../templates/aspect_primer.json");

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("completion request timed out after {attempts} attempt(s)")]
    Timeout { attempts: usize },
    #[error("completion service unavailable after {attempts} attempt(s): {message}")]
    ServiceUnavailable { attempts: usize, message: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("invalid endpoint configuration: {0}")]
    InvalidEndpoint(String),
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("primer must contain at least one example")]
    EmptyPrimer,
    #[error("template must contain the {SENTENCE_MARKER} marker exactly once")]
    Marker,
    #[error("malformed primer: {0}")]
    Primer(#[from] serde_json::Error),
    #[error("cannot read template: {0}")]
    Io(#[from] std::io::Error),
}

/// Connection settings for a completion service.
///
/// Requests are `POST {url}` with a JSON body
/// `{model, prompt, max_tokens, temperature}`; the response must be a JSON
/// object with a string field `text`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionEndpoint {
    pub url: String,
    pub model: String,
    #[serde(with = "duration_ms")]
    pub timeout: Duration,
    pub max_retries: usize,
    pub temperature: f64,
    pub max_tokens: usize,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    /// First retry delay; doubles on each further retry.
    #[serde(with = "duration_ms")]
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl CompletionEndpoint {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        CompletionEndpoint {
            url: url.into(),
            model: model.into(),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            temperature: 0.0,
            max_tokens: 16,
            api_key: None,
            backoff: Duration::from_millis(250),
            max_in_flight: 4,
        }
    }

    pub fn validate(&self) -> Result<(), CompletionError> {
        if self.timeout.is_zero() {
            return Err(CompletionError::InvalidEndpoint("timeout must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(CompletionError::InvalidEndpoint("max_in_flight must be at least 1".into()));
        }
        if self.url.is_empty() {
            return Err(CompletionError::InvalidEndpoint("url is empty".into()));
        }
        Ok(())
    }
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Anything that turns a prompt into a completion.
pub trait Completion: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError>;

    fn config_id(&self) -> String;
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Gate { free: Mutex::new(n), cv: Condvar::new() }
    }

    fn acquire(&self) -> GatePermit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GatePermit(self)
    }
}

struct GatePermit<'a>(&'a Gate);

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: usize,
    temperature: f64,
}

/// Blocking HTTP client for [`CompletionEndpoint`]. Cloning shares the
/// in-flight limit.
#[derive(Clone, Debug)]
pub struct CompletionClient {
    endpoint: CompletionEndpoint,
    agent: ureq::Agent,
    gate: Arc<Gate>,
}

enum Attempt {
    Retry { timed_out: bool, message: String },
    Fatal(CompletionError),
}

impl CompletionClient {
    pub fn new(endpoint: CompletionEndpoint) -> Result<Self, CompletionError> {
        endpoint.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(endpoint.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Arc::new(Gate::new(endpoint.max_in_flight));
        Ok(CompletionClient { endpoint, agent, gate })
    }

    pub fn endpoint(&self) -> &CompletionEndpoint {
        &self.endpoint
    }

    fn attempt(&self, prompt: &str) -> Result<String, Attempt> {
        let e = &self.endpoint;
        let body = CompletionRequest {
            model: &e.model,
            prompt,
            max_tokens: e.max_tokens,
            temperature: e.temperature,
        };
        let mut req = self.agent.post(&e.url);
        if let Some(key) = &e.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|err| match err {
            ureq::Error::Timeout(_) => Attempt::Retry { timed_out: true, message: err.to_string() },
            ureq::Error::BadUri(_) | ureq::Error::Http(_) => {
                Attempt::Fatal(CompletionError::InvalidEndpoint(err.to_string()))
            }
            other => Attempt::Retry { timed_out: false, message: other.to_string() },
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|err| match err {
            ureq::Error::Timeout(_) => Attempt::Retry { timed_out: true, message: err.to_string() },
            other => Attempt::Retry { timed_out: false, message: other.to_string() },
        })?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry { timed_out: false, message: format!("HTTP {status}") });
        }
        if status >= 400 {
            return Err(Attempt::Fatal(CompletionError::ServiceUnavailable {
                attempts: 1,
                message: format!("HTTP {status}: {}", text.trim()),
            }));
        }
        parse_completion_body(&text).map_err(Attempt::Fatal)
    }
}

fn parse_completion_body(body: &str) -> Result<String, CompletionError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| CompletionError::MalformedResponse(e.to_string()))?;
    value
        .get("text")
        .and_then(|t| t.as_str())
        .map(str::to_string)
        .ok_or_else(|| CompletionError::MalformedResponse("missing string field \"text\"".into()))
}

impl Completion for CompletionClient {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError> {
        let _permit = self.gate.acquire();
        let mut delay = self.endpoint.backoff;
        let attempts = self.endpoint.max_retries + 1;
        let mut last_timed_out = false;
        let mut last_message = String::new();
        for attempt in 1..=attempts {
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry { timed_out, message }) => {
                    log::debug!("completion attempt {attempt}/{attempts} failed: {message}");
                    last_timed_out = timed_out;
                    last_message = message;
                }
            }
            if attempt < attempts {
                thread::sleep(delay);
                delay = delay.saturating_mul(2);
            }
        }
        if last_timed_out {
            Err(CompletionError::Timeout { attempts })
        } else {
            Err(CompletionError::ServiceUnavailable { attempts, message: last_message })
        }
    }

    fn config_id(&self) -> String {
        let e = &self.endpoint;
        format!("completion:{}:{}:t={}:max={}", e.url, e.model, e.temperature, e.max_tokens)
    }
}

/// One labelled primer sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimerExample {
    pub sentence: String,
    pub aspects: Vec<AspectClass>,
}

/// Few-shot aspect classification prompt: criteria preamble, labelled
/// samples, then the sentence to classify.
#[derive(Clone, Debug, PartialEq)]
pub struct AspectPromptTemplate {
    preamble: String,
    primer: Vec<PrimerExample>,
}

impl AspectPromptTemplate {
    pub fn new(preamble: impl Into<String>, primer: Vec<PrimerExample>) -> Result<Self, TemplateError> {
        if primer.is_empty() {
            return Err(TemplateError::EmptyPrimer);
        }
        Ok(AspectPromptTemplate { preamble: preamble.into(), primer })
    }

    /// The criteria preamble and the two shipped samples.
    pub fn default_template() -> Self {
        let primer = serde_json::from_str(DEFAULT_PRIMER).expect("bundled primer parses");
        AspectPromptTemplate::new(DEFAULT_PREAMBLE.trim_end(), primer).expect("bundled primer is non-empty")
    }

    /// Preamble from a text file, samples from a JSON list of
    /// `{sentence, aspects}`.
    pub fn from_files(preamble: &std::path::Path, primer: &std::path::Path) -> Result<Self, TemplateError> {
        let preamble = std::fs::read_to_string(preamble)?;
        let primer: Vec<PrimerExample> = serde_json::from_str(&std::fs::read_to_string(primer)?)?;
        AspectPromptTemplate::new(preamble.trim_end(), primer)
    }

    pub fn primer(&self) -> &[PrimerExample] {
        &self.primer
    }

    /// Renders to a substitution template with a single `{SENTENCE}` marker.
    pub fn compile(&self) -> PromptTemplate {
        let mut prefix = format!("{}\n\n", self.preamble);
        for ex in &self.primer {
            let labels: Vec<&str> = ex.aspects.iter().map(|a| a.code()).collect();
            prefix.push_str(&format!("Sentence: {}\nAspects: {}\n\n", ex.sentence, labels.join(", ")));
        }
        prefix.push_str("Sentence: ");
        PromptTemplate { prefix, suffix: "\nAspects: ".to_string() }
    }
}

/// Plain-text prompt with one `{SENTENCE}` substitution marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    prefix: String,
    suffix: String,
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut parts = text.split(SENTENCE_MARKER);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(prefix), Some(suffix), None) => {
                Ok(PromptTemplate { prefix: prefix.to_string(), suffix: suffix.to_string() })
            }
            _ => Err(TemplateError::Marker),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TemplateError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn render(&self, sentence: &str) -> String {
        format!("{}{}{}", self.prefix, sentence, self.suffix)
    }

    /// The template text with its marker, suitable for saving to a file.
    pub fn to_text(&self) -> String {
        format!("{}{}{}", self.prefix, SENTENCE_MARKER, self.suffix)
    }
}

pub fn build_aspect_prompt(t: &AspectPromptTemplate, sentence: &str) -> String {
    t.compile().render(sentence)
}

/// Reads aspect labels from the first non-empty line of a completion.
/// Unknown tokens are ignored; no known label yields `{OTHER}`.
pub fn parse_aspect_response(raw: &str) -> BTreeSet<AspectClass> {
    let line = first_line(raw);
    let found = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .map(|tok| tok.trim_matches(|c: char| !c.is_ascii_alphanumeric()))
        .filter_map(|tok| tok.parse::<AspectClass>().ok())
        .collect();
    normalize_aspects(found)
}

pub(crate) fn first_line(raw: &str) -> &str {
    raw.trim_start().lines().next().unwrap_or("")
}

/// Aspect classifier backed by a completion service and a prompt template.
pub struct LlmAspectClassifier {
    completion: Arc<dyn Completion>,
    template: PromptTemplate,
}

impl LlmAspectClassifier {
    pub fn new(completion: Arc<dyn Completion>, template: PromptTemplate) -> Self {
        LlmAspectClassifier { completion, template }
    }
}

impl AspectClassifier for LlmAspectClassifier {
    fn classify(&self, sentence: &ReviewSentence) -> Result<BTreeSet<AspectClass>, PortError> {
        let raw = self.completion.complete(&self.template.render(&sentence.text))?;
        Ok(parse_aspect_response(&raw))
    }

    fn config_id(&self) -> String {
        let digest = crate::sha256_hex(self.template.to_text().as_bytes());
        format!("llm-aspects:{}:{}", self.completion.config_id(), &digest[..16])
    }
}

/// Serves gold annotations for one review, indexed by sentence position.
#[derive(Clone, Debug)]
pub struct OracleAnnotations {
    annotations: Vec<SentenceAnnotation>,
}

impl OracleAnnotations {
    pub fn new(annotations: Vec<SentenceAnnotation>) -> Self {
        OracleAnnotations { annotations }
    }

    /// The annotated sentences, cleaned, in order.
    pub fn sentences(&self) -> Vec<ReviewSentence> {
        self.annotations
            .iter()
            .enumerate()
            .map(|(index, a)| ReviewSentence { index, text: a.text.clone() })
            .collect()
    }

    fn get(&self, sentence: &ReviewSentence) -> Result<&SentenceAnnotation, PortError> {
        self.annotations
            .get(sentence.index)
            .ok_or(PortError::MissingAnnotation(sentence.index))
    }
}

/// Builds the oracle classification and sentiment ports for one review.
pub fn oracle_classifier(annotations: Vec<SentenceAnnotation>) -> (Arc<OracleAnnotations>, Arc<OracleAnnotations>) {
    let o = Arc::new(OracleAnnotations::new(annotations));
    (o.clone(), o)
}

impl AspectClassifier for OracleAnnotations {
    fn classify(&self, sentence: &ReviewSentence) -> Result<BTreeSet<AspectClass>, PortError> {
        Ok(normalize_aspects(self.get(sentence)?.aspects.iter().copied().collect()))
    }

    fn config_id(&self) -> String {
        "oracle".into()
    }
}

impl SentimentAnalyzer for OracleAnnotations {
    fn analyze(&self, sentence: &ReviewSentence) -> Result<(Sentiment, f64), PortError> {
        let a = self.get(sentence)?;
        Ok((a.sentiment, a.confidence.unwrap_or(1.0)))
    }

    fn config_id(&self) -> String {
        "oracle".into()
    }
}

const POSITIVE_TERMS: &[&str] = &[
    "good", "great", "excellent", "clear", "clearly", "novel", "interesting", "strong", "convincing",
    "thorough", "solid", "well", "original", "significant", "sound", "impressive", "nice", "useful",
    "important", "promising",
];
const NEGATIVE_TERMS: &[&str] = &[
    "bad", "poor", "poorly", "unclear", "weak", "limited", "lacks", "lack", "missing", "incremental",
    "confusing", "unconvincing", "wrong", "flawed", "hard", "not", "insufficient", "incomprehensible",
    "trivial", "unfortunately",
];

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
}

/// Word-list sentiment double. The label is the side with more matched
/// terms (neutral on a tie); the confidence is that side's share of the
/// matched terms, or 1.0 for a neutral sentence with no matches.
#[derive(Clone, Debug, Default)]
pub struct RuleBasedSentiment;

impl SentimentAnalyzer for RuleBasedSentiment {
    fn analyze(&self, sentence: &ReviewSentence) -> Result<(Sentiment, f64), PortError> {
        let (mut pos, mut neg) = (0usize, 0usize);
        for w in words(&sentence.text) {
            pos += POSITIVE_TERMS.contains(&w.as_str()) as usize;
            neg += NEGATIVE_TERMS.contains(&w.as_str()) as usize;
        }
        let total = (pos + neg) as f64;
        Ok(match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => (Sentiment::Positive, pos as f64 / total),
            std::cmp::Ordering::Less => (Sentiment::Negative, neg as f64 / total),
            std::cmp::Ordering::Equal if pos == 0 => (Sentiment::Neutral, 1.0),
            std::cmp::Ordering::Equal => (Sentiment::Neutral, 0.5),
        })
    }

    fn config_id(&self) -> String {
        "rule-sentiment:v1".into()
    }
}

const ASPECT_KEYWORDS: &[(&str, &[&str])] = &[
    ("APR", &["fit", "scope", "venue", "appropriate", "conference", "relevant"]),
    ("CLA", &["clear", "clearly", "unclear", "written", "writing", "presentation", "structured", "follow", "incomprehensible"]),
    ("NOV", &["novel", "novelty", "original", "originality", "incremental", "new"]),
    ("EMP", &["experiment", "experiments", "empirical", "results", "evaluation", "sound", "theory", "claims", "ablations"]),
    ("CMP", &["comparison", "compare", "compared", "baseline", "baselines", "literature", "references", "prior"]),
    ("SUB", &["substance", "contribution", "depth", "thorough", "more", "limited"]),
    ("IMP", &["impact", "significant", "important", "useful", "influential", "community"]),
];

/// Keyword aspect classifier double; sentences without a keyword are `OTHER`.
#[derive(Clone, Debug, Default)]
pub struct KeywordAspectClassifier;

impl AspectClassifier for KeywordAspectClassifier {
    fn classify(&self, sentence: &ReviewSentence) -> Result<BTreeSet<AspectClass>, PortError> {
        let ws: BTreeSet<String> = words(&sentence.text).collect();
        let found = ASPECT_KEYWORDS
            .iter()
            .filter(|(_, kws)| kws.iter().any(|k| ws.contains(*k)))
            .map(|(code, _)| code.parse().expect("known aspect code"))
            .collect();
        Ok(normalize_aspects(found))
    }

    fn config_id(&self) -> String {
        "keyword-aspects:v1".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbaf::AspectLabel;

    fn labels(v: &[&str]) -> BTreeSet<AspectClass> {
        v.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn default_prompt_shape() {
        let t = AspectPromptTemplate::default_template();
        let p = build_aspect_prompt(&t, "The related work is thin.");
        assert!(p.ends_with("Sentence: The related work is thin.\nAspects: "));
        assert!(p.contains("classified as OTHER"));
        assert!(p.contains("Aspects: SUB, EMP\n"));
        assert!(p.contains("Aspects: CLA\n"));
        assert!(p.starts_with("7 aspect criteria for paper review:"));
    }

    #[test]
    fn empty_primer_is_rejected() {
        assert!(matches!(AspectPromptTemplate::new("x", vec![]), Err(TemplateError::EmptyPrimer)));
    }

    #[test]
    fn template_text_round_trip() {
        let t = AspectPromptTemplate::default_template().compile();
        let back = PromptTemplate::parse(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert!(PromptTemplate::parse("no marker").is_err());
        assert!(PromptTemplate::parse("{SENTENCE} {SENTENCE}").is_err());
    }

    #[test]
    fn response_parsing() {
        assert_eq!(parse_aspect_response("SUB, EMP"), labels(&["SUB", "EMP"]));
        assert_eq!(parse_aspect_response("cla"), labels(&["CLA"]));
        assert_eq!(parse_aspect_response("I think this is about novelty"), labels(&["OTHER"]));
        assert_eq!(parse_aspect_response(" NOV\nSentence: foo\nAspects: CLA"), labels(&["NOV"]));
        assert_eq!(parse_aspect_response("OTHER"), labels(&["OTHER"]));
        assert_eq!(parse_aspect_response("IMP."), labels(&["IMP"]));
        assert_eq!(parse_aspect_response(""), labels(&["OTHER"]));
    }

    fn sentence(text: &str) -> ReviewSentence {
        ReviewSentence { index: 0, text: text.into() }
    }

    #[test]
    fn oracle_passthrough() {
        let ann = vec![
            SentenceAnnotation {
                text: "Poorly written.".into(),
                aspects: vec![AspectClass::Aspect(AspectLabel::Clarity)],
                sentiment: Sentiment::Negative,
                confidence: None,
            },
            SentenceAnnotation { text: "Hm.".into(), aspects: vec![], sentiment: Sentiment::Neutral, confidence: Some(0.7) },
        ];
        let (c, s) = oracle_classifier(ann);
        let first = ReviewSentence { index: 0, text: "Poorly written.".into() };
        assert_eq!(c.classify(&first).unwrap(), labels(&["CLA"]));
        assert_eq!(s.analyze(&first).unwrap(), (Sentiment::Negative, 1.0));
        let second = ReviewSentence { index: 1, text: "Hm.".into() };
        assert_eq!(c.classify(&second).unwrap(), labels(&["OTHER"]));
        assert_eq!(s.analyze(&second).unwrap(), (Sentiment::Neutral, 0.7));
        let missing = ReviewSentence { index: 5, text: "?".into() };
        assert!(matches!(c.classify(&missing), Err(PortError::MissingAnnotation(5))));
    }

    #[test]
    fn rule_based_sentiment() {
        let s = RuleBasedSentiment;
        assert_eq!(s.analyze(&sentence("The paper is clear and novel.")).unwrap(), (Sentiment::Positive, 1.0));
        assert_eq!(
            s.analyze(&sentence("Clear, but the evaluation is weak and limited.")).unwrap(),
            (Sentiment::Negative, 2.0 / 3.0)
        );
        assert_eq!(s.analyze(&sentence("We read it.")).unwrap(), (Sentiment::Neutral, 1.0));
    }

    #[test]
    fn keyword_classifier() {
        let c = KeywordAspectClassifier;
        assert_eq!(c.classify(&sentence("The writing is unclear.")).unwrap(), labels(&["CLA"]));
        assert_eq!(
            c.classify(&sentence("Experiments lack a comparison with baselines.")).unwrap(),
            labels(&["EMP", "CMP"])
        );
        assert_eq!(c.classify(&sentence("Thanks.")).unwrap(), labels(&["OTHER"]));
    }

    #[test]
    fn completion_body_contract() {
        assert_eq!(parse_completion_body(r#"{"text":"CLA"}"#).unwrap(), "CLA");
        assert!(matches!(parse_completion_body(r#"{"choices":[]}"#), Err(CompletionError::MalformedResponse(_))));
        assert!(matches!(parse_completion_body("not json"), Err(CompletionError::MalformedResponse(_))));
    }

    #[test]
    fn endpoint_validation() {
        let mut e = CompletionEndpoint::new("http://localhost:1", "m");
        assert!(e.validate().is_ok());
        e.timeout = Duration::ZERO;
        assert!(CompletionClient::new(e).is_err());
    }
}
