//! End-to-end few-shot baseline: reviews in, accept/reject out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{first_line, Completion, CompletionError};
use crate::aggregation::{DecisionTrace, FinalDecision, Verdict};

const DEFAULT_PRIMER: &str = include_str!("../templates/e2e_primer.json");

#[derive(Debug, Error)]
pub enum E2eError {
    #[error("primer needs at least two examples with both an accept and a reject")]
    UnbalancedPrimer,
    #[error("a paper needs at least one review")]
    NoReviews,
    #[error("malformed primer: {0}")]
    Primer(#[from] serde_json::Error),
    #[error("cannot read primer: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Completion(#[from] CompletionError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimerPaper {
    pub reviews: Vec<String>,
    pub decision: Verdict,
}

/// Labelled example papers shown before the target paper.
#[derive(Clone, Debug, PartialEq)]
pub struct E2EPrimer {
    examples: Vec<PrimerPaper>,
}

impl E2EPrimer {
    pub fn new(examples: Vec<PrimerPaper>) -> Result<Self, E2eError> {
        let has = |v: Verdict| examples.iter().any(|e| e.decision == v);
        if examples.len() < 2 || !has(Verdict::Accept) || !has(Verdict::Reject) {
            return Err(E2eError::UnbalancedPrimer);
        }
        if examples.iter().any(|e| e.reviews.is_empty()) {
            return Err(E2eError::NoReviews);
        }
        Ok(E2EPrimer { examples })
    }

    /// JSON list of `{reviews: [text], decision: "accept"|"reject"}`.
    pub fn from_json(text: &str) -> Result<Self, E2eError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, E2eError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Four synthetic papers, two accepted and two rejected.
    pub fn default_primer() -> Self {
        Self::from_json(DEFAULT_PRIMER).expect("bundled primer is valid")
    }

    pub fn examples(&self) -> &[PrimerPaper] {
        &self.examples
    }
}

fn push_reviews(out: &mut String, reviews: &[String]) {
    for r in reviews {
        let flat = r.replace("\r\n", "\n").replace('\r', "\n").replace('\n', "\\n");
        out.push_str("Review==> \"");
        out.push_str(&flat);
        out.push_str("\"\n");
    }
}

/// One `Review==> "..."` line per review (newlines escaped as `\n`), then
/// `Decision==> accept|reject` for each primer paper, separated by blank
/// lines; the target paper ends with a bare `Decision==> `.
pub fn build_e2e_prompt(primer: &E2EPrimer, reviews: &[String]) -> Result<String, E2eError> {
    if reviews.is_empty() {
        return Err(E2eError::NoReviews);
    }
    let mut out = String::new();
    for ex in &primer.examples {
        push_reviews(&mut out, &ex.reviews);
        out.push_str("Decision==> ");
        out.push_str(ex.decision.name());
        out.push_str("\n\n");
    }
    push_reviews(&mut out, reviews);
    out.push_str("Decision==> ");
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum E2eOutcome {
    Accept,
    Reject,
    Unparseable,
}

/// The earlier of "accept" or "reject" on the first non-empty line decides,
/// case-insensitively.
pub fn parse_e2e_decision(raw: &str) -> E2eOutcome {
    let line = first_line(raw).to_ascii_lowercase();
    match (line.find("accept"), line.find("reject")) {
        (Some(a), Some(r)) if a < r => E2eOutcome::Accept,
        (Some(_), Some(_)) => E2eOutcome::Reject,
        (Some(_), None) => E2eOutcome::Accept,
        (None, Some(_)) => E2eOutcome::Reject,
        (None, None) => E2eOutcome::Unparseable,
    }
}

/// Prompts the completion service for one paper. Unparseable completions
/// become rejections flagged in the trace.
pub fn predict_e2e(
    reviews: &[String],
    primer: &E2EPrimer,
    completion: &dyn Completion,
) -> Result<FinalDecision, E2eError> {
    let prompt = build_e2e_prompt(primer, reviews)?;
    let raw = completion.complete(&prompt)?;
    let outcome = parse_e2e_decision(&raw);
    if outcome == E2eOutcome::Unparseable {
        log::warn!("unparseable end-to-end completion: {:?}", first_line(&raw));
    }
    let strength = if outcome == E2eOutcome::Accept { 1.0 } else { 0.0 };
    let trace = DecisionTrace::EndToEnd {
        prompt_sha256: crate::sha256_hex(prompt.as_bytes()),
        raw_completion: raw,
        unparseable: outcome == E2eOutcome::Unparseable,
    };
    Ok(FinalDecision::new(strength, "e2e", trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Canned(&'static str);

    impl Completion for Canned {
        fn complete(&self, _prompt: &str) -> Result<String, CompletionError> {
            Ok(self.0.to_string())
        }

        fn config_id(&self) -> String {
            "canned".into()
        }
    }

    fn one_each() -> E2EPrimer {
        E2EPrimer::new(vec![
            PrimerPaper { reviews: vec!["Great.".into()], decision: Verdict::Accept },
            PrimerPaper { reviews: vec!["Weak.".into()], decision: Verdict::Reject },
        ])
        .unwrap()
    }

    #[test]
    fn primer_balance() {
        let only_accepts = vec![
            PrimerPaper { reviews: vec!["a".into()], decision: Verdict::Accept },
            PrimerPaper { reviews: vec!["b".into()], decision: Verdict::Accept },
        ];
        assert!(matches!(E2EPrimer::new(only_accepts), Err(E2eError::UnbalancedPrimer)));
        let p = E2EPrimer::default_primer();
        assert_eq!(p.examples().len(), 4);
        let prompt = build_e2e_prompt(&p, &["x".into()]).unwrap();
        assert!(prompt.contains("Decision==> accept\n") && prompt.contains("Decision==> reject\n"));
    }

    #[test]
    fn prompt_layout() {
        let prompt = build_e2e_prompt(&one_each(), &["First\nreview".into(), "Second".into()]).unwrap();
        assert_eq!(
            prompt,
            "Review==> \"Great.\"\nDecision==> accept\n\n\
             Review==> \"Weak.\"\nDecision==> reject\n\n\
             Review==> \"First\\nreview\"\nReview==> \"Second\"\nDecision==> "
        );
        assert!(matches!(build_e2e_prompt(&one_each(), &[]), Err(E2eError::NoReviews)));
    }

    #[test]
    fn decision_parsing() {
        assert_eq!(parse_e2e_decision(" accept\nReview==> …"), E2eOutcome::Accept);
        assert_eq!(parse_e2e_decision("REJECT"), E2eOutcome::Reject);
        assert_eq!(parse_e2e_decision("borderline"), E2eOutcome::Unparseable);
        assert_eq!(parse_e2e_decision("accept, not reject"), E2eOutcome::Accept);
        assert_eq!(parse_e2e_decision("reject rather than accept"), E2eOutcome::Reject);
        assert_eq!(parse_e2e_decision("maybe\naccept"), E2eOutcome::Unparseable);
    }

    #[test]
    fn prediction_via_port() {
        let reviews = vec!["Fine paper.".to_string()];
        let d = predict_e2e(&reviews, &one_each(), &Canned("accept")).unwrap();
        assert_eq!((d.verdict, d.decision_strength), (Verdict::Accept, 1.0));
        let d = predict_e2e(&reviews, &one_each(), &Canned("reject")).unwrap();
        assert_eq!(d.verdict, Verdict::Reject);
        let d = predict_e2e(&reviews, &one_each(), &Canned("maybe")).unwrap();
        assert_eq!(d.verdict, Verdict::Reject);
        assert!(matches!(d.trace, DecisionTrace::EndToEnd { unparseable: true, .. }));
    }
}
