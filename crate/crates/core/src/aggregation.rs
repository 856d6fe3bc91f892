//! Combining review frameworks into a paper decision.
//!
//! Review QBAFs are trimmed to their aspect and decision arguments and
//! combined into a pre-MPAF: one strength vector per argument, one entry per
//! review, plus the polarity-free union of all aspect → decision edges. A
//! decision is then reached either by averaging the vectors into an MPAF and
//! evaluating it (path 1), or by interpreting each review's decision strength
//! and voting (path 2). Papers are accepted only when the final strength is
//! strictly above 0.5.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{resolve_aspect_relation, ExtractionError, ReviewExtraction};
use crate::qbaf::{ArgumentId, ArgumentKind, AspectLabel, Qbaf, QbafError, ReviewQbaf};
use crate::semantics::{evaluate, SemanticsConfig, SemanticsError, SemanticsKind, StrengthAssignment};

#[derive(Debug, Error)]
pub enum AggregationError {
    #[error("cannot aggregate an empty list")]
    Empty,
    #[error("review {index} has a different argument set")]
    MismatchedArguments { index: usize },
    #[error("missing strength for {0}")]
    MissingStrength(ArgumentId),
    #[error("unknown argument {0}")]
    UnknownArgument(ArgumentId),
    #[error("strength {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("malformed pre-MPAF: {0}")]
    Malformed(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Framework(#[from] QbafError),
}

/// Accept/reject outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn from_strength(strength: f64) -> Verdict {
        if strength > 0.5 {
            Verdict::Accept
        } else {
            Verdict::Reject
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accept" | "accepted" => Ok(Verdict::Accept),
            "reject" | "rejected" => Ok(Verdict::Reject),
            other => Err(format!("unknown decision {other:?}")),
        }
    }
}

/// Five-level reading of a decision strength.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DecisionLevel {
    #[serde(rename = "sr")]
    StrongReject,
    #[serde(rename = "wr")]
    WeakReject,
    #[serde(rename = "bo")]
    Borderline,
    #[serde(rename = "wa")]
    WeakAccept,
    #[serde(rename = "sa")]
    StrongAccept,
}

impl DecisionLevel {
    pub fn weight(self) -> i32 {
        match self {
            DecisionLevel::StrongReject => -2,
            DecisionLevel::WeakReject => -1,
            DecisionLevel::Borderline => 0,
            DecisionLevel::WeakAccept => 1,
            DecisionLevel::StrongAccept => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interpretation {
    #[serde(rename = "binary")]
    Binary,
    #[serde(rename = "5-level")]
    FiveLevel,
}

impl Interpretation {
    pub fn name(self) -> &'static str {
        match self {
            Interpretation::Binary => "binary",
            Interpretation::FiveLevel => "5-level",
        }
    }
}

impl FromStr for Interpretation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "binary" => Ok(Interpretation::Binary),
            "5level" | "fivelevel" => Ok(Interpretation::FiveLevel),
            _ => Err(format!("unknown interpretation {s:?} (expected binary or 5-level)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VoteAggregation {
    #[serde(rename = "majority")]
    Majority,
    #[serde(rename = "all-accept")]
    AllAccept,
}

impl VoteAggregation {
    pub fn name(self) -> &'static str {
        match self {
            VoteAggregation::Majority => "majority",
            VoteAggregation::AllAccept => "all-accept",
        }
    }
}

impl FromStr for VoteAggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "majority" => Ok(VoteAggregation::Majority),
            "allaccept" => Ok(VoteAggregation::AllAccept),
            _ => Err(format!("unknown aggregation {s:?} (expected majority or all-accept)")),
        }
    }
}

/// Review framework restricted to aspects and the decision.
#[derive(Clone, Debug, PartialEq)]
pub struct TrimmedReviewQbaf {
    pub qbaf: Qbaf,
    pub strengths: StrengthAssignment,
}

/// Drops text arguments and their edges, keeping base scores and strengths
/// of the aspect and decision arguments.
pub fn trim(rq: &ReviewQbaf, strengths: &StrengthAssignment) -> TrimmedReviewQbaf {
    let q = rq.qbaf();
    let keep = |id: &ArgumentId| !matches!(q.kind(id), Some(ArgumentKind::Text) | None);
    let mut b = Qbaf::builder();
    for arg in q.arguments().iter().filter(|a| keep(&a.id)) {
        b = b.argument(arg.id.clone(), arg.kind, q.base_score(&arg.id).unwrap_or_default());
    }
    for (from, to, rel) in q.relations() {
        if keep(from) && keep(to) {
            b = b.relation(from.clone(), to.clone(), rel);
        }
    }
    let mut kept = strengths.clone();
    kept.retain(keep);
    TrimmedReviewQbaf { qbaf: b.build_unchecked(), strengths: kept }
}

pub fn trim_extraction(e: &ReviewExtraction) -> TrimmedReviewQbaf {
    trim(&e.qbaf, &e.strengths)
}

/// Combination of `n` trimmed review frameworks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreMpaf {
    arguments: Vec<ArgumentId>,
    und: BTreeSet<(ArgumentId, ArgumentId)>,
    beta_vec: BTreeMap<ArgumentId, Vec<f64>>,
    n: usize,
}

impl PreMpaf {
    /// Builds a pre-MPAF over the seven aspects and the decision from
    /// explicit strength vectors.
    pub fn new(
        und: BTreeSet<(ArgumentId, ArgumentId)>,
        beta_vec: BTreeMap<ArgumentId, Vec<f64>>,
    ) -> Result<Self, AggregationError> {
        let arguments = standard_arguments();
        let n = beta_vec.get(&ArgumentId::decision()).map(Vec::len).unwrap_or(0);
        let p = PreMpaf { arguments, und, beta_vec, n };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), AggregationError> {
        if self.n == 0 {
            return Err(AggregationError::Empty);
        }
        let decision = ArgumentId::decision();
        for a in &self.arguments {
            let v = self
                .beta_vec
                .get(a)
                .ok_or_else(|| AggregationError::Malformed(format!("no strength vector for {a}")))?;
            if v.len() != self.n {
                return Err(AggregationError::Malformed(format!(
                    "vector for {a} has length {}, expected {}",
                    v.len(),
                    self.n
                )));
            }
            if let Some(&x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(AggregationError::OutOfRange(x));
            }
        }
        if self.beta_vec.len() != self.arguments.len() {
            return Err(AggregationError::Malformed("strength vector for an unknown argument".into()));
        }
        for (from, to) in &self.und {
            let aspect = self.arguments.contains(from) && *from != decision;
            if !aspect || *to != decision {
                return Err(AggregationError::Malformed(format!("relation ({from}, {to}) is not aspect → decision")));
            }
        }
        Ok(())
    }

    pub fn arguments(&self) -> &[ArgumentId] {
        &self.arguments
    }

    pub fn und(&self) -> &BTreeSet<(ArgumentId, ArgumentId)> {
        &self.und
    }

    pub fn beta_vec(&self, id: &ArgumentId) -> Option<&[f64]> {
        self.beta_vec.get(id).map(Vec::as_slice)
    }

    pub fn review_count(&self) -> usize {
        self.n
    }

    pub fn decision_strengths(&self) -> &[f64] {
        &self.beta_vec[&ArgumentId::decision()]
    }
}

fn standard_arguments() -> Vec<ArgumentId> {
    AspectLabel::ALL
        .into_iter()
        .map(ArgumentId::aspect)
        .chain(std::iter::once(ArgumentId::decision()))
        .collect()
}

/// Combines trimmed review frameworks in review order.
pub fn combine(trimmed: &[TrimmedReviewQbaf]) -> Result<PreMpaf, AggregationError> {
    let first = trimmed.first().ok_or(AggregationError::Empty)?;
    let arguments: BTreeSet<&ArgumentId> = first.qbaf.arguments().iter().map(|a| &a.id).collect();
    let mut und = BTreeSet::new();
    let mut beta_vec: BTreeMap<ArgumentId, Vec<f64>> = BTreeMap::new();
    for (index, t) in trimmed.iter().enumerate() {
        let these: BTreeSet<&ArgumentId> = t.qbaf.arguments().iter().map(|a| &a.id).collect();
        if these != arguments {
            return Err(AggregationError::MismatchedArguments { index });
        }
        und.extend(t.qbaf.relations().map(|(a, b, _)| (a.clone(), b.clone())));
        for id in &arguments {
            let s = t.strengths.get(id).ok_or_else(|| AggregationError::MissingStrength((*id).clone()))?;
            beta_vec.entry((*id).clone()).or_default().push(s);
        }
    }
    let expected: BTreeSet<ArgumentId> = standard_arguments().into_iter().collect();
    if arguments.into_iter().cloned().collect::<BTreeSet<_>>() != expected {
        return Err(AggregationError::MismatchedArguments { index: 0 });
    }
    PreMpaf::new(und, beta_vec)
}

/// Mean of an argument's strength vector.
pub fn gamma(p: &PreMpaf, id: &ArgumentId) -> Result<f64, AggregationError> {
    let v = p.beta_vec(id).ok_or_else(|| AggregationError::UnknownArgument(id.clone()))?;
    // summed in sorted order so the mean does not depend on review order
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted.iter().sum::<f64>() / sorted.len() as f64)
}

/// Averages a pre-MPAF into an MPAF. Aspects on an undecided edge attack the
/// decision when their mean is below 0.5 and support it otherwise; aspect
/// bases are re-scored `2·|γ − 0.5|`, the decision keeps its mean as base.
pub fn build_mpaf(p: &PreMpaf) -> Result<Qbaf, AggregationError> {
    let decision = ArgumentId::decision();
    let mut b = Qbaf::builder();
    for a in AspectLabel::ALL {
        let id = ArgumentId::aspect(a);
        let (_, base) = resolve_aspect_relation(gamma(p, &id)?).map_err(rescore_error)?;
        b = b.argument(id, ArgumentKind::Aspect(a), base);
    }
    b = b.argument(decision.clone(), ArgumentKind::Decision, gamma(p, &decision)?);
    for (from, to) in p.und() {
        let (rel, _) = resolve_aspect_relation(gamma(p, from)?).map_err(rescore_error)?;
        b = b.relation(from.clone(), to.clone(), rel);
    }
    Ok(b.build()?)
}

fn rescore_error(e: ExtractionError) -> AggregationError {
    match e {
        ExtractionError::OutOfRange(x) => AggregationError::OutOfRange(x),
        other => AggregationError::Malformed(other.to_string()),
    }
}

/// Audit record of how a decision was reached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionTrace {
    Mpaf {
        semantics: SemanticsKind,
        review_decision_strengths: Vec<f64>,
        gammas: BTreeMap<ArgumentId, f64>,
        mpaf: serde_json::Value,
        strengths: StrengthAssignment,
    },
    Vote {
        interpretation: Interpretation,
        aggregation: VoteAggregation,
        review_decision_strengths: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        binary: Option<Vec<Verdict>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        levels: Option<Vec<DecisionLevel>>,
    },
    EndToEnd {
        prompt_sha256: String,
        raw_completion: String,
        unparseable: bool,
    },
    Failed {
        error: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalDecision {
    pub verdict: Verdict,
    pub decision_strength: f64,
    pub path: String,
    pub trace: DecisionTrace,
}

impl FinalDecision {
    /// Thresholds `decision_strength` at 0.5.
    pub fn new(decision_strength: f64, path: impl Into<String>, trace: DecisionTrace) -> Self {
        FinalDecision {
            verdict: Verdict::from_strength(decision_strength),
            decision_strength,
            path: path.into(),
            trace,
        }
    }
}

/// A decision tagged with its paper, the report line format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperDecision {
    pub paper_id: String,
    #[serde(flatten)]
    pub decision: FinalDecision,
}

/// Path 1: evaluate the MPAF and threshold the decision strength.
pub fn decide_path1(p: &PreMpaf, sem: &SemanticsConfig) -> Result<FinalDecision, AggregationError> {
    let mpaf = build_mpaf(p)?;
    let strengths = evaluate(&mpaf, sem)?;
    let decision = strengths.get(&ArgumentId::decision()).expect("decision evaluated");
    let gammas = p
        .arguments()
        .iter()
        .map(|id| Ok((id.clone(), gamma(p, id)?)))
        .collect::<Result<_, AggregationError>>()?;
    let trace = DecisionTrace::Mpaf {
        semantics: sem.kind,
        review_decision_strengths: p.decision_strengths().to_vec(),
        gammas,
        mpaf: mpaf.to_json_value(),
        strengths,
    };
    Ok(FinalDecision::new(decision, format!("path1/{}", sem.kind.name()), trace))
}

fn check_strength(s: f64) -> Result<f64, AggregationError> {
    if (0.0..=1.0).contains(&s) {
        Ok(s)
    } else {
        Err(AggregationError::OutOfRange(s))
    }
}

/// Reject iff the strength is 0.5 or below.
pub fn interpret_binary(s: f64) -> Result<Verdict, AggregationError> {
    Ok(Verdict::from_strength(check_strength(s)?))
}

/// Five equal bands over `[0, 1]`, each closed below; the top band also
/// includes 1.0.
pub fn interpret_five_level(s: f64) -> Result<DecisionLevel, AggregationError> {
    let s = check_strength(s)?;
    Ok(if s < 0.2 {
        DecisionLevel::StrongReject
    } else if s < 0.4 {
        DecisionLevel::WeakReject
    } else if s < 0.6 {
        DecisionLevel::Borderline
    } else if s < 0.8 {
        DecisionLevel::WeakAccept
    } else {
        DecisionLevel::StrongAccept
    })
}

fn non_empty<T>(d: &[T]) -> Result<(), AggregationError> {
    if d.is_empty() {
        Err(AggregationError::Empty)
    } else {
        Ok(())
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// 1.0 iff accepts strictly outnumber rejects; ties reject.
pub fn aggregate_binary_majority(d: &[Verdict]) -> Result<f64, AggregationError> {
    non_empty(d)?;
    let accepts = d.iter().filter(|v| **v == Verdict::Accept).count();
    Ok(indicator(accepts > d.len() - accepts))
}

/// 1.0 iff nobody rejects.
pub fn aggregate_binary_all_accept(d: &[Verdict]) -> Result<f64, AggregationError> {
    non_empty(d)?;
    Ok(indicator(d.iter().all(|v| *v == Verdict::Accept)))
}

/// 1.0 iff the summed level weights are strictly positive.
pub fn aggregate_five_level_majority(d: &[DecisionLevel]) -> Result<f64, AggregationError> {
    non_empty(d)?;
    Ok(indicator(d.iter().map(|l| l.weight()).sum::<i32>() > 0))
}

/// 1.0 iff every level is weak or strong accept.
pub fn aggregate_five_level_all_accept(d: &[DecisionLevel]) -> Result<f64, AggregationError> {
    non_empty(d)?;
    Ok(indicator(d.iter().all(|l| l.weight() > 0)))
}

/// Path 2 on a bare vector of per-review decision strengths.
pub fn decide_votes(
    strengths: &[f64],
    interp: Interpretation,
    agg: VoteAggregation,
) -> Result<FinalDecision, AggregationError> {
    let (strength, binary, levels) = match interp {
        Interpretation::Binary => {
            let d = strengths.iter().map(|&s| interpret_binary(s)).collect::<Result<Vec<_>, _>>()?;
            let s = match agg {
                VoteAggregation::Majority => aggregate_binary_majority(&d)?,
                VoteAggregation::AllAccept => aggregate_binary_all_accept(&d)?,
            };
            (s, Some(d), None)
        }
        Interpretation::FiveLevel => {
            let d = strengths.iter().map(|&s| interpret_five_level(s)).collect::<Result<Vec<_>, _>>()?;
            let s = match agg {
                VoteAggregation::Majority => aggregate_five_level_majority(&d)?,
                VoteAggregation::AllAccept => aggregate_five_level_all_accept(&d)?,
            };
            (s, None, Some(d))
        }
    };
    let trace = DecisionTrace::Vote {
        interpretation: interp,
        aggregation: agg,
        review_decision_strengths: strengths.to_vec(),
        binary,
        levels,
    };
    Ok(FinalDecision::new(strength, format!("path2/{}/{}", interp.name(), agg.name()), trace))
}

/// Path 2: interpret each review's decision strength and vote.
pub fn decide_path2(
    p: &PreMpaf,
    interp: Interpretation,
    agg: VoteAggregation,
) -> Result<FinalDecision, AggregationError> {
    decide_votes(p.decision_strengths(), interp, agg)
}
