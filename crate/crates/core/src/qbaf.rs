//! Bipolar argumentation frameworks with base scores.
//!
//! A [`Qbaf`] is a finite set of arguments, two disjoint relations (attack and
//! support) and a base score in `[0, 1]` per argument. Values are built through
//! [`QbafBuilder`] and are immutable afterwards. [`ReviewQbaf`] narrows a QBAF to
//! the three-level text → aspect → decision shape used for single reviews.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of an argument, unique within one framework.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArgumentId(String);

impl ArgumentId {
    pub fn new(id: impl Into<String>) -> Self {
        ArgumentId(id.into())
    }

    /// The single decision argument of review and multi-party frameworks.
    pub fn decision() -> Self {
        ArgumentId("Decision".to_string())
    }

    pub fn aspect(aspect: AspectLabel) -> Self {
        ArgumentId(aspect.code().to_string())
    }

    /// Text argument for the sentence at `index` (zero based), labelled `T1`, `T2`, ...
    pub fn text(index: usize) -> Self {
        ArgumentId(format!("T{}", index + 1))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ArgumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArgumentId {
    fn from(s: &str) -> Self {
        ArgumentId(s.to_string())
    }
}

impl From<String> for ArgumentId {
    fn from(s: String) -> Self {
        ArgumentId(s)
    }
}

/// The seven review aspects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AspectLabel {
    #[serde(rename = "APR")]
    Appropriateness,
    #[serde(rename = "CLA")]
    Clarity,
    #[serde(rename = "NOV")]
    Novelty,
    #[serde(rename = "EMP")]
    Soundness,
    #[serde(rename = "CMP")]
    Comparison,
    #[serde(rename = "SUB")]
    Substance,
    #[serde(rename = "IMP")]
    Impact,
}

impl AspectLabel {
    pub const ALL: [AspectLabel; 7] = [
        AspectLabel::Appropriateness,
        AspectLabel::Clarity,
        AspectLabel::Novelty,
        AspectLabel::Soundness,
        AspectLabel::Comparison,
        AspectLabel::Substance,
        AspectLabel::Impact,
    ];

    pub fn code(self) -> &'static str {
        match self {
            AspectLabel::Appropriateness => "APR",
            AspectLabel::Clarity => "CLA",
            AspectLabel::Novelty => "NOV",
            AspectLabel::Soundness => "EMP",
            AspectLabel::Comparison => "CMP",
            AspectLabel::Substance => "SUB",
            AspectLabel::Impact => "IMP",
        }
    }
}

impl fmt::Display for AspectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AspectLabel {
    type Err = QbafError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AspectLabel::ALL
            .into_iter()
            .find(|a| a.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| QbafError::UnknownAspect(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArgumentKind {
    Text,
    Aspect(AspectLabel),
    Decision,
}

impl ArgumentKind {
    fn tag(self) -> &'static str {
        match self {
            ArgumentKind::Text => "text",
            ArgumentKind::Aspect(_) => "aspect",
            ArgumentKind::Decision => "decision",
        }
    }
}

/// Edge polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Attack,
    Support,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Argument {
    pub id: ArgumentId,
    pub kind: ArgumentKind,
}

/// One broken framework invariant, as reported by [`Qbaf::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateArgument(ArgumentId),
    UnknownEndpoint { from: ArgumentId, to: ArgumentId },
    SelfRelation(ArgumentId),
    RelationsNotDisjoint { from: ArgumentId, to: ArgumentId },
    MissingBaseScore(ArgumentId),
    BaseScoreOutOfRange { id: ArgumentId, value: f64 },
    UndeclaredBaseScore(ArgumentId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateArgument(id) => write!(f, "duplicate argument {id}"),
            Violation::UnknownEndpoint { from, to } => {
                write!(f, "relation ({from}, {to}) has an undeclared endpoint")
            }
            Violation::SelfRelation(id) => write!(f, "self relation on {id}"),
            Violation::RelationsNotDisjoint { from, to } => {
                write!(f, "relations not disjoint: ({from}, {to}) is both attack and support")
            }
            Violation::MissingBaseScore(id) => write!(f, "missing base score for {id}"),
            Violation::BaseScoreOutOfRange { id, value } => {
                write!(f, "base score out of range: {id} = {value}")
            }
            Violation::UndeclaredBaseScore(id) => {
                write!(f, "base score given for undeclared argument {id}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum QbafError {
    #[error("unknown argument id {0}")]
    UnknownArgument(ArgumentId),
    #[error("unknown aspect label {0:?}")]
    UnknownAspect(String),
    #[error("invalid framework: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("not a review framework: {0}")]
    NotReviewShaped(String),
    #[error("malformed framework document: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A quantitative bipolar argumentation framework.
///
/// May hold an invalid framework when produced by
/// [`QbafBuilder::build_unchecked`] or [`Qbaf::from_json`]; call
/// [`Qbaf::validate`] before evaluating such a value.
#[derive(Clone, Debug, PartialEq)]
pub struct Qbaf {
    arguments: Vec<Argument>,
    index: BTreeMap<ArgumentId, usize>,
    attacks: BTreeSet<(ArgumentId, ArgumentId)>,
    supports: BTreeSet<(ArgumentId, ArgumentId)>,
    base_scores: BTreeMap<ArgumentId, f64>,
}

impl Qbaf {
    pub fn builder() -> QbafBuilder {
        QbafBuilder::default()
    }

    /// Arguments in declaration order.
    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    pub fn contains(&self, id: &ArgumentId) -> bool {
        self.index.contains_key(id)
    }

    pub fn kind(&self, id: &ArgumentId) -> Option<ArgumentKind> {
        self.index.get(id).map(|&i| self.arguments[i].kind)
    }

    /// Position of `id` in [`Qbaf::arguments`].
    pub fn position(&self, id: &ArgumentId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn attacks(&self) -> &BTreeSet<(ArgumentId, ArgumentId)> {
        &self.attacks
    }

    pub fn supports(&self) -> &BTreeSet<(ArgumentId, ArgumentId)> {
        &self.supports
    }

    pub fn base_scores(&self) -> &BTreeMap<ArgumentId, f64> {
        &self.base_scores
    }

    pub fn base_score(&self, id: &ArgumentId) -> Option<f64> {
        self.base_scores.get(id).copied()
    }

    /// All edges with their polarity, attacks first.
    pub fn relations(&self) -> impl Iterator<Item = (&ArgumentId, &ArgumentId, Relation)> + '_ {
        self.attacks
            .iter()
            .map(|(a, b)| (a, b, Relation::Attack))
            .chain(self.supports.iter().map(|(a, b)| (a, b, Relation::Support)))
    }

    pub fn attackers(&self, id: &ArgumentId) -> Result<BTreeSet<ArgumentId>, QbafError> {
        self.incoming(id, &self.attacks)
    }

    pub fn supporters(&self, id: &ArgumentId) -> Result<BTreeSet<ArgumentId>, QbafError> {
        self.incoming(id, &self.supports)
    }

    fn incoming(
        &self,
        id: &ArgumentId,
        edges: &BTreeSet<(ArgumentId, ArgumentId)>,
    ) -> Result<BTreeSet<ArgumentId>, QbafError> {
        if !self.contains(id) {
            return Err(QbafError::UnknownArgument(id.clone()));
        }
        Ok(edges
            .iter()
            .filter(|(_, to)| to == id)
            .map(|(from, _)| from.clone())
            .collect())
    }

    /// Every violated invariant; empty iff the framework is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for arg in &self.arguments {
            if !seen.insert(&arg.id) {
                out.push(Violation::DuplicateArgument(arg.id.clone()));
            }
        }
        for (from, to, _) in self.relations() {
            if !self.contains(from) || !self.contains(to) {
                out.push(Violation::UnknownEndpoint { from: from.clone(), to: to.clone() });
            }
            if from == to {
                out.push(Violation::SelfRelation(from.clone()));
            }
        }
        for pair in self.attacks.intersection(&self.supports) {
            out.push(Violation::RelationsNotDisjoint { from: pair.0.clone(), to: pair.1.clone() });
        }
        for arg in &self.arguments {
            match self.base_scores.get(&arg.id) {
                None => out.push(Violation::MissingBaseScore(arg.id.clone())),
                Some(&v) if !(0.0..=1.0).contains(&v) => {
                    out.push(Violation::BaseScoreOutOfRange { id: arg.id.clone(), value: v })
                }
                Some(_) => {}
            }
        }
        for id in self.base_scores.keys() {
            if !self.contains(id) {
                out.push(Violation::UndeclaredBaseScore(id.clone()));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn ensure_valid(&self) -> Result<(), QbafError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(QbafError::Invalid(v))
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(QbafDocument::from(self)).expect("framework document serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&QbafDocument::from(self)).expect("framework document serializes")
    }

    /// Parses the fixture document format. The result is not validated.
    pub fn from_json(text: &str) -> Result<Qbaf, QbafError> {
        let doc: QbafDocument = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Qbaf, QbafError> {
        let doc: QbafDocument = serde_json::from_value(value)?;
        doc.try_into()
    }
}

/// Accumulates arguments, relations and base scores.
#[derive(Clone, Debug, Default)]
pub struct QbafBuilder {
    arguments: Vec<Argument>,
    attacks: BTreeSet<(ArgumentId, ArgumentId)>,
    supports: BTreeSet<(ArgumentId, ArgumentId)>,
    base_scores: BTreeMap<ArgumentId, f64>,
}

impl QbafBuilder {
    pub fn argument(mut self, id: impl Into<ArgumentId>, kind: ArgumentKind, base_score: f64) -> Self {
        let id = id.into();
        self.base_scores.insert(id.clone(), base_score);
        self.arguments.push(Argument { id, kind });
        self
    }

    /// Shorthand for a text argument.
    pub fn text(self, id: impl Into<ArgumentId>, base_score: f64) -> Self {
        self.argument(id, ArgumentKind::Text, base_score)
    }

    pub fn attack(mut self, from: impl Into<ArgumentId>, to: impl Into<ArgumentId>) -> Self {
        self.attacks.insert((from.into(), to.into()));
        self
    }

    pub fn support(mut self, from: impl Into<ArgumentId>, to: impl Into<ArgumentId>) -> Self {
        self.supports.insert((from.into(), to.into()));
        self
    }

    pub fn relation(self, from: impl Into<ArgumentId>, to: impl Into<ArgumentId>, rel: Relation) -> Self {
        match rel {
            Relation::Attack => self.attack(from, to),
            Relation::Support => self.support(from, to),
        }
    }

    pub fn base_score(mut self, id: impl Into<ArgumentId>, value: f64) -> Self {
        self.base_scores.insert(id.into(), value);
        self
    }

    pub fn build(self) -> Result<Qbaf, QbafError> {
        let q = self.build_unchecked();
        q.ensure_valid()?;
        Ok(q)
    }

    pub fn build_unchecked(self) -> Qbaf {
        let mut index = BTreeMap::new();
        for (i, arg) in self.arguments.iter().enumerate() {
            index.entry(arg.id.clone()).or_insert(i);
        }
        Qbaf {
            arguments: self.arguments,
            index,
            attacks: self.attacks,
            supports: self.supports,
            base_scores: self.base_scores,
        }
    }
}

/// A QBAF with the text → aspect → decision shape: all seven aspect
/// arguments, exactly one decision argument, and relations only from text
/// to aspect or from aspect to the decision.
#[derive(Clone, Debug, PartialEq)]
pub struct ReviewQbaf(Qbaf);

impl ReviewQbaf {
    pub fn new(q: Qbaf) -> Result<Self, QbafError> {
        q.ensure_valid()?;
        check_review_shape(&q).map_err(QbafError::NotReviewShaped)?;
        Ok(ReviewQbaf(q))
    }

    pub fn qbaf(&self) -> &Qbaf {
        &self.0
    }

    pub fn into_inner(self) -> Qbaf {
        self.0
    }

    pub fn text_arguments(&self) -> impl Iterator<Item = &ArgumentId> + '_ {
        self.0
            .arguments()
            .iter()
            .filter(|a| a.kind == ArgumentKind::Text)
            .map(|a| &a.id)
    }
}

fn check_review_shape(q: &Qbaf) -> Result<(), String> {
    let decisions: Vec<_> = q
        .arguments()
        .iter()
        .filter(|a| a.kind == ArgumentKind::Decision)
        .collect();
    if decisions.len() != 1 {
        return Err(format!("expected exactly one decision argument, found {}", decisions.len()));
    }
    if decisions[0].id != ArgumentId::decision() {
        return Err(format!("decision argument must be named Decision, found {}", decisions[0].id));
    }
    for aspect in AspectLabel::ALL {
        match q.kind(&ArgumentId::aspect(aspect)) {
            Some(ArgumentKind::Aspect(a)) if a == aspect => {}
            _ => return Err(format!("aspect argument {aspect} missing")),
        }
    }
    for arg in q.arguments() {
        if let ArgumentKind::Aspect(a) = arg.kind {
            if arg.id != ArgumentId::aspect(a) {
                return Err(format!("aspect argument {} must be named {a}", arg.id));
            }
        }
    }
    for (from, to, _) in q.relations() {
        let typed = matches!(
            (q.kind(from), q.kind(to)),
            (Some(ArgumentKind::Text), Some(ArgumentKind::Aspect(_)))
                | (Some(ArgumentKind::Aspect(_)), Some(ArgumentKind::Decision))
        );
        if !typed {
            return Err(format!("relation ({from}, {to}) is not text→aspect or aspect→decision"));
        }
    }
    Ok(())
}

// JSON fixture document: {arguments:[{id,kind,aspect?}], attacks:[[from,to]],
// supports:[[from,to]], base_scores:{id:number}}

#[derive(Serialize, Deserialize)]
struct ArgumentDocument {
    id: ArgumentId,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aspect: Option<AspectLabel>,
}

#[derive(Serialize, Deserialize)]
struct QbafDocument {
    arguments: Vec<ArgumentDocument>,
    #[serde(default)]
    attacks: Vec<(ArgumentId, ArgumentId)>,
    #[serde(default)]
    supports: Vec<(ArgumentId, ArgumentId)>,
    #[serde(default)]
    base_scores: BTreeMap<ArgumentId, f64>,
}

impl From<&Qbaf> for QbafDocument {
    fn from(q: &Qbaf) -> Self {
        QbafDocument {
            arguments: q
                .arguments
                .iter()
                .map(|a| ArgumentDocument {
                    id: a.id.clone(),
                    kind: a.kind.tag().to_string(),
                    aspect: match a.kind {
                        ArgumentKind::Aspect(x) => Some(x),
                        _ => None,
                    },
                })
                .collect(),
            attacks: q.attacks.iter().cloned().collect(),
            supports: q.supports.iter().cloned().collect(),
            base_scores: q.base_scores.clone(),
        }
    }
}

impl TryFrom<QbafDocument> for Qbaf {
    type Error = QbafError;

    fn try_from(doc: QbafDocument) -> Result<Self, Self::Error> {
        let mut b = QbafBuilder::default();
        for a in doc.arguments {
            let kind = match (a.kind.as_str(), a.aspect) {
                ("text", _) => ArgumentKind::Text,
                ("decision", _) => ArgumentKind::Decision,
                ("aspect", Some(x)) => ArgumentKind::Aspect(x),
                ("aspect", None) => {
                    return Err(QbafError::NotReviewShaped(format!(
                        "aspect argument {} has no aspect label",
                        a.id
                    )))
                }
                (other, _) => {
                    return Err(QbafError::NotReviewShaped(format!(
                        "unknown argument kind {other:?} for {}",
                        a.id
                    )))
                }
            };
            b.arguments.push(Argument { id: a.id, kind });
        }
        b.attacks = doc.attacks.into_iter().collect();
        b.supports = doc.supports.into_iter().collect();
        b.base_scores = doc.base_scores;
        Ok(b.build_unchecked())
    }
}
