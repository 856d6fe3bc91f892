//! Aggregates peer reviews into an accept/reject decision through
//! quantitative bipolar argumentation frameworks (QBAFs).

pub mod adapters;
pub mod aggregation;
pub mod datasets;
pub mod dot;
pub mod e2e;
pub mod evaluation;
pub mod extraction;
pub mod qbaf;
pub mod semantics;

pub use aggregation::{FinalDecision, PaperDecision, Verdict};
pub use dot::export_dot;
pub use qbaf::{ArgumentId, AspectLabel, Qbaf, QbafBuilder, QbafError, Relation, ReviewQbaf};
pub use semantics::{evaluate, SemanticsConfig, SemanticsKind, StrengthAssignment};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    use std::fmt::Write;
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}
