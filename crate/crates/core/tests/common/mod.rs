//! Generators and independent reference implementations shared by the
//! integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use peerarg_core::aggregation::Verdict;
use peerarg_core::datasets::{DatasetSource, PaperRecord, ReviewRecord, SentenceAnnotation};
use peerarg_core::extraction::{AspectClass, Sentiment};
use peerarg_core::{ArgumentId, AspectLabel, Qbaf};
use proptest::prelude::*;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Edge codes: 0 attack, 1 support, anything else no edge.
fn dag_from_parts(bases: &[f64], edges: &[u8], labels: &[usize]) -> Qbaf {
    let n = bases.len();
    let id = |i: usize| format!("x{}", labels[i]);
    // insert in label order so argument positions differ from generation order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| labels[i]);
    let mut b = Qbaf::builder();
    for &i in &order {
        b = b.text(id(i), bases[i]);
    }
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            match edges[k] {
                0 => b = b.attack(id(i), id(j)),
                1 => b = b.support(id(i), id(j)),
                _ => {}
            }
            k += 1;
        }
    }
    b.build().expect("generated framework is valid")
}

/// Random acyclic frameworks with 1..=max_nodes text arguments.
pub fn arb_dag(max_nodes: usize) -> impl Strategy<Value = Qbaf> {
    (1..=max_nodes).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(0u8..6, pairs),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
            .prop_map(|(bases, edges, labels)| dag_from_parts(&bases, &edges, &labels))
    })
}

/// Probabilistic sum written as the literal fold.
pub fn ref_aggregate(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &v in values {
        acc = acc + v - acc * v;
    }
    acc
}

pub fn ref_influence(v0: f64, va: f64, vs: f64) -> f64 {
    if va >= vs {
        v0 - v0 * (vs - va).abs()
    } else {
        v0 + (1.0 - v0) * (vs - va).abs()
    }
}

/// Recursive, memoized DF-QuAD straight from the definition.
pub fn df_quad_oracle(q: &Qbaf) -> BTreeMap<ArgumentId, f64> {
    fn visit(q: &Qbaf, id: &ArgumentId, memo: &mut BTreeMap<ArgumentId, f64>) -> f64 {
        if let Some(&v) = memo.get(id) {
            return v;
        }
        let att: Vec<f64> = q.attackers(id).unwrap().iter().map(|a| visit(q, a, memo)).collect();
        let sup: Vec<f64> = q.supporters(id).unwrap().iter().map(|a| visit(q, a, memo)).collect();
        let v = ref_influence(q.base_score(id).unwrap(), ref_aggregate(&att), ref_aggregate(&sup));
        memo.insert(id.clone(), v);
        v
    }
    let mut memo = BTreeMap::new();
    for a in q.arguments() {
        visit(q, &a.id, &mut memo);
    }
    memo
}

/// Length of the longest relation path.
pub fn depth(q: &Qbaf) -> usize {
    fn visit(q: &Qbaf, id: &ArgumentId, memo: &mut BTreeMap<ArgumentId, usize>) -> usize {
        if let Some(&d) = memo.get(id) {
            return d;
        }
        let parents: BTreeSet<ArgumentId> =
            q.attackers(id).unwrap().union(&q.supporters(id).unwrap()).cloned().collect();
        let d = parents.iter().map(|p| visit(q, p, memo) + 1).max().unwrap_or(0);
        memo.insert(id.clone(), d);
        d
    }
    let mut memo = BTreeMap::new();
    q.arguments().iter().map(|a| visit(q, &a.id, &mut memo)).max().unwrap_or(0)
}

/// A topological order choosing, among ready arguments, the one with the
/// smallest key.
pub fn keyed_topological_order(q: &Qbaf, keys: &[u32]) -> Vec<ArgumentId> {
    let ids: Vec<ArgumentId> = q.arguments().iter().map(|a| a.id.clone()).collect();
    let mut indegree: BTreeMap<&ArgumentId, usize> = ids.iter().map(|i| (i, 0)).collect();
    for (_, to, _) in q.relations() {
        *indegree.get_mut(to).unwrap() += 1;
    }
    let mut out = Vec::new();
    while out.len() < ids.len() {
        let (_, next) = ids
            .iter()
            .enumerate()
            .filter(|(_, i)| indegree[i] == 0 && !out.contains(*i))
            .min_by_key(|(p, _)| keys[*p % keys.len()])
            .expect("acyclic");
        out.push(next.clone());
        for (from, to, _) in q.relations() {
            if from == next {
                *indegree.get_mut(to).unwrap() -= 1;
            }
        }
    }
    out
}

/// Literal path-2 definitions used as the brute-force reference.
pub mod votes {
    pub fn binary_accepts(s: f64) -> bool {
        !(s <= 0.5)
    }

    pub fn level_weight(s: f64) -> i32 {
        if (0.0..0.2).contains(&s) {
            -2
        } else if (0.2..0.4).contains(&s) {
            -1
        } else if (0.4..0.6).contains(&s) {
            0
        } else if (0.6..0.8).contains(&s) {
            1
        } else {
            2
        }
    }

    pub fn binary_majority(v: &[f64]) -> bool {
        let accepts = v.iter().filter(|&&s| binary_accepts(s)).count();
        accepts > v.len() - accepts
    }

    pub fn binary_all_accept(v: &[f64]) -> bool {
        v.iter().all(|&s| binary_accepts(s))
    }

    pub fn five_level_majority(v: &[f64]) -> bool {
        v.iter().map(|&s| level_weight(s)).sum::<i32>() > 0
    }

    pub fn five_level_all_accept(v: &[f64]) -> bool {
        v.iter().all(|&s| level_weight(s) > 0)
    }
}

fn arb_annotation() -> impl Strategy<Value = SentenceAnnotation> {
    let aspects = prop_oneof![
        1 => Just(vec![AspectClass::Other]),
        6 => prop::sample::subsequence(AspectLabel::ALL.to_vec(), 1..=2)
            .prop_map(|v| v.into_iter().map(AspectClass::Aspect).collect()),
    ];
    let sentiment = prop_oneof![
        4 => Just(Sentiment::Positive),
        4 => Just(Sentiment::Negative),
        1 => Just(Sentiment::Neutral),
    ];
    (aspects, sentiment, 0.5f64..=1.0).prop_map(|(aspects, sentiment, c)| SentenceAnnotation {
        text: "A sentence.".into(),
        aspects,
        sentiment,
        confidence: Some(c),
    })
}

fn arb_review(index: usize) -> impl Strategy<Value = ReviewRecord> {
    (
        prop::collection::vec(arb_annotation(), 1..=6),
        prop::option::of(prop::collection::btree_map(prop::sample::select(AspectLabel::ALL.to_vec()), 0.0f64..=1.0, 0..=7)),
    )
        .prop_map(move |(ann, scores)| ReviewRecord {
            review_id: format!("r{index}"),
            text: ann.iter().map(|a| a.text.as_str()).collect::<Vec<_>>().join(" "),
            sentence_annotations: Some(ann),
            aspect_scores: scores,
        })
}

/// Papers with 1..=max_reviews oracle-annotated reviews.
pub fn arb_paper(max_reviews: usize) -> impl Strategy<Value = PaperRecord> {
    (1..=max_reviews)
        .prop_flat_map(|n| (0..n).map(arb_review).collect::<Vec<_>>())
        .prop_map(|reviews| PaperRecord {
            paper_id: "p".into(),
            venue: "synthetic".into(),
            reviews,
            gold_decision: Verdict::Accept,
            source: DatasetSource::Synthetic,
        })
}
