mod common;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use peerarg_core::adapters::{Completion, CompletionError, KeywordAspectClassifier, RuleBasedSentiment};
use peerarg_core::aggregation::{DecisionTrace, Verdict};
use peerarg_core::datasets::{load_jsonl, PaperRecord};
use peerarg_core::e2e::E2EPrimer;
use peerarg_core::evaluation::{
    emit_report, enumerate_combos, load_report, run_e2e, run_grid, ClassificationSource, EvalError, GridOptions,
    HyperparamCombo, ReportFormat,
};
use peerarg_core::extraction::{
    build_review_qbaf, classify_review, split_and_clean, AspectClass, AspectClassifier, ExtractionConfig, PortError,
    ReviewSentence,
};
use peerarg_core::qbaf::ArgumentKind;

fn grid20() -> Vec<PaperRecord> {
    load_jsonl(&common::fixture("grid20.jsonl")).unwrap()
}

#[test]
fn reports_round_trip_and_render_as_csv() {
    let papers = grid20();
    let opts = GridOptions { dataset_id: "grid20".into(), timestamp: Some("2026-01-01T00:00:00Z".into()), ..Default::default() };
    let report = run_grid(&papers, &enumerate_combos(false), &ClassificationSource::Oracle, &opts).unwrap();
    assert_eq!(report.paper_count, 20);
    let names: Vec<&str> = report.rows.iter().map(|r| r.name.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);

    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    emit_report(&report, ReportFormat::Json, &json).unwrap();
    assert_eq!(load_report(&json).unwrap(), report);

    let csv_path = dir.path().join("r.csv");
    emit_report(&report, ReportFormat::Csv, &csv_path).unwrap();
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(
        header,
        [
            "combo", "base_score", "qbaf_semantics", "path", "interpretation", "aggregation", "aspect_scores", "papers",
            "tp", "fp", "tn", "fn", "accuracy", "macro_f1", "failures", "degraded"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 24);
    for (rec, row) in rows.iter().zip(&report.rows) {
        // a CSV line names its combination completely
        let mut name = format!("{}/{}/{}", &rec[1], &rec[2], &rec[3]);
        if &rec[3] == "path2" {
            name = format!("{name}/{}", &rec[4]);
        }
        name = format!("{name}/{}", &rec[5]);
        let combo: HyperparamCombo = name.parse().unwrap();
        assert_eq!(combo, row.combo);
        assert_eq!(&rec[0], row.name);
        assert_eq!(rec[12].parse::<f64>().unwrap(), row.accuracy);
    }
}

#[test]
fn grid_runs_are_deterministic() {
    let papers = grid20();
    let combos = enumerate_combos(true);
    let a = run_grid(&papers, &combos, &ClassificationSource::Oracle, &GridOptions::default()).unwrap();
    let b = run_grid(&papers, &combos, &ClassificationSource::Oracle, &GridOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.timestamp, None);
    let subset = run_grid(&papers, &combos[..3], &ClassificationSource::Oracle, &GridOptions::default()).unwrap();
    assert_eq!(subset.rows.len(), 3);
    assert_ne!(subset.config_hash, a.config_hash);
}

#[test]
fn empty_inputs_are_errors() {
    let papers = grid20();
    let none: &[PaperRecord] = &[];
    assert!(matches!(
        run_grid(none, &enumerate_combos(false), &ClassificationSource::Oracle, &GridOptions::default()),
        Err(EvalError::NoPapers)
    ));
    assert!(matches!(
        run_grid(&papers, &[], &ClassificationSource::Oracle, &GridOptions::default()),
        Err(EvalError::NoCombos)
    ));
}

#[test]
fn failures_count_as_rejections_and_flag_degraded_rows() {
    let combo = [HyperparamCombo::named("best-overall").unwrap()];
    for (broken, degraded) in [(1usize, false), (2, false), (3, true)] {
        let mut papers = grid20();
        for p in papers.iter_mut().take(broken) {
            p.reviews[0].sentence_annotations = None;
        }
        let report = run_grid(&papers, &combo, &ClassificationSource::Oracle, &GridOptions::default()).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.failures, broken);
        assert_eq!(row.degraded, degraded, "{broken} failures");
        assert_eq!(row.confusion.total(), 20);
        for d in row.decisions.iter().take(broken) {
            assert_eq!(d.decision.verdict, Verdict::Reject);
            assert!(matches!(d.decision.trace, DecisionTrace::Failed { .. }));
        }
    }
}

struct Counting {
    inner: KeywordAspectClassifier,
    calls: AtomicUsize,
}

impl AspectClassifier for Counting {
    fn classify(&self, s: &ReviewSentence) -> Result<BTreeSet<AspectClass>, PortError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.classify(s)
    }

    fn config_id(&self) -> String {
        "counting".into()
    }
}

#[test]
fn each_review_is_classified_once_per_grid() {
    let papers = grid20();
    let counting = Arc::new(Counting { inner: KeywordAspectClassifier, calls: AtomicUsize::new(0) });
    let source = ClassificationSource::Ports { classifier: counting.clone(), sentiment: Arc::new(RuleBasedSentiment) };
    run_grid(&papers, &enumerate_combos(true), &source, &GridOptions::default()).unwrap();
    let sentences: usize = papers
        .iter()
        .flat_map(|p| &p.reviews)
        .map(|r| split_and_clean(&r.text).len())
        .sum();
    assert_eq!(counting.calls.load(Ordering::SeqCst), sentences);
}

#[test]
fn raw_text_review_framework_shape() {
    let text = "The paper is clear and well written. Unfortunately the novelty is limited. \
                We ran it on a laptop. The experiments are convincing.";
    let sentences = split_and_clean(text);
    assert_eq!(sentences.len(), 4);
    let classified = classify_review(&sentences, &KeywordAspectClassifier, &RuleBasedSentiment).unwrap();
    let ex = build_review_qbaf(&classified, &ExtractionConfig::default()).unwrap();
    let q = ex.qbaf.qbaf();
    let texts = q.arguments().iter().filter(|a| a.kind == ArgumentKind::Text).count();
    assert_eq!(q.len(), 8 + texts);
    assert!(texts >= 2);
    let s = ex.decision_strength();
    assert!((0.0..=1.0).contains(&s));
}

struct Fixed(&'static str);

impl Completion for Fixed {
    fn complete(&self, _prompt: &str) -> Result<String, CompletionError> {
        Ok(self.0.into())
    }

    fn config_id(&self) -> String {
        "fixed".into()
    }
}

#[test]
fn end_to_end_with_a_constant_service() {
    let papers = grid20();
    let accept_rate = papers.iter().filter(|p| p.gold_decision == Verdict::Accept).count() as f64 / 20.0;
    let s = run_e2e(&papers, &E2EPrimer::default_primer(), &Fixed("accept")).unwrap();
    assert_eq!(s.accuracy, accept_rate);
    assert_eq!((s.unparseable, s.failures), (0, 0));

    let s = run_e2e(&papers, &E2EPrimer::default_primer(), &Fixed("no idea")).unwrap();
    assert_eq!(s.unparseable, 20);
    let reject_rate = papers.iter().filter(|p| p.gold_decision == Verdict::Reject).count() as f64 / 20.0;
    assert_eq!(s.accuracy, reject_rate);
}
