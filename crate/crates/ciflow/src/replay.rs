//! The crowd experiment pipeline over a bundle: screen every annotator,
//! aggregate qualified work responses by majority vote, score the
//! aggregates against gold, and relate excerpt difficulty to the scores.

use std::collections::BTreeMap;

use ciflow_core::crowd::{
    accuracy_report, majority_vote, screen_worker, span_scores, word_scores, AccuracyReport,
    AggregatedAnnotation, EntryStatus, Excerpt, ScreeningFailure, ScreeningRule, SpanScores,
    HISTOGRAM_BINS,
};
use ciflow_core::model::char_slice;
use ciflow_core::readability::{
    correlate_difficulty, excerpt_stats, CorrelationRow, ExcerptStats, CORRELATION_KINDS,
};
use ciflow_core::{AnnotationSet, ParameterKind, ScoreReport};
use serde::Serialize;

use crate::bundle::Bundle;
use crate::error::Result;
use crate::report::{num, opt_num, Report, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayConfig {
    pub rule: ScreeningRule,
    pub kinds: Vec<ParameterKind>,
    pub overlap: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig {
            rule: ScreeningRule::default(),
            kinds: ParameterKind::CROWD.to_vec(),
            overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningRow {
    pub annotator_id: String,
    pub passed: bool,
    pub question_f1: [Option<f64>; 3],
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcerptScores {
    pub excerpt_id: String,
    pub n_annotators: usize,
    pub scores: ScoreReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub screening: Vec<ScreeningRow>,
    pub qualified: Vec<String>,
    pub aggregates: Vec<AggregatedAnnotation>,
    pub word_scores: Vec<ExcerptScores>,
    pub span_scores: Vec<SpanScores>,
    pub accuracy: Option<AccuracyReport>,
    pub excerpt_stats: Vec<ExcerptStats>,
    /// Present when at least three scored excerpts exist.
    pub correlations: Option<Vec<CorrelationRow>>,
}

/// Screens every annotator that has a response. Without screening
/// excerpts in the bundle everyone qualifies.
pub fn screen_all(bundle: &Bundle, config: &ReplayConfig) -> Result<Vec<ScreeningRow>> {
    let screening: Vec<Excerpt> = bundle.excerpts.iter().filter(|e| e.is_screening()).cloned().collect();
    let mut by_annotator: BTreeMap<&str, Vec<AnnotationSet>> = BTreeMap::new();
    for r in &bundle.responses {
        by_annotator.entry(r.annotator_id()).or_default().push(r.clone());
    }
    let failed = bundle.failed_sessions();
    let mut rows = Vec::new();
    for (annotator, responses) in by_annotator {
        if screening.is_empty() {
            let passed = !failed.contains(annotator);
            rows.push(ScreeningRow {
                annotator_id: annotator.into(),
                passed,
                question_f1: [None; 3],
                failure: (!passed).then(|| "flagged failed".into()),
            });
            continue;
        }
        let outcome = screen_worker(&responses, &screening, &config.rule, &config.kinds)?;
        let flagged = failed.contains(annotator);
        rows.push(ScreeningRow {
            annotator_id: annotator.into(),
            passed: outcome.passed && !flagged,
            question_f1: outcome.question_f1,
            failure: match outcome.failure {
                Some(ScreeningFailure::MissingResponse(id)) => Some(format!("missing response for {id}")),
                Some(ScreeningFailure::BelowThreshold) => Some("below threshold".into()),
                None if flagged => Some("flagged failed".into()),
                None => None,
            },
        });
    }
    Ok(rows)
}

/// Majority-vote aggregates of qualified responses, one per work excerpt
/// with at least one such response, in excerpt order.
pub fn aggregate_all(bundle: &Bundle, qualified: &[String]) -> Result<Vec<AggregatedAnnotation>> {
    let mut out = Vec::new();
    for excerpt in bundle.excerpts.iter().filter(|e| !e.is_screening()) {
        let responses: Vec<AnnotationSet> = bundle
            .responses
            .iter()
            .filter(|r| r.excerpt_id() == excerpt.excerpt_id())
            .filter(|r| qualified.binary_search_by(|q| q.as_str().cmp(r.annotator_id())).is_ok())
            .cloned()
            .collect();
        if responses.is_empty() {
            continue;
        }
        out.push(majority_vote(&responses, excerpt)?);
    }
    Ok(out)
}

pub fn replay(bundle: &Bundle, config: &ReplayConfig) -> Result<ReplayReport> {
    let screening = screen_all(bundle, config)?;
    let qualified: Vec<String> = screening.iter().filter(|r| r.passed).map(|r| r.annotator_id.clone()).collect();
    let aggregates = aggregate_all(bundle, &qualified)?;
    let mut word = Vec::new();
    let mut spans = Vec::new();
    let mut stats = Vec::new();
    for agg in &aggregates {
        let excerpt = bundle.excerpt(&agg.excerpt_id).expect("aggregates come from bundle excerpts");
        let Some(gold) = excerpt.gold() else { continue };
        word.push(ExcerptScores {
            excerpt_id: agg.excerpt_id.clone(),
            n_annotators: agg.n_annotators,
            scores: word_scores(agg, gold, excerpt, &config.kinds)?,
        });
        spans.push(span_scores(agg, gold, excerpt, config.overlap)?);
        stats.push(excerpt_stats(excerpt, Some(gold))?);
    }
    let accuracy = if spans.is_empty() {
        None
    } else {
        let ledgers: Vec<_> = spans.iter().map(|s| s.ledger.clone()).collect();
        let scores: Vec<_> = word.iter().map(|w| w.scores.clone()).collect();
        Some(accuracy_report(&ledgers, &scores, &config.kinds)?)
    };
    let correlations = if stats.len() >= 3 && CORRELATION_KINDS.iter().all(|k| config.kinds.contains(k)) {
        let f1: Vec<BTreeMap<ParameterKind, f64>> = word
            .iter()
            .map(|w| w.scores.per_kind.iter().map(|(k, s)| (*k, s.f1)).collect())
            .collect();
        Some(correlate_difficulty(&stats, &f1)?)
    } else {
        None
    };
    Ok(ReplayReport {
        screening,
        qualified,
        aggregates,
        word_scores: word,
        span_scores: spans,
        accuracy,
        excerpt_stats: stats,
        correlations,
    })
}

fn label(kind: Option<ParameterKind>) -> String {
    kind.map(|k| k.as_str().to_string()).unwrap_or_default()
}

pub fn screening_table(rows: &[ScreeningRow]) -> Table {
    let mut t = Table::new("screening", "Screening", &["annotator_id", "passed", "q1_f1", "q2_f1", "q3_f1", "failure"]);
    for r in rows {
        t.push(vec![
            r.annotator_id.clone(),
            r.passed.to_string(),
            opt_num(r.question_f1[0]),
            opt_num(r.question_f1[1]),
            opt_num(r.question_f1[2]),
            r.failure.clone().unwrap_or_default(),
        ]);
    }
    t
}

pub fn aggregate_tables(aggregates: &[AggregatedAnnotation], kinds: &[ParameterKind]) -> Vec<Table> {
    let mut counts = Table::new("annotator_counts", "Annotators per excerpt", &["excerpt_id", "n_annotators"]);
    let mut columns = vec!["excerpt_id", "token_index", "token", "start", "end", "label"];
    let vote_cols: Vec<String> = kinds.iter().map(|k| format!("votes_{}", k.as_str())).collect();
    columns.extend(vote_cols.iter().map(String::as_str));
    columns.push("n_annotators");
    let mut labels = Table::new("aggregate", "Majority-vote labels", &columns);
    for agg in aggregates {
        counts.push(vec![agg.excerpt_id.clone(), agg.n_annotators.to_string()]);
        for (i, token) in agg.tokens.iter().enumerate() {
            let mut row = vec![
                agg.excerpt_id.clone(),
                i.to_string(),
                token.text.clone(),
                token.start.to_string(),
                token.end.to_string(),
                label(agg.labels[i]),
            ];
            row.extend(kinds.iter().map(|k| agg.votes[i].get(k).copied().unwrap_or(0).to_string()));
            row.push(agg.n_annotators.to_string());
            labels.push(row);
        }
    }
    vec![counts, labels]
}

pub fn word_score_table(name: &str, rows: &[(String, String, ScoreReport)]) -> Table {
    let mut t = Table::new(
        name,
        "Word-based scores",
        &["excerpt_id", "annotator_id", "kind", "precision", "recall", "f1", "true_positive", "false_positive", "false_negative"],
    );
    for (excerpt, annotator, report) in rows {
        let entries = report
            .per_kind
            .iter()
            .map(|(k, s)| (k.as_str(), s))
            .chain(std::iter::once(("micro", &report.micro)));
        for (kind, s) in entries {
            t.push(vec![
                excerpt.clone(),
                annotator.clone(),
                kind.into(),
                num(s.precision),
                num(s.recall),
                num(s.f1),
                s.true_positive.to_string(),
                s.false_positive.to_string(),
                s.false_negative.to_string(),
            ]);
        }
    }
    t
}

pub fn span_tables(bundle: &Bundle, spans: &[SpanScores]) -> Vec<Table> {
    let mut counts = Table::new(
        "span_counts",
        "Span-based instance counts",
        &["excerpt_id", "kind", "correct", "skipped", "extra", "mismatched_gold", "mismatched_predicted"],
    );
    let mut ledger = Table::new(
        "error_ledger",
        "Error ledger",
        &[
            "excerpt_id", "kind", "status", "gold_start", "gold_end", "gold_text", "predicted_kind",
            "predicted_start", "predicted_end", "predicted_text", "triage",
        ],
    );
    for s in spans {
        for (kind, c) in &s.per_kind {
            counts.push(vec![
                s.excerpt_id.clone(),
                kind.as_str().into(),
                c.correct.to_string(),
                c.skipped.to_string(),
                c.extra.to_string(),
                c.mismatched_gold.to_string(),
                c.mismatched_predicted.to_string(),
            ]);
        }
        let text = bundle.excerpt(&s.excerpt_id).map(Excerpt::text).unwrap_or_default();
        for e in &s.ledger.entries {
            let side = |span: Option<ciflow_core::Span>| match span {
                Some(sp) => (sp.start().to_string(), sp.end().to_string(), char_slice(text, sp.start(), sp.end()).to_string()),
                None => Default::default(),
            };
            let (gs, ge, gt) = side(e.gold_span);
            let (ps, pe, pt) = side(e.predicted_span);
            ledger.push(vec![
                e.excerpt_id.clone(),
                e.kind.as_str().into(),
                e.status.as_str().into(),
                gs,
                ge,
                gt,
                label(e.predicted_span.map(|s| s.kind())),
                ps,
                pe,
                pt,
                String::new(),
            ]);
        }
    }
    vec![counts, ledger]
}

pub fn accuracy_tables(report: &AccuracyReport) -> Vec<Table> {
    let mut shares = Table::new(
        "accuracy_instances",
        "Instances correct, skipped and other per kind",
        &["kind", "correct", "skipped", "other", "total", "correct_share", "skipped_share", "other_share"],
    );
    for (kind, r) in &report.instances {
        shares.push(vec![
            kind.as_str().into(),
            r.correct.to_string(),
            r.skipped.to_string(),
            r.other.to_string(),
            r.total.to_string(),
            opt_num(r.correct_share),
            opt_num(r.skipped_share),
            opt_num(r.other_share),
        ]);
    }
    let mut hist = Table::new(
        "accuracy_distribution",
        "Word-based precision and recall distribution",
        &["kind", "measure", "bin_low", "bin_high", "count"],
    );
    let mut means = Table::new(
        "accuracy_means",
        "Mean word-based scores",
        &["kind", "excerpts", "mean_precision", "mean_recall", "mean_f1"],
    );
    for (kind, d) in &report.word_scores {
        for (measure, bins) in [("precision", &d.precision_histogram), ("recall", &d.recall_histogram)] {
            for (i, count) in bins.iter().enumerate() {
                hist.push(vec![
                    kind.as_str().into(),
                    measure.into(),
                    format!("{:.1}", i as f64 / HISTOGRAM_BINS as f64),
                    format!("{:.1}", (i + 1) as f64 / HISTOGRAM_BINS as f64),
                    count.to_string(),
                ]);
            }
        }
        means.push(vec![
            kind.as_str().into(),
            d.n.to_string(),
            num(d.mean_precision),
            num(d.mean_recall),
            num(d.mean_f1),
        ]);
    }
    vec![shares, hist, means]
}

pub fn readability_tables(stats: &[ExcerptStats], correlations: Option<&[CorrelationRow]>) -> Vec<Table> {
    let mut columns = vec!["excerpt_id", "total_words", "labeled_words"];
    let kind_cols: Vec<String> = CORRELATION_KINDS.iter().map(|k| format!("labeled_{}", k.as_str())).collect();
    columns.extend(kind_cols.iter().map(String::as_str));
    columns.extend(["reading_ease", "fog_index"]);
    let mut t = Table::new("excerpt_stats", "Excerpt statistics", &columns);
    for s in stats {
        let mut row = vec![s.excerpt_id.clone(), s.total_words.to_string(), s.labeled_words().to_string()];
        row.extend(CORRELATION_KINDS.iter().map(|k| s.labeled_words_per_kind.get(k).copied().unwrap_or(0).to_string()));
        row.push(num(s.flesch_kincaid_reading_ease));
        row.push(num(s.fog_index));
        t.push(row);
    }
    let mut c = Table::new("correlations", "Spearman correlation with word-based F1", &["statistic", "parameter", "coefficient", "p_value"]);
    for r in correlations.unwrap_or(&[]) {
        c.push(vec![r.statistic.as_str().into(), r.kind.as_str().into(), num(r.rho), num(r.p_value)]);
    }
    vec![t, c]
}

pub fn replay_report(bundle: &Bundle, report: &ReplayReport, kinds: &[ParameterKind]) -> Report {
    let mut tables = vec![screening_table(&report.screening)];
    tables.extend(aggregate_tables(&report.aggregates, kinds));
    let rows: Vec<(String, String, ScoreReport)> = report
        .word_scores
        .iter()
        .map(|w| (w.excerpt_id.clone(), "majority".to_string(), w.scores.clone()))
        .collect();
    tables.push(word_score_table("word_scores", &rows));
    tables.extend(span_tables(bundle, &report.span_scores));
    if let Some(acc) = &report.accuracy {
        tables.extend(accuracy_tables(acc));
    }
    tables.extend(readability_tables(&report.excerpt_stats, report.correlations.as_deref()));
    Report::new("replay", report, tables)
}

/// Number of ledger entries with `status`, over all excerpts.
pub fn status_total(report: &ReplayReport, status: EntryStatus) -> usize {
    report.span_scores.iter().map(|s| s.ledger.count(status)).sum()
}
