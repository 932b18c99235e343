//! Crowdsourced annotation: screening, majority-vote aggregation and
//! scoring against expert ground truth.
//!
//! All scoring is word-based over the non-stopword tokens of an excerpt (see
//! [`crate::text`]). A token carries the label of the span containing its
//! first character.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{char_len, AnnotationSet, KindScore, ModelError, ParameterKind, ScoreReport, Span};
use crate::text::{content_tokens, kind_at, Token};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CrowdError {
    #[error("annotation for excerpt `{found}` given for excerpt `{expected}`")]
    WrongExcerpt { expected: String, found: String },
    #[error("no annotations for excerpt `{0}`")]
    NoAnnotations(String),
    #[error("screening excerpt `{0}` has no gold annotation")]
    MissingGold(String),
    #[error("screening index {0} is outside 1..=3")]
    BadScreeningIndex(u8),
    #[error("expected three screening excerpts with indices 1, 2 and 3")]
    NotAScreeningSet,
    #[error("screening threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error("overlap threshold {0} is outside (0, 1]")]
    BadOverlap(f64),
    #[error("no ledgers or score reports to summarize")]
    EmptyInput,
    #[error("excerpt `{excerpt}`: {source}")]
    Model { excerpt: String, source: ModelError },
}

/// A text shown to annotators, optionally with the expert's labels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Excerpt {
    excerpt_id: String,
    text: String,
    gold: Option<AnnotationSet>,
    is_screening: bool,
    screening_index: Option<u8>,
    #[cfg_attr(feature = "serde", serde(skip))]
    tokens: Vec<Token>,
    #[cfg_attr(feature = "serde", serde(skip))]
    len: usize,
}

impl Excerpt {
    /// A regular work excerpt.
    pub fn work(
        excerpt_id: impl Into<String>,
        text: impl Into<String>,
        gold: Option<AnnotationSet>,
    ) -> Result<Self, CrowdError> {
        Self::build(excerpt_id.into(), text.into(), gold, None)
    }

    /// Screening question `index` (1, 2 or 3). Screening excerpts need gold.
    pub fn screening(
        excerpt_id: impl Into<String>,
        text: impl Into<String>,
        gold: AnnotationSet,
        index: u8,
    ) -> Result<Self, CrowdError> {
        if !(1..=3).contains(&index) {
            return Err(CrowdError::BadScreeningIndex(index));
        }
        Self::build(excerpt_id.into(), text.into(), Some(gold), Some(index))
    }

    fn build(
        excerpt_id: String,
        text: String,
        gold: Option<AnnotationSet>,
        screening_index: Option<u8>,
    ) -> Result<Self, CrowdError> {
        let len = char_len(&text);
        if let Some(g) = &gold {
            if g.excerpt_id() != excerpt_id {
                return Err(CrowdError::WrongExcerpt {
                    expected: excerpt_id,
                    found: g.excerpt_id().into(),
                });
            }
            check_bounds(&excerpt_id, g.spans(), len)?;
        }
        Ok(Excerpt {
            tokens: content_tokens(&text),
            len,
            excerpt_id,
            text,
            gold,
            is_screening: screening_index.is_some(),
            screening_index,
        })
    }

    pub fn excerpt_id(&self) -> &str {
        &self.excerpt_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn gold(&self) -> Option<&AnnotationSet> {
        self.gold.as_ref()
    }

    pub fn is_screening(&self) -> bool {
        self.is_screening
    }

    pub fn screening_index(&self) -> Option<u8> {
        self.screening_index
    }

    /// Non-stopword tokens, the unit of all scoring.
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Length of the text in characters.
    pub fn char_len(&self) -> usize {
        self.len
    }
}

fn check_bounds(excerpt: &str, spans: &[Span], len: usize) -> Result<(), CrowdError> {
    match spans.iter().find(|s| s.end() > len) {
        Some(s) => Err(CrowdError::Model {
            excerpt: excerpt.into(),
            source: ModelError::SpanOutOfBounds {
                start: s.start(),
                end: s.end(),
                len,
            },
        }),
        None => Ok(()),
    }
}

fn check_excerpt(excerpt: &Excerpt, id: &str) -> Result<(), CrowdError> {
    if id != excerpt.excerpt_id {
        return Err(CrowdError::WrongExcerpt {
            expected: excerpt.excerpt_id.clone(),
            found: id.into(),
        });
    }
    Ok(())
}

/// Anything that assigns labels over an excerpt: one annotator's spans or
/// an aggregate.
pub trait Labeling {
    fn excerpt_id(&self) -> &str;

    /// One optional label per non-stopword token of `excerpt`.
    fn token_labels(&self, excerpt: &Excerpt) -> Vec<Option<ParameterKind>>;

    /// Labeled spans, sorted and non-overlapping.
    fn labeled_spans(&self, excerpt: &Excerpt) -> Vec<Span>;
}

impl Labeling for AnnotationSet {
    fn excerpt_id(&self) -> &str {
        AnnotationSet::excerpt_id(self)
    }

    fn token_labels(&self, excerpt: &Excerpt) -> Vec<Option<ParameterKind>> {
        excerpt
            .tokens
            .iter()
            .map(|t| kind_at(self.spans(), t.start))
            .collect()
    }

    fn labeled_spans(&self, _excerpt: &Excerpt) -> Vec<Span> {
        self.spans().to_vec()
    }
}

/// Screening pass rule: F1 at least `f1_threshold` on question 1 and on
/// question 2 or question 3.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScreeningRule {
    f1_threshold: f64,
}

impl ScreeningRule {
    pub fn new(f1_threshold: f64) -> Result<Self, CrowdError> {
        if !(0.0..=1.0).contains(&f1_threshold) {
            return Err(CrowdError::BadThreshold(f1_threshold));
        }
        Ok(ScreeningRule { f1_threshold })
    }

    pub fn f1_threshold(&self) -> f64 {
        self.f1_threshold
    }

    pub fn passes(&self, f1: [f64; 3]) -> bool {
        let ok = |x: f64| x >= self.f1_threshold;
        ok(f1[0]) && (ok(f1[1]) || ok(f1[2]))
    }
}

impl Default for ScreeningRule {
    fn default() -> Self {
        ScreeningRule { f1_threshold: 0.7 }
    }
}

/// Per-token majority labels for one excerpt.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AggregatedAnnotation {
    pub excerpt_id: String,
    pub tokens: Vec<Token>,
    pub labels: Vec<Option<ParameterKind>>,
    /// Per token, the number of annotators choosing each kind (non-zero only).
    pub votes: Vec<BTreeMap<ParameterKind, usize>>,
    pub n_annotators: usize,
}

impl Labeling for AggregatedAnnotation {
    fn excerpt_id(&self) -> &str {
        &self.excerpt_id
    }

    fn token_labels(&self, _excerpt: &Excerpt) -> Vec<Option<ParameterKind>> {
        self.labels.clone()
    }

    /// Maximal runs of consecutive (non-stopword) tokens sharing a label.
    fn labeled_spans(&self, _excerpt: &Excerpt) -> Vec<Span> {
        let mut spans = Vec::new();
        let mut run: Option<(ParameterKind, usize, usize)> = None;
        for (token, label) in self.tokens.iter().zip(&self.labels) {
            match (run, label) {
                (Some((kind, start, _)), Some(l)) if kind == *l => {
                    run = Some((kind, start, token.end));
                }
                _ => {
                    if let Some((kind, start, end)) = run.take() {
                        spans.extend(Span::new(start, end, kind));
                    }
                    run = label.map(|l| (l, token.start, token.end));
                }
            }
        }
        if let Some((kind, start, end)) = run {
            spans.extend(Span::new(start, end, kind));
        }
        spans
    }
}

/// Assigns each token the kind chosen by at least half of the annotators.
/// When two kinds both reach half (an exact 50/50 split) the token stays
/// unlabeled.
pub fn majority_vote(
    annotations: &[AnnotationSet],
    excerpt: &Excerpt,
) -> Result<AggregatedAnnotation, CrowdError> {
    if annotations.is_empty() {
        return Err(CrowdError::NoAnnotations(excerpt.excerpt_id.clone()));
    }
    for a in annotations {
        check_excerpt(excerpt, a.excerpt_id())?;
        check_bounds(&excerpt.excerpt_id, a.spans(), excerpt.len)?;
    }
    let n = annotations.len();
    let bar = n.div_ceil(2);
    let mut votes = vec![BTreeMap::new(); excerpt.tokens.len()];
    for a in annotations {
        for (slot, label) in votes.iter_mut().zip(a.token_labels(excerpt)) {
            if let Some(kind) = label {
                *slot.entry(kind).or_insert(0usize) += 1;
            }
        }
    }
    let labels = votes
        .iter()
        .map(|v| {
            let mut winners = v.iter().filter(|(_, c)| **c >= bar).map(|(k, _)| *k);
            match (winners.next(), winners.next()) {
                (Some(kind), None) => Some(kind),
                _ => None,
            }
        })
        .collect();
    Ok(AggregatedAnnotation {
        excerpt_id: excerpt.excerpt_id.clone(),
        tokens: excerpt.tokens.clone(),
        labels,
        votes,
        n_annotators: n,
    })
}

fn score_labels(
    predicted: &[Option<ParameterKind>],
    gold: &[Option<ParameterKind>],
    kinds: &[ParameterKind],
) -> ScoreReport {
    let mut per_kind = BTreeMap::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for &kind in kinds {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (p, g) in predicted.iter().zip(gold) {
            match (*p == Some(kind), *g == Some(kind)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per_kind.insert(kind, KindScore::from_counts(tp, fp, fn_));
    }
    ScoreReport {
        per_kind,
        micro: KindScore::from_counts(tp_all, fp_all, fn_all),
    }
}

/// Word-based precision, recall and F1 of `predicted` against `gold`, per
/// kind in `kinds` and micro-averaged over them.
///
/// A kind the expert never labeled gets recall 1; a kind the prediction
/// never uses gets precision 1.
pub fn word_scores<P: Labeling + ?Sized>(
    predicted: &P,
    gold: &AnnotationSet,
    excerpt: &Excerpt,
    kinds: &[ParameterKind],
) -> Result<ScoreReport, CrowdError> {
    check_excerpt(excerpt, predicted.excerpt_id())?;
    check_excerpt(excerpt, gold.excerpt_id())?;
    Ok(score_labels(
        &predicted.token_labels(excerpt),
        &gold.token_labels(excerpt),
        kinds,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ScreeningFailure {
    MissingResponse(String),
    BelowThreshold,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScreeningOutcome {
    pub passed: bool,
    /// Micro F1 per question in screening order; `None` if unanswered.
    pub question_f1: [Option<f64>; 3],
    pub failure: Option<ScreeningFailure>,
}

/// Orders `excerpts` as screening questions 1, 2, 3.
pub fn screening_set(excerpts: &[Excerpt]) -> Result<[&Excerpt; 3], CrowdError> {
    let find = |i: u8| {
        let mut it = excerpts.iter().filter(|e| e.screening_index == Some(i));
        match (it.next(), it.next()) {
            (Some(e), None) => Ok(e),
            _ => Err(CrowdError::NotAScreeningSet),
        }
    };
    if excerpts.iter().filter(|e| e.is_screening).count() != 3 {
        return Err(CrowdError::NotAScreeningSet);
    }
    Ok([find(1)?, find(2)?, find(3)?])
}

/// Applies the screening rule to one worker's three screening responses.
/// Responses are matched to questions by excerpt id.
pub fn screen_worker(
    responses: &[AnnotationSet],
    screening: &[Excerpt],
    rule: &ScreeningRule,
    kinds: &[ParameterKind],
) -> Result<ScreeningOutcome, CrowdError> {
    let questions = screening_set(screening)?;
    let mut question_f1 = [None; 3];
    let mut missing = None;
    for (slot, excerpt) in question_f1.iter_mut().zip(questions) {
        let gold = excerpt
            .gold
            .as_ref()
            .ok_or_else(|| CrowdError::MissingGold(excerpt.excerpt_id.clone()))?;
        match responses.iter().find(|r| r.excerpt_id() == excerpt.excerpt_id) {
            Some(response) => {
                check_bounds(&excerpt.excerpt_id, response.spans(), excerpt.len)?;
                *slot = Some(word_scores(response, gold, excerpt, kinds)?.micro.f1);
            }
            None => {
                missing.get_or_insert_with(|| excerpt.excerpt_id.clone());
            }
        }
    }
    if let Some(id) = missing {
        return Ok(ScreeningOutcome {
            passed: false,
            question_f1,
            failure: Some(ScreeningFailure::MissingResponse(id)),
        });
    }
    let f1 = question_f1.map(|f| f.unwrap_or(0.0));
    let passed = rule.passes(f1);
    Ok(ScreeningOutcome {
        passed,
        question_f1,
        failure: (!passed).then_some(ScreeningFailure::BelowThreshold),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum EntryStatus {
    Correct,
    Skipped,
    Extra,
    Mismatch,
}

impl EntryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryStatus::Correct => "correct",
            EntryStatus::Skipped => "skipped",
            EntryStatus::Extra => "extra",
            EntryStatus::Mismatch => "mismatch",
        }
    }
}

/// Manual error categories. The toolkit never assigns these itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum Triage {
    ExpertError,
    SkippedParameter,
    Ambiguous,
    Overlapping,
    TrueError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LedgerEntry {
    /// The gold span's kind, or the predicted kind for `Extra`.
    pub kind: ParameterKind,
    pub excerpt_id: String,
    pub gold_span: Option<Span>,
    pub predicted_span: Option<Span>,
    pub status: EntryStatus,
    pub triage: Option<Triage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ErrorLedger {
    pub entries: Vec<LedgerEntry>,
}

impl ErrorLedger {
    pub fn count(&self, status: EntryStatus) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InstanceCounts {
    pub correct: usize,
    pub skipped: usize,
    pub extra: usize,
    /// Mismatches where this kind was the gold label.
    pub mismatched_gold: usize,
    /// Mismatches where this kind was the predicted label.
    pub mismatched_predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpanScores {
    pub excerpt_id: String,
    pub per_kind: BTreeMap<ParameterKind, InstanceCounts>,
    pub ledger: ErrorLedger,
}

/// Indices of the excerpt tokens a span covers.
fn covered_tokens(excerpt: &Excerpt, span: &Span) -> BTreeSet<usize> {
    excerpt
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| span.contains(t.start))
        .map(|(i, _)| i)
        .collect()
}

/// Instance-level comparison of predicted and gold spans.
///
/// A gold and a predicted span of the same kind match when the predicted
/// span covers at least `overlap_threshold` of the gold span's tokens;
/// matching is one-to-one, best overlap first. Leftover pairs of different
/// kinds that share tokens become mismatches. Remaining gold spans are
/// skipped and remaining predicted spans are extra. Spans covering only
/// stopwords are not scored.
pub fn span_scores<P: Labeling + ?Sized>(
    predicted: &P,
    gold: &AnnotationSet,
    excerpt: &Excerpt,
    overlap_threshold: f64,
) -> Result<SpanScores, CrowdError> {
    if !(overlap_threshold > 0.0 && overlap_threshold <= 1.0) {
        return Err(CrowdError::BadOverlap(overlap_threshold));
    }
    check_excerpt(excerpt, predicted.excerpt_id())?;
    check_excerpt(excerpt, gold.excerpt_id())?;
    let with_tokens = |spans: Vec<Span>| -> Vec<(Span, BTreeSet<usize>)> {
        spans
            .into_iter()
            .map(|s| {
                let covered = covered_tokens(excerpt, &s);
                (s, covered)
            })
            .filter(|(_, t)| !t.is_empty())
            .collect()
    };
    let gold_spans = with_tokens(gold.spans().to_vec());
    let pred_spans = with_tokens(predicted.labeled_spans(excerpt));
    let mut gold_used = vec![false; gold_spans.len()];
    let mut pred_used = vec![false; pred_spans.len()];
    let mut entries = Vec::new();

    let mut same_kind = Vec::new();
    let mut cross_kind = Vec::new();
    for (gi, (g, gt)) in gold_spans.iter().enumerate() {
        for (pi, (p, pt)) in pred_spans.iter().enumerate() {
            let overlap = gt.intersection(pt).count();
            if overlap == 0 {
                continue;
            }
            if g.kind() == p.kind() {
                // compare overlap/|g| via cross-multiplication for exact ties
                if overlap as f64 >= overlap_threshold * gt.len() as f64 {
                    same_kind.push((overlap, gt.len(), gi, pi));
                }
            } else {
                cross_kind.push((overlap, gi, pi));
            }
        }
    }
    same_kind.sort_by(|a, b| {
        (b.0 * a.1)
            .cmp(&(a.0 * b.1))
            .then(b.0.cmp(&a.0))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    for (_, _, gi, pi) in same_kind {
        if gold_used[gi] || pred_used[pi] {
            continue;
        }
        gold_used[gi] = true;
        pred_used[pi] = true;
        entries.push((gold_spans[gi].0, Some(pred_spans[pi].0), EntryStatus::Correct));
    }
    cross_kind.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, gi, pi) in cross_kind {
        if gold_used[gi] || pred_used[pi] {
            continue;
        }
        gold_used[gi] = true;
        pred_used[pi] = true;
        entries.push((gold_spans[gi].0, Some(pred_spans[pi].0), EntryStatus::Mismatch));
    }
    for (gi, (g, _)) in gold_spans.iter().enumerate() {
        if !gold_used[gi] {
            entries.push((*g, None, EntryStatus::Skipped));
        }
    }
    let mut ledger: Vec<LedgerEntry> = entries
        .into_iter()
        .map(|(g, p, status)| LedgerEntry {
            kind: g.kind(),
            excerpt_id: excerpt.excerpt_id.clone(),
            gold_span: Some(g),
            predicted_span: p,
            status,
            triage: None,
        })
        .collect();
    for (pi, (p, _)) in pred_spans.iter().enumerate() {
        if !pred_used[pi] {
            ledger.push(LedgerEntry {
                kind: p.kind(),
                excerpt_id: excerpt.excerpt_id.clone(),
                gold_span: None,
                predicted_span: Some(*p),
                status: EntryStatus::Extra,
                triage: None,
            });
        }
    }
    ledger.sort_by_key(|e| {
        let anchor = e.gold_span.or(e.predicted_span).map(|s| s.start()).unwrap_or(0);
        (anchor, e.status)
    });

    let mut per_kind: BTreeMap<ParameterKind, InstanceCounts> = BTreeMap::new();
    for e in &ledger {
        match e.status {
            EntryStatus::Correct => per_kind.entry(e.kind).or_default().correct += 1,
            EntryStatus::Skipped => per_kind.entry(e.kind).or_default().skipped += 1,
            EntryStatus::Extra => per_kind.entry(e.kind).or_default().extra += 1,
            EntryStatus::Mismatch => {
                per_kind.entry(e.kind).or_default().mismatched_gold += 1;
                if let Some(p) = e.predicted_span {
                    per_kind.entry(p.kind()).or_default().mismatched_predicted += 1;
                }
            }
        }
    }
    Ok(SpanScores {
        excerpt_id: excerpt.excerpt_id.clone(),
        per_kind,
        ledger: ErrorLedger { entries: ledger },
    })
}

/// Correct/skipped/other instance shares for one kind. "Other" counts the
/// predicted side of extra and mismatch entries.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AccuracyRow {
    pub correct: usize,
    pub skipped: usize,
    pub other: usize,
    pub total: usize,
    pub correct_share: Option<f64>,
    pub skipped_share: Option<f64>,
    pub other_share: Option<f64>,
}

/// Ten equal-width bins over [0, 1]; 1.0 falls in the last bin.
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScoreDistribution {
    pub precision_histogram: [usize; HISTOGRAM_BINS],
    pub recall_histogram: [usize; HISTOGRAM_BINS],
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AccuracyReport {
    pub instances: BTreeMap<ParameterKind, AccuracyRow>,
    pub word_scores: BTreeMap<ParameterKind, ScoreDistribution>,
}

fn bin(value: f64) -> usize {
    let idx = libm::floor(value * HISTOGRAM_BINS as f64);
    (idx.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// Summarizes span-level ledgers and word-level scores across excerpts.
pub fn accuracy_report(
    ledgers: &[ErrorLedger],
    score_reports: &[ScoreReport],
    kinds: &[ParameterKind],
) -> Result<AccuracyReport, CrowdError> {
    if ledgers.is_empty() && score_reports.is_empty() {
        return Err(CrowdError::EmptyInput);
    }
    let mut instances: BTreeMap<ParameterKind, AccuracyRow> =
        kinds.iter().map(|k| (*k, AccuracyRow::default())).collect();
    for entry in ledgers.iter().flat_map(|l| &l.entries) {
        let (kind, slot): (ParameterKind, fn(&mut AccuracyRow) -> &mut usize) = match entry.status {
            EntryStatus::Correct => (entry.kind, |r| &mut r.correct),
            EntryStatus::Skipped => (entry.kind, |r| &mut r.skipped),
            EntryStatus::Extra | EntryStatus::Mismatch => (
                entry.predicted_span.map(|s| s.kind()).unwrap_or(entry.kind),
                |r| &mut r.other,
            ),
        };
        if let Some(row) = instances.get_mut(&kind) {
            *slot(row) += 1;
        }
    }
    for row in instances.values_mut() {
        row.total = row.correct + row.skipped + row.other;
        if row.total > 0 {
            let t = row.total as f64;
            row.correct_share = Some(row.correct as f64 / t);
            row.skipped_share = Some(row.skipped as f64 / t);
            row.other_share = Some(row.other as f64 / t);
        }
    }
    let mut word_scores = BTreeMap::new();
    for &kind in kinds {
        let mut dist = ScoreDistribution::default();
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for score in score_reports.iter().filter_map(|s| s.kind(kind)) {
            dist.precision_histogram[bin(score.precision)] += 1;
            dist.recall_histogram[bin(score.recall)] += 1;
            p += score.precision;
            r += score.recall;
            f += score.f1;
            dist.n += 1;
        }
        if dist.n > 0 {
            let n = dist.n as f64;
            dist.mean_precision = p / n;
            dist.mean_recall = r / n;
            dist.mean_f1 = f / n;
        }
        word_scores.insert(kind, dist);
    }
    Ok(AccuracyReport {
        instances,
        word_scores,
    })
}
