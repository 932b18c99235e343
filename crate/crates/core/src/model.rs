//! Annotation domain types.
//!
//! All offsets are counted in Unicode scalar values (`char`s), not bytes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// The five CI parameters. The declaration order is the output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum ParameterKind {
    Sender,
    Recipient,
    Subject,
    Attribute,
    #[cfg_attr(feature = "serde", serde(rename = "tp"))]
    TransmissionPrinciple,
}

impl ParameterKind {
    pub const ALL: [ParameterKind; 5] = [
        ParameterKind::Sender,
        ParameterKind::Recipient,
        ParameterKind::Subject,
        ParameterKind::Attribute,
        ParameterKind::TransmissionPrinciple,
    ];

    /// The kinds crowdworkers are asked to label. Subject is left out.
    pub const CROWD: [ParameterKind; 4] = [
        ParameterKind::Sender,
        ParameterKind::Recipient,
        ParameterKind::Attribute,
        ParameterKind::TransmissionPrinciple,
    ];

    /// Short name used in file formats, tag names and CLI flags.
    pub fn as_str(self) -> &'static str {
        match self {
            ParameterKind::Sender => "sender",
            ParameterKind::Recipient => "recipient",
            ParameterKind::Subject => "subject",
            ParameterKind::Attribute => "attribute",
            ParameterKind::TransmissionPrinciple => "tp",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ParameterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown parameter kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for ParameterKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sender" => Ok(ParameterKind::Sender),
            "recipient" => Ok(ParameterKind::Recipient),
            "subject" => Ok(ParameterKind::Subject),
            "attribute" => Ok(ParameterKind::Attribute),
            "tp" => Ok(ParameterKind::TransmissionPrinciple),
            other => Err(UnknownKind(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("empty span {start}..{end}")]
    EmptySpan { start: usize, end: usize },
    #[error("span {start}..{end} exceeds text length {len}")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("spans {}..{} and {}..{} overlap", first.0, first.1, second.0, second.1)]
    OverlappingSpans {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("duplicate flow id `{0}`")]
    DuplicateFlowId(String),
}

/// One labeled parameter instance: a half-open character range plus a kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Span {
    start: usize,
    end: usize,
    kind: ParameterKind,
}

impl Span {
    pub fn new(start: usize, end: usize, kind: ParameterKind) -> Result<Self, ModelError> {
        if start >= end {
            return Err(ModelError::EmptySpan { start, end });
        }
        Ok(Span { start, end, kind })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn kind(&self) -> ParameterKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    pub fn with_kind(self, kind: ParameterKind) -> Span {
        Span { kind, ..self }
    }
}

/// Sorts `spans` by start offset and checks bounds and non-overlap against a
/// text of `len` characters. Overlap is an error, never normalized away.
pub fn validate_spans(mut spans: Vec<Span>, len: usize) -> Result<Vec<Span>, ModelError> {
    spans.sort();
    for span in &spans {
        if span.end > len {
            return Err(ModelError::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len,
            });
        }
    }
    for pair in spans.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(ModelError::OverlappingSpans {
                first: (pair[0].start, pair[0].end),
                second: (pair[1].start, pair[1].end),
            });
        }
    }
    Ok(spans)
}

/// Character count of `text`, the unit every offset is measured in.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Returns the substring covering characters `start..end`.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text.char_indices().map(|(i, _)| i).chain(core::iter::once(text.len()));
    let from = indices.nth(start).unwrap_or(text.len());
    let to = if end > start {
        indices.nth(end - start - 1).unwrap_or(text.len())
    } else {
        from
    };
    &text[from..to]
}

/// A privacy statement carrying a single set of CI parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FlowStatement {
    id: String,
    text: String,
    spans: Vec<Span>,
    source_ref: Option<String>,
}

impl FlowStatement {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        spans: Vec<Span>,
        source_ref: Option<String>,
    ) -> Result<Self, ModelError> {
        let text = text.into();
        let spans = validate_spans(spans, char_len(&text))?;
        Ok(FlowStatement {
            id: id.into(),
            text,
            spans,
            source_ref,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Spans sorted by start offset.
    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn source_ref(&self) -> Option<&str> {
        self.source_ref.as_deref()
    }

    pub fn span_text(&self, span: &Span) -> &str {
        char_slice(&self.text, span.start, span.end)
    }

    pub fn kinds_present(&self) -> BTreeSet<ParameterKind> {
        self.spans.iter().map(Span::kind).collect()
    }

    pub fn count_of(&self, kind: ParameterKind) -> usize {
        self.spans.iter().filter(|s| s.kind == kind).count()
    }
}

/// One version of one policy.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PolicyDocument {
    policy_id: String,
    version_label: String,
    flows: Vec<FlowStatement>,
}

impl PolicyDocument {
    pub fn new(
        policy_id: impl Into<String>,
        version_label: impl Into<String>,
        flows: Vec<FlowStatement>,
    ) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for flow in &flows {
            if !seen.insert(flow.id.as_str()) {
                return Err(ModelError::DuplicateFlowId(flow.id.clone()));
            }
        }
        Ok(PolicyDocument {
            policy_id: policy_id.into(),
            version_label: version_label.into(),
            flows,
        })
    }

    pub fn policy_id(&self) -> &str {
        &self.policy_id
    }

    pub fn version_label(&self) -> &str {
        &self.version_label
    }

    pub fn flows(&self) -> &[FlowStatement] {
        &self.flows
    }

    pub fn flow(&self, id: &str) -> Option<&FlowStatement> {
        self.flows.iter().find(|f| f.id == id)
    }
}

/// Milliseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Timestamp(pub u64);

/// One annotator's labels over one excerpt.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AnnotationSet {
    annotator_id: String,
    excerpt_id: String,
    spans: Vec<Span>,
    submitted_at: Timestamp,
}

impl AnnotationSet {
    /// `text_len` is the character length of the excerpt the spans refer to.
    pub fn new(
        annotator_id: impl Into<String>,
        excerpt_id: impl Into<String>,
        spans: Vec<Span>,
        text_len: usize,
        submitted_at: Timestamp,
    ) -> Result<Self, ModelError> {
        let spans = validate_spans(spans, text_len)?;
        Ok(AnnotationSet {
            annotator_id: annotator_id.into(),
            excerpt_id: excerpt_id.into(),
            spans,
            submitted_at,
        })
    }

    pub fn annotator_id(&self) -> &str {
        &self.annotator_id
    }

    pub fn excerpt_id(&self) -> &str {
        &self.excerpt_id
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn submitted_at(&self) -> Timestamp {
        self.submitted_at
    }
}

/// Precision, recall and F1 for one kind (or the micro average).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KindScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl KindScore {
    /// Scores from counts.
    ///
    /// No gold instances means recall 1; no predicted instances means
    /// precision 1. F1 is 0 when precision and recall are both 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let predicted = tp + fp;
        let gold = tp + fn_;
        let precision = if predicted == 0 {
            1.0
        } else {
            tp as f64 / predicted as f64
        };
        let recall = if gold == 0 {
            1.0
        } else {
            tp as f64 / gold as f64
        };
        let f1 = if predicted > 0 && gold > 0 {
            // Same value as 2pr/(p+r), without the intermediate rounding.
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        } else if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        KindScore {
            precision,
            recall,
            f1,
            true_positive: tp,
            false_positive: fp,
            false_negative: fn_,
        }
    }
}

/// Word-based scores per kind plus the micro average over all scored kinds.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScoreReport {
    pub per_kind: BTreeMap<ParameterKind, KindScore>,
    pub micro: KindScore,
}

impl ScoreReport {
    pub fn kind(&self, kind: ParameterKind) -> Option<&KindScore> {
        self.per_kind.get(&kind)
    }
}
