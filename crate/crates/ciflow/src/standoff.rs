//! Canonical standoff JSON.
//!
//! ```json
//! {
//!   "policy_id": "fb",
//!   "version_label": "2018",
//!   "flows": [
//!     {
//!       "id": "f1",
//!       "text": "We collect data.",
//!       "source_ref": null,
//!       "spans": [{ "start": 0, "end": 2, "kind": "recipient" }]
//!     }
//!   ]
//! }
//! ```
//!
//! Offsets count Unicode scalar values. Output uses the key order above,
//! two-space indentation, spans sorted by start, and a trailing newline, so
//! equal documents serialize to identical bytes. Unknown keys are rejected.

use ciflow_core::model::char_len;
use ciflow_core::{
    AnnotationSet, FlowStatement, ModelError, ParameterKind, PolicyDocument, Span, Timestamp,
};
use serde::{Deserialize, Serialize};

use crate::error::FormatError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandoffSpan {
    pub start: usize,
    pub end: usize,
    pub kind: ParameterKind,
}

impl From<&Span> for StandoffSpan {
    fn from(s: &Span) -> Self {
        StandoffSpan {
            start: s.start(),
            end: s.end(),
            kind: s.kind(),
        }
    }
}

impl StandoffSpan {
    pub fn to_span(&self) -> Result<Span, ModelError> {
        Span::new(self.start, self.end, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandoffFlow {
    pub id: String,
    pub text: String,
    pub source_ref: Option<String>,
    pub spans: Vec<StandoffSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandoffDocument {
    pub policy_id: String,
    pub version_label: String,
    pub flows: Vec<StandoffFlow>,
}

impl From<&PolicyDocument> for StandoffDocument {
    fn from(doc: &PolicyDocument) -> Self {
        StandoffDocument {
            policy_id: doc.policy_id().into(),
            version_label: doc.version_label().into(),
            flows: doc
                .flows()
                .iter()
                .map(|f| StandoffFlow {
                    id: f.id().into(),
                    text: f.text().into(),
                    source_ref: f.source_ref().map(Into::into),
                    spans: f.spans().iter().map(StandoffSpan::from).collect(),
                })
                .collect(),
        }
    }
}

/// Converts checked spans, naming the flow on failure.
pub fn spans_for(flow_id: &str, spans: &[StandoffSpan]) -> Result<Vec<Span>, FormatError> {
    spans
        .iter()
        .map(|s| {
            s.to_span().map_err(|source| FormatError::Flow {
                flow: flow_id.into(),
                source,
            })
        })
        .collect()
}

impl StandoffDocument {
    pub fn into_model(self) -> Result<PolicyDocument, FormatError> {
        let flows = self
            .flows
            .into_iter()
            .map(|f| {
                let spans = spans_for(&f.id, &f.spans)?;
                FlowStatement::new(f.id.clone(), f.text, spans, f.source_ref)
                    .map_err(|source| FormatError::Flow { flow: f.id, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        PolicyDocument::new(self.policy_id, self.version_label, flows).map_err(FormatError::Document)
    }
}

/// Parses JSON, reporting the JSON path of the first schema violation.
pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, FormatError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| FormatError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| FormatError::Schema {
        path: ".".into(),
        message: e.to_string(),
    })?;
    Ok(value)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

pub fn to_standoff(doc: &PolicyDocument) -> Vec<u8> {
    to_json_bytes(&StandoffDocument::from(doc))
}

pub fn from_standoff(bytes: &[u8]) -> Result<PolicyDocument, FormatError> {
    parse_json::<StandoffDocument>(bytes)?.into_model()
}

/// Version label used for expert annotations in bundles.
pub const GOLD_LABEL: &str = "gold";

const SUBMITTED_PREFIX: &str = "submitted_at=";

/// Wraps one annotator's labels over an excerpt as a one-flow document:
/// the policy id and flow id are the excerpt id, the version label is the
/// annotator id, and the submission time goes in `source_ref`.
pub fn annotation_document(set: &AnnotationSet, text: &str) -> Result<PolicyDocument, ModelError> {
    let flow = FlowStatement::new(
        set.excerpt_id(),
        text,
        set.spans().to_vec(),
        Some(format!("{SUBMITTED_PREFIX}{}", set.submitted_at().0)),
    )?;
    PolicyDocument::new(set.excerpt_id(), set.annotator_id(), vec![flow])
}

/// The inverse of [`annotation_document`]. Expert files may leave
/// `source_ref` null; the timestamp is then 0.
pub fn annotation_from_document(doc: &PolicyDocument) -> Result<(AnnotationSet, String), FormatError> {
    let [flow] = doc.flows() else {
        return Err(FormatError::Schema {
            path: "flows".into(),
            message: format!("expected exactly one flow, found {}", doc.flows().len()),
        });
    };
    if flow.id() != doc.policy_id() {
        return Err(FormatError::Schema {
            path: "flows[0].id".into(),
            message: format!("flow id `{}` differs from policy id `{}`", flow.id(), doc.policy_id()),
        });
    }
    let submitted_at = match flow.source_ref() {
        None => Timestamp(0),
        Some(r) => r
            .strip_prefix(SUBMITTED_PREFIX)
            .and_then(|ms| ms.parse().ok())
            .map(Timestamp)
            .ok_or_else(|| FormatError::Schema {
                path: "flows[0].source_ref".into(),
                message: format!("expected `{SUBMITTED_PREFIX}<milliseconds>`, found `{r}`"),
            })?,
    };
    let set = AnnotationSet::new(
        doc.version_label(),
        doc.policy_id(),
        flow.spans().to_vec(),
        char_len(flow.text()),
        submitted_at,
    )
    .map_err(FormatError::Document)?;
    Ok((set, flow.text().into()))
}
