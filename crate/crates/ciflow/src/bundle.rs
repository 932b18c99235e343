//! Experiment bundles.
//!
//! A bundle is a directory:
//!
//! ```text
//! excerpts.json                      list of {excerpt_id, text, is_screening, screening_index}
//! gold/<excerpt>.json                expert labels, one standoff document per excerpt
//! responses/<annotator>__<excerpt>.json
//! sessions.json                      optional: [{annotator_id, failed_screening}]
//! ```
//!
//! Gold and response files are one-flow standoff documents whose policy id
//! and flow id are the excerpt id. Gold files carry version label `gold`;
//! response files carry the annotator id and `source_ref`
//! `submitted_at=<milliseconds>`. The same content travels over HTTP as one
//! JSON object, see [`BundleWire`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ciflow_core::crowd::Excerpt;
use ciflow_core::AnnotationSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FormatError, Result};
use crate::output::{read_bytes, write_atomic};
use crate::standoff::{
    annotation_document, annotation_from_document, parse_json, to_json_bytes, StandoffDocument,
    GOLD_LABEL,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcerptRecord {
    pub excerpt_id: String,
    pub text: String,
    pub is_screening: bool,
    pub screening_index: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRecord {
    pub annotator_id: String,
    pub failed_screening: bool,
}

/// A bundle as a single JSON value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleWire {
    pub excerpts: Vec<ExcerptRecord>,
    pub gold: Vec<StandoffDocument>,
    pub responses: Vec<StandoffDocument>,
    pub sessions: Vec<SessionRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub excerpts: Vec<Excerpt>,
    /// Sorted by (annotator, excerpt).
    pub responses: Vec<AnnotationSet>,
    pub sessions: Vec<SessionRecord>,
}

fn invalid(path: &Path, message: impl Into<String>) -> Error {
    Error::Bundle {
        path: path.into(),
        message: message.into(),
    }
}

/// Ids become file names, so they must be plain.
pub fn check_file_id(id: &str) -> Result<(), String> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(format!("`{id}` is not a valid id (letters, digits, `-`, `_`, `.`)"))
    }
}

pub fn response_file_name(annotator: &str, excerpt: &str) -> String {
    format!("{annotator}__{excerpt}.json")
}

impl Bundle {
    pub fn new(
        excerpts: Vec<Excerpt>,
        mut responses: Vec<AnnotationSet>,
        mut sessions: Vec<SessionRecord>,
    ) -> Result<Self, String> {
        let mut ids = BTreeSet::new();
        for e in &excerpts {
            check_file_id(e.excerpt_id())?;
            if !ids.insert(e.excerpt_id()) {
                return Err(format!("duplicate excerpt `{}`", e.excerpt_id()));
            }
        }
        responses.sort_by(|a, b| {
            (a.annotator_id(), a.excerpt_id()).cmp(&(b.annotator_id(), b.excerpt_id()))
        });
        for pair in responses.windows(2) {
            if (pair[0].annotator_id(), pair[0].excerpt_id())
                == (pair[1].annotator_id(), pair[1].excerpt_id())
            {
                return Err(format!(
                    "annotator `{}` has two responses for `{}`",
                    pair[0].annotator_id(),
                    pair[0].excerpt_id()
                ));
            }
        }
        for r in &responses {
            check_file_id(r.annotator_id())?;
            let Some(e) = excerpts.iter().find(|e| e.excerpt_id() == r.excerpt_id()) else {
                return Err(format!("response for unknown excerpt `{}`", r.excerpt_id()));
            };
            if let Some(s) = r.spans().iter().find(|s| s.end() > e.char_len()) {
                return Err(format!(
                    "response {} has span {}..{} beyond the excerpt",
                    response_file_name(r.annotator_id(), r.excerpt_id()),
                    s.start(),
                    s.end()
                ));
            }
        }
        sessions.sort();
        Ok(Bundle {
            excerpts,
            responses,
            sessions,
        })
    }

    pub fn excerpt(&self, id: &str) -> Option<&Excerpt> {
        self.excerpts.iter().find(|e| e.excerpt_id() == id)
    }

    pub fn to_wire(&self) -> BundleWire {
        let doc = |set: &AnnotationSet| {
            let text = self.excerpt(set.excerpt_id()).map(Excerpt::text).unwrap_or_default();
            let doc = annotation_document(set, text).expect("bundle responses are in bounds");
            StandoffDocument::from(&doc)
        };
        BundleWire {
            excerpts: self
                .excerpts
                .iter()
                .map(|e| ExcerptRecord {
                    excerpt_id: e.excerpt_id().into(),
                    text: e.text().into(),
                    is_screening: e.is_screening(),
                    screening_index: e.screening_index(),
                })
                .collect(),
            gold: self
                .excerpts
                .iter()
                .filter_map(|e| e.gold().map(|g| gold_document(g, e.text())))
                .collect(),
            responses: self.responses.iter().map(doc).collect(),
            sessions: self.sessions.clone(),
        }
    }

    pub fn from_wire(wire: BundleWire) -> Result<Self, String> {
        let mut gold = std::collections::BTreeMap::new();
        for (i, g) in wire.gold.into_iter().enumerate() {
            let (set, text) = standoff_annotation(g).map_err(|e| format!("gold[{i}]: {e}"))?;
            gold.insert(set.excerpt_id().to_string(), (set, text));
        }
        let mut excerpts = Vec::new();
        for record in wire.excerpts {
            excerpts.push(build_excerpt(record, &mut gold)?);
        }
        if let Some(id) = gold.keys().next() {
            return Err(format!("gold for unknown excerpt `{id}`"));
        }
        let mut responses = Vec::new();
        for (i, r) in wire.responses.into_iter().enumerate() {
            let (set, text) = standoff_annotation(r).map_err(|e| format!("responses[{i}]: {e}"))?;
            check_text(&excerpts, &set, &text)?;
            responses.push(set);
        }
        Bundle::new(excerpts, responses, wire.sessions)
    }

    /// Reads a bundle directory.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let excerpts_path = dir.join("excerpts.json");
        let records: Vec<ExcerptRecord> = parse_json(&read_bytes(&excerpts_path)?)
            .map_err(|e| Error::format(&excerpts_path, e))?;
        let mut gold = std::collections::BTreeMap::new();
        for path in json_files(&dir.join("gold"))? {
            let doc = parse_json::<StandoffDocument>(&read_bytes(&path)?)
                .map_err(|e| Error::format(&path, e))?;
            let (set, text) = standoff_annotation(doc).map_err(|e| Error::format(&path, e))?;
            let expected = format!("{}.json", set.excerpt_id());
            if file_name(&path) != expected {
                return Err(invalid(&path, format!("gold file should be named {expected}")));
            }
            gold.insert(set.excerpt_id().to_string(), (set, text));
        }
        let mut excerpts = Vec::new();
        for record in records {
            excerpts.push(build_excerpt(record, &mut gold).map_err(|m| invalid(dir, m))?);
        }
        if let Some(id) = gold.keys().next() {
            return Err(invalid(dir, format!("gold for unknown excerpt `{id}`")));
        }
        let mut responses = Vec::new();
        for path in json_files(&dir.join("responses"))? {
            let doc = parse_json::<StandoffDocument>(&read_bytes(&path)?)
                .map_err(|e| Error::format(&path, e))?;
            let (set, text) = standoff_annotation(doc).map_err(|e| Error::format(&path, e))?;
            let expected = response_file_name(set.annotator_id(), set.excerpt_id());
            if file_name(&path) != expected {
                return Err(invalid(&path, format!("response file should be named {expected}")));
            }
            check_text(&excerpts, &set, &text).map_err(|m| invalid(&path, m))?;
            responses.push(set);
        }
        let sessions_path = dir.join("sessions.json");
        let sessions = if sessions_path.exists() {
            parse_json(&read_bytes(&sessions_path)?).map_err(|e| Error::format(&sessions_path, e))?
        } else {
            Vec::new()
        };
        Bundle::new(excerpts, responses, sessions).map_err(|m| invalid(dir, m))
    }

    /// Writes the bundle into `dir`. Existing files are only replaced with
    /// `force`.
    pub fn write_dir(&self, dir: &Path, force: bool) -> Result<()> {
        let wire = self.to_wire();
        write_atomic(&dir.join("excerpts.json"), &to_json_bytes(&wire.excerpts), force)?;
        for g in &wire.gold {
            let path = dir.join("gold").join(format!("{}.json", g.policy_id));
            write_atomic(&path, &to_json_bytes(g), force)?;
        }
        for r in &wire.responses {
            let path = dir
                .join("responses")
                .join(response_file_name(&r.version_label, &r.policy_id));
            write_atomic(&path, &to_json_bytes(r), force)?;
        }
        if !wire.sessions.is_empty() {
            write_atomic(&dir.join("sessions.json"), &to_json_bytes(&wire.sessions), force)?;
        }
        Ok(())
    }

    /// Annotators flagged as failed in `sessions.json`.
    pub fn failed_sessions(&self) -> BTreeSet<&str> {
        self.sessions
            .iter()
            .filter(|s| s.failed_screening)
            .map(|s| s.annotator_id.as_str())
            .collect()
    }
}

fn gold_document(gold: &AnnotationSet, text: &str) -> StandoffDocument {
    let mut doc = StandoffDocument::from(&annotation_document(gold, text).expect("gold is in bounds"));
    doc.version_label = GOLD_LABEL.into();
    doc.flows[0].source_ref = None;
    doc
}

fn standoff_annotation(doc: StandoffDocument) -> Result<(AnnotationSet, String), FormatError> {
    annotation_from_document(&doc.into_model()?)
}

fn build_excerpt(
    record: ExcerptRecord,
    gold: &mut std::collections::BTreeMap<String, (AnnotationSet, String)>,
) -> Result<Excerpt, String> {
    let id = record.excerpt_id;
    let gold = match gold.remove(&id) {
        Some((_, text)) if text != record.text => {
            return Err(format!("gold text for `{id}` differs from the excerpt text"));
        }
        Some((set, _)) => Some(set),
        None => None,
    };
    let excerpt = match (record.is_screening, record.screening_index, gold) {
        (true, Some(index), Some(gold)) => Excerpt::screening(id, record.text, gold, index),
        (true, _, None) => return Err(format!("screening excerpt `{id}` has no gold file")),
        (true, None, _) => return Err(format!("screening excerpt `{id}` has no screening_index")),
        (false, Some(_), _) => return Err(format!("work excerpt `{id}` has a screening_index")),
        (false, None, gold) => Excerpt::work(id, record.text, gold),
    };
    excerpt.map_err(|e| e.to_string())
}

fn check_text(excerpts: &[Excerpt], set: &AnnotationSet, text: &str) -> Result<(), String> {
    match excerpts.iter().find(|e| e.excerpt_id() == set.excerpt_id()) {
        None => Err(format!("response for unknown excerpt `{}`", set.excerpt_id())),
        Some(e) if e.text() != text => Err(format!(
            "response text for `{}` differs from the excerpt",
            set.excerpt_id()
        )),
        Some(_) => Ok(()),
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `.json` files in `dir`, sorted by name; a missing directory is empty.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
