//! Task definitions as posted by the experimenter.

use ciflow::bundle::check_file_id;
use ciflow::standoff::StandoffSpan;
use ciflow_core::crowd::{Excerpt, ScreeningRule};
use ciflow_core::model::char_len;
use ciflow_core::{AnnotationSet, ParameterKind, Timestamp};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;

/// Shown above every item. Four parameter definitions and one worked example.
pub const DEFAULT_INSTRUCTIONS: &str = "\
Privacy policies describe how information about you moves between parties. \
Highlight every word or phrase in the excerpt that names one of these parameters:

Sender: who sends or discloses the information (for example \"you\", \"advertisers\").
Recipient: who receives the information (for example \"we\", \"third-party apps\").
Attribute: what type of information is sent (for example \"contact information\").
Transmission principle: the condition under which the information is sent \
(for example \"if you upload your address book\").

Example:
\"We also collect contact information that you provide if you upload, sync or \
import this information (such as an address book) from a device.\"
Recipient: We. Attribute: contact information. Sender: you. \
Transmission principle: if you upload, sync or import this information (such as \
an address book) from a device.

Leave words that are none of these unlabeled. A word carries at most one label.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcerptInput {
    pub excerpt_id: String,
    pub text: String,
    /// Expert spans. Required for screening excerpts.
    #[serde(default)]
    pub gold: Option<Vec<StandoffSpan>>,
}

fn default_instructions() -> String {
    DEFAULT_INSTRUCTIONS.into()
}

fn default_per_worker() -> usize {
    5
}

fn default_kinds() -> Vec<ParameterKind> {
    ParameterKind::CROWD.to_vec()
}

fn default_threshold() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDefinition {
    /// Generated when absent.
    #[serde(default)]
    pub task_id: Option<String>,
    #[serde(default = "default_instructions")]
    pub instructions_text: String,
    /// The three screening questions, in order.
    pub screening: Vec<ExcerptInput>,
    pub work: Vec<ExcerptInput>,
    #[serde(default = "default_per_worker")]
    pub excerpts_per_worker: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<ParameterKind>,
    #[serde(default = "default_threshold")]
    pub screening_threshold: f64,
    /// Seeds the tie-break between equally covered work excerpts.
    #[serde(default)]
    pub assignment_seed: u64,
    /// Show annotators the range of prior span counts per kind.
    #[serde(default)]
    pub hints: bool,
}

/// A validated task.
#[derive(Debug, Clone)]
pub struct Task {
    pub id: String,
    pub definition: TaskDefinition,
    pub screening: Vec<Excerpt>,
    pub work: Vec<Excerpt>,
    pub rule: ScreeningRule,
}

fn gold_set(input: &ExcerptInput) -> Result<Option<AnnotationSet>, String> {
    let Some(spans) = &input.gold else { return Ok(None) };
    let spans = spans
        .iter()
        .map(|s| s.to_span())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    AnnotationSet::new("gold", &input.excerpt_id, spans, char_len(&input.text), Timestamp(0))
        .map(Some)
        .map_err(|e| e.to_string())
}

impl Task {
    /// `definition.task_id` must already be set.
    pub fn new(definition: TaskDefinition) -> Result<Task, ApiError> {
        let mut problems = Vec::new();
        let id = definition.task_id.clone().unwrap_or_default();
        if let Err(e) = check_file_id(&id) {
            problems.push(json!({"field": "task_id", "problem": e}));
        }
        if definition.screening.len() != 3 {
            problems.push(json!({"field": "screening", "problem": "exactly three screening excerpts are required"}));
        }
        if definition.work.is_empty() {
            problems.push(json!({"field": "work", "problem": "at least one work excerpt is required"}));
        }
        if definition.excerpts_per_worker == 0 || definition.excerpts_per_worker > definition.work.len() {
            problems.push(json!({
                "field": "excerpts_per_worker",
                "problem": format!("must be between 1 and the number of work excerpts ({})", definition.work.len()),
            }));
        }
        if definition.kinds.is_empty() {
            problems.push(json!({"field": "kinds", "problem": "at least one kind must be enabled"}));
        }
        let rule = ScreeningRule::new(definition.screening_threshold);
        if let Err(e) = &rule {
            problems.push(json!({"field": "screening_threshold", "problem": e.to_string()}));
        }

        let mut seen = std::collections::BTreeSet::new();
        let mut screening = Vec::new();
        let mut work = Vec::new();
        let all = definition.screening.iter().map(|e| (true, e)).chain(definition.work.iter().map(|e| (false, e)));
        for (i, (is_screening, input)) in all.enumerate() {
            let field = if is_screening {
                format!("screening[{i}]")
            } else {
                format!("work[{}]", i - definition.screening.len())
            };
            if let Err(e) = check_file_id(&input.excerpt_id) {
                problems.push(json!({"field": field, "problem": e}));
                continue;
            }
            if !seen.insert(input.excerpt_id.as_str()) {
                problems.push(json!({"field": field, "problem": format!("duplicate excerpt id `{}`", input.excerpt_id)}));
                continue;
            }
            let gold = match gold_set(input) {
                Ok(g) => g,
                Err(e) => {
                    problems.push(json!({"field": format!("{field}.gold"), "problem": e}));
                    continue;
                }
            };
            let built = if is_screening {
                match gold {
                    Some(g) => Excerpt::screening(&input.excerpt_id, &input.text, g, screening.len() as u8 + 1),
                    None => {
                        problems.push(json!({"field": field, "problem": "screening excerpts need gold spans"}));
                        continue;
                    }
                }
            } else {
                Excerpt::work(&input.excerpt_id, &input.text, gold)
            };
            match built {
                Ok(e) if is_screening => screening.push(e),
                Ok(e) => work.push(e),
                Err(e) => problems.push(json!({"field": field, "problem": e.to_string()})),
            }
        }

        if !problems.is_empty() {
            return Err(ApiError::validation("invalid_task", "the task definition is invalid", problems));
        }
        Ok(Task {
            id,
            rule: rule.expect("checked above"),
            definition,
            screening,
            work,
        })
    }

    pub fn excerpt(&self, id: &str) -> Option<&Excerpt> {
        self.screening.iter().chain(&self.work).find(|e| e.excerpt_id() == id)
    }
}
