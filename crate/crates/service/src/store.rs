//! The record log and the state derived from it.
//!
//! Only three things are ever written: task definitions, opened sessions
//! and submissions, one JSON object per line, each flushed to disk before
//! the request is answered. Screening outcomes, work assignments and
//! session states are recomputed from those records in log order, so a
//! restarted service rebuilds exactly the state it had.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use ciflow::bundle::{Bundle, BundleWire, SessionRecord};
use ciflow::standoff::StandoffSpan;
use ciflow_core::crowd::{majority_vote, screen_worker, AggregatedAnnotation, ScreeningOutcome};
use ciflow_core::{AnnotationSet, ParameterKind, Span, Timestamp};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::task::{Task, TaskDefinition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
pub enum Record {
    Task {
        definition: TaskDefinition,
        created_at: u64,
    },
    Session {
        task_id: String,
        token: String,
        annotator_id: String,
        opened_at: u64,
    },
    Submission {
        token: String,
        excerpt_id: String,
        spans: Vec<StandoffSpan>,
        submitted_at: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Consented,
    Screening,
    FailedScreening,
    Working,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Screening,
    Work,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HintRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Item {
    pub excerpt_id: String,
    pub text: String,
    pub kinds: Vec<ParameterKind>,
    pub stage: Stage,
    pub instructions: String,
    /// Span counts per kind in earlier submissions for this excerpt.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<BTreeMap<ParameterKind, HintRange>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NextItem {
    pub state: SessionState,
    pub progress: Progress,
    /// `None` once the session is done.
    pub item: Option<Item>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpenedSession {
    pub token: String,
    pub annotator_id: String,
    pub state: SessionState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitStatus {
    Accepted,
    ScreeningFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmitResult {
    pub status: SubmitStatus,
    pub state: SessionState,
    pub progress: Progress,
}

/// The service's own majority vote over the sessions it let through.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskAggregate {
    pub task_id: String,
    pub qualified: Vec<String>,
    pub aggregates: Vec<AggregatedAnnotation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Submission {
    pub excerpt_id: String,
    pub spans: Vec<StandoffSpan>,
}

/// Milliseconds since the epoch; injectable so tests are reproducible.
pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    })
}

/// Errors while rebuilding state from an existing log.
#[derive(Debug, thiserror::Error)]
pub enum OpenError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}, line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

struct SessionData {
    task_id: String,
    annotator_id: String,
    ordinal: u64,
    submissions: Vec<AnnotationSet>,
    outcome: Option<ScreeningOutcome>,
    assigned: Vec<String>,
}

struct TaskData {
    task: Task,
    /// Tokens in the order sessions were opened.
    sessions: Vec<String>,
    /// Number of sessions each work excerpt has been assigned to.
    coverage: BTreeMap<String, usize>,
}

#[derive(Default)]
struct State {
    tasks: BTreeMap<String, TaskData>,
    sessions: HashMap<String, SessionData>,
    records: usize,
}

struct Inner {
    state: State,
    log: Option<File>,
    broken: bool,
}

pub struct Store {
    inner: Mutex<Inner>,
    clock: Clock,
}

fn new_token() -> String {
    format!("{:032x}", rand::random::<u128>())
}

impl SessionData {
    fn submitted(&self, excerpt_id: &str) -> bool {
        self.submissions.iter().any(|s| s.excerpt_id() == excerpt_id)
    }

    fn state(&self) -> SessionState {
        match &self.outcome {
            Some(o) if !o.passed => SessionState::FailedScreening,
            Some(_) if self.assigned.iter().all(|id| self.submitted(id)) => SessionState::Done,
            Some(_) => SessionState::Working,
            None if self.submissions.is_empty() => SessionState::Consented,
            None => SessionState::Screening,
        }
    }

    /// The excerpt this session has to answer next.
    fn pending<'t>(&self, task: &'t Task) -> Option<(Stage, &'t ciflow_core::crowd::Excerpt)> {
        match self.state() {
            SessionState::Consented | SessionState::Screening => task
                .screening
                .iter()
                .find(|e| !self.submitted(e.excerpt_id()))
                .map(|e| (Stage::Screening, e)),
            SessionState::Working => self
                .assigned
                .iter()
                .find(|id| !self.submitted(id))
                .and_then(|id| task.excerpt(id))
                .map(|e| (Stage::Work, e)),
            SessionState::FailedScreening | SessionState::Done => None,
        }
    }

    fn progress(&self, task: &Task) -> Progress {
        let work = if self.outcome.is_some() {
            self.assigned.len()
        } else {
            task.definition.excerpts_per_worker
        };
        let total = match self.state() {
            SessionState::FailedScreening => task.screening.len(),
            _ => task.screening.len() + work,
        };
        Progress {
            completed: self.submissions.len(),
            total,
        }
    }
}

/// Checks posted spans against an excerpt; returns the spans or a list of
/// problems, one per offending span.
fn check_spans(
    spans: &[StandoffSpan],
    len: usize,
    kinds: &[ParameterKind],
) -> Result<Vec<Span>, Vec<serde_json::Value>> {
    let mut problems = Vec::new();
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| (spans[i].start, spans[i].end));
    for (i, s) in spans.iter().enumerate() {
        let mut report = |problem: String| {
            problems.push(json!({"index": i, "start": s.start, "end": s.end, "kind": s.kind, "problem": problem}))
        };
        if s.start >= s.end {
            report("span is empty or reversed".into());
        } else if s.end > len {
            report(format!("span ends beyond the excerpt ({len} characters)"));
        }
        if !kinds.contains(&s.kind) {
            report(format!("kind `{}` is not enabled for this task", s.kind.as_str()));
        }
    }
    let mut reach: Option<(usize, usize)> = None;
    for &i in order.iter().filter(|&&i| spans[i].start < spans[i].end) {
        let s = &spans[i];
        if let Some((j, end)) = reach {
            if s.start < end {
                problems.push(json!({
                    "index": i, "start": s.start, "end": s.end, "kind": s.kind,
                    "problem": format!("overlaps span {j}"),
                }));
            }
            if s.end <= end {
                continue;
            }
        }
        reach = Some((i, s.end));
    }
    if !problems.is_empty() {
        problems.sort_by_key(|p| p["index"].as_u64());
        return Err(problems);
    }
    Ok(spans.iter().map(|s| s.to_span().expect("checked above")).collect())
}

impl State {
    /// Applies one record. Live requests are validated before they are
    /// logged, so an error here means the log itself is inconsistent.
    fn apply(&mut self, record: Record) -> Result<(), String> {
        match record {
            Record::Task { definition, .. } => {
                let task = Task::new(definition).map_err(|e| format!("{e}: {}", e.detail))?;
                if self.tasks.contains_key(&task.id) {
                    return Err(format!("task `{}` defined twice", task.id));
                }
                let coverage = task.work.iter().map(|e| (e.excerpt_id().to_string(), 0)).collect();
                self.tasks.insert(
                    task.id.clone(),
                    TaskData {
                        task,
                        sessions: vec![],
                        coverage,
                    },
                );
            }
            Record::Session {
                task_id,
                token,
                annotator_id,
                ..
            } => {
                let task = self.tasks.get_mut(&task_id).ok_or_else(|| format!("unknown task `{task_id}`"))?;
                if self.sessions.contains_key(&token) {
                    return Err("session token reused".into());
                }
                task.sessions.push(token.clone());
                self.sessions.insert(
                    token,
                    SessionData {
                        task_id,
                        annotator_id,
                        ordinal: task.sessions.len() as u64,
                        submissions: vec![],
                        outcome: None,
                        assigned: vec![],
                    },
                );
            }
            Record::Submission {
                token,
                excerpt_id,
                spans,
                submitted_at,
            } => {
                let session = self.sessions.get_mut(&token).ok_or("submission for an unknown session")?;
                let data = self.tasks.get_mut(&session.task_id).expect("sessions belong to tasks");
                let task = &data.task;
                let Some((stage, excerpt)) = session.pending(task) else {
                    return Err(format!("session {} cannot submit", session.annotator_id));
                };
                if excerpt.excerpt_id() != excerpt_id {
                    return Err(format!("session {} submitted {excerpt_id} out of order", session.annotator_id));
                }
                let spans = check_spans(&spans, excerpt.char_len(), &task.definition.kinds)
                    .map_err(|p| serde_json::Value::Array(p).to_string())?;
                let set = AnnotationSet::new(
                    &session.annotator_id,
                    excerpt_id,
                    spans,
                    excerpt.char_len(),
                    Timestamp(submitted_at),
                )
                .map_err(|e| e.to_string())?;
                session.submissions.push(set);
                if stage == Stage::Screening
                    && task.screening.iter().all(|e| session.submitted(e.excerpt_id()))
                {
                    let outcome = screen_worker(&session.submissions, &task.screening, &task.rule, &task.definition.kinds)
                        .map_err(|e| e.to_string())?;
                    if outcome.passed {
                        session.assigned = assign(data, session.ordinal);
                    }
                    session.outcome = Some(outcome);
                }
            }
        }
        self.records += 1;
        Ok(())
    }
}

/// Least-covered work excerpts first; ties broken by a shuffle seeded from
/// the task seed and the session's position.
fn assign(data: &mut TaskData, ordinal: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(data.task.definition.assignment_seed);
    rng.set_stream(ordinal);
    let mut ids: Vec<String> = data.task.work.iter().map(|e| e.excerpt_id().to_string()).collect();
    ids.shuffle(&mut rng);
    ids.sort_by_key(|id| data.coverage[id]);
    ids.truncate(data.task.definition.excerpts_per_worker);
    for id in &ids {
        *data.coverage.get_mut(id).expect("work excerpt") += 1;
    }
    ids
}

fn read_log(path: &Path, file: &mut File, state: &mut State) -> Result<(), OpenError> {
    let io = |source| OpenError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(io)?;
    let mut good = 0;
    let mut lines = text.split_inclusive('\n').enumerate().peekable();
    while let Some((n, line)) = lines.next() {
        let complete = line.ends_with('\n');
        let parsed = serde_json::from_str::<Record>(line.trim_end());
        match parsed {
            // a torn final write is dropped
            Err(_) if !complete && lines.peek().is_none() => break,
            Err(e) => {
                return Err(OpenError::Corrupt {
                    path: path.display().to_string(),
                    line: n + 1,
                    message: e.to_string(),
                })
            }
            Ok(record) => {
                state.apply(record).map_err(|message| OpenError::Corrupt {
                    path: path.display().to_string(),
                    line: n + 1,
                    message,
                })?;
                good += line.len();
                if !complete {
                    file.write_all(b"\n").map_err(io)?;
                    good += 1;
                }
            }
        }
    }
    file.set_len(good as u64).map_err(io)?;
    file.seek(SeekFrom::End(0)).map_err(io)?;
    file.sync_data().map_err(io)?;
    Ok(())
}

impl Store {
    /// A store without a log file.
    pub fn in_memory(clock: Clock) -> Self {
        Store {
            inner: Mutex::new(Inner {
                state: State::default(),
                log: None,
                broken: false,
            }),
            clock,
        }
    }

    /// Opens (or creates) the log at `path` and rebuilds the state from it.
    pub fn open(path: &Path, clock: Clock) -> Result<Self, OpenError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|source| OpenError::Io {
                path: path.display().to_string(),
                source,
            })?;
        let mut state = State::default();
        read_log(path, &mut file, &mut state)?;
        Ok(Store {
            inner: Mutex::new(Inner {
                state,
                log: Some(file),
                broken: false,
            }),
            clock,
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().expect("store lock poisoned")
    }

    /// Number of records in the log.
    pub fn record_count(&self) -> usize {
        self.lock().state.records
    }

    pub fn create_task(&self, mut definition: TaskDefinition) -> Result<String, ApiError> {
        let id = definition
            .task_id
            .get_or_insert_with(|| format!("task-{:016x}", rand::random::<u64>()))
            .clone();
        Task::new(definition.clone())?;
        let mut inner = self.lock();
        if inner.state.tasks.contains_key(&id) {
            return Err(ApiError::conflict("task_exists", format!("task `{id}` already exists")));
        }
        inner.commit(Record::Task {
            definition,
            created_at: (self.clock)(),
        })?;
        Ok(id)
    }

    pub fn open_session(&self, task_id: &str, consent: bool) -> Result<OpenedSession, ApiError> {
        let mut inner = self.lock();
        let Some(task) = inner.state.tasks.get(task_id) else {
            return Err(ApiError::unknown_task(task_id));
        };
        if !consent {
            return Err(ApiError::new(403, "consent_required", "the session needs the annotator's consent"));
        }
        let annotator_id = format!("w{:04}", task.sessions.len() + 1);
        let token = new_token();
        inner.commit(Record::Session {
            task_id: task_id.into(),
            token: token.clone(),
            annotator_id: annotator_id.clone(),
            opened_at: (self.clock)(),
        })?;
        Ok(OpenedSession {
            token,
            annotator_id,
            state: SessionState::Consented,
        })
    }

    pub fn next_item(&self, token: &str) -> Result<NextItem, ApiError> {
        let inner = self.lock();
        let state = &inner.state;
        let session = state.sessions.get(token).ok_or_else(ApiError::unknown_session)?;
        let data = &state.tasks[&session.task_id];
        let task = &data.task;
        let current = session.state();
        if current == SessionState::FailedScreening {
            return Err(ApiError::conflict("screening_failed", "this session did not pass the screening questions"));
        }
        let item = session.pending(task).map(|(stage, excerpt)| Item {
            excerpt_id: excerpt.excerpt_id().into(),
            text: excerpt.text().into(),
            kinds: task.definition.kinds.clone(),
            stage,
            instructions: task.definition.instructions_text.clone(),
            hint: task
                .definition
                .hints
                .then(|| state.hint(data, token, excerpt.excerpt_id()))
                .flatten(),
        });
        Ok(NextItem {
            state: current,
            progress: session.progress(task),
            item,
        })
    }

    pub fn submit(&self, token: &str, submission: Submission) -> Result<SubmitResult, ApiError> {
        let mut inner = self.lock();
        let state = &inner.state;
        let session = state.sessions.get(token).ok_or_else(ApiError::unknown_session)?;
        let task = &state.tasks[&session.task_id].task;
        match session.state() {
            SessionState::FailedScreening => {
                return Err(ApiError::conflict("screening_failed", "this session did not pass the screening questions"))
            }
            SessionState::Done => return Err(ApiError::conflict("session_done", "this session has no items left")),
            _ => {}
        }
        let id = &submission.excerpt_id;
        if session.submitted(id) {
            return Err(ApiError::conflict("already_submitted", format!("excerpt `{id}` was already annotated")));
        }
        let (_, pending) = session.pending(task).expect("open sessions have a pending item");
        if pending.excerpt_id() != id {
            return Err(ApiError::conflict("not_current_item", format!("excerpt `{id}` is not the current item"))
                .with_detail(json!({"expected": pending.excerpt_id()})));
        }
        if let Err(problems) = check_spans(&submission.spans, pending.char_len(), &task.definition.kinds) {
            return Err(ApiError::validation("invalid_spans", "some spans are invalid", problems));
        }
        let before = session.outcome.is_some();
        inner.commit(Record::Submission {
            token: token.into(),
            excerpt_id: submission.excerpt_id,
            spans: submission.spans,
            submitted_at: (self.clock)(),
        })?;
        let session = &inner.state.sessions[token];
        let task = &inner.state.tasks[&session.task_id].task;
        let status = match &session.outcome {
            Some(o) if !before && !o.passed => SubmitStatus::ScreeningFailed,
            _ => SubmitStatus::Accepted,
        };
        Ok(SubmitResult {
            status,
            state: session.state(),
            progress: session.progress(task),
        })
    }

    /// Screening responses of every session, work responses of sessions
    /// that passed, and one session record per session.
    pub fn export(&self, task_id: &str) -> Result<BundleWire, ApiError> {
        let inner = self.lock();
        let data = inner.state.tasks.get(task_id).ok_or_else(|| ApiError::unknown_task(task_id))?;
        let mut responses = Vec::new();
        let mut sessions = Vec::new();
        for token in &data.sessions {
            let s = &inner.state.sessions[token];
            let passed = s.outcome.as_ref().is_some_and(|o| o.passed);
            for r in &s.submissions {
                let screening = data.task.excerpt(r.excerpt_id()).is_some_and(|e| e.is_screening());
                if screening || passed {
                    responses.push(r.clone());
                }
            }
            sessions.push(SessionRecord {
                annotator_id: s.annotator_id.clone(),
                failed_screening: s.outcome.as_ref().is_some_and(|o| !o.passed),
            });
        }
        let excerpts = data.task.screening.iter().chain(&data.task.work).cloned().collect();
        let bundle = Bundle::new(excerpts, responses, sessions).map_err(|e| ApiError::new(500, "export_failed", e))?;
        Ok(bundle.to_wire())
    }

    pub fn aggregate(&self, task_id: &str) -> Result<TaskAggregate, ApiError> {
        let inner = self.lock();
        let data = inner.state.tasks.get(task_id).ok_or_else(|| ApiError::unknown_task(task_id))?;
        let passers: Vec<&SessionData> = data
            .sessions
            .iter()
            .map(|t| &inner.state.sessions[t])
            .filter(|s| s.outcome.as_ref().is_some_and(|o| o.passed))
            .collect();
        let mut qualified: Vec<String> = passers.iter().map(|s| s.annotator_id.clone()).collect();
        qualified.sort();
        let mut aggregates = Vec::new();
        for excerpt in &data.task.work {
            let mut responses: Vec<AnnotationSet> = passers
                .iter()
                .flat_map(|s| &s.submissions)
                .filter(|r| r.excerpt_id() == excerpt.excerpt_id())
                .cloned()
                .collect();
            if responses.is_empty() {
                continue;
            }
            responses.sort_by(|a, b| a.annotator_id().cmp(b.annotator_id()));
            aggregates.push(majority_vote(&responses, excerpt).map_err(|e| ApiError::new(500, "aggregate_failed", e.to_string()))?);
        }
        Ok(TaskAggregate {
            task_id: task_id.into(),
            qualified,
            aggregates,
        })
    }

    /// Per-session summary for operators: annotator id, state, assignments.
    pub fn sessions(&self, task_id: &str) -> Result<Vec<(String, SessionState, Vec<String>)>, ApiError> {
        let inner = self.lock();
        let data = inner.state.tasks.get(task_id).ok_or_else(|| ApiError::unknown_task(task_id))?;
        Ok(data
            .sessions
            .iter()
            .map(|t| {
                let s = &inner.state.sessions[t];
                (s.annotator_id.clone(), s.state(), s.assigned.clone())
            })
            .collect())
    }
}

impl State {
    fn hint(&self, data: &TaskData, token: &str, excerpt_id: &str) -> Option<BTreeMap<ParameterKind, HintRange>> {
        let mut ranges: BTreeMap<ParameterKind, HintRange> = BTreeMap::new();
        let mut any = false;
        for other in data.sessions.iter().filter(|t| *t != token) {
            let s = &self.sessions[other];
            let Some(r) = s.submissions.iter().find(|r| r.excerpt_id() == excerpt_id) else { continue };
            for &kind in &data.task.definition.kinds {
                let n = r.spans().iter().filter(|sp| sp.kind() == kind).count();
                let e = ranges.entry(kind).or_insert(HintRange { min: n, max: n });
                if any {
                    e.min = e.min.min(n);
                    e.max = e.max.max(n);
                }
            }
            any = true;
        }
        any.then_some(ranges)
    }
}

impl Inner {
    /// Writes `record` to the log, then applies it.
    fn commit(&mut self, record: Record) -> Result<(), ApiError> {
        if self.broken {
            return Err(ApiError::new(503, "storage_unavailable", "an earlier write to the record log failed"));
        }
        if let Some(file) = &mut self.log {
            let mut line = serde_json::to_vec(&record).expect("records serialize");
            line.push(b'\n');
            if let Err(e) = file.write_all(&line).and_then(|_| file.sync_data()) {
                self.broken = true;
                return Err(ApiError::storage(&e));
            }
        }
        self.state
            .apply(record)
            .map_err(|e| ApiError::new(500, "internal", format!("validated record was rejected: {e}")))
    }
}
