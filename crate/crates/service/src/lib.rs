//! Self-hosted annotation task service.
//!
//! An experimenter posts a task (instructions, three screening excerpts
//! with expert spans, work excerpts). Annotators open sessions, answer the
//! screening questions, and, if they pass, label a balanced selection of
//! work excerpts. The experimenter exports the run as an experiment bundle
//! that `ci replay` consumes.
//!
//! | method | path | body | answer |
//! |---|---|---|---|
//! | POST | `/tasks` | [`TaskDefinition`] | `{task_id}` |
//! | POST | `/tasks/{id}/sessions` | `{consent}` | [`OpenedSession`] |
//! | GET | `/sessions/{token}/next` | | [`NextItem`] |
//! | POST | `/sessions/{token}/submit` | `{excerpt_id, spans}` | [`SubmitResult`] |
//! | GET | `/tasks/{id}/export` | | bundle JSON |
//! | GET | `/tasks/{id}/aggregate` | | [`TaskAggregate`] |
//!
//! Errors are `{code, message, detail}` objects: 401 for unknown tokens,
//! 404 for unknown tasks, 409 for requests the session state does not
//! allow, 422 for invalid bodies or spans.

pub mod api;
pub mod error;
pub mod store;
pub mod task;

pub use api::router;
pub use error::ApiError;
pub use store::{
    system_clock, Clock, NextItem, OpenedSession, SessionState, Store, SubmitResult, SubmitStatus,
    TaskAggregate,
};
pub use task::TaskDefinition;
