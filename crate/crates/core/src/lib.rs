//! Contextual-integrity (CI) annotation of privacy policies.
//!
//! A privacy statement that describes one information transfer is a *flow*;
//! annotators label the character spans naming its sender, recipient,
//! subject, attribute and transmission principle. This crate holds the
//! annotation model and every analysis that runs over it:
//!
//! - [`model`]: parameter kinds, spans, flows, documents, annotation sets.
//! - [`text`]: the shared tokenizer and stopword list used by all scoring.
//! - [`markup`]: the inline `<flow>`/`<sender>` markup dialect.
//! - [`analysis`]: parameter frequency, incomplete flows, bloat, vagueness.
//! - [`diff`]: indel-ratio similarity and cross-version parameter matching.
//! - [`crowd`]: screening, majority vote, word- and span-based scoring.
//! - [`readability`]: reading ease, FOG index and Spearman correlation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the command-line tool live in the `ciflow` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod crowd;
pub mod diff;
pub mod markup;
pub mod model;
pub mod readability;
pub mod text;

pub use model::{
    AnnotationSet, FlowStatement, KindScore, ModelError, ParameterKind, PolicyDocument,
    ScoreReport, Span, Timestamp,
};
pub use text::Token;
