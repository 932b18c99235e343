//! File formats, reports and the `ci` command line for contextual-integrity
//! annotation of privacy policies.
//!
//! The analyses themselves live in [`ciflow_core`]; this crate reads and
//! writes standoff JSON documents, vagueness lexicons and experiment
//! bundles, runs the crowd pipeline over a bundle, and renders every
//! result as JSON, CSV or Markdown.

pub mod bundle;
pub mod cli;
pub mod error;
pub mod lexicon;
pub mod output;
pub mod replay;
pub mod report;
pub mod reports;
pub mod standoff;

pub use error::{Error, FormatError};
