//! Vagueness lexicon files: a JSON object mapping each category
//! (`conditionality`, `generalization`, `modality`, `numeric_quantifier`)
//! to its list of lowercase terms.

use std::collections::BTreeMap;
use std::path::Path;

use ciflow_core::analysis::{VaguenessCategory, VaguenessLexicon};

use crate::error::{Error, FormatError, Result};
use crate::standoff::parse_json;

/// The shipped lexicon file.
pub const DEFAULT_LEXICON_JSON: &str = include_str!("../data/vagueness_lexicon.json");

pub fn parse_lexicon(bytes: &[u8]) -> Result<VaguenessLexicon, FormatError> {
    let terms: BTreeMap<VaguenessCategory, Vec<String>> = parse_json(bytes)?;
    Ok(VaguenessLexicon::new(terms)?)
}

pub fn default_lexicon() -> VaguenessLexicon {
    parse_lexicon(DEFAULT_LEXICON_JSON.as_bytes()).expect("shipped lexicon is valid")
}

pub fn load_lexicon(path: &Path) -> Result<VaguenessLexicon> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&bytes).map_err(|e| Error::format(path, e))
}
