//! Single-document analyses: parameter inventory and frequency, incomplete
//! flows, parameter bloat and vague wording.
//!
//! Percentages are `100 * count / total_flows`, rounded to two decimals.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::model::{ParameterKind, PolicyDocument};
use crate::text::{fold, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("the set of required parameter kinds is empty")]
    NoRequiredKinds,
}

/// `100 * count / total`, rounded to two decimals; 0 when `total` is 0.
pub fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    libm::round(10_000.0 * count as f64 / total as f64) / 100.0
}

fn is_edge_punctuation(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\'' | '`' | '\u{2018}' | '\u{2019}' | '\u{201c}'
            | '\u{201d}' | '\u{2026}'
    )
}

/// Lowercases, collapses whitespace runs to one space and strips
/// surrounding whitespace and punctuation. Brackets are kept so glosses
/// such as `we [facebook]` survive.
pub fn normalize(raw: &str) -> String {
    let lowered: String = raw.chars().flat_map(char::to_lowercase).collect();
    let mut collapsed = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !collapsed.is_empty() {
            collapsed.push(' ');
        }
        collapsed.push_str(word);
    }
    collapsed
        .trim_matches(|c: char| c.is_whitespace() || is_edge_punctuation(c))
        .into()
}

/// One labeled parameter occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ParameterInstance {
    pub kind: ParameterKind,
    pub raw_text: String,
    pub normalized_text: String,
    pub flow_id: String,
}

/// One instance per span, in document order.
pub fn extract_instances(doc: &PolicyDocument) -> Vec<ParameterInstance> {
    doc.flows()
        .iter()
        .flat_map(|flow| {
            flow.spans().iter().map(move |span| {
                let raw = flow.span_text(span);
                ParameterInstance {
                    kind: span.kind(),
                    raw_text: raw.into(),
                    normalized_text: normalize(raw),
                    flow_id: flow.id().into(),
                }
            })
        })
        .collect()
}

/// Occurrence counts of each normalized text of `kind`, most frequent
/// first, ties in lexicographic order.
pub fn frequency_table(instances: &[ParameterInstance], kind: ParameterKind) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in instances.iter().filter(|i| i.kind == kind) {
        *counts.entry(inst.normalized_text.as_str()).or_default() += 1;
    }
    let mut rows: Vec<(String, usize)> = counts.into_iter().map(|(t, n)| (t.into(), n)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows
}

/// Number of distinct normalized texts per kind. Every kind has an entry.
pub fn unique_counts(instances: &[ParameterInstance]) -> BTreeMap<ParameterKind, usize> {
    let mut sets: BTreeMap<ParameterKind, BTreeSet<&str>> =
        ParameterKind::ALL.iter().map(|k| (*k, BTreeSet::new())).collect();
    for inst in instances {
        sets.entry(inst.kind)
            .or_default()
            .insert(inst.normalized_text.as_str());
    }
    sets.into_iter().map(|(k, s)| (k, s.len())).collect()
}

/// The default required kinds: every kind except subject.
pub fn default_required() -> BTreeSet<ParameterKind> {
    ParameterKind::CROWD.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MissingParameters {
    pub flow_id: String,
    pub missing: BTreeSet<ParameterKind>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IncompleteFlows {
    pub total_flows: usize,
    pub required: BTreeSet<ParameterKind>,
    /// Incomplete flows only, in document order.
    pub flows: Vec<MissingParameters>,
    pub incomplete_count: usize,
    pub overall_percent: f64,
    /// Flows lacking each required kind.
    pub missing_counts: BTreeMap<ParameterKind, usize>,
    pub missing_percent: BTreeMap<ParameterKind, f64>,
}

/// Flows lacking at least one of the `required` kinds.
pub fn incomplete_flows(
    doc: &PolicyDocument,
    required: &BTreeSet<ParameterKind>,
) -> Result<IncompleteFlows, AnalysisError> {
    if required.is_empty() {
        return Err(AnalysisError::NoRequiredKinds);
    }
    let total = doc.flows().len();
    let mut missing_counts: BTreeMap<ParameterKind, usize> =
        required.iter().map(|k| (*k, 0)).collect();
    let mut flows = Vec::new();
    for flow in doc.flows() {
        let present = flow.kinds_present();
        let missing: BTreeSet<ParameterKind> = required.difference(&present).copied().collect();
        for kind in &missing {
            *missing_counts.entry(*kind).or_default() += 1;
        }
        if !missing.is_empty() {
            flows.push(MissingParameters {
                flow_id: flow.id().into(),
                missing,
            });
        }
    }
    let incomplete_count = flows.len();
    Ok(IncompleteFlows {
        total_flows: total,
        required: required.clone(),
        flows,
        incomplete_count,
        overall_percent: percent(incomplete_count, total),
        missing_percent: missing_counts
            .iter()
            .map(|(k, n)| (*k, percent(*n, total)))
            .collect(),
        missing_counts,
    })
}

/// Per kind: instances-per-flow (at least 2) mapped to the number of flows
/// with that many instances. Every kind has an entry, possibly empty.
pub fn bloat_histogram(doc: &PolicyDocument) -> BTreeMap<ParameterKind, BTreeMap<usize, usize>> {
    let mut hist: BTreeMap<ParameterKind, BTreeMap<usize, usize>> =
        ParameterKind::ALL.iter().map(|k| (*k, BTreeMap::new())).collect();
    for flow in doc.flows() {
        for kind in ParameterKind::ALL {
            let n = flow.count_of(kind);
            if n >= 2 {
                *hist.entry(kind).or_default().entry(n).or_default() += 1;
            }
        }
    }
    hist
}

/// Categories of vague wording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum VaguenessCategory {
    Conditionality,
    Generalization,
    Modality,
    NumericQuantifier,
}

impl VaguenessCategory {
    pub const ALL: [VaguenessCategory; 4] = [
        VaguenessCategory::Conditionality,
        VaguenessCategory::Generalization,
        VaguenessCategory::Modality,
        VaguenessCategory::NumericQuantifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VaguenessCategory::Conditionality => "conditionality",
            VaguenessCategory::Generalization => "generalization",
            VaguenessCategory::Modality => "modality",
            VaguenessCategory::NumericQuantifier => "numeric_quantifier",
        }
    }
}

impl fmt::Display for VaguenessCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VaguenessCategory {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VaguenessCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| LexiconError::UnknownCategory(s.into()))
    }
}

const CONDITIONALITY: [&str; 8] = [
    "as needed",
    "as necessary",
    "as appropriate",
    "depending",
    "sometimes",
    "as applicable",
    "otherwise reasonably determined",
    "from time to time",
];

const GENERALIZATION: [&str; 12] = [
    "typically",
    "normally",
    "often",
    "general",
    "usually",
    "generally",
    "commonly",
    "among other things",
    "widely",
    "primarily",
    "largely",
    "mostly",
];

const MODALITY: [&str; 7] = ["likely", "may", "can", "could", "would", "might", "possibly"];

const NUMERIC_QUANTIFIER: [&str; 6] = ["certain", "most", "majority", "many", "some", "few"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("unknown vagueness category `{0}`")]
    UnknownCategory(String),
    #[error("term `{0}` must be lowercase words separated by single spaces")]
    NotCanonical(String),
    #[error("term `{term}` appears in both {first} and {second}")]
    Overlap {
        term: String,
        first: VaguenessCategory,
        second: VaguenessCategory,
    },
}

/// Vague terms per category. Terms are lowercase and whitespace-separated;
/// the categories are disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VaguenessLexicon {
    terms: BTreeMap<VaguenessCategory, Vec<String>>,
}

impl VaguenessLexicon {
    pub fn new(
        terms: BTreeMap<VaguenessCategory, Vec<String>>,
    ) -> Result<Self, LexiconError> {
        let mut owner: BTreeMap<&str, VaguenessCategory> = BTreeMap::new();
        for (category, list) in &terms {
            for term in list {
                let words: Vec<String> = tokenize(term).into_iter().map(|t| t.text).collect();
                if words.is_empty() || fold(term) != *term || words.join(" ") != *term {
                    return Err(LexiconError::NotCanonical(term.clone()));
                }
                if let Some(first) = owner.insert(term.as_str(), *category) {
                    if first != *category {
                        return Err(LexiconError::Overlap {
                            term: term.clone(),
                            first,
                            second: *category,
                        });
                    }
                }
            }
        }
        let mut terms = terms;
        for list in terms.values_mut() {
            let mut seen = BTreeSet::new();
            list.retain(|t| seen.insert(t.clone()));
        }
        for category in VaguenessCategory::ALL {
            terms.entry(category).or_default();
        }
        Ok(VaguenessLexicon { terms })
    }

    pub fn terms(&self, category: VaguenessCategory) -> &[String] {
        self.terms.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn categories(&self) -> impl Iterator<Item = (VaguenessCategory, &[String])> {
        self.terms.iter().map(|(c, t)| (*c, t.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.terms.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for VaguenessLexicon {
    /// The four-category lexicon of vague terms used for policy analysis.
    fn default() -> Self {
        let table: [(VaguenessCategory, &[&str]); 4] = [
            (VaguenessCategory::Conditionality, &CONDITIONALITY),
            (VaguenessCategory::Generalization, &GENERALIZATION),
            (VaguenessCategory::Modality, &MODALITY),
            (VaguenessCategory::NumericQuantifier, &NUMERIC_QUANTIFIER),
        ];
        let terms = table
            .into_iter()
            .map(|(c, list)| (c, list.iter().map(|t| String::from(*t)).collect()))
            .collect();
        VaguenessLexicon::new(terms).expect("built-in lexicon is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VagueMatch {
    pub category: VaguenessCategory,
    pub term: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FlowVagueness {
    pub flow_id: String,
    /// Ordered by start offset, then category.
    pub matches: Vec<VagueMatch>,
}

impl FlowVagueness {
    pub fn categories(&self) -> BTreeSet<VaguenessCategory> {
        self.matches.iter().map(|m| m.category).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VaguenessScan {
    pub total_flows: usize,
    /// One entry per flow, in document order.
    pub flows: Vec<FlowVagueness>,
    pub flagged_counts: BTreeMap<VaguenessCategory, usize>,
    pub flagged_percent: BTreeMap<VaguenessCategory, f64>,
}

/// Finds lexicon terms in `text` as whole tokens, case-insensitively.
/// Words of a multi-word term may be separated only by whitespace.
pub fn find_vague_terms(text: &str, lexicon: &VaguenessLexicon) -> Vec<VagueMatch> {
    let chars: Vec<char> = text.chars().collect();
    let tokens = tokenize(text);
    let folded: Vec<String> = tokens.iter().map(|t| fold(&t.text)).collect();
    let mut matches = Vec::new();
    for (category, terms) in lexicon.categories() {
        for term in terms {
            let words: Vec<&str> = term.split(' ').collect();
            if words.len() > tokens.len() {
                continue;
            }
            for i in 0..=tokens.len() - words.len() {
                let window = &tokens[i..i + words.len()];
                let same_words = words
                    .iter()
                    .zip(&folded[i..i + words.len()])
                    .all(|(w, f)| *w == f);
                let whitespace_gaps = window
                    .windows(2)
                    .all(|p| chars[p[0].end..p[1].start].iter().all(|c| c.is_whitespace()));
                if same_words && whitespace_gaps {
                    matches.push(VagueMatch {
                        category,
                        term: term.clone(),
                        start: window[0].start,
                        end: window[window.len() - 1].end,
                    });
                }
            }
        }
    }
    matches.sort_by(|a, b| {
        (a.start, a.category, a.end, &a.term).cmp(&(b.start, b.category, b.end, &b.term))
    });
    matches
}

pub fn vagueness_scan(doc: &PolicyDocument, lexicon: &VaguenessLexicon) -> VaguenessScan {
    let total = doc.flows().len();
    let flows: Vec<FlowVagueness> = doc
        .flows()
        .iter()
        .map(|f| FlowVagueness {
            flow_id: f.id().into(),
            matches: find_vague_terms(f.text(), lexicon),
        })
        .collect();
    let mut flagged_counts: BTreeMap<VaguenessCategory, usize> =
        VaguenessCategory::ALL.iter().map(|c| (*c, 0)).collect();
    for flow in &flows {
        for category in flow.categories() {
            *flagged_counts.entry(category).or_default() += 1;
        }
    }
    VaguenessScan {
        total_flows: total,
        flagged_percent: flagged_counts
            .iter()
            .map(|(c, n)| (*c, percent(*n, total)))
            .collect(),
        flagged_counts,
        flows,
    }
}

/// All single-document statistics together.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FlowAnalysisReport {
    pub policy_id: String,
    pub version_label: String,
    pub total_flows: usize,
    pub unique_counts: BTreeMap<ParameterKind, usize>,
    pub frequency: BTreeMap<ParameterKind, Vec<(String, usize)>>,
    pub incomplete: IncompleteFlows,
    pub bloat: BTreeMap<ParameterKind, BTreeMap<usize, usize>>,
    pub vagueness: VaguenessScan,
}

pub fn analyze(
    doc: &PolicyDocument,
    lexicon: &VaguenessLexicon,
    required: &BTreeSet<ParameterKind>,
) -> Result<FlowAnalysisReport, AnalysisError> {
    let instances = extract_instances(doc);
    Ok(FlowAnalysisReport {
        policy_id: doc.policy_id().into(),
        version_label: doc.version_label().into(),
        total_flows: doc.flows().len(),
        unique_counts: unique_counts(&instances),
        frequency: ParameterKind::ALL
            .iter()
            .map(|k| (*k, frequency_table(&instances, *k)))
            .collect(),
        incomplete: incomplete_flows(doc, required)?,
        bloat: bloat_histogram(doc),
        vagueness: vagueness_scan(doc, lexicon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::parse_inline;
    use crate::model::{FlowStatement, Span};
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    use ParameterKind::*;

    fn flow(id: &str, parts: &[(&str, Option<ParameterKind>)]) -> FlowStatement {
        let mut text = String::new();
        let mut spans = Vec::new();
        for (part, kind) in parts {
            let start = text.chars().count();
            text.push_str(part);
            if let Some(k) = kind {
                spans.push(Span::new(start, text.chars().count(), *k).unwrap());
            }
        }
        FlowStatement::new(id, text, spans, None).unwrap()
    }

    fn doc(flows: Vec<FlowStatement>) -> PolicyDocument {
        PolicyDocument::new("p", "v", flows).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("  We [Facebook]  "), "we [facebook]");
        assert_eq!(normalize("third-party   companies,"), "third-party companies");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("\"information,\"."), "information");
        assert_eq!(normalize("(such as an address book)"), "(such as an address book)");
    }

    #[test]
    fn instances_of_worked_example() {
        let d = parse_inline(crate::markup::tests_support::EXAMPLE).unwrap();
        let inst = extract_instances(&d);
        let got: Vec<(ParameterKind, &str)> =
            inst.iter().map(|i| (i.kind, i.raw_text.as_str())).collect();
        assert_eq!(got.len(), 4);
        assert_eq!(got[0], (Recipient, "We"));
        assert_eq!(got[1], (Attribute, "contact information"));
        assert_eq!(got[2], (Sender, "you"));
        assert_eq!(got[3].0, TransmissionPrinciple);
        assert!(got[3].1.starts_with("if you upload"));
        assert!(extract_instances(&doc(vec![])).is_empty());
    }

    #[test]
    fn repeated_instances_share_normalized_text() {
        let d = doc(vec![
            flow("a", &[("We use ", None), ("information", Some(Attribute))]),
            flow("b", &[("Information", Some(Attribute)), (" is kept", None)]),
        ]);
        let inst = extract_instances(&d);
        assert_eq!(inst.len(), 2);
        assert!(inst.iter().all(|i| i.normalized_text == "information"));
        assert_eq!(frequency_table(&inst, Attribute), vec![("information".to_string(), 2)]);
        assert_eq!(unique_counts(&inst)[&Attribute], 1);
    }

    #[test]
    fn frequency_order_and_ties() {
        let mut flows = Vec::new();
        for i in 0..22 {
            flows.push(flow(&format!("w{i}"), &[("We [Facebook]", Some(Recipient))]));
        }
        for i in 0..20 {
            flows.push(flow(
                &format!("t{i}"),
                &[("third party service, vendors, partners", Some(Recipient))],
            ));
        }
        flows.push(flow("x", &[("zeta", Some(Recipient)), (" ", None), ("alpha", Some(Recipient))]));
        let inst = extract_instances(&doc(flows));
        let table = frequency_table(&inst, Recipient);
        assert_eq!(table[0], ("we [facebook]".to_string(), 22));
        assert_eq!(table[1], ("third party service, vendors, partners".to_string(), 20));
        assert_eq!(table[2].0, "alpha");
        assert_eq!(table[3].0, "zeta");
        assert_eq!(table.iter().map(|r| r.1).sum::<usize>(), 44);
        assert!(frequency_table(&inst, Sender).is_empty());
    }

    #[test]
    fn incomplete_basic() {
        let complete = flow(
            "c",
            &[
                ("we", Some(Recipient)),
                (" get ", None),
                ("data", Some(Attribute)),
                (" from ", None),
                ("you", Some(Sender)),
                (" ", None),
                ("when asked", Some(TransmissionPrinciple)),
            ],
        );
        let attr_only = flow("a", &[("data", Some(Attribute))]);
        let r = incomplete_flows(&doc(vec![complete, attr_only]), &default_required()).unwrap();
        assert_eq!(r.incomplete_count, 1);
        assert_eq!(r.flows[0].flow_id, "a");
        assert_eq!(
            r.flows[0].missing,
            [Sender, Recipient, TransmissionPrinciple].into_iter().collect()
        );
        assert_eq!(r.overall_percent, 50.0);
        assert_eq!(r.missing_percent[&Sender], 50.0);
        assert!(incomplete_flows(&doc(vec![]), &BTreeSet::new()).is_err());
    }

    #[test]
    fn incomplete_ratio_19_of_42() {
        let flows = (0..42)
            .map(|i| {
                if i < 19 {
                    flow(&format!("f{i}"), &[("data", Some(Attribute))])
                } else {
                    flow(
                        &format!("f{i}"),
                        &[
                            ("we", Some(Recipient)),
                            (" ", None),
                            ("data", Some(Attribute)),
                            (" ", None),
                            ("you", Some(Sender)),
                            (" ", None),
                            ("if", Some(TransmissionPrinciple)),
                        ],
                    )
                }
            })
            .collect();
        let r = incomplete_flows(&doc(flows), &default_required()).unwrap();
        assert_eq!(r.overall_percent, 45.24);
    }

    #[test]
    fn bloat_examples() {
        let mut flows = Vec::new();
        let senders = |n: usize| {
            let mut parts = Vec::new();
            for i in 0..n {
                parts.push((["a", "b", "c", "d"][i], Some(Sender)));
                parts.push((" ", None));
            }
            parts
        };
        for i in 0..6 {
            flows.push(flow(&format!("two{i}"), &senders(2)));
        }
        flows.push(flow("three", &senders(3)));
        flows.push(flow("four", &senders(4)));
        flows.push(flow("one", &senders(1)));
        let ten: Vec<(&str, Option<ParameterKind>)> = (0..10)
            .flat_map(|_| [("r", Some(Recipient)), (",", None)])
            .collect();
        flows.push(flow("ten", &ten));
        let h = bloat_histogram(&doc(flows));
        assert_eq!(h[&Sender], [(2, 6), (3, 1), (4, 1)].into_iter().collect());
        assert_eq!(h[&Recipient], [(10, 1)].into_iter().collect());
        assert!(h[&Attribute].is_empty());

        let singles = doc(vec![flow("s", &[("x", Some(Sender)), (" ", None), ("y", Some(Attribute))])]);
        assert!(bloat_histogram(&singles).values().all(BTreeMap::is_empty));
    }

    #[test]
    fn default_lexicon_shape() {
        let lex = VaguenessLexicon::default();
        assert_eq!(lex.terms(VaguenessCategory::Conditionality).len(), 8);
        assert_eq!(lex.terms(VaguenessCategory::Generalization).len(), 12);
        assert_eq!(lex.terms(VaguenessCategory::Modality).len(), 7);
        assert_eq!(lex.terms(VaguenessCategory::NumericQuantifier).len(), 6);
        assert_eq!(lex.len(), 33);
    }

    #[test]
    fn lexicon_validation() {
        let mut terms = BTreeMap::new();
        terms.insert(VaguenessCategory::Modality, vec!["may".to_string()]);
        terms.insert(VaguenessCategory::NumericQuantifier, vec!["may".to_string()]);
        assert!(matches!(VaguenessLexicon::new(terms), Err(LexiconError::Overlap { .. })));
        let mut terms = BTreeMap::new();
        terms.insert(VaguenessCategory::Modality, vec!["May".to_string()]);
        assert!(matches!(VaguenessLexicon::new(terms), Err(LexiconError::NotCanonical(_))));
        let mut terms = BTreeMap::new();
        terms.insert(VaguenessCategory::Modality, vec!["as  needed".to_string()]);
        assert!(VaguenessLexicon::new(terms).is_err());
    }

    #[test]
    fn vagueness_examples() {
        let lex = VaguenessLexicon::default();
        let d = doc(vec![
            flow("m", &[("We may share your data.", None)]),
            flow("n", &[("We collect your name.", None)]),
            flow("c", &[("We update this From Time to\ntime.", None)]),
            flow("x", &[("Mayor of time-to-time cans.", None)]),
        ]);
        let scan = vagueness_scan(&d, &lex);
        assert_eq!(
            scan.flows[0].categories(),
            [VaguenessCategory::Modality].into_iter().collect()
        );
        assert_eq!(scan.flows[0].matches[0].term, "may");
        assert_eq!((scan.flows[0].matches[0].start, scan.flows[0].matches[0].end), (3, 6));
        assert!(scan.flows[1].matches.is_empty());
        assert_eq!(
            scan.flows[2].categories(),
            [VaguenessCategory::Conditionality].into_iter().collect()
        );
        assert!(scan.flows[3].matches.is_empty());
        assert_eq!(scan.flagged_counts[&VaguenessCategory::Modality], 1);
        assert_eq!(scan.flagged_percent[&VaguenessCategory::Modality], 25.0);
        assert_eq!(scan.flagged_percent[&VaguenessCategory::Generalization], 0.0);
    }

    /// Character-level oracle: does `term` occur in `text` at a position
    /// bounded by non-word characters, with whitespace runs between words?
    fn oracle_contains(text: &str, term: &str) -> bool {
        let lower: Vec<char> = fold(text).chars().collect();
        if lower.len() != text.chars().count() {
            return false;
        }
        let word = |c: char| c.is_alphanumeric();
        let term_words: Vec<Vec<char>> = term.split(' ').map(|w| w.chars().collect()).collect();
        'start: for s in 0..lower.len() {
            if s > 0 && (word(lower[s - 1]) || (lower[s - 1] == '\'' && s > 1 && word(lower[s - 2]))) {
                continue;
            }
            let mut i = s;
            for (wi, w) in term_words.iter().enumerate() {
                if wi > 0 {
                    let ws = i;
                    while i < lower.len() && lower[i].is_whitespace() {
                        i += 1;
                    }
                    if i == ws {
                        continue 'start;
                    }
                }
                if lower.len() < i + w.len() || lower[i..i + w.len()] != w[..] {
                    continue 'start;
                }
                i += w.len();
            }
            let next_is_word = i < lower.len()
                && (word(lower[i])
                    || (lower[i] == '\'' && i + 1 < lower.len() && word(lower[i + 1])));
            if !next_is_word {
                return true;
            }
        }
        false
    }

    proptest! {
        #[test]
        fn vagueness_matches_char_oracle(
            words in proptest::collection::vec(
                prop_oneof![
                    Just("may"), Just("May"), Just("mayor"), Just("from"), Just("time"),
                    Just("to"), Just("as"), Just("needed"), Just("some"), Just("awesome"),
                    Just("often"), Just("can't"), Just("data"), Just("few"),
                ],
                0..12,
            ),
            seps in proptest::collection::vec(prop_oneof![Just(" "), Just("  "), Just(", "), Just("-"), Just("\n")], 12),
        ) {
            let mut text = String::new();
            for (i, w) in words.iter().enumerate() {
                if i > 0 { text.push_str(seps[i]); }
                text.push_str(w);
            }
            let lex = VaguenessLexicon::default();
            let found = find_vague_terms(&text, &lex);
            for (category, terms) in lex.categories() {
                let oracle = terms.iter().any(|t| oracle_contains(&text, t));
                let flagged = found.iter().any(|m| m.category == category);
                prop_assert_eq!(oracle, flagged, "category {} in {:?}", category, text);
            }
            for m in &found {
                prop_assert!(lex.terms(m.category).contains(&m.term));
                prop_assert!(oracle_contains(&text, &m.term));
            }
        }

        #[test]
        fn incomplete_is_monotone_in_required(
            masks in proptest::collection::vec(0u8..16, 1..20),
            base in 1u8..16,
            extra in 0u8..16,
        ) {
            let flows = masks.iter().enumerate().map(|(i, m)| {
                let mut parts = Vec::new();
                for (bit, kind) in ParameterKind::CROWD.iter().enumerate() {
                    if m & (1 << bit) != 0 {
                        parts.push(("x", Some(*kind)));
                        parts.push((" ", None));
                    }
                }
                flow(&format!("f{i}"), &parts)
            }).collect();
            let d = doc(flows);
            let set = |m: u8| -> BTreeSet<ParameterKind> {
                ParameterKind::CROWD.iter().enumerate().filter(|(b, _)| m & (1 << b) != 0).map(|(_, k)| *k).collect()
            };
            let small = incomplete_flows(&d, &set(base)).unwrap();
            let large = incomplete_flows(&d, &set(base | extra)).unwrap();
            prop_assert!(large.overall_percent >= small.overall_percent);
            prop_assert!(large.incomplete_count >= small.incomplete_count);
        }

        #[test]
        fn bloat_partitions_flows(counts in proptest::collection::vec(proptest::collection::vec(0usize..5, 5), 0..15)) {
            let flows: Vec<FlowStatement> = counts.iter().enumerate().map(|(i, per_kind)| {
                let mut parts = Vec::new();
                for (k, n) in per_kind.iter().enumerate() {
                    for _ in 0..*n {
                        parts.push(("w", Some(ParameterKind::ALL[k])));
                        parts.push((" ", None));
                    }
                }
                flow(&format!("f{i}"), &parts)
            }).collect();
            let d = doc(flows);
            let hist = bloat_histogram(&d);
            for kind in ParameterKind::ALL {
                let in_hist: usize = hist[&kind].values().sum();
                let at_most_one = d.flows().iter().filter(|f| f.count_of(kind) <= 1).count();
                prop_assert_eq!(in_hist + at_most_one, d.flows().len());
            }
            let inst = extract_instances(&d);
            for kind in ParameterKind::ALL {
                let total: usize = frequency_table(&inst, kind).iter().map(|r| r.1).sum();
                prop_assert_eq!(total, inst.iter().filter(|i| i.kind == kind).count());
            }
        }
    }
}
