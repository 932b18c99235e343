use std::collections::BTreeMap;

use ciflow::lexicon::default_lexicon;
use ciflow_core::analysis::{vagueness_scan, VaguenessCategory};
use ciflow_core::{FlowStatement, PolicyDocument};

fn reference() -> BTreeMap<VaguenessCategory, Vec<String>> {
    let text = include_str!("data/vague_terms.csv");
    let mut out: BTreeMap<VaguenessCategory, Vec<String>> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let (category, term) = line.split_once(',').unwrap();
        let category = *VaguenessCategory::ALL.iter().find(|c| c.as_str() == category).unwrap();
        out.entry(category).or_default().push(term.to_string());
    }
    out
}

fn doc(texts: &[&str]) -> PolicyDocument {
    let flows = texts
        .iter()
        .enumerate()
        .map(|(i, t)| FlowStatement::new(format!("f{i}"), *t, vec![], None).unwrap())
        .collect();
    PolicyDocument::new("p", "v", flows).unwrap()
}

#[test]
fn shipped_lexicon_matches_reference_list() {
    let lexicon = default_lexicon();
    let expected = reference();
    assert_eq!(expected.values().map(Vec::len).sum::<usize>(), 33);
    assert_eq!(lexicon.len(), 33);
    for category in VaguenessCategory::ALL {
        let mut got = lexicon.terms(category).to_vec();
        let mut want = expected[&category].clone();
        got.sort();
        want.sort();
        assert_eq!(got, want, "{}", category.as_str());
    }
}

#[test]
fn every_term_is_found_in_its_category() {
    let lexicon = default_lexicon();
    for (category, terms) in reference() {
        for term in terms {
            let sentence = format!("Data is shared {term} with partners.");
            let scan = vagueness_scan(&doc(&[&sentence]), &lexicon);
            assert_eq!(scan.flagged_counts[&category], 1, "{term}");
            assert!(scan.flows[0].matches.iter().any(|m| m.term == term && m.category == category));
        }
    }
}

#[test]
fn document_with_every_term_flags_all_categories() {
    let all: Vec<String> = reference().into_values().flatten().collect();
    let text = all.join(", ");
    let scan = vagueness_scan(&doc(&[&text]), &default_lexicon());
    for category in VaguenessCategory::ALL {
        assert_eq!(scan.flagged_counts[&category], 1, "{}", category.as_str());
    }
    assert_eq!(scan.flows[0].matches.len(), 33);
}

#[test]
fn term_free_document_has_no_flags() {
    let scan = vagueness_scan(
        &doc(&["We collect your email address.", "Advertisers send us purchase records."]),
        &default_lexicon(),
    );
    assert!(scan.flagged_counts.values().all(|n| *n == 0));
    assert!(scan.flows.iter().all(|f| f.matches.is_empty()));
}
