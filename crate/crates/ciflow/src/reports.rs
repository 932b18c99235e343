//! Reports for single documents and version pairs.

use std::collections::{BTreeMap, BTreeSet};

use ciflow_core::analysis::{
    bloat_histogram, extract_instances, frequency_table, incomplete_flows, unique_counts,
    vagueness_scan, AnalysisError, VaguenessCategory, VaguenessLexicon,
};
use ciflow_core::diff::{compare_policies, MatchConfig, VersionDiffReport};
use ciflow_core::{ParameterKind, PolicyDocument};
use serde::Serialize;

use crate::report::{Report, Table};

fn kinds_label(kinds: &BTreeSet<ParameterKind>) -> String {
    kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct Stats {
    policy_id: String,
    version_label: String,
    total_flows: usize,
    unique_counts: BTreeMap<ParameterKind, usize>,
    frequency: BTreeMap<ParameterKind, Vec<(String, usize)>>,
}

/// Parameter frequency tables and unique counts.
pub fn stats(doc: &PolicyDocument) -> Report {
    let instances = extract_instances(doc);
    let value = Stats {
        policy_id: doc.policy_id().into(),
        version_label: doc.version_label().into(),
        total_flows: doc.flows().len(),
        unique_counts: unique_counts(&instances),
        frequency: ParameterKind::ALL
            .iter()
            .map(|k| (*k, frequency_table(&instances, *k)))
            .collect(),
    };
    let mut unique = Table::new("unique_counts", "Unique parameters", &["kind", "unique"]);
    for (k, n) in &value.unique_counts {
        unique.push(vec![k.as_str().into(), n.to_string()]);
    }
    let mut freq = Table::new("frequency", "Parameter frequency", &["kind", "text", "count"]);
    for (k, rows) in &value.frequency {
        for (text, n) in rows {
            freq.push(vec![k.as_str().into(), text.clone(), n.to_string()]);
        }
    }
    Report::new("stats", &value, vec![unique, freq])
}

pub fn incomplete(doc: &PolicyDocument, required: &BTreeSet<ParameterKind>) -> Result<Report, AnalysisError> {
    let value = incomplete_flows(doc, required)?;
    let mut summary = Table::new("incomplete_summary", "Incomplete flows", &["kind", "flows", "total_flows", "percent"]);
    summary.push(vec![
        "any".into(),
        value.incomplete_count.to_string(),
        value.total_flows.to_string(),
        format!("{:.2}", value.overall_percent),
    ]);
    for (k, n) in &value.missing_counts {
        summary.push(vec![
            k.as_str().into(),
            n.to_string(),
            value.total_flows.to_string(),
            format!("{:.2}", value.missing_percent[k]),
        ]);
    }
    let mut flows = Table::new("incomplete_flows", "Flows missing parameters", &["flow_id", "missing"]);
    for f in &value.flows {
        flows.push(vec![f.flow_id.clone(), kinds_label(&f.missing)]);
    }
    Ok(Report::new("incomplete", &value, vec![summary, flows]))
}

pub fn bloat(doc: &PolicyDocument) -> Report {
    let value = bloat_histogram(doc);
    let mut t = Table::new("bloat", "Flows with several instances of a kind", &["kind", "instances", "flows"]);
    for (k, hist) in &value {
        for (n, flows) in hist {
            t.push(vec![k.as_str().into(), n.to_string(), flows.to_string()]);
        }
    }
    Report::new("bloat", &value, vec![t])
}

pub fn vagueness(doc: &PolicyDocument, lexicon: &VaguenessLexicon) -> Report {
    let value = vagueness_scan(doc, lexicon);
    let mut summary = Table::new("vagueness_summary", "Flows with vague terms", &["category", "flows", "total_flows", "percent"]);
    for c in VaguenessCategory::ALL {
        summary.push(vec![
            c.as_str().into(),
            value.flagged_counts[&c].to_string(),
            value.total_flows.to_string(),
            format!("{:.2}", value.flagged_percent[&c]),
        ]);
    }
    let mut matches = Table::new("vagueness_matches", "Matched terms", &["flow_id", "category", "term", "start", "end"]);
    for f in &value.flows {
        for m in &f.matches {
            matches.push(vec![
                f.flow_id.clone(),
                m.category.as_str().into(),
                m.term.clone(),
                m.start.to_string(),
                m.end.to_string(),
            ]);
        }
    }
    Report::new("vagueness", &value, vec![summary, matches])
}

/// The diff as JSON, as two CSV tables, and as Markdown with matched,
/// added, removed and review sections per kind.
pub fn diff(previous: &PolicyDocument, updated: &PolicyDocument, config: &MatchConfig) -> Report {
    let value: VersionDiffReport = compare_policies(previous, updated, config);
    let mut summary = Table::new(
        "diff_summary",
        "Summary",
        &["kind", "threshold", "unique_previous", "unique_updated", "matched", "added", "removed", "review"],
    );
    let mut pairs = Table::new("diff_pairs", "Pairs", &["kind", "section", "previous", "updated", "similarity"]);
    let mut md = vec![];
    for (&kind, d) in &value.kinds {
        let uc = &value.unique_counts[&kind];
        summary.push(vec![
            kind.as_str().into(),
            d.threshold.to_string(),
            uc.previous.to_string(),
            uc.updated.to_string(),
            d.matched.len().to_string(),
            d.added.len().to_string(),
            d.removed.len().to_string(),
            d.review.len().to_string(),
        ]);
        let k = kind.as_str();
        let mut matched = Table::new("", &format!("{k}: matched"), &["previous", "updated", "similarity"]);
        let mut review = Table::new("", &format!("{k}: review"), &["previous", "updated", "similarity"]);
        let mut added = Table::new("", &format!("{k}: added"), &["updated"]);
        let mut removed = Table::new("", &format!("{k}: removed"), &["previous"]);
        for p in &d.matched {
            pairs.push(vec![k.into(), "matched".into(), p.previous.clone(), p.updated.clone(), p.similarity.to_string()]);
            matched.push(vec![p.previous.clone(), p.updated.clone(), p.similarity.to_string()]);
        }
        for p in &d.review {
            pairs.push(vec![k.into(), "review".into(), p.previous.clone(), p.updated.clone(), p.similarity.to_string()]);
            review.push(vec![p.previous.clone(), p.updated.clone(), p.similarity.to_string()]);
        }
        for t in &d.added {
            pairs.push(vec![k.into(), "added".into(), String::new(), t.clone(), String::new()]);
            added.push(vec![t.clone()]);
        }
        for t in &d.removed {
            pairs.push(vec![k.into(), "removed".into(), t.clone(), String::new(), String::new()]);
            removed.push(vec![t.clone()]);
        }
        md.extend([matched, added, removed, review]);
    }
    let mut report = Report::new("diff", &value, vec![summary.clone(), pairs]);
    md.insert(0, summary);
    report.markdown_tables = Some(md);
    report
}
