//! Cross-version comparison of annotated policies.
//!
//! Parameters of each kind are deduplicated on their normalized text and
//! matched one-to-one across versions by fuzzy similarity. The similarity is
//! the indel ratio `round(100 * (1 - D / (|a| + |b|)))`, where `D` is the
//! edit distance with unit-cost insertions and deletions and no
//! substitutions (a substitution costs a deletion plus an insertion). Since
//! `D = |a| + |b| - 2 * LCS(a, b)`, the ratio is computed from the longest
//! common subsequence, which is found with a bit-parallel scan.
//!
//! Matching is greedy best-first: all cross pairs at or above the kind's
//! threshold are ranked by (similarity desc, text A asc, text B asc) and
//! taken while both sides are still free. Pairs that clear the threshold by
//! less than the review band are also listed for manual review.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{extract_instances, ParameterInstance};
use crate::model::{ParameterKind, PolicyDocument};

/// Length of the longest common subsequence of `a` and `b`, in chars.
pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let words = a.len().div_ceil(64);
    let mut masks: BTreeMap<char, Vec<u64>> = BTreeMap::new();
    for (i, c) in a.iter().enumerate() {
        masks.entry(*c).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }
    // Zero bits of `v` mark positions of `a` used by the current LCS.
    let mut v = vec![u64::MAX; words];
    for c in b {
        let Some(m) = masks.get(c) else { continue };
        let mut carry = false;
        for w in 0..words {
            let u = v[w] & m[w];
            let (sum, c1) = v[w].overflowing_add(u);
            let (sum, c2) = sum.overflowing_add(carry as u64);
            carry = c1 || c2;
            v[w] = sum | (v[w] & !m[w]);
        }
    }
    let full = a.len() / 64;
    let mut zeros: usize = v[..full].iter().map(|w| w.count_zeros() as usize).sum();
    let rem = a.len() % 64;
    if rem > 0 {
        let tail = v[full] | (u64::MAX << rem);
        zeros += tail.count_zeros() as usize;
    }
    zeros
}

/// Indel-ratio similarity in `0..=100`. Two empty strings score 100.
pub fn similarity(a: &str, b: &str) -> u8 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = (a.len() + b.len()) as u64;
    if total == 0 {
        return 100;
    }
    let lcs = lcs_len(&a, &b) as u64;
    // round(200 * lcs / total), halves rounded up
    ((400 * lcs + total) / (2 * total)) as u8
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchConfigError {
    #[error("threshold {value} for {kind} is above 100")]
    ThresholdOutOfRange { kind: ParameterKind, value: u8 },
    #[error("review band {0} is above 100")]
    BandOutOfRange(u8),
}

/// Per-kind similarity thresholds (percent) and the review band width.
/// Only kinds with a threshold are compared.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatchConfig {
    thresholds: BTreeMap<ParameterKind, u8>,
    review_band: u8,
}

impl MatchConfig {
    pub fn new(
        thresholds: BTreeMap<ParameterKind, u8>,
        review_band: u8,
    ) -> Result<Self, MatchConfigError> {
        if let Some((kind, value)) = thresholds.iter().find(|(_, v)| **v > 100) {
            return Err(MatchConfigError::ThresholdOutOfRange {
                kind: *kind,
                value: *value,
            });
        }
        if review_band > 100 {
            return Err(MatchConfigError::BandOutOfRange(review_band));
        }
        Ok(MatchConfig {
            thresholds,
            review_band,
        })
    }

    pub fn threshold(&self, kind: ParameterKind) -> Option<u8> {
        self.thresholds.get(&kind).copied()
    }

    pub fn thresholds(&self) -> &BTreeMap<ParameterKind, u8> {
        &self.thresholds
    }

    pub fn review_band(&self) -> u8 {
        self.review_band
    }

    pub fn with_threshold(mut self, kind: ParameterKind, value: u8) -> Result<Self, MatchConfigError> {
        if value > 100 {
            return Err(MatchConfigError::ThresholdOutOfRange { kind, value });
        }
        self.thresholds.insert(kind, value);
        Ok(self)
    }

    pub fn with_review_band(mut self, band: u8) -> Result<Self, MatchConfigError> {
        if band > 100 {
            return Err(MatchConfigError::BandOutOfRange(band));
        }
        self.review_band = band;
        Ok(self)
    }
}

impl Default for MatchConfig {
    fn default() -> Self {
        let thresholds = [
            (ParameterKind::Sender, 70),
            (ParameterKind::Recipient, 70),
            (ParameterKind::Attribute, 65),
            (ParameterKind::TransmissionPrinciple, 55),
        ]
        .into_iter()
        .collect();
        MatchConfig {
            thresholds,
            review_band: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatchedPair {
    pub previous: String,
    pub updated: String,
    pub similarity: u8,
}

/// Matching result for one kind.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KindDiff {
    pub threshold: u8,
    /// In assignment order.
    pub matched: Vec<MatchedPair>,
    /// Only in the updated version, sorted.
    pub added: Vec<String>,
    /// Only in the previous version, sorted.
    pub removed: Vec<String>,
    /// Matched pairs with similarity below `threshold + review_band`.
    pub review: Vec<MatchedPair>,
}

fn distinct_texts(instances: &[ParameterInstance], kind: ParameterKind) -> Vec<String> {
    instances
        .iter()
        .filter(|i| i.kind == kind)
        .map(|i| i.normalized_text.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Greedy one-to-one matching of two deduplicated, sorted text lists.
pub fn match_texts(previous: &[String], updated: &[String], threshold: u8, review_band: u8) -> KindDiff {
    let mut candidates: Vec<(u8, usize, usize)> = Vec::new();
    for (i, a) in previous.iter().enumerate() {
        for (j, b) in updated.iter().enumerate() {
            let sim = similarity(a, b);
            if sim >= threshold {
                candidates.push((sim, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| {
        y.0.cmp(&x.0)
            .then_with(|| previous[x.1].cmp(&previous[y.1]))
            .then_with(|| updated[x.2].cmp(&updated[y.2]))
    });
    let mut used_prev = vec![false; previous.len()];
    let mut used_upd = vec![false; updated.len()];
    let mut matched = Vec::new();
    for (sim, i, j) in candidates {
        if used_prev[i] || used_upd[j] {
            continue;
        }
        used_prev[i] = true;
        used_upd[j] = true;
        matched.push(MatchedPair {
            previous: previous[i].clone(),
            updated: updated[j].clone(),
            similarity: sim,
        });
    }
    let review_limit = threshold as u16 + review_band as u16;
    let review = matched
        .iter()
        .filter(|p| (p.similarity as u16) < review_limit)
        .cloned()
        .collect();
    let leftovers = |texts: &[String], used: &[bool]| -> Vec<String> {
        texts
            .iter()
            .zip(used)
            .filter(|(_, u)| !**u)
            .map(|(t, _)| t.clone())
            .collect()
    };
    KindDiff {
        threshold,
        removed: leftovers(previous, &used_prev),
        added: leftovers(updated, &used_upd),
        matched,
        review,
    }
}

/// Matches the `kind` instances of two versions. Returns `None` when the
/// config has no threshold for `kind`.
pub fn match_parameters(
    previous: &[ParameterInstance],
    updated: &[ParameterInstance],
    kind: ParameterKind,
    config: &MatchConfig,
) -> Option<KindDiff> {
    let threshold = config.threshold(kind)?;
    Some(match_texts(
        &distinct_texts(previous, kind),
        &distinct_texts(updated, kind),
        threshold,
        config.review_band,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UniqueCounts {
    pub previous: usize,
    pub updated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VersionDiffReport {
    pub policy_id: String,
    pub previous_version: String,
    pub updated_version: String,
    pub review_band: u8,
    pub kinds: BTreeMap<ParameterKind, KindDiff>,
    pub unique_counts: BTreeMap<ParameterKind, UniqueCounts>,
}

pub fn compare_policies(
    previous: &PolicyDocument,
    updated: &PolicyDocument,
    config: &MatchConfig,
) -> VersionDiffReport {
    let prev = extract_instances(previous);
    let upd = extract_instances(updated);
    let mut kinds = BTreeMap::new();
    let mut unique_counts = BTreeMap::new();
    for (&kind, &threshold) in &config.thresholds {
        let a = distinct_texts(&prev, kind);
        let b = distinct_texts(&upd, kind);
        unique_counts.insert(
            kind,
            UniqueCounts {
                previous: a.len(),
                updated: b.len(),
            },
        );
        kinds.insert(kind, match_texts(&a, &b, threshold, config.review_band));
    }
    VersionDiffReport {
        policy_id: previous.policy_id().into(),
        previous_version: previous.version_label().into(),
        updated_version: updated.version_label().into(),
        review_band: config.review_band,
        kinds,
        unique_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    /// Weighted edit distance: insert/delete 1, substitute 2.
    fn indel_oracle(a: &str, b: &str) -> u8 {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = if a[i - 1] == b[j - 1] { 0 } else { 2 };
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + sub);
            }
        }
        let total = a.len() + b.len();
        if total == 0 {
            return 100;
        }
        let dist = d[a.len()][b.len()];
        libm::round(100.0 * (total - dist) as f64 / total as f64) as u8
    }

    #[test]
    fn identity_and_disjoint() {
        assert_eq!(similarity("we", "we"), 100);
        assert_eq!(similarity("abc", "xyz"), 0);
        assert_eq!(similarity("", ""), 100);
        assert_eq!(similarity("", "abc"), 0);
    }

    #[test]
    fn table_two_recipients() {
        let a = "research partners";
        let b = "research partners who we collaborate with";
        let sim = similarity(a, b);
        assert_eq!(sim, indel_oracle(a, b));
        assert_eq!(sim, 59);
        assert!(sim >= 55);
    }

    #[test]
    fn long_strings_cross_word_boundaries() {
        let a: String = (0..150).map(|i| ['a', 'b', 'c', 'd'][i * 7 % 4]).collect();
        let b: String = (0..133).map(|i| ['a', 'b', 'c', 'd'][i * 5 % 3]).collect();
        assert_eq!(similarity(&a, &b), indel_oracle(&a, &b));
        assert_eq!(similarity(&b, &a), indel_oracle(&a, &b));
    }

    fn texts(items: &[&str]) -> Vec<String> {
        let mut v: Vec<String> = items.iter().map(|s| s.to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn low_threshold_pair_follows_oracle() {
        let a = texts(&["partners conducting academic research"]);
        let b = texts(&["research partners"]);
        let sim = indel_oracle(&a[0], &b[0]);
        let diff = match_texts(&a, &b, 55, 5);
        if sim >= 55 {
            assert_eq!(diff.matched.len(), 1);
            assert_eq!(diff.matched[0].similarity, sim);
        } else {
            assert!(diff.matched.is_empty());
            assert_eq!(diff.removed, a);
            assert_eq!(diff.added, b);
        }
    }

    #[test]
    fn identical_sets_match_fully() {
        let a = texts(&["we [facebook]", "you", "advertisers"]);
        let diff = match_texts(&a, &a, 70, 5);
        assert_eq!(diff.matched.len(), 3);
        assert!(diff.matched.iter().all(|p| p.similarity == 100 && p.previous == p.updated));
        assert!(diff.added.is_empty() && diff.removed.is_empty() && diff.review.is_empty());
    }

    #[test]
    fn empty_previous_means_all_added() {
        let b = texts(&["content creator", "seller"]);
        let diff = match_texts(&[], &b, 70, 5);
        assert_eq!(diff.added, b);
        assert!(diff.matched.is_empty() && diff.removed.is_empty());
    }

    #[test]
    fn review_band_and_greedy_order() {
        // "abcdef" vs "abcdxy": lcs 4 -> 67; vs "abcdez": lcs 5 -> 83
        let a = texts(&["abcdef"]);
        let b = texts(&["abcdez", "abcdxy"]);
        let diff = match_texts(&a, &b, 65, 5);
        assert_eq!(diff.matched[0].updated, "abcdez");
        assert_eq!(diff.added, ["abcdxy"]);
        assert!(diff.review.is_empty());
        let diff = match_texts(&a, &texts(&["abcdxy"]), 65, 5);
        assert_eq!(diff.review.len(), 1);
    }

    #[test]
    fn default_thresholds() {
        let c = MatchConfig::default();
        assert_eq!(c.threshold(ParameterKind::Sender), Some(70));
        assert_eq!(c.threshold(ParameterKind::Attribute), Some(65));
        assert_eq!(c.threshold(ParameterKind::Recipient), Some(70));
        assert_eq!(c.threshold(ParameterKind::TransmissionPrinciple), Some(55));
        assert_eq!(c.threshold(ParameterKind::Subject), None);
        assert_eq!(c.review_band(), 5);
        assert!(c.with_threshold(ParameterKind::Sender, 101).is_err());
    }

    proptest! {
        #[test]
        fn matches_oracle_on_unicode(a in "[a-cé ]{0,20}", b in "[a-cé ]{0,90}") {
            prop_assert_eq!(similarity(&a, &b), indel_oracle(&a, &b));
        }

        #[test]
        fn symmetric_bounded_and_exact(a in "[a-d]{0,12}", b in "[a-d]{0,12}") {
            let s = similarity(&a, &b);
            prop_assert_eq!(s, similarity(&b, &a));
            prop_assert!(s <= 100);
            prop_assert_eq!(s == 100, a == b);
        }

        #[test]
        fn partition_and_permutation_invariance(
            a in proptest::collection::btree_set("[a-c]{1,5}", 0..8),
            b in proptest::collection::btree_set("[a-c]{1,5}", 0..8),
            threshold in 0u8..=100,
        ) {
            let a: Vec<String> = a.into_iter().collect();
            let b: Vec<String> = b.into_iter().collect();
            let diff = match_texts(&a, &b, threshold, 5);
            prop_assert_eq!(diff.matched.len() * 2 + diff.added.len() + diff.removed.len(), a.len() + b.len());

            let inst = |texts: &[String], rev: bool| -> Vec<ParameterInstance> {
                let mut v: Vec<ParameterInstance> = texts.iter().map(|t| ParameterInstance {
                    kind: ParameterKind::Sender,
                    raw_text: t.clone(),
                    normalized_text: t.clone(),
                    flow_id: "f".into(),
                }).collect();
                if rev { v.reverse(); }
                v
            };
            let config = MatchConfig::default().with_threshold(ParameterKind::Sender, threshold).unwrap();
            let forward = match_parameters(&inst(&a, false), &inst(&b, false), ParameterKind::Sender, &config);
            let reversed = match_parameters(&inst(&a, true), &inst(&b, true), ParameterKind::Sender, &config);
            prop_assert_eq!(forward.clone(), reversed);
            prop_assert_eq!(forward.unwrap(), diff);
        }
    }
}
