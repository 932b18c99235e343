//! Excerpt difficulty statistics and their rank correlation with
//! annotation quality.
//!
//! Syllables are counted with a fixed heuristic: vowel groups (`aeiouy`) in
//! the lowercased word, minus one for a final silent `e` (but not `le`),
//! with a minimum of one. Sentences are runs of `.`, `!` or `?`, at least
//! one per text. Every token counts as a word, stopwords included.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::crowd::Excerpt;
use crate::model::{AnnotationSet, ParameterKind};
use crate::text::{fold, kind_at, tokenize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReadabilityError {
    #[error("text has no words")]
    EmptyText,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least 3 observations are needed, got {0}")]
    TooFew(usize),
    #[error("non-finite value in series")]
    NonFinite,
    #[error("excerpt `{0}` has no F1 score")]
    MissingScore(alloc::string::String),
}

pub fn syllables(word: &str) -> usize {
    let lower = fold(word);
    let mut groups = 0usize;
    let mut in_vowel = false;
    for c in lower.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_vowel {
            groups += 1;
        }
        in_vowel = vowel;
    }
    if lower.ends_with('e') && !lower.ends_with("le") {
        groups = groups.saturating_sub(1);
    }
    groups.max(1)
}

pub fn sentence_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_run = false;
    for c in text.chars() {
        let terminal = matches!(c, '.' | '!' | '?');
        if terminal && !in_run {
            count += 1;
        }
        in_run = terminal;
    }
    count.max(1)
}

struct Counts {
    words: f64,
    sentences: f64,
    syllables: f64,
    complex: f64,
}

fn counts(text: &str) -> Result<Counts, ReadabilityError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(ReadabilityError::EmptyText);
    }
    let per_word: Vec<usize> = tokens.iter().map(|t| syllables(&t.text)).collect();
    Ok(Counts {
        words: tokens.len() as f64,
        sentences: sentence_count(text) as f64,
        syllables: per_word.iter().sum::<usize>() as f64,
        complex: per_word.iter().filter(|s| **s >= 3).count() as f64,
    })
}

/// Flesch reading ease.
pub fn reading_ease(text: &str) -> Result<f64, ReadabilityError> {
    let c = counts(text)?;
    Ok(206.835 - 1.015 * (c.words / c.sentences) - 84.6 * (c.syllables / c.words))
}

/// Gunning FOG index.
pub fn fog(text: &str) -> Result<f64, ReadabilityError> {
    let c = counts(text)?;
    Ok(0.4 * (c.words / c.sentences + 100.0 * (c.complex / c.words)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExcerptStats {
    pub excerpt_id: alloc::string::String,
    pub total_words: usize,
    /// Non-stopword words carrying each label in the gold annotation.
    pub labeled_words_per_kind: BTreeMap<ParameterKind, usize>,
    pub flesch_kincaid_reading_ease: f64,
    pub fog_index: f64,
}

impl ExcerptStats {
    pub fn labeled_words(&self) -> usize {
        self.labeled_words_per_kind.values().sum()
    }
}

/// Statistics of `excerpt`; labeled counts come from `gold` when given.
pub fn excerpt_stats(
    excerpt: &Excerpt,
    gold: Option<&AnnotationSet>,
) -> Result<ExcerptStats, ReadabilityError> {
    let text = excerpt.text();
    let mut labeled = BTreeMap::new();
    if let Some(gold) = gold.or(excerpt.gold()) {
        for token in excerpt.tokens() {
            if let Some(kind) = kind_at(gold.spans(), token.start) {
                *labeled.entry(kind).or_insert(0) += 1;
            }
        }
    }
    Ok(ExcerptStats {
        excerpt_id: excerpt.excerpt_id().into(),
        total_words: tokenize(text).len(),
        labeled_words_per_kind: labeled,
        flesch_kincaid_reading_ease: reading_ease(text)?,
        fog_index: fog(text)?,
    })
}

/// Ranks starting at 1; tied values share their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
}

/// Spearman rank correlation with a two-sided p-value from the Student t
/// approximation. A constant series gives rho 0 and p 1.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Correlation, ReadabilityError> {
    if xs.len() != ys.len() {
        return Err(ReadabilityError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(ReadabilityError::TooFew(n));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(ReadabilityError::NonFinite);
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation {
            rho: 0.0,
            p_value: 1.0,
        });
    }
    let rho = (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0);
    Ok(Correlation {
        rho,
        p_value: t_test_p(rho, n),
    })
}

fn t_test_p(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0;
    }
    let t2 = rho * rho * df / denom;
    regularized_beta(df / 2.0, 0.5, df / (df + t2)).clamp(0.0, 1.0)
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_fraction(b, a, 1.0 - x) / b
    }
}

// Lentz's method for the continued fraction of I_x(a, b).
fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let guard = |v: f64| if libm::fabs(v) < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - (a + b) * x / (a + 1.0));
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 / guard(1.0 + num * d);
        c = guard(1.0 + num / c);
        h *= d * c;
        let num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 / guard(1.0 + num * d);
        c = guard(1.0 + num / c);
        let step = d * c;
        h *= step;
        if libm::fabs(step - 1.0) < EPS {
            break;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Statistic {
    TotalWords,
    LabeledWords,
    ReadingEase,
    FogIndex,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::TotalWords,
        Statistic::LabeledWords,
        Statistic::ReadingEase,
        Statistic::FogIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::TotalWords => "total_words",
            Statistic::LabeledWords => "labeled_words",
            Statistic::ReadingEase => "reading_ease",
            Statistic::FogIndex => "fog_index",
        }
    }

    pub fn of(self, stats: &ExcerptStats) -> f64 {
        match self {
            Statistic::TotalWords => stats.total_words as f64,
            Statistic::LabeledWords => stats.labeled_words() as f64,
            Statistic::ReadingEase => stats.flesch_kincaid_reading_ease,
            Statistic::FogIndex => stats.fog_index,
        }
    }
}

/// Row order of the correlation table within each statistic.
pub const CORRELATION_KINDS: [ParameterKind; 4] = [
    ParameterKind::Attribute,
    ParameterKind::Sender,
    ParameterKind::Recipient,
    ParameterKind::TransmissionPrinciple,
];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CorrelationRow {
    pub statistic: Statistic,
    pub kind: ParameterKind,
    pub rho: f64,
    pub p_value: f64,
}

/// Spearman correlation of each statistic with each kind's F1, one entry
/// of `f1` per entry of `stats`.
pub fn correlate_difficulty(
    stats: &[ExcerptStats],
    f1: &[BTreeMap<ParameterKind, f64>],
) -> Result<Vec<CorrelationRow>, ReadabilityError> {
    if stats.len() != f1.len() {
        return Err(ReadabilityError::LengthMismatch(stats.len(), f1.len()));
    }
    let mut rows = Vec::new();
    for statistic in Statistic::ALL {
        let xs: Vec<f64> = stats.iter().map(|s| statistic.of(s)).collect();
        for kind in CORRELATION_KINDS {
            let ys = f1
                .iter()
                .zip(stats)
                .map(|(scores, s)| {
                    scores
                        .get(&kind)
                        .copied()
                        .ok_or_else(|| ReadabilityError::MissingScore(s.excerpt_id.clone()))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let c = spearman(&xs, &ys)?;
            rows.push(CorrelationRow {
                statistic,
                kind,
                rho: c.rho,
                p_value: c.p_value,
            });
        }
    }
    Ok(rows)
}
