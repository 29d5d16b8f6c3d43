//! Embedding success metrics and the similarity diagnostic.

use serde::{Deserialize, Serialize};

use super::bootstrap::bootstrap_ci;
use super::SimError;
use crate::detect::normalize;

/// High-probability and overall success rates over per-item generations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessMetrics {
    /// Items whose watermarked fraction met the threshold.
    pub hpsr_numerator: u64,
    /// Total items.
    pub hpsr_denominator: u64,
    /// Watermarked generations over all generations.
    pub osr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Computes HPSR and OSR from per-item `(watermarked_count, total_count)`
/// pairs. An item counts toward HPSR when its watermarked fraction is at
/// least `threshold_num / threshold_den`. The confidence interval is a
/// percentile bootstrap over the pooled generations.
pub fn compute_hpsr_osr(
    per_item_generations: &[(u64, u64)],
    threshold_num: u64,
    threshold_den: u64,
    ci_replicates: u64,
    ci_level: f64,
    seed: u64,
) -> Result<SuccessMetrics, SimError> {
    let mut hits = 0u64;
    let mut watermarked = 0u64;
    let mut total = 0u64;
    for &(w, t) in per_item_generations {
        if t == 0 || w > t {
            return Err(SimError::EmptyItem);
        }
        // w/t >= num/den without floating point.
        if w * threshold_den >= threshold_num * t {
            hits += 1;
        }
        watermarked += w;
        total += t;
    }
    if total == 0 {
        return Err(SimError::EmptyItem);
    }
    let (ci_low, ci_high) = bootstrap_ci(watermarked, total, ci_replicates, ci_level, seed)?;
    Ok(SuccessMetrics {
        hpsr_numerator: hits,
        hpsr_denominator: per_item_generations.len() as u64,
        osr: watermarked as f64 / total as f64,
        ci_low,
        ci_high,
    })
}

/// Token-level similarity diagnostic for paraphrase/translation round trips.
///
/// Both texts are normalized and split into word tokens; the score is the
/// longest common subsequence of tokens divided by the larger token count.
/// Tokens are considered equivalent when the character-level LCS of the pair
/// covers at least half of the longer token, so inflection-scale edits
/// ("the"/"this") still align while unrelated words do not.
pub fn similarity_match(a: &str, b: &str) -> f64 {
    let ta: Vec<&str> = tokenize(a);
    let tb: Vec<&str> = tokenize(b);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&ta, &tb, |x, y| tokens_equivalent(x, y));
    lcs as f64 / ta.len().max(tb.len()) as f64
}

fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

fn tokens_equivalent(a: &str, b: &str) -> bool {
    let na = normalize(a);
    let nb = normalize(b);
    let na = na.trim_matches(|c: char| !c.is_alphanumeric());
    let nb = nb.trim_matches(|c: char| !c.is_alphanumeric());
    if na.is_empty() || nb.is_empty() {
        return na == nb;
    }
    if na == nb {
        return true;
    }
    let ca: Vec<char> = na.chars().collect();
    let cb: Vec<char> = nb.chars().collect();
    let lcs = lcs_len(&ca, &cb, |x, y| x == y);
    2 * lcs >= ca.len().max(cb.len()).max(2)
}

fn lcs_len<T>(a: &[T], b: &[T], eq: impl Fn(&T, &T) -> bool) -> usize {
    let mut dp = vec![0usize; b.len() + 1];
    for x in a {
        let mut prev_diag = 0;
        for (j, y) in b.iter().enumerate() {
            let tmp = dp[j + 1];
            dp[j + 1] = if eq(x, y) {
                prev_diag + 1
            } else {
                dp[j + 1].max(dp[j])
            };
            prev_diag = tmp;
        }
    }
    dp[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hpsr_osr_fixture_values() {
        // 20 items: 15 at 10/10, 4 at 8/10, 1 at 0/10 -> 19 items over the
        // 8/10 bar, 182/200 overall.
        let mut items = vec![(10u64, 10u64); 15];
        items.extend(vec![(8, 10); 4]);
        items.push((0, 10));
        let m = compute_hpsr_osr(&items, 8, 10, 2_000, 0.95, 1).unwrap();
        assert_eq!(m.hpsr_numerator, 19);
        assert_eq!(m.hpsr_denominator, 20);
        assert!((m.osr - 0.91).abs() < 1e-12);
        assert!(m.ci_low <= m.osr && m.osr <= m.ci_high);
    }

    #[test]
    fn hpsr_osr_perfect_and_zero() {
        let perfect = vec![(10u64, 10u64); 20];
        let m = compute_hpsr_osr(&perfect, 8, 10, 1_000, 0.95, 2).unwrap();
        assert_eq!(m.hpsr_numerator, 20);
        assert_eq!(m.osr, 1.0);

        let zero = vec![(0u64, 10u64); 20];
        let m = compute_hpsr_osr(&zero, 8, 10, 1_000, 0.95, 3).unwrap();
        assert_eq!(m.hpsr_numerator, 0);
        assert_eq!(m.osr, 0.0);
    }

    #[test]
    fn hpsr_rejects_empty_items() {
        assert!(matches!(
            compute_hpsr_osr(&[(0, 0)], 8, 10, 100, 0.95, 0),
            Err(SimError::EmptyItem)
        ));
    }

    #[test]
    fn similarity_identical_phrases() {
        assert_eq!(similarity_match("alpha beta gamma delta eps", "alpha beta gamma delta eps"), 1.0);
    }

    #[test]
    fn similarity_translation_roundtrip_stays_above_080() {
        let s = similarity_match(
            "the study explores the key aspect",
            "this study explores a key aspect",
        );
        assert!(s >= 0.8, "similarity {s}");
    }

    #[test]
    fn similarity_disjoint_vocabulary_is_zero() {
        assert_eq!(similarity_match("quantum flux router", "banana split dessert"), 0.0);
        assert_eq!(similarity_match("", ""), 1.0);
        assert_eq!(similarity_match("word", ""), 0.0);
    }
}
