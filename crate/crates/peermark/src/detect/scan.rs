//! Occurrence scanning: review text against a candidate set, producing the
//! binary term-occurrence matrix X.

use std::collections::{HashMap, HashSet};

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};

use super::normalize::{normalize, on_word_boundaries};
use super::DetectError;
use crate::corpus::ReviewRecord;
use crate::watermark::{PositionPolicy, WatermarkSet};

/// Scope used when filling the occurrence matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchScope {
    /// Use the set's own position policy (fixed-position schemes match only
    /// at the review start).
    Policy,
    /// Match anywhere regardless of the set's policy. Used for containment
    /// statistics and corpus profiling.
    Anywhere,
}

/// Configuration for start-of-review matching.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Leading tokens stripped in place (the rest of the line survives),
    /// matched case-insensitively after markdown emphasis.
    pub prefix_tokens: Vec<String>,
    /// Leading lines with at most this many words that end in ':' are
    /// treated as headings and dropped entirely.
    pub heading_max_words: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            prefix_tokens: vec!["review:".into(), "title:".into()],
            heading_max_words: 6,
        }
    }
}

/// Drops boilerplate (heading lines, configured prefix tokens) from the head
/// of a raw review so fixed-position matching sees the real opening words.
fn strip_boilerplate<'a>(mut text: &'a str, cfg: &ScanConfig) -> &'a str {
    'outer: loop {
        text = text.trim_start();
        // Markdown emphasis and heading markers are invisible to the
        // normalized comparison later, so skip them when matching tokens.
        let decorated = text.trim_start_matches(['*', '_', '#']);
        for token in &cfg.prefix_tokens {
            if decorated.len() >= token.len()
                && decorated.is_char_boundary(token.len())
                && decorated[..token.len()].eq_ignore_ascii_case(token)
            {
                let cut = (text.len() - decorated.len()) + token.len();
                text = &text[cut..];
                continue 'outer;
            }
        }
        if let Some(nl) = text.find('\n') {
            let line = normalize(&text[..nl]);
            if !line.is_empty()
                && line.ends_with(':')
                && line.split_whitespace().count() <= cfg.heading_max_words
            {
                text = &text[nl + 1..];
                continue;
            }
        }
        return text;
    }
}

/// A candidate set prepared for repeated scanning.
///
/// Fixed-position sets get a prefix index keyed by candidate length; anywhere
/// matching uses an Aho-Corasick automaton over all candidates at once.
pub struct Scanner {
    policy: PositionPolicy,
    scheme_prefix: Option<&'static str>,
    config: ScanConfig,
    normalized: Vec<String>,
    prefix_index: Option<PrefixIndex>,
    automaton: Option<AhoCorasick>,
}

struct PrefixIndex {
    by_candidate: HashMap<String, u32>,
    lengths: Vec<usize>,
}

impl Scanner {
    pub fn new(set: &WatermarkSet, config: ScanConfig) -> Self {
        Self::with_scope(set, config, MatchScope::Policy)
    }

    pub fn with_scope(set: &WatermarkSet, config: ScanConfig, scope: MatchScope) -> Self {
        let policy = match scope {
            MatchScope::Policy => set.position_policy(),
            MatchScope::Anywhere => PositionPolicy::Anywhere,
        };
        let normalized: Vec<String> = set.candidates().iter().map(|c| normalize(c)).collect();
        let scheme_prefix = match set.scheme() {
            crate::watermark::SchemeKind::RandomCitation => Some("following "),
            _ => None,
        };
        let (prefix_index, automaton) = match policy {
            PositionPolicy::FixedStart => {
                let mut by_candidate = HashMap::with_capacity(normalized.len());
                let mut lengths = HashSet::new();
                for (i, c) in normalized.iter().enumerate() {
                    lengths.insert(c.len());
                    by_candidate.insert(c.clone(), i as u32);
                }
                let mut lengths: Vec<usize> = lengths.into_iter().collect();
                lengths.sort_unstable();
                (
                    Some(PrefixIndex {
                        by_candidate,
                        lengths,
                    }),
                    None,
                )
            }
            PositionPolicy::Anywhere => {
                let ac = AhoCorasick::new(&normalized).expect("automaton over candidate set");
                (None, Some(ac))
            }
        };
        Self {
            policy,
            scheme_prefix,
            config,
            normalized,
            prefix_index,
            automaton,
        }
    }

    pub fn policy(&self) -> PositionPolicy {
        self.policy
    }

    /// Scans one review; returns the sorted, distinct candidate indices
    /// present at the scanner's scope. This is one row of X.
    pub fn scan(&self, raw_text: &str) -> Vec<u32> {
        match self.policy {
            PositionPolicy::FixedStart => self.scan_fixed_start(raw_text),
            PositionPolicy::Anywhere => self.scan_anywhere(raw_text),
        }
    }

    fn scan_fixed_start(&self, raw_text: &str) -> Vec<u32> {
        let stripped = strip_boilerplate(raw_text, &self.config);
        let text = normalize(stripped);
        let head = match self.scheme_prefix {
            Some(prefix) => match text.strip_prefix(prefix) {
                Some(rest) => rest,
                None => return Vec::new(),
            },
            None => text.as_str(),
        };
        let index = self.prefix_index.as_ref().expect("fixed-start index");
        for &len in &index.lengths {
            if len > head.len() || !head.is_char_boundary(len) {
                continue;
            }
            if !on_word_boundaries(head, 0, len) {
                continue;
            }
            if let Some(&i) = index.by_candidate.get(&head[..len]) {
                return vec![i];
            }
        }
        Vec::new()
    }

    fn scan_anywhere(&self, raw_text: &str) -> Vec<u32> {
        let text = normalize(raw_text);
        let ac = self.automaton.as_ref().expect("anywhere automaton");
        let mut found = HashSet::new();
        for m in ac.find_overlapping_iter(&text) {
            if on_word_boundaries(&text, m.start(), m.end()) {
                found.insert(m.pattern().as_u32());
            }
        }
        let mut row: Vec<u32> = found.into_iter().collect();
        row.sort_unstable();
        row
    }

    /// The normalized surface for candidate `index`.
    pub fn normalized_candidate(&self, index: usize) -> &str {
        &self.normalized[index]
    }
}

/// Scans a single review against a set. For bulk work build a [`Scanner`]
/// once and reuse it.
pub fn scan_review(review: &ReviewRecord, set: &WatermarkSet) -> Vec<u32> {
    Scanner::new(set, ScanConfig::default()).scan(&review.text)
}

/// Binary |R| x |W| occurrence matrix, stored sparsely by row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccurrenceMatrix {
    review_ids: Vec<String>,
    n_watermarks: usize,
    rows: Vec<Vec<u32>>,
    row_sums: Vec<u32>,
    col_sums: Vec<u32>,
}

impl OccurrenceMatrix {
    pub fn from_rows(
        review_ids: Vec<String>,
        rows: Vec<Vec<u32>>,
        n_watermarks: usize,
    ) -> Result<Self, DetectError> {
        assert_eq!(review_ids.len(), rows.len());
        let mut seen = HashSet::new();
        for id in &review_ids {
            if !seen.insert(id.as_str()) {
                return Err(DetectError::DuplicateReviewId(id.clone()));
            }
        }
        let mut col_sums = vec![0u32; n_watermarks];
        let mut row_sums = Vec::with_capacity(rows.len());
        for row in &rows {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]), "rows sorted, distinct");
            row_sums.push(row.len() as u32);
            for &j in row {
                col_sums[j as usize] += 1;
            }
        }
        Ok(Self {
            review_ids,
            n_watermarks,
            rows,
            row_sums,
            col_sums,
        })
    }

    pub fn n_reviews(&self) -> usize {
        self.rows.len()
    }

    pub fn n_watermarks(&self) -> usize {
        self.n_watermarks
    }

    pub fn review_ids(&self) -> &[String] {
        &self.review_ids
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: u32) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    pub fn row_sums(&self) -> &[u32] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u32] {
        &self.col_sums
    }

    /// Total number of ones.
    pub fn total(&self) -> u64 {
        self.row_sums.iter().map(|&s| u64::from(s)).sum()
    }

    /// Fraction of reviews containing at least one candidate.
    pub fn frac_rows_with_any(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.row_sums.iter().filter(|&&s| s > 0).count() as f64 / self.rows.len() as f64
    }

    /// Mean number of candidates present per review.
    pub fn mean_row_sum(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.total() as f64 / self.rows.len() as f64
    }

    /// Recomputes both cached sum vectors from the bits.
    pub fn sums_consistent(&self) -> bool {
        let mut col = vec![0u32; self.n_watermarks];
        for (i, row) in self.rows.iter().enumerate() {
            if self.row_sums[i] as usize != row.len() {
                return false;
            }
            for &j in row {
                col[j as usize] += 1;
            }
        }
        col == self.col_sums
    }
}

/// Builds X for a review collection using the set's own position policy.
///
/// The computation touches only review text and the candidate set, never the
/// chosen watermarks.
pub fn build_occurrence_matrix(
    reviews: &[ReviewRecord],
    set: &WatermarkSet,
) -> Result<OccurrenceMatrix, DetectError> {
    build_occurrence_matrix_scoped(reviews, set, MatchScope::Policy, ScanConfig::default())
}

pub fn build_occurrence_matrix_scoped(
    reviews: &[ReviewRecord],
    set: &WatermarkSet,
    scope: MatchScope,
    config: ScanConfig,
) -> Result<OccurrenceMatrix, DetectError> {
    let scanner = Scanner::with_scope(set, config, scope);
    let mut ids = Vec::with_capacity(reviews.len());
    let mut rows = Vec::with_capacity(reviews.len());
    for r in reviews {
        ids.push(r.review_id.clone());
        rows.push(scanner.scan(&r.text));
    }
    OccurrenceMatrix::from_rows(ids, rows, set.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watermark::{
        build_citation_set, build_random_start_set, SchemeKind, WatermarkSet,
    };

    fn term_set(terms: &[&str]) -> WatermarkSet {
        WatermarkSet::new(
            SchemeKind::TechnicalTerm,
            terms.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn citation_start_match() {
        let set = build_citation_set(
            &["Kunz".to_string(), "Patterson".to_string()],
            2018,
            2022,
        )
        .unwrap();
        let scanner = Scanner::new(&set, ScanConfig::default());
        let row = scanner.scan(
            "Following Kunz et al. (2018), this paper presents FedAIoT, a benchmark.",
        );
        assert_eq!(row.len(), 1);
        assert_eq!(set.candidate(row[0] as usize), Some("Kunz et al. (2018)"));

        assert!(scanner.scan("Kunz et al. (2018) without the lead-in.").is_empty());
        assert!(scanner
            .scan("We discuss Following Kunz et al. (2018) later.")
            .is_empty());
    }

    #[test]
    fn random_start_match_strips_boilerplate() {
        let set = build_random_start_set();
        let scanner = Scanner::new(&set, ScanConfig::default());
        let row = scanner.scan(
            "Review of Submission 42:\n**Summary:**\nThis paper explores the problem of drift.",
        );
        assert_eq!(row.len(), 1);
        assert_eq!(
            set.candidate(row[0] as usize),
            Some("This paper explores the problem")
        );

        let row = scanner.scan("Review: The study explores the key aspect of X.");
        assert_eq!(row.len(), 1);
    }

    #[test]
    fn fixed_start_requires_word_boundary() {
        let set = WatermarkSet::new(
            SchemeKind::RandomStart,
            vec!["This paper explores the problem".into()],
        )
        .unwrap();
        let scanner = Scanner::new(&set, ScanConfig::default());
        assert!(scanner
            .scan("This paper explores the problematic side of things")
            .is_empty());
        assert_eq!(
            scanner
                .scan("This paper explores the problem, which matters.")
                .len(),
            1
        );
    }

    #[test]
    fn empty_review_gives_empty_row() {
        let set = build_random_start_set();
        assert!(Scanner::new(&set, ScanConfig::default()).scan("").is_empty());
    }

    #[test]
    fn anywhere_counts_distinct_candidates() {
        let set = term_set(&["hidden confounding", "markov decision processes", "rare gizmo"]);
        let scanner = Scanner::new(&set, ScanConfig::default());
        let row = scanner.scan(
            "The paper mentions \u{201C}hidden confounding\u{201D} twice: hidden confounding, \
             and also **markov decision processes**.",
        );
        assert_eq!(row, vec![0, 1]);
    }

    #[test]
    fn anywhere_respects_word_boundaries() {
        let set = term_set(&["rare gizmo"]);
        let scanner = Scanner::new(&set, ScanConfig::default());
        assert!(scanner.scan("a rarer gizmo").is_empty());
        assert!(scanner.scan("the rare gizmos here").is_empty());
        assert_eq!(scanner.scan("one (rare gizmo) appears").len(), 1);
    }

    #[test]
    fn planted_occurrences_are_recovered_exactly() {
        // Generator oracle: plant a known pattern, expect X to equal it.
        let set = term_set(&["alpha beta", "gamma delta", "epsilon zeta"]);
        let reviews = vec![
            ReviewRecord::new("r0", "filler alpha beta filler gamma delta end"),
            ReviewRecord::new("r1", "nothing to see"),
            ReviewRecord::new("r2", "epsilon zeta opens and alpha beta closes"),
        ];
        let x = build_occurrence_matrix(&reviews, &set).unwrap();
        assert_eq!(x.row(0), &[0, 1]);
        assert_eq!(x.row(1), &[] as &[u32]);
        assert_eq!(x.row(2), &[0, 2]);
        assert_eq!(x.row_sums(), &[2, 0, 2]);
        assert_eq!(x.col_sums(), &[2, 1, 1]);
        assert_eq!(x.total(), 4);
        assert!(x.sums_consistent());
    }

    #[test]
    fn empty_corpus_matrix() {
        let set = build_random_start_set();
        let x = build_occurrence_matrix(&[], &set).unwrap();
        assert_eq!(x.n_reviews(), 0);
        assert_eq!(x.n_watermarks(), 1200);
        assert_eq!(x.total(), 0);
    }

    #[test]
    fn duplicate_review_ids_rejected() {
        let set = term_set(&["alpha beta"]);
        let reviews = vec![
            ReviewRecord::new("dup", "x"),
            ReviewRecord::new("dup", "y"),
        ];
        assert!(matches!(
            build_occurrence_matrix(&reviews, &set),
            Err(DetectError::DuplicateReviewId(_))
        ));
    }

    #[test]
    fn fixed_start_rows_sum_at_most_one() {
        let set = build_random_start_set();
        let scanner = Scanner::new(&set, ScanConfig::default());
        // Even a review that is itself a concatenation of candidates can only
        // match one candidate at the fixed position.
        let text = "This paper explores the problem The study explores the key aspect";
        assert!(scanner.scan(text).len() <= 1);
    }

    #[test]
    fn anywhere_scope_override_sees_mid_text_citations() {
        let set = build_citation_set(&["Kunz".to_string()], 2018, 2018).unwrap();
        let reviews = vec![ReviewRecord::new(
            "r0",
            "The evaluation follows Kunz et al. (2018) in spirit.",
        )];
        let policy_x = build_occurrence_matrix(&reviews, &set).unwrap();
        assert_eq!(policy_x.total(), 0);
        let anywhere_x = build_occurrence_matrix_scoped(
            &reviews,
            &set,
            MatchScope::Anywhere,
            ScanConfig::default(),
        )
        .unwrap();
        assert_eq!(anywhere_x.total(), 1);
    }
}
