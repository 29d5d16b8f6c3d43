//! Synthetic null corpora matched to published occurrence statistics.
//!
//! A profile pins the fraction of reviews containing at least one candidate
//! and the mean number of candidates per review, both measured at anywhere
//! scope (containment). Per-review counts follow a two-parameter mixture:
//! a review is occurrent with probability `frac_with_any`, and occurrent
//! reviews carry `1 + Poisson(mean/frac - 1)`-distributed extra occurrences
//! (realized by exact allocation, so a generated corpus reproduces the
//! requested statistics up to rounding). Candidate choice is Zipf-weighted
//! over a shuffled popularity pool: a few phrases account for most of the
//! occurrence mass, the way a few real citations and terms do.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::corpus::ReviewRecord;
use crate::seed;
use crate::watermark::{PositionPolicy, SchemeKind, WatermarkSet};

/// Target occurrence statistics for a synthetic null corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusProfile {
    pub n_reviews: usize,
    /// Fraction of reviews containing at least one candidate (anywhere).
    pub frac_with_any: f64,
    /// Mean number of distinct candidates per review (anywhere).
    pub mean_occurrences: f64,
    pub scheme: SchemeKind,
    /// For fixed-position schemes: fraction of reviews whose first occurrence
    /// sits at the detection position (review start). Human reviews almost
    /// never open with a candidate phrase, so the default is 0; raise it to
    /// stress the discard machinery.
    pub start_fraction: f64,
}

impl CorpusProfile {
    pub fn new(n_reviews: usize, frac_with_any: f64, mean_occurrences: f64, scheme: SchemeKind) -> Self {
        Self {
            n_reviews,
            frac_with_any,
            mean_occurrences,
            scheme,
            start_fraction: 0.0,
        }
    }

    pub fn with_start_fraction(mut self, start_fraction: f64) -> Self {
        self.start_fraction = start_fraction;
        self
    }
}

/// Filler vocabulary, chosen to be disjoint from every word that appears in
/// random-start candidates and citation templates so planted occurrences are
/// the only occurrences.
const FILLER: &[&str] = &[
    "we", "present", "results", "for", "clear", "strong", "novel", "method",
    "baseline", "dataset", "training", "evaluation", "metrics", "shows",
    "gains", "with", "robust", "design", "careful", "analysis", "sound",
    "clarity", "writing", "section", "figure", "table", "proofs", "claims",
    "support", "evidence", "overall", "quality", "good", "solid", "minor",
    "concerns", "about", "scaling", "limits", "compute", "cost", "fair",
    "comparisons", "prior", "work", "authors", "propose", "deep", "networks",
    "ablations", "settings", "runs", "seeds", "variance", "tables",
];

/// Zipf exponent for candidate popularity.
const POPULARITY_EXPONENT: f64 = 1.3;
/// At most this many candidates carry the corpus's occurrence mass.
const POPULARITY_POOL: usize = 1000;

struct CandidatePool {
    /// Shuffled candidate indices; earlier ranks are more popular.
    ranked: Vec<u32>,
    /// Cumulative Zipf weights over ranks.
    cumulative: Vec<f64>,
}

impl CandidatePool {
    fn new(set_len: usize, rng: &mut impl Rng) -> Self {
        let mut all: Vec<u32> = (0..set_len as u32).collect();
        all.shuffle(rng);
        let pool = set_len.min(POPULARITY_POOL);
        let ranked = all[..pool].to_vec();
        let mut cumulative = Vec::with_capacity(pool);
        let mut acc = 0.0;
        for r in 0..pool {
            acc += 1.0 / ((r + 1) as f64).powf(POPULARITY_EXPONENT);
            cumulative.push(acc);
        }
        Self { ranked, cumulative }
    }

    fn draw(&self, rng: &mut impl Rng) -> u32 {
        let total = *self.cumulative.last().expect("non-empty pool");
        let u = rng.random_range(0.0..total);
        let rank = self.cumulative.partition_point(|&c| c < u);
        self.ranked[rank.min(self.ranked.len() - 1)]
    }

    /// Draws `k` distinct candidates.
    fn draw_distinct(&self, k: usize, rng: &mut impl Rng) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::with_capacity(k);
        let mut guard = 0;
        while out.len() < k {
            let c = self.draw(rng);
            if !out.contains(&c) {
                out.push(c);
            }
            guard += 1;
            if guard > 100 * k + 1000 {
                // Zipf mass is concentrated; fall back to low ranks directly.
                for &c in &self.ranked {
                    if out.len() == k {
                        break;
                    }
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

fn filler_sentence(rng: &mut impl Rng) -> String {
    let len = rng.random_range(6..14);
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        words.push(FILLER[rng.random_range(0..FILLER.len())]);
    }
    let mut s = words.join(" ");
    s.push('.');
    s
}

/// Renders one mid-text occurrence of a candidate.
fn mid_occurrence(scheme: SchemeKind, surface: &str, rng: &mut impl Rng) -> String {
    match scheme {
        SchemeKind::RandomCitation => format!("prior work {surface} shows strong evidence."),
        SchemeKind::RandomStart => format!("{surface} with solid gains."),
        SchemeKind::TechnicalTerm => {
            if rng.random_bool(0.5) {
                format!("we rely heavily concerning \"{surface}\" for analysis.")
            } else {
                format!("results cover {surface} with care.")
            }
        }
    }
}

/// Opening text that places the candidate at the detection position.
fn start_occurrence(scheme: SchemeKind, surface: &str) -> String {
    match scheme {
        SchemeKind::RandomCitation => format!("Following {surface}, we present results."),
        SchemeKind::RandomStart => format!("{surface} with careful analysis."),
        SchemeKind::TechnicalTerm => format!("\"{surface}\" anchors the evaluation."),
    }
}

/// Review text for a planted (watermarked) review: the watermark appears at
/// the scheme's position, exactly once.
pub fn planted_review_text(scheme: SchemeKind, surface: &str, seed_value: u64) -> String {
    let mut rng = seed::rng(seed_value);
    let opening = match scheme {
        SchemeKind::RandomCitation => format!("Following {surface}, this paper reads well."),
        SchemeKind::RandomStart => format!("{surface} of broad interest."),
        SchemeKind::TechnicalTerm => {
            format!("the evaluation hinges at \"{surface}\" throughout.")
        }
    };
    let mut parts = vec![opening];
    for _ in 0..rng.random_range(2..4) {
        parts.push(filler_sentence(&mut rng));
    }
    parts.join(" ")
}

/// Generates a synthetic null corpus matching the profile.
///
/// Occurrence counts are allocated exactly: `round(frac * n)` reviews carry
/// at least one candidate, `round(mean * n)` candidate occurrences exist in
/// total, and (for fixed-position schemes) `round(start_fraction * n)` of
/// the occurrent reviews open with their first candidate. Rescanning the
/// output at anywhere scope therefore reproduces the profile to within
/// rounding, comfortably inside a 2% relative tolerance at realistic sizes.
pub fn synth_corpus(
    profile: &CorpusProfile,
    set: &WatermarkSet,
    seed_value: u64,
) -> Result<Vec<ReviewRecord>, SimError> {
    let n = profile.n_reviews;
    if !(0.0..=1.0).contains(&profile.frac_with_any) {
        return Err(SimError::InfeasibleProfile(format!(
            "frac_with_any {} outside [0,1]",
            profile.frac_with_any
        )));
    }
    if profile.mean_occurrences < 0.0 {
        return Err(SimError::InfeasibleProfile("negative mean".into()));
    }
    if !(0.0..=1.0).contains(&profile.start_fraction) || profile.start_fraction > profile.frac_with_any + 1e-12 {
        return Err(SimError::InfeasibleProfile(format!(
            "start_fraction {} exceeds frac_with_any {}",
            profile.start_fraction, profile.frac_with_any
        )));
    }
    if profile.scheme != set.scheme() {
        return Err(SimError::InfeasibleProfile(format!(
            "profile scheme {} does not match set scheme {}",
            profile.scheme,
            set.scheme()
        )));
    }

    let n_any = (profile.frac_with_any * n as f64).round() as usize;
    let total = (profile.mean_occurrences * n as f64).round() as usize;
    if total < n_any {
        return Err(SimError::InfeasibleProfile(format!(
            "mean {} implies {total} occurrences, fewer than {n_any} occurrent reviews",
            profile.mean_occurrences
        )));
    }
    if n_any == 0 && total > 0 {
        return Err(SimError::InfeasibleProfile(
            "positive mean with zero occurrent reviews".into(),
        ));
    }
    let n_start = match set.position_policy() {
        PositionPolicy::FixedStart => (profile.start_fraction * n as f64).round() as usize,
        PositionPolicy::Anywhere => 0,
    };

    let mut rng = seed::rng(seed::derive(seed_value, "synth-corpus"));
    let pool = CandidatePool::new(set.len(), &mut rng);

    // Which reviews are occurrent, and which of those open with a candidate.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let occurrent: Vec<usize> = order[..n_any].to_vec();

    // Per-review occurrence counts: one each, extras spread uniformly.
    let mut counts = vec![0usize; n];
    for &i in &occurrent {
        counts[i] = 1;
    }
    for _ in 0..(total - n_any) {
        let &i = &occurrent[rng.random_range(0..occurrent.len())];
        counts[i] += 1;
    }

    let mut reviews = Vec::with_capacity(n);
    let pool_size = pool.ranked.len();
    for i in 0..n {
        let mut text_rng = seed::rng(seed::derive_indexed(seed_value, "synth-review", i as u64));
        let k = counts[i].min(pool_size);
        let candidates = pool.draw_distinct(k, &mut text_rng);
        let opens_with_candidate = occurrent[..n_start.min(occurrent.len())].contains(&i);

        let mut parts: Vec<String> = Vec::new();
        let mut remaining = candidates.as_slice();
        if opens_with_candidate {
            let surf = set.candidate(remaining[0] as usize).expect("index in range");
            parts.push(start_occurrence(profile.scheme, surf));
            remaining = &remaining[1..];
        } else {
            parts.push(filler_sentence(&mut text_rng));
        }
        for &c in remaining {
            parts.push(filler_sentence(&mut text_rng));
            let surf = set.candidate(c as usize).expect("index in range");
            parts.push(mid_occurrence(profile.scheme, surf, &mut text_rng));
        }
        parts.push(filler_sentence(&mut text_rng));
        reviews.push(ReviewRecord::new(format!("null-{i:06}"), parts.join(" ")));
    }
    Ok(reviews)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{build_occurrence_matrix, build_occurrence_matrix_scoped, MatchScope, ScanConfig};
    use crate::watermark::{build_citation_set, WatermarkSet};

    fn term_set(n: usize) -> WatermarkSet {
        let roots = [
            "axiomatic", "bregman", "cycloid", "dendritic", "ergodic", "fractal",
            "geodesic", "holonomy", "isotropic", "jacobian", "kuramoto", "laplacian",
        ];
        let mut cands = Vec::new();
        'outer: for a in roots {
            for b in roots {
                if a != b {
                    cands.push(format!("{a} {b}"));
                    if cands.len() == n {
                        break 'outer;
                    }
                }
            }
        }
        WatermarkSet::new(SchemeKind::TechnicalTerm, cands).unwrap()
    }

    #[test]
    fn zero_profile_gives_zero_occurrences() {
        let set = term_set(50);
        let profile = CorpusProfile::new(200, 0.0, 0.0, SchemeKind::TechnicalTerm);
        let reviews = synth_corpus(&profile, &set, 1).unwrap();
        assert_eq!(reviews.len(), 200);
        let x = build_occurrence_matrix(&reviews, &set).unwrap();
        assert_eq!(x.total(), 0);
    }

    #[test]
    fn realized_statistics_match_profile_within_two_percent() {
        let set = term_set(100);
        let profile = CorpusProfile::new(2000, 0.6, 1.8, SchemeKind::TechnicalTerm);
        let reviews = synth_corpus(&profile, &set, 7).unwrap();
        let x = build_occurrence_matrix(&reviews, &set).unwrap();
        let frac = x.frac_rows_with_any();
        let mean = x.mean_row_sum();
        assert!((frac - 0.6).abs() / 0.6 < 0.02, "frac {frac}");
        assert!((mean - 1.8).abs() / 1.8 < 0.02, "mean {mean}");
    }

    #[test]
    fn citation_profile_rescans_at_anywhere_scope() {
        let surnames: Vec<String> = (0..40).map(|i| format!("Zqsurname{i:02}")).collect();
        let set = build_citation_set(&surnames, 2014, 2024).unwrap();
        let profile = CorpusProfile::new(1500, 0.026, 0.032, SchemeKind::RandomCitation);
        let reviews = synth_corpus(&profile, &set, 3).unwrap();

        // Detection scope: nothing sits at the review start by default.
        let policy_x = build_occurrence_matrix(&reviews, &set).unwrap();
        assert_eq!(policy_x.total(), 0);

        // Containment scope reproduces the profile.
        let x = build_occurrence_matrix_scoped(
            &reviews,
            &set,
            MatchScope::Anywhere,
            ScanConfig::default(),
        )
        .unwrap();
        let want_any = (0.026f64 * 1500.0).round();
        let want_total = (0.032f64 * 1500.0).round();
        assert_eq!(
            x.row_sums().iter().filter(|&&s| s > 0).count() as f64,
            want_any
        );
        assert_eq!(x.total() as f64, want_total);
    }

    #[test]
    fn start_fraction_plants_at_detection_position() {
        let surnames: Vec<String> = (0..40).map(|i| format!("Zqsurname{i:02}")).collect();
        let set = build_citation_set(&surnames, 2014, 2024).unwrap();
        let profile = CorpusProfile::new(1000, 0.05, 0.06, SchemeKind::RandomCitation)
            .with_start_fraction(0.03);
        let reviews = synth_corpus(&profile, &set, 11).unwrap();
        let x = build_occurrence_matrix(&reviews, &set).unwrap();
        assert_eq!(x.total(), 30);
        assert!(x.row_sums().iter().all(|&s| s <= 1));
    }

    #[test]
    fn infeasible_profiles_rejected() {
        let set = term_set(10);
        let bad_mean = CorpusProfile::new(100, 0.5, 0.2, SchemeKind::TechnicalTerm);
        assert!(matches!(
            synth_corpus(&bad_mean, &set, 0),
            Err(SimError::InfeasibleProfile(_))
        ));
        let bad_frac = CorpusProfile::new(100, 1.5, 2.0, SchemeKind::TechnicalTerm);
        assert!(synth_corpus(&bad_frac, &set, 0).is_err());
        let bad_scheme = CorpusProfile::new(100, 0.1, 0.2, SchemeKind::RandomStart);
        assert!(synth_corpus(&bad_scheme, &set, 0).is_err());
    }

    #[test]
    fn planted_text_contains_watermark_at_position() {
        let surnames = vec!["Kunz".to_string()];
        let set = build_citation_set(&surnames, 2018, 2018).unwrap();
        let w = set.watermark(0).unwrap();
        let text = planted_review_text(SchemeKind::RandomCitation, &w.surface, 9);
        assert!(text.starts_with("Following Kunz et al. (2018),"));
    }
}
