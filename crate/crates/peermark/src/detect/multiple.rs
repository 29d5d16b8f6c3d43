//! Multiple-review detection with FWER control, plus the Bonferroni and
//! Holm-Bonferroni baselines it is measured against.

use std::collections::HashMap;

use super::discard::{exact_discard, greedy_discard};
use super::scan::{build_occurrence_matrix, OccurrenceMatrix};
use super::{DetectError, DetectionConfig, DetectionOutcome, Solver};
use crate::corpus::ReviewRecord;
use crate::watermark::{Watermark, WatermarkSet};

fn check_assignment(
    set: &WatermarkSet,
    reviews: &[ReviewRecord],
    assignments: &HashMap<String, Watermark>,
) -> Result<(), DetectError> {
    for r in reviews {
        let w = assignments
            .get(&r.review_id)
            .ok_or_else(|| DetectError::MissingAssignment(r.review_id.clone()))?;
        if w.set_id != set.id() {
            return Err(DetectError::SetMismatch {
                expected: set.id().to_string(),
                actual: w.set_id.clone(),
            });
        }
        if w.index >= set.len() {
            return Err(DetectError::IndexOutOfRange {
                index: w.index,
                size: set.len(),
            });
        }
    }
    Ok(())
}

/// Runs multiple-review detection on a prebuilt occurrence matrix.
///
/// The matrix and the discard solution depend only on review text and the
/// candidate set; assignments enter only in the final flagging step.
pub fn detect_multiple_on_matrix(
    x: &OccurrenceMatrix,
    set: &WatermarkSet,
    assignments: &HashMap<String, Watermark>,
    cfg: &DetectionConfig,
    seed: u64,
) -> Result<DetectionOutcome, DetectError> {
    let discard = match cfg.solver {
        Solver::Greedy => greedy_discard(x, cfg, seed)?,
        Solver::Exact => exact_discard(x, cfg)?,
    };
    let discarded_rows: std::collections::HashSet<usize> =
        discard.discarded_reviews.iter().copied().collect();
    let discarded_cols: std::collections::HashSet<u32> =
        discard.discarded_watermarks.iter().copied().collect();

    let mut flagged = Vec::new();
    for (i, id) in x.review_ids().iter().enumerate() {
        if discarded_rows.contains(&i) {
            continue;
        }
        let w = assignments
            .get(id)
            .ok_or_else(|| DetectError::MissingAssignment(id.clone()))?;
        let j = w.index as u32;
        if discarded_cols.contains(&j) {
            continue;
        }
        if x.get(i, j) {
            flagged.push(id.clone());
        }
    }

    Ok(DetectionOutcome {
        flagged,
        discarded_reviews: discard
            .discarded_reviews
            .iter()
            .map(|&i| x.review_ids()[i].clone())
            .collect(),
        discarded_watermarks: discard.discarded_watermarks,
        objective_value: discard.objective,
        constraint_lhs: discard.residual,
        constraint_rhs: cfg.alpha * x.n_watermarks() as f64,
        trace: discard.trace,
    })
}

/// Multiple-review detection: builds X (without reading assignments), solves
/// the discard problem, then flags every kept review whose own watermark is
/// present and not discarded.
pub fn detect_multiple(
    reviews: &[ReviewRecord],
    set: &WatermarkSet,
    assignments: &HashMap<String, Watermark>,
    cfg: &DetectionConfig,
    seed: u64,
) -> Result<DetectionOutcome, DetectError> {
    cfg.validate(reviews.len(), set.len())?;
    check_assignment(set, reviews, assignments)?;
    let x = build_occurrence_matrix(reviews, set)?;
    detect_multiple_on_matrix(&x, set, assignments, cfg, seed)
}

/// Per-review threshold under Bonferroni correction: `alpha * |W| / |R|`,
/// floored. A value below one makes the baseline unable to flag anything.
pub fn bonferroni_threshold(alpha: f64, set_size: usize, n_reviews: usize) -> u64 {
    if n_reviews == 0 {
        return 0;
    }
    (alpha * set_size as f64 / n_reviews as f64).floor().max(0.0) as u64
}

/// Bonferroni-corrected baseline: the single-review test per review with
/// `tau = floor(alpha |W| / |R|)`. When that threshold is below one the
/// correction is infeasible and nothing is flagged, for fixed-position
/// schemes included.
pub fn bonferroni_detect(
    reviews: &[ReviewRecord],
    set: &WatermarkSet,
    assignments: &HashMap<String, Watermark>,
    alpha: f64,
) -> Result<Vec<String>, DetectError> {
    check_assignment(set, reviews, assignments)?;
    let tau = bonferroni_threshold(alpha, set.len(), reviews.len());
    if tau < 1 {
        return Ok(Vec::new());
    }
    let x = build_occurrence_matrix(reviews, set)?;
    let mut flagged = Vec::new();
    for (i, id) in x.review_ids().iter().enumerate() {
        let w = &assignments[id];
        let row = x.row(i);
        if row.binary_search(&(w.index as u32)).is_ok() && row.len() as u64 <= tau {
            flagged.push(id.clone());
        }
    }
    Ok(flagged)
}

/// Holm-Bonferroni baseline. Each review gets the p-value `k_i / |W|` when
/// its watermark occurs (`k_i` = number of candidates present at the scheme's
/// scope) and 1 otherwise; the step-down procedure flags while
/// `p_(m) <= alpha / (|R| - m + 1)`.
pub fn holm_detect(
    reviews: &[ReviewRecord],
    set: &WatermarkSet,
    assignments: &HashMap<String, Watermark>,
    alpha: f64,
) -> Result<Vec<String>, DetectError> {
    check_assignment(set, reviews, assignments)?;
    if reviews.is_empty() {
        return Ok(Vec::new());
    }
    let x = build_occurrence_matrix(reviews, set)?;
    let n = reviews.len();
    let mut pvals: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, id) in x.review_ids().iter().enumerate() {
        let w = &assignments[id];
        let row = x.row(i);
        let p = if row.binary_search(&(w.index as u32)).is_ok() {
            row.len() as f64 / set.len() as f64
        } else {
            1.0
        };
        pvals.push((p, i));
    }
    pvals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut flagged = Vec::new();
    for (m, &(p, i)) in pvals.iter().enumerate() {
        if p <= alpha / (n - m) as f64 {
            flagged.push(x.review_ids()[i].clone());
        } else {
            break;
        }
    }
    flagged.sort();
    Ok(flagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watermark::{build_citation_set, SchemeKind, WatermarkSet};

    fn term_set(n: usize) -> WatermarkSet {
        WatermarkSet::new(
            SchemeKind::TechnicalTerm,
            (0..n).map(|i| format!("term{i:04} alpha")).collect(),
        )
        .unwrap()
    }

    fn assign_all(set: &WatermarkSet, reviews: &[ReviewRecord], index: usize) -> HashMap<String, Watermark> {
        reviews
            .iter()
            .map(|r| (r.review_id.clone(), set.watermark(index).unwrap()))
            .collect()
    }

    #[test]
    fn planted_reviews_all_flagged_when_constraint_holds() {
        // 50 reviews each containing only its planted watermark; mass 50 is
        // within alpha|W| = 60, so nothing is discarded.
        let set = term_set(1200);
        let mut reviews = Vec::new();
        let mut assignments = HashMap::new();
        for i in 0..50usize {
            let w = set.watermark(i * 7).unwrap();
            let id = format!("r{i}");
            reviews.push(ReviewRecord::new(
                id.clone(),
                format!("filler start {} filler end", w.surface),
            ));
            assignments.insert(id, w);
        }
        let cfg = DetectionConfig::new(0.05);
        let out = detect_multiple(&reviews, &set, &assignments, &cfg, 1).unwrap();
        assert_eq!(out.flagged.len(), 50);
        assert!(out.discarded_reviews.is_empty());
        assert!(out.discarded_watermarks.is_empty());
        assert_eq!(out.constraint_lhs, 50);
        assert!(out.constraint_lhs as f64 <= out.constraint_rhs);
    }

    #[test]
    fn no_review_containing_no_watermark_is_flagged() {
        let set = term_set(40);
        let reviews: Vec<ReviewRecord> = (0..8)
            .map(|i| ReviewRecord::new(format!("r{i}"), "no candidates at all here"))
            .collect();
        let assignments = assign_all(&set, &reviews, 3);
        let cfg = DetectionConfig::new(0.2);
        let out = detect_multiple(&reviews, &set, &assignments, &cfg, 0).unwrap();
        assert!(out.flagged.is_empty());
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let set = term_set(10);
        let reviews = vec![ReviewRecord::new("a", "x"), ReviewRecord::new("b", "y")];
        let mut assignments = assign_all(&set, &reviews, 0);
        assignments.remove("b");
        let cfg = DetectionConfig::new(0.1);
        assert!(matches!(
            detect_multiple(&reviews, &set, &assignments, &cfg, 0),
            Err(DetectError::MissingAssignment(id)) if id == "b"
        ));
    }

    #[test]
    fn flagged_reviews_never_come_from_discards() {
        // Force discarding: one review stuffed with candidates.
        let set = term_set(10);
        let mut reviews = vec![ReviewRecord::new(
            "stuffed",
            set.candidates().join(" , "),
        )];
        for i in 0..3 {
            reviews.push(ReviewRecord::new(
                format!("clean{i}"),
                format!("only {} here", set.candidate(i).unwrap()),
            ));
        }
        let mut assignments = HashMap::new();
        assignments.insert("stuffed".to_string(), set.watermark(0).unwrap());
        for i in 0..3 {
            assignments.insert(format!("clean{i}"), set.watermark(i).unwrap());
        }
        let cfg = DetectionConfig {
            alpha: 0.3, // alpha|W| = 3 < 13 total
            rho: None,
            omega: None,
            solver: Solver::Greedy,
        };
        let out = detect_multiple(&reviews, &set, &assignments, &cfg, 5).unwrap();
        assert!(out.constraint_lhs as f64 <= out.constraint_rhs);
        assert!(!out.flagged.is_empty());
        for id in &out.flagged {
            assert!(!out.discarded_reviews.contains(id));
            let w = &assignments[id];
            assert!(!out.discarded_watermarks.contains(&(w.index as u32)));
        }
        // The stuffed review was the cheap discard and cannot be flagged.
        assert!(out.discarded_reviews.contains(&"stuffed".to_string()));
        assert!(!out.flagged.contains(&"stuffed".to_string()));
    }

    #[test]
    fn bonferroni_threshold_arithmetic() {
        assert_eq!(bonferroni_threshold(0.05, 1200, 10_022), 0);
        assert_eq!(bonferroni_threshold(0.05, 1200, 10), 6);
        assert_eq!(bonferroni_threshold(0.5, 10, 0), 0);
    }

    #[test]
    fn bonferroni_flags_nothing_when_infeasible() {
        let set = build_citation_set(&["Kunz".to_string()], 2014, 2024).unwrap();
        let reviews: Vec<ReviewRecord> = (0..20)
            .map(|i| {
                ReviewRecord::new(
                    format!("r{i}"),
                    "Following Kunz et al. (2018), this paper reads well.",
                )
            })
            .collect();
        let assignments = assign_all(
            &set,
            &reviews,
            set.candidates()
                .iter()
                .position(|c| c == "Kunz et al. (2018)")
                .unwrap(),
        );
        // alpha |W| / |R| = 0.05 * 11 / 20 < 1: zero flags even though every
        // review starts with its watermark.
        let flags = bonferroni_detect(&reviews, &set, &assignments, 0.05).unwrap();
        assert!(flags.is_empty());
    }

    #[test]
    fn bonferroni_flags_with_feasible_threshold() {
        let set = term_set(1200);
        // tau = floor(0.05 * 1200 / 10) = 6.
        let mut reviews = Vec::new();
        let mut assignments = HashMap::new();
        for i in 0..10usize {
            let w = set.watermark(i).unwrap();
            let extra = if i == 0 {
                // 7 total candidates: over tau, not flagged.
                (1..7)
                    .map(|k| set.candidate(100 + k).unwrap().to_string())
                    .collect::<Vec<_>>()
                    .join(" and ")
            } else {
                String::new()
            };
            reviews.push(ReviewRecord::new(
                format!("r{i}"),
                format!("begin {} mid {extra} end", w.surface),
            ));
            assignments.insert(format!("r{i}"), w);
        }
        let flags = bonferroni_detect(&reviews, &set, &assignments, 0.05).unwrap();
        assert_eq!(flags.len(), 9);
        assert!(!flags.contains(&"r0".to_string()));
    }

    #[test]
    fn holm_flags_nothing_when_min_pvalue_exceeds_alpha_over_n() {
        // alpha |W| < |R|: smallest possible p-value 1/|W| > alpha/|R|.
        let set = term_set(40);
        let mut reviews = Vec::new();
        let mut assignments = HashMap::new();
        for i in 0..30usize {
            let w = set.watermark(i % 40).unwrap();
            reviews.push(ReviewRecord::new(
                format!("r{i}"),
                format!("just {} alone", w.surface),
            ));
            assignments.insert(format!("r{i}"), w);
        }
        let flags = holm_detect(&reviews, &set, &assignments, 0.05).unwrap();
        assert!(flags.is_empty());
    }

    #[test]
    fn holm_flags_single_clean_review() {
        let set = term_set(1200);
        let w = set.watermark(7).unwrap();
        let reviews = vec![ReviewRecord::new("solo", format!("contains {}", w.surface))];
        let mut assignments = HashMap::new();
        assignments.insert("solo".to_string(), w);
        // p = 1/1200 <= 0.05/1.
        let flags = holm_detect(&reviews, &set, &assignments, 0.05).unwrap();
        assert_eq!(flags, vec!["solo".to_string()]);
    }

    #[test]
    fn bonferroni_flags_subset_of_holm() {
        let set = term_set(600);
        let mut reviews = Vec::new();
        let mut assignments = HashMap::new();
        for i in 0..12usize {
            let w = set.watermark((i * 13) % 600).unwrap();
            let mut text = format!("planted {} here", w.surface);
            if i % 3 == 0 {
                text.push_str(&format!(" plus {}", set.candidate((i * 17 + 5) % 600).unwrap()));
            }
            if i % 4 == 1 {
                text = "nothing planted".to_string();
            }
            reviews.push(ReviewRecord::new(format!("r{i}"), text));
            assignments.insert(format!("r{i}"), w);
        }
        for alpha in [0.01, 0.05, 0.2, 0.5] {
            let bon = bonferroni_detect(&reviews, &set, &assignments, alpha).unwrap();
            let holm = holm_detect(&reviews, &set, &assignments, alpha).unwrap();
            for id in &bon {
                assert!(holm.contains(id), "alpha={alpha}: {id} in bonferroni not holm");
            }
        }
    }
}
