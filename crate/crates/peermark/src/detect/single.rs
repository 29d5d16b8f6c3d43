//! The single-review test and its false-positive-rate threshold.

use super::scan::{ScanConfig, Scanner};
use super::DetectError;
use crate::corpus::ReviewRecord;
use crate::watermark::{PositionPolicy, Watermark, WatermarkSet};

/// Threshold giving a single-review false positive rate of at most `alpha`:
/// the largest integer not exceeding `alpha * |W|`.
///
/// Fixed-position schemes ignore the threshold entirely (at most one
/// candidate can sit at the fixed position, so the rate is already bounded by
/// `1 / |W|`).
pub fn fpr_threshold(alpha: f64, set_size: usize) -> u64 {
    (alpha * set_size as f64).floor().max(0.0) as u64
}

/// Flag decision given a precomputed occurrence row.
///
/// * Fixed position: flag exactly when the chosen watermark sits at the fixed
///   position.
/// * No position: do not flag when the watermark is absent; do not flag when
///   more than `tau` candidates occur; otherwise flag.
pub fn decide_single(row: &[u32], w_index: u32, policy: PositionPolicy, tau: u64) -> bool {
    let present = row.binary_search(&w_index).is_ok();
    match policy {
        PositionPolicy::FixedStart => present,
        PositionPolicy::Anywhere => present && row.len() as u64 <= tau,
    }
}

/// Runs the single-review test for one review.
pub fn detect_single(
    review: &ReviewRecord,
    set: &WatermarkSet,
    w_star: &Watermark,
    tau: u64,
) -> Result<bool, DetectError> {
    if w_star.set_id != set.id() {
        return Err(DetectError::SetMismatch {
            expected: set.id().to_string(),
            actual: w_star.set_id.clone(),
        });
    }
    if w_star.index >= set.len() {
        return Err(DetectError::IndexOutOfRange {
            index: w_star.index,
            size: set.len(),
        });
    }
    let row = Scanner::new(set, ScanConfig::default()).scan(&review.text);
    Ok(decide_single(
        &row,
        w_star.index as u32,
        set.position_policy(),
        tau,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watermark::{build_citation_set, SchemeKind, WatermarkSet};

    #[test]
    fn threshold_arithmetic() {
        assert_eq!(fpr_threshold(0.05, 1200), 60);
        assert_eq!(fpr_threshold(0.001, 109_989), 109);
        assert_eq!(fpr_threshold(0.05, 10), 0);
    }

    #[test]
    fn fixed_position_flags_on_start_match_only() {
        let set = build_citation_set(&["Kunz".to_string(), "Mains".to_string()], 2015, 2018)
            .unwrap();
        let w = set
            .watermark(
                set.candidates()
                    .iter()
                    .position(|c| c == "Kunz et al. (2018)")
                    .unwrap(),
            )
            .unwrap();
        let hit = ReviewRecord::new("a", "Following Kunz et al. (2018), this paper is neat.");
        let miss = ReviewRecord::new("b", "This paper cites Kunz et al. (2018) in passing.");
        assert!(detect_single(&hit, &set, &w, 0).unwrap());
        assert!(!detect_single(&miss, &set, &w, 0).unwrap());
    }

    #[test]
    fn anywhere_flag_requires_count_at_most_tau() {
        let set = WatermarkSet::new(
            SchemeKind::TechnicalTerm,
            vec![
                "aaa bbb".into(),
                "ccc ddd".into(),
                "eee fff".into(),
                "ggg hhh".into(),
            ],
        )
        .unwrap();
        let w = set.watermark(0).unwrap();
        // Contains w* plus tau other candidates: count = tau + 1 > tau.
        let tau = 2u64;
        let crowded = ReviewRecord::new("c", "aaa bbb, ccc ddd, eee fff");
        assert!(!detect_single(&crowded, &set, &w, tau).unwrap());
        let ok = ReviewRecord::new("d", "aaa bbb and ccc ddd only");
        assert!(detect_single(&ok, &set, &w, tau).unwrap());
        let absent = ReviewRecord::new("e", "ccc ddd alone");
        assert!(!detect_single(&absent, &set, &w, tau).unwrap());
    }

    #[test]
    fn mismatched_set_is_an_error() {
        let set_a = build_citation_set(&["Kunz".to_string()], 2018, 2018).unwrap();
        let set_b = build_citation_set(&["Mains".to_string()], 2018, 2018).unwrap();
        let w = set_b.watermark(0).unwrap();
        let r = ReviewRecord::new("a", "text");
        assert!(matches!(
            detect_single(&r, &set_a, &w, 1),
            Err(DetectError::SetMismatch { .. })
        ));
    }
}
