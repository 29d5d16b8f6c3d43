//! Monte-Carlo verification of the FPR/FWER bounds and power comparison.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::synth::planted_review_text;
use super::TrialResult;
use crate::corpus::ReviewRecord;
use crate::detect::{
    bonferroni_detect, build_occurrence_matrix, decide_single, detect_multiple, greedy_discard,
    holm_detect, DetectError, DetectionConfig, DetectionOutcome, ScanConfig, Scanner, Solver,
};
use crate::seed;
use crate::watermark::WatermarkSet;

/// Simulates the single-review test on a null corpus.
///
/// Per trial, a fresh watermark is drawn uniformly for every review and the
/// single-review decision is recorded. Reviews containing no candidate can
/// never be flagged, so their draws are skipped; the flag distribution is
/// unchanged because draws are independent.
pub fn simulate_fpr(
    reviews: &[ReviewRecord],
    set: &WatermarkSet,
    tau: u64,
    trials: u64,
    seed_value: u64,
) -> TrialResult {
    let scanner = Scanner::new(set, ScanConfig::default());
    let rows: Vec<Vec<u32>> = reviews.iter().map(|r| scanner.scan(&r.text)).collect();
    let candidate_rows: Vec<&Vec<u32>> = rows.iter().filter(|r| !r.is_empty()).collect();
    let n = reviews.len() as u64;
    let policy = set.position_policy();

    let mut false_flags = 0u64;
    let mut false_flag_trials = 0u64;
    let mut fraction_acc = 0.0f64;
    for t in 0..trials {
        let mut rng = seed::rng(seed::derive_indexed(seed_value, "fpr-trial", t));
        let mut flags = 0u64;
        for row in &candidate_rows {
            let w = rng.random_range(0..set.len()) as u32;
            if decide_single(row, w, policy, tau) {
                flags += 1;
            }
        }
        false_flags += flags;
        false_flag_trials += u64::from(flags > 0);
        if n > 0 {
            fraction_acc += flags as f64 / n as f64;
        }
    }
    TrialResult {
        trials,
        n_reviews: n,
        false_flags,
        false_flag_trials,
        flagged_fraction_mean: if trials > 0 { fraction_acc / trials as f64 } else { 0.0 },
        fpr: if trials * n > 0 {
            false_flags as f64 / (trials * n) as f64
        } else {
            0.0
        },
        tpr: None,
    }
}

/// FWER simulation report: trial aggregates plus the one-time discard facts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FwerReport {
    pub result: TrialResult,
    pub residual: u64,
    pub constraint_rhs: f64,
    pub discarded_reviews: usize,
    pub discarded_watermarks: usize,
}

/// Simulates multiple-review detection on a null corpus.
///
/// The occurrence matrix and the discard solution are computed once; they
/// depend only on review text (the pre-registration property). Each trial
/// then draws a full assignment vector and counts flags. A trial with one or
/// more flags is a family-wise error.
pub fn simulate_fwer(
    reviews: &[ReviewRecord],
    set: &WatermarkSet,
    cfg: &DetectionConfig,
    trials: u64,
    seed_value: u64,
) -> Result<FwerReport, DetectError> {
    cfg.validate(reviews.len(), set.len())?;
    let x = build_occurrence_matrix(reviews, set)?;
    let discard = match cfg.solver {
        Solver::Greedy => greedy_discard(&x, cfg, seed::derive(seed_value, "discard"))?,
        Solver::Exact => crate::detect::exact_discard(&x, cfg)?,
    };
    let discarded_rows: std::collections::HashSet<usize> =
        discard.discarded_reviews.iter().copied().collect();
    let discarded_cols: std::collections::HashSet<u32> =
        discard.discarded_watermarks.iter().copied().collect();

    // Rows that can still produce a flag: kept rows with kept occurrences.
    let mut live_rows: Vec<Vec<u32>> = Vec::new();
    for i in 0..x.n_reviews() {
        if discarded_rows.contains(&i) {
            continue;
        }
        let kept: Vec<u32> = x
            .row(i)
            .iter()
            .copied()
            .filter(|j| !discarded_cols.contains(j))
            .collect();
        if !kept.is_empty() {
            live_rows.push(kept);
        }
    }

    let n = reviews.len() as u64;
    let mut false_flags = 0u64;
    let mut false_flag_trials = 0u64;
    let mut fraction_acc = 0.0f64;
    for t in 0..trials {
        let mut rng = seed::rng(seed::derive_indexed(seed_value, "fwer-trial", t));
        let mut flags = 0u64;
        for kept in &live_rows {
            let w = rng.random_range(0..set.len()) as u32;
            if kept.binary_search(&w).is_ok() {
                flags += 1;
            }
        }
        false_flags += flags;
        false_flag_trials += u64::from(flags > 0);
        if n > 0 {
            fraction_acc += flags as f64 / n as f64;
        }
    }
    Ok(FwerReport {
        result: TrialResult {
            trials,
            n_reviews: n,
            false_flags,
            false_flag_trials,
            flagged_fraction_mean: if trials > 0 { fraction_acc / trials as f64 } else { 0.0 },
            fpr: if trials * n > 0 {
                false_flags as f64 / (trials * n) as f64
            } else {
                0.0
            },
            tpr: None,
        },
        residual: discard.residual,
        constraint_rhs: cfg.alpha * set.len() as f64,
        discarded_reviews: discard.discarded_reviews.len(),
        discarded_watermarks: discard.discarded_watermarks.len(),
    })
}

/// Power/FPR of one detection method on a planted-vs-null corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodPower {
    pub flagged: usize,
    pub true_flags: usize,
    pub false_flags: usize,
    /// Fraction of planted reviews flagged; `None` when nothing was planted.
    pub tpr: Option<f64>,
    /// Fraction of null reviews flagged.
    pub fpr: f64,
}

/// Side-by-side power comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerReport {
    pub multiple: MethodPower,
    pub bonferroni: MethodPower,
    pub holm: MethodPower,
    pub outcome: DetectionOutcome,
    pub planted_ids: Vec<String>,
}

fn method_power(flagged: &[String], planted: &std::collections::HashSet<&str>, n_null: usize) -> MethodPower {
    let true_flags = flagged.iter().filter(|id| planted.contains(id.as_str())).count();
    let false_flags = flagged.len() - true_flags;
    MethodPower {
        flagged: flagged.len(),
        true_flags,
        false_flags,
        tpr: if planted.is_empty() {
            None
        } else {
            Some(true_flags as f64 / planted.len() as f64)
        },
        fpr: if n_null == 0 {
            0.0
        } else {
            false_flags as f64 / n_null as f64
        },
    }
}

/// Plants `planted_count` watermarked reviews into a null corpus, assigns a
/// uniformly drawn watermark to every review, and reports TPR/FPR for
/// multiple-review detection and both baselines.
pub fn simulate_power(
    null_reviews: &[ReviewRecord],
    planted_count: usize,
    set: &WatermarkSet,
    cfg: &DetectionConfig,
    seed_value: u64,
) -> Result<PowerReport, DetectError> {
    let mut reviews: Vec<ReviewRecord> = null_reviews.to_vec();
    let mut assignments: HashMap<String, crate::watermark::Watermark> = HashMap::new();

    let mut assign_rng = seed::rng(seed::derive(seed_value, "null-assignments"));
    for r in null_reviews {
        let idx = assign_rng.random_range(0..set.len());
        assignments.insert(r.review_id.clone(), set.watermark(idx).expect("in range"));
    }

    let mut planted_ids = Vec::with_capacity(planted_count);
    let mut plant_rng = seed::rng(seed::derive(seed_value, "planted-assignments"));
    for k in 0..planted_count {
        let idx = plant_rng.random_range(0..set.len());
        let w = set.watermark(idx).expect("in range");
        let id = format!("planted-{k:04}");
        let text = planted_review_text(
            set.scheme(),
            &w.surface,
            seed::derive_indexed(seed_value, "planted-text", k as u64),
        );
        reviews.push(ReviewRecord::new(id.clone(), text));
        assignments.insert(id.clone(), w);
        planted_ids.push(id);
    }

    let outcome = detect_multiple(&reviews, set, &assignments, cfg, seed::derive(seed_value, "discard"))?;
    let bonferroni = bonferroni_detect(&reviews, set, &assignments, cfg.alpha)?;
    let holm = holm_detect(&reviews, set, &assignments, cfg.alpha)?;

    let planted: std::collections::HashSet<&str> = planted_ids.iter().map(String::as_str).collect();
    let n_null = null_reviews.len();
    Ok(PowerReport {
        multiple: method_power(&outcome.flagged, &planted, n_null),
        bonferroni: method_power(&bonferroni, &planted, n_null),
        holm: method_power(&holm, &planted, n_null),
        outcome,
        planted_ids,
    })
}
