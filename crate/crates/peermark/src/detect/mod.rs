//! Watermark detection: occurrence scanning, the single-review test, the
//! multiple-review test with its discard optimization, and the
//! Bonferroni/Holm baselines.
//!
//! Everything before the final flagging step runs without access to the
//! secret watermark assignments; scanning and the discard solvers see only
//! review text and the candidate set. That pre-registration property is what
//! makes the family-wise error-rate guarantee legitimate.

mod discard;
mod multiple;
pub mod normalize;
mod scan;
mod single;

pub use discard::{exact_discard, greedy_discard, DiscardResult, DiscardStep};
pub use multiple::{
    bonferroni_detect, bonferroni_threshold, detect_multiple, detect_multiple_on_matrix,
    holm_detect,
};
pub use normalize::normalize;
pub use scan::{
    build_occurrence_matrix, build_occurrence_matrix_scoped, scan_review, MatchScope,
    OccurrenceMatrix, ScanConfig, Scanner,
};
pub use single::{decide_single, detect_single, fpr_threshold};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("duplicate review id {0:?}")]
    DuplicateReviewId(String),
    #[error("missing assignment for review {0:?}")]
    MissingAssignment(String),
    #[error("watermark belongs to set {actual}, expected set {expected}")]
    SetMismatch { expected: String, actual: String },
    #[error("watermark index {index} out of range for set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("alpha must lie in (0,1), got {0}")]
    BadAlpha(f64),
    #[error("rho {rho} exceeds review count {n}")]
    BadRho { rho: usize, n: usize },
    #[error("omega {omega} exceeds watermark count {n}")]
    BadOmega { omega: usize, n: usize },
    #[error("infeasible combination of \u{3c1} and \u{3a9}")]
    Infeasible,
    #[error("exact solver limited to 20x20 instances, got {rows}x{cols}")]
    InstanceTooLarge { rows: usize, cols: usize },
}

/// Which solver handles the discard optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solver {
    Greedy,
    Exact,
}

/// Parameters for multiple-review detection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Upper bound on the family-wise error rate.
    pub alpha: f64,
    /// Maximum number of reviews the solver may discard. `None` means no
    /// limit beyond the review count itself (the default).
    pub rho: Option<usize>,
    /// Maximum number of watermarks the solver may discard. `None` means no
    /// limit beyond the set size itself (the default).
    pub omega: Option<usize>,
    pub solver: Solver,
}

impl DetectionConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            rho: None,
            omega: None,
            solver: Solver::Greedy,
        }
    }

    pub fn validate(&self, n_reviews: usize, n_watermarks: usize) -> Result<(), DetectError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DetectError::BadAlpha(self.alpha));
        }
        if let Some(rho) = self.rho {
            if rho > n_reviews {
                return Err(DetectError::BadRho { rho, n: n_reviews });
            }
        }
        if let Some(omega) = self.omega {
            if omega > n_watermarks {
                return Err(DetectError::BadOmega {
                    omega,
                    n: n_watermarks,
                });
            }
        }
        Ok(())
    }
}

/// Result of multiple-review detection: flags plus the discard audit trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionOutcome {
    /// Review ids flagged as LLM-generated.
    pub flagged: Vec<String>,
    /// Review ids discarded by the solver (set I).
    pub discarded_reviews: Vec<String>,
    /// Watermark indices discarded by the solver (set J).
    pub discarded_watermarks: Vec<u32>,
    /// |I| + |J|*|R \ I| / |W|, the effective number of discarded reviews.
    pub objective_value: f64,
    /// Residual occurrence mass over kept reviews and watermarks.
    pub constraint_lhs: u64,
    /// The bound the residual must respect: alpha * |W|.
    pub constraint_rhs: f64,
    /// Ordered discard decisions.
    pub trace: Vec<DiscardStep>,
}
