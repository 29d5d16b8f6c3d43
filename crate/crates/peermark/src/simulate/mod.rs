//! Monte-Carlo and resampling harness.
//!
//! Checks the advertised statistical guarantees empirically: the per-review
//! false positive rate, the family-wise error rate of multiple-review
//! detection, and statistical power against the Bonferroni and Holm
//! baselines. Also synthesizes null corpora matched to published occurrence
//! statistics (real review text is not redistributable), and computes
//! bootstrap confidence intervals and embedding success metrics.

mod bootstrap;
mod metrics;
mod montecarlo;
mod synth;

pub use bootstrap::{bootstrap_ci, coverage_study};
pub use metrics::{compute_hpsr_osr, similarity_match, SuccessMetrics};
pub use montecarlo::{simulate_fpr, simulate_fwer, simulate_power, FwerReport, MethodPower, PowerReport};
pub use synth::{planted_review_text, synth_corpus, CorpusProfile};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("infeasible corpus profile: {0}")]
    InfeasibleProfile(String),
    #[error("invalid counts: successes {successes} out of n {n}")]
    InvalidCounts { successes: u64, n: u64 },
    #[error("confidence level must lie in (0,1), got {0}")]
    BadLevel(f64),
    #[error("each item needs total_count >= 1")]
    EmptyItem,
    #[error(transparent)]
    Detect(#[from] crate::detect::DetectError),
}

/// Aggregates of one Monte-Carlo run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub trials: u64,
    /// Reviews tested per trial.
    pub n_reviews: u64,
    /// Total flags raised on null reviews across all trials.
    pub false_flags: u64,
    /// Trials in which at least one null review was flagged.
    pub false_flag_trials: u64,
    /// Mean over trials of (flags / reviews).
    pub flagged_fraction_mean: f64,
    /// False positive rate: null flags per review-test.
    pub fpr: f64,
    /// True positive rate over planted reviews, when any were planted.
    pub tpr: Option<f64>,
}

impl TrialResult {
    /// Empirical family-wise error rate.
    pub fn fwer(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.false_flag_trials as f64 / self.trials as f64
    }
}

/// Three-sigma binomial Monte-Carlo margin around a bound `p` at `n` trials.
pub fn three_sigma_margin(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
