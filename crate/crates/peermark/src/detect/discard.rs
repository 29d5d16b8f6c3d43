//! The discard optimization behind multiple-review detection.
//!
//! When the occurrence mass of a review collection exceeds `alpha * |W|`, a
//! subset of reviews (I) and watermarks (J) is removed until the residual
//! mass satisfies the constraint; flagging then needs no further multiple
//! testing correction. The objective is the effective number of discarded
//! reviews, `|I| + |J| * |R \ I| / |W|`.
//!
//! [`greedy_discard`] is the iterative heuristic used in production;
//! [`exact_discard`] minimizes the objective by enumeration on small
//! instances and serves as the oracle for the greedy path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scan::OccurrenceMatrix;
use super::{DetectError, DetectionConfig};
use crate::seed;

/// One discard decision, in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiscardStep {
    Review {
        row: usize,
        /// Occurrence mass removed by this discard.
        removed: u32,
    },
    Watermark {
        col: u32,
        removed: u32,
    },
}

/// Discard sets plus bookkeeping for the audit trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscardResult {
    /// Row indices of discarded reviews (set I), ascending.
    pub discarded_reviews: Vec<usize>,
    /// Candidate indices of discarded watermarks (set J), ascending.
    pub discarded_watermarks: Vec<u32>,
    /// |I| + |J| * |R \ I| / |W|.
    pub objective: f64,
    /// Residual occurrence mass after discarding.
    pub residual: u64,
    pub trace: Vec<DiscardStep>,
}

fn objective(n_rows: usize, n_cols: usize, discarded_rows: usize, discarded_cols: usize) -> f64 {
    if n_cols == 0 {
        return discarded_rows as f64;
    }
    discarded_rows as f64
        + (discarded_cols as f64) * ((n_rows - discarded_rows) as f64) / (n_cols as f64)
}

struct GreedyState<'a> {
    x: &'a OccurrenceMatrix,
    row_active: Vec<bool>,
    col_active: Vec<bool>,
    row_sums: Vec<u32>,
    col_sums: Vec<u32>,
    /// Rows touching each occupied column.
    col_rows: std::collections::HashMap<u32, Vec<usize>>,
    /// Columns that ever held a one; the argmax scan is restricted to these.
    occupied_cols: Vec<u32>,
    total: u64,
    n_active_rows: usize,
    n_active_cols: usize,
}

impl<'a> GreedyState<'a> {
    fn new(x: &'a OccurrenceMatrix) -> Self {
        let mut col_rows: std::collections::HashMap<u32, Vec<usize>> =
            std::collections::HashMap::new();
        for i in 0..x.n_reviews() {
            for &j in x.row(i) {
                col_rows.entry(j).or_default().push(i);
            }
        }
        let mut occupied_cols: Vec<u32> = col_rows.keys().copied().collect();
        occupied_cols.sort_unstable();
        Self {
            x,
            row_active: vec![true; x.n_reviews()],
            col_active: vec![true; x.n_watermarks()],
            row_sums: x.row_sums().to_vec(),
            col_sums: x.col_sums().to_vec(),
            col_rows,
            occupied_cols,
            total: x.total(),
            n_active_rows: x.n_reviews(),
            n_active_cols: x.n_watermarks(),
        }
    }

    fn argmax_row(&self, rng: &mut impl Rng) -> (usize, u32) {
        let mut best = 0u32;
        let mut ties: Vec<usize> = Vec::new();
        for (i, active) in self.row_active.iter().enumerate() {
            if !active {
                continue;
            }
            let s = self.row_sums[i];
            if s > best {
                best = s;
                ties.clear();
                ties.push(i);
            } else if s == best && s > 0 {
                ties.push(i);
            }
        }
        debug_assert!(best > 0);
        (ties[rng.random_range(0..ties.len())], best)
    }

    fn argmax_col(&self, rng: &mut impl Rng) -> (u32, u32) {
        let mut best = 0u32;
        let mut ties: Vec<u32> = Vec::new();
        for &j in &self.occupied_cols {
            if !self.col_active[j as usize] {
                continue;
            }
            let s = self.col_sums[j as usize];
            if s > best {
                best = s;
                ties.clear();
                ties.push(j);
            } else if s == best && s > 0 {
                ties.push(j);
            }
        }
        debug_assert!(best > 0);
        (ties[rng.random_range(0..ties.len())], best)
    }

    fn discard_row(&mut self, i: usize) -> u32 {
        let mut removed = 0;
        for &j in self.x.row(i) {
            if self.col_active[j as usize] {
                self.col_sums[j as usize] -= 1;
                removed += 1;
            }
        }
        self.row_active[i] = false;
        self.row_sums[i] = 0;
        self.total -= u64::from(removed);
        self.n_active_rows -= 1;
        removed
    }

    fn discard_col(&mut self, j: u32) -> u32 {
        let mut removed = 0;
        if let Some(rows) = self.col_rows.get(&j) {
            for &i in rows {
                if self.row_active[i] {
                    self.row_sums[i] -= 1;
                    removed += 1;
                }
            }
        }
        self.col_active[j as usize] = false;
        self.col_sums[j as usize] = 0;
        self.total -= u64::from(removed);
        self.n_active_cols -= 1;
        removed
    }
}

/// Greedy heuristic for the discard optimization.
///
/// Each iteration locates the review with the most remaining candidates and
/// the watermark present in the most remaining reviews (ties broken uniformly
/// at random from `seed`), then discards whichever costs less objective per
/// unit of constraint reduction, honoring the budgets. Errs with
/// [`DetectError::Infeasible`] when both budgets are exhausted while the
/// constraint is still violated.
pub fn greedy_discard(
    x: &OccurrenceMatrix,
    cfg: &DetectionConfig,
    tie_seed: u64,
) -> Result<DiscardResult, DetectError> {
    cfg.validate(x.n_reviews(), x.n_watermarks())?;
    let rho = cfg.rho.unwrap_or(x.n_reviews());
    let omega = cfg.omega.unwrap_or(x.n_watermarks());
    let target = cfg.alpha * x.n_watermarks() as f64;

    let mut state = GreedyState::new(x);
    let mut rng = seed::rng(tie_seed);
    let mut rows_out: Vec<usize> = Vec::new();
    let mut cols_out: Vec<u32> = Vec::new();
    let mut trace = Vec::new();

    while state.total as f64 > target {
        let (i_star, row_sum) = state.argmax_row(&mut rng);
        let (j_star, col_sum) = state.argmax_col(&mut rng);
        if rows_out.len() >= rho && cols_out.len() >= omega {
            return Err(DetectError::Infeasible);
        }
        // Objective increase per unit of constraint reduction, for each move.
        let ratio_review = state.n_active_cols as f64 / f64::from(row_sum);
        let ratio_watermark = state.n_active_rows as f64 / f64::from(col_sum);
        let take_review = (ratio_review < ratio_watermark && rows_out.len() < rho)
            || cols_out.len() >= omega;
        if take_review {
            let removed = state.discard_row(i_star);
            rows_out.push(i_star);
            trace.push(DiscardStep::Review {
                row: i_star,
                removed,
            });
        } else {
            debug_assert!(
                (ratio_review >= ratio_watermark && cols_out.len() < omega)
                    || rows_out.len() >= rho
            );
            let removed = state.discard_col(j_star);
            cols_out.push(j_star);
            trace.push(DiscardStep::Watermark {
                col: j_star,
                removed,
            });
        }
    }

    assert!(state.total as f64 <= target);
    assert!(rows_out.len() <= rho && cols_out.len() <= omega);
    let obj = objective(x.n_reviews(), x.n_watermarks(), rows_out.len(), cols_out.len());
    rows_out.sort_unstable();
    cols_out.sort_unstable();
    Ok(DiscardResult {
        discarded_reviews: rows_out,
        discarded_watermarks: cols_out,
        objective: obj,
        residual: state.total,
        trace,
    })
}

/// Exact minimizer for the discard optimization, by enumeration.
///
/// Guarded to instances of at most 20 reviews and 20 watermarks; intended as
/// a test oracle for the greedy path. Enumerates every watermark subset J
/// over occupied columns; for fixed J the optimal review set removes rows in
/// decreasing order of residual row sum until the constraint holds.
pub fn exact_discard(
    x: &OccurrenceMatrix,
    cfg: &DetectionConfig,
) -> Result<DiscardResult, DetectError> {
    cfg.validate(x.n_reviews(), x.n_watermarks())?;
    let (n_rows, n_cols) = (x.n_reviews(), x.n_watermarks());
    if n_rows > 20 || n_cols > 20 {
        return Err(DetectError::InstanceTooLarge {
            rows: n_rows,
            cols: n_cols,
        });
    }
    let rho = cfg.rho.unwrap_or(n_rows);
    let omega = cfg.omega.unwrap_or(n_cols);
    let target = cfg.alpha * n_cols as f64;

    let occupied: Vec<u32> = (0..n_cols as u32)
        .filter(|&j| x.col_sums()[j as usize] > 0)
        .collect();
    let mut best: Option<DiscardResult> = None;

    for mask in 0u32..(1u32 << occupied.len()) {
        let picked = mask.count_ones() as usize;
        if picked > omega {
            continue;
        }
        let cols: Vec<u32> = occupied
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &j)| j)
            .collect();
        // Residual row sums once J is gone.
        let mut residual_rows: Vec<(u32, usize)> = (0..n_rows)
            .map(|i| {
                let kept = x.row(i).iter().filter(|j| !cols.contains(j)).count() as u32;
                (kept, i)
            })
            .collect();
        let mut sum: u64 = residual_rows.iter().map(|&(s, _)| u64::from(s)).sum();
        residual_rows.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut removed_rows = Vec::new();
        let mut cursor = residual_rows.iter();
        while sum as f64 > target && removed_rows.len() < rho {
            let &(s, i) = cursor.next().expect("rows remain while sum positive");
            sum -= u64::from(s);
            removed_rows.push(i);
        }
        if sum as f64 > target {
            continue;
        }
        let obj = objective(n_rows, n_cols, removed_rows.len(), cols.len());
        if best.as_ref().is_none_or(|b| obj < b.objective) {
            removed_rows.sort_unstable();
            best = Some(DiscardResult {
                discarded_reviews: removed_rows,
                discarded_watermarks: cols,
                objective: obj,
                residual: sum,
                trace: Vec::new(),
            });
        }
    }

    best.ok_or(DetectError::Infeasible)
}
