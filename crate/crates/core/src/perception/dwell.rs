use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Geometric holding-time model per level.
///
/// `continuation[l]` is the probability that level `l` persists into the next slot, in
/// `[0, 1)`; `mean_dwell[l] = 1 / (1 - continuation[l])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellModel<T> {
    pub continuation: Vec<T>,
    pub mean_dwell: Vec<T>,
}

impl<T: Real> DwellModel<T> {
    pub fn from_continuation(continuation: Vec<T>) -> Self {
        let mean_dwell = continuation.iter().map(|&q| T::one() / (T::one() - q)).collect();
        Self { continuation, mean_dwell }
    }

    pub fn n_levels(&self) -> usize {
        self.continuation.len()
    }
}

/// Dwell estimate from a label sequence in slot order.
///
/// Per level, continuation = within-run continuations / slots spent in runs of that level,
/// with the trailing run included at face value. Levels never visited get continuation 0.
pub fn infer_dwell<T: Real>(assignments: &[usize], n_levels: usize) -> Result<DwellModel<T>> {
    ensure!(!assignments.is_empty(), InsufficientData, "dwell estimation needs a nonempty sequence");
    let n_levels = n_levels.max(assignments.iter().max().unwrap() + 1);
    let mut slots = vec![0usize; n_levels];
    let mut continues = vec![0usize; n_levels];
    for (i, &z) in assignments.iter().enumerate() {
        slots[z] += 1;
        if i + 1 < assignments.len() && assignments[i + 1] == z {
            continues[z] += 1;
        }
    }
    let q = (0..n_levels)
        .map(|l| {
            if slots[l] == 0 {
                T::zero()
            } else {
                T::from_usize_lossy(continues[l]) / T::from_usize_lossy(slots[l])
            }
        })
        .collect();
    Ok(DwellModel::from_continuation(q))
}
