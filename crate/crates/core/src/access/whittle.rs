//! Whittle index for the two-state restless bandit and the genie-aided policies.

use super::env::{belief_update, Observation};
use crate::rf_env::{stationary_idle, MarkovChannelSet};

/// `k`-step unobserved belief propagation.
fn propagate(b: f64, p01: f64, p11: f64, k: usize) -> f64 {
    let w0 = stationary_idle(p01, p11);
    w0 - (p11 - p01).powi(k as i32) * (w0 - b)
}

/// Solve a 3×3 linear system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Whittle index of belief `omega` for a positively correlated chain (`p11 ≥ p01`)
/// under discount `beta ∈ (0, 1)`.
///
/// Above the stationary belief the index has the closed form `ω / (1 − β(p11 − ω))`;
/// at or beyond the chain's extreme beliefs it equals `ω`. Between `p01` and the
/// stationary belief the optimal single-arm policy is a threshold policy whose passive
/// spell after an occupied observation lasts `L` slots; the index is the subsidy
/// making both actions equally good at `ω`, found from the three linear Bellman
/// equations in `(V(p11), V(p01), m)`.
pub fn whittle_index(omega: f64, p01: f64, p11: f64, beta: f64) -> f64 {
    let w0 = stationary_idle(p01, p11);
    if omega <= p01 || omega >= p11 {
        return omega;
    }
    if omega >= w0 {
        return omega / (1.0 - beta * (p11 - omega));
    }
    // Passive spell length after an occupied observation.
    let mut l = 0usize;
    while propagate(p01, p01, p11, l) <= omega {
        l += 1;
        if l > 100_000 {
            break;
        }
    }
    let y = propagate(p01, p01, p11, l);
    let t = propagate(omega, p01, p11, 1);
    let bl = beta.powi(l as i32);
    let geo = (1.0 - bl) / (1.0 - beta);
    // Unknowns (V11, V01, m).
    let a = [
        [1.0 - beta * p11, -beta * (1.0 - p11), 0.0],
        [-bl * beta * y, 1.0 - bl * beta * (1.0 - y), -geo],
        [beta * omega - beta * beta * t, beta * (1.0 - omega) - beta * beta * (1.0 - t), -1.0],
    ];
    let b = [p11, bl * y, beta * t - omega];
    match solve3(a, b) {
        Some(x) => x[2],
        None => omega,
    }
}

/// Lowest-index channel of each subset.
fn first_channels(env: &MarkovChannelSet) -> Vec<usize> {
    env.representatives()
}

/// Pick the subset with the largest score (ties → lowest channel index) and return its
/// lowest-index channel.
fn best_channel(env: &MarkovChannelSet, scores: &[f64]) -> usize {
    let reps = first_channels(env);
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for (u, &s) in scores.iter().enumerate() {
        let ch = reps[u];
        if s > best.0 || (s == best.0 && ch < best.1) {
            best = (s, ch);
        }
    }
    best.1
}

/// Channel of the subset with the highest Whittle index. Falls back to the myopic rule
/// when the chain is negatively correlated, where the closed form does not apply.
pub fn whittle_act(env: &MarkovChannelSet, beliefs: &[f64], beta: f64) -> usize {
    if env.p11 < env.p01 {
        log::warn!("negatively correlated chain: Whittle policy falls back to argmax belief");
        return optimal_act(env, beliefs);
    }
    let idx: Vec<f64> = beliefs.iter().map(|&b| whittle_index(b, env.p01, env.p11, beta)).collect();
    best_channel(env, &idx)
}

/// Genie-aided argmax-belief channel (ties → lowest channel index).
pub fn optimal_act(env: &MarkovChannelSet, beliefs: &[f64]) -> usize {
    best_channel(env, beliefs)
}

/// Exact per-subset belief tracking with knowledge of the partition and dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTracker {
    pub beliefs: Vec<f64>,
}

impl BeliefTracker {
    /// Beliefs at the stationary idle probability.
    pub fn stationary(env: &MarkovChannelSet) -> Self {
        Self { beliefs: vec![stationary_idle(env.p01, env.p11); env.n_subsets] }
    }

    /// Fold in the observation of `channel`, then advance one slot.
    pub fn observe(&mut self, env: &MarkovChannelSet, channel: usize, obs: Observation) {
        let seen = env.subset_of(channel);
        for (u, b) in self.beliefs.iter_mut().enumerate() {
            let o = if u == seen { obs } else { Observation::None };
            *b = belief_update(*b, env.p01, env.p11, o);
        }
    }
}
