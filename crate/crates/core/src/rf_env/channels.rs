use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{ensure, Result};

/// Channels partitioned into subsets that share one two-state Markov chain each.
///
/// `states[u]` is `true` when subset `u` is idle.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChannelSet {
    pub n_channels: usize,
    pub n_subsets: usize,
    pub assignment: Vec<usize>,
    /// P(idle at t+1 | occupied at t).
    pub p01: f64,
    /// P(idle at t+1 | idle at t).
    pub p11: f64,
    pub states: Vec<bool>,
}

impl MarkovChannelSet {
    pub fn new(
        assignment: Vec<usize>,
        n_subsets: usize,
        p01: f64,
        p11: f64,
        states: Vec<bool>,
    ) -> Result<Self> {
        ensure!((0.0..=1.0).contains(&p01), InvalidArgument, "p01 must lie in [0,1], got {p01}");
        ensure!((0.0..=1.0).contains(&p11), InvalidArgument, "p11 must lie in [0,1], got {p11}");
        ensure!(states.len() == n_subsets, InvalidArgument, "one state per subset required");
        ensure!(
            assignment.iter().all(|&u| u < n_subsets),
            InvalidArgument,
            "assignment references a missing subset"
        );
        for u in 0..n_subsets {
            ensure!(assignment.contains(&u), InvalidArgument, "subset {u} is empty");
        }
        Ok(Self { n_channels: assignment.len(), n_subsets, assignment, p01, p11, states })
    }

    /// Random partition of `n_channels` into `n_subsets` groups of (near-)equal size, with
    /// subset states drawn from the stationary distribution.
    pub fn random<R: Rng + ?Sized>(
        n_channels: usize,
        n_subsets: usize,
        p01: f64,
        p11: f64,
        rng: &mut R,
    ) -> Result<Self> {
        ensure!(
            n_subsets >= 1 && n_subsets <= n_channels,
            InvalidArgument,
            "need 1 <= subsets ({n_subsets}) <= channels ({n_channels})"
        );
        let mut order: Vec<usize> = (0..n_channels).collect();
        order.shuffle(rng);
        let mut assignment = vec![0; n_channels];
        for (rank, &ch) in order.iter().enumerate() {
            assignment[ch] = rank % n_subsets;
        }
        let idle = stationary_idle(p01, p11);
        let states = (0..n_subsets).map(|_| rng.random_bool(idle)).collect();
        Self::new(assignment, n_subsets, p01, p11, states)
    }

    pub fn is_idle(&self, channel: usize) -> bool {
        self.states[self.assignment[channel]]
    }

    pub fn subset_of(&self, channel: usize) -> usize {
        self.assignment[channel]
    }

    /// First channel (lowest index) of every subset.
    pub fn representatives(&self) -> Vec<usize> {
        let mut rep = vec![usize::MAX; self.n_subsets];
        for (ch, &u) in self.assignment.iter().enumerate() {
            rep[u] = rep[u].min(ch);
        }
        rep
    }

    /// Advances every subset by one slot.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        markov_channel_step(self, rng)
    }
}

/// Stationary idle probability `p01 / (1 - p11 + p01)`; 0.5 for the identity chain.
pub fn stationary_idle(p01: f64, p11: f64) -> f64 {
    let denom = 1.0 - p11 + p01;
    if denom <= 0.0 {
        0.5
    } else {
        p01 / denom
    }
}

pub fn markov_channel_step<R: Rng + ?Sized>(chan: &mut MarkovChannelSet, rng: &mut R) {
    for s in chan.states.iter_mut() {
        let p_idle = if *s { chan.p11 } else { chan.p01 };
        // one uniform per subset keeps the stream layout independent of the state
        let u: f64 = rng.random();
        *s = u < p_idle;
    }
}
