//! Slot dynamics, sensing history, belief calculus and episode traces.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;

use crate::error::{ensure, Result};
use crate::rf_env::{markov_channel_step, MarkovChannelSet};

/// What the user learned about the channel it accessed in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observation {
    Idle,
    Occupied,
    /// Padding before the first real slot of an episode.
    None,
}

impl Observation {
    /// Feature code: idle = +1, occupied = −1, none = 0.
    pub fn code(self) -> f64 {
        match self {
            Self::Idle => 1.0,
            Self::Occupied => -1.0,
            Self::None => 0.0,
        }
    }
}

/// Access `action` for one slot: observe its current state, earn 1 if idle, then advance
/// every subset one step.
pub fn env_step<R: Rng + ?Sized>(
    env: &mut MarkovChannelSet,
    action: usize,
    rng: &mut R,
) -> Result<(Observation, f64)> {
    ensure!(
        action < env.n_channels,
        InvalidArgument,
        "action {action} out of range for {} channels",
        env.n_channels
    );
    let idle = env.is_idle(action);
    markov_channel_step(env, rng);
    Ok(if idle { (Observation::Idle, 1.0) } else { (Observation::Occupied, 0.0) })
}

/// The last `M` (action, observation) pairs, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    slots: VecDeque<(usize, Observation)>,
}

impl HistoryState {
    /// An all-`none` history of length `m`.
    pub fn new(m: usize) -> Self {
        Self { slots: std::iter::repeat_n((0, Observation::None), m).collect() }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Record a slot, dropping the oldest one.
    pub fn push(&mut self, action: usize, obs: Observation) {
        if self.slots.is_empty() {
            return;
        }
        self.slots.pop_back();
        self.slots.push_front((action, obs));
    }

    /// Pairs, most recent first.
    pub fn iter(&self) -> impl Iterator<Item = &(usize, Observation)> {
        self.slots.iter()
    }
}

/// Window part of the feature vector: for every slot, the one-hot of its action scaled by
/// the observation code.
pub fn encode_window(h: &HistoryState, n_channels: usize) -> Vec<f64> {
    let mut v = vec![0.0; h.len() * n_channels];
    for (m, &(a, o)) in h.iter().enumerate() {
        if a < n_channels {
            v[m * n_channels + a] = o.code();
        }
    }
    v
}

/// Window features followed by the one-hot of the candidate action.
pub fn encode_history(h: &HistoryState, action: usize, n_channels: usize) -> Vec<f64> {
    let mut v = encode_window(h, n_channels);
    let mut cand = vec![0.0; n_channels];
    if action < n_channels {
        cand[action] = 1.0;
    }
    v.extend(cand);
    v
}

/// One-step idle-probability update of a two-state chain.
pub fn belief_update(b: f64, p01: f64, p11: f64, obs: Observation) -> f64 {
    match obs {
        Observation::Idle => p11,
        Observation::Occupied => p01,
        Observation::None => (b * p11 + (1.0 - b) * p01).clamp(0.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Learning,
    Testing,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Learning => "learning",
            Self::Testing => "testing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub slot: usize,
    pub phase: Phase,
    pub action: usize,
    pub idle: bool,
    pub reward: f64,
}

/// Slot-by-slot record of one access run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub rows: Vec<TraceRow>,
}

impl EpisodeTrace {
    pub fn push(&mut self, phase: Phase, action: usize, idle: bool) {
        let slot = self.rows.len();
        self.rows.push(TraceRow { slot, phase, action, idle, reward: if idle { 1.0 } else { 0.0 } });
    }

    /// CSV with columns `slot,phase,action,idle,reward`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "phase", "action", "idle", "reward"])?;
        for r in &self.rows {
            w.write_record([
                r.slot.to_string(),
                r.phase.as_str().to_string(),
                r.action.to_string(),
                u8::from(r.idle).to_string(),
                r.reward.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fraction of slots of `phase` in which the accessed channel was idle.
pub fn eval_accuracy(trace: &EpisodeTrace, phase: Phase) -> Result<f64> {
    let rows: Vec<&TraceRow> = trace.rows.iter().filter(|r| r.phase == phase).collect();
    ensure!(!rows.is_empty(), InsufficientData, "trace has no {} slots", phase.as_str());
    Ok(rows.iter().map(|r| r.reward).sum::<f64>() / rows.len() as f64)
}
