//! Feedforward Q-network baseline with experience replay and a frozen target copy.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::env::{encode_window, HistoryState};
use crate::error::{ensure, Result};

/// Network and training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnqParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Gradient steps between target-network refreshes.
    pub target_sync: usize,
    /// Transitions collected before training starts.
    pub warmup: usize,
}

impl Default for NnqParams {
    fn default() -> Self {
        Self { hidden: 64, learning_rate: 1e-3, batch_size: 32, replay_capacity: 5000, target_sync: 200, warmup: 200 }
    }
}

impl NnqParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.hidden >= 1, Config, "hidden width must be >= 1");
        ensure!(self.learning_rate > 0.0, Config, "learning_rate must be > 0");
        ensure!(self.batch_size >= 1, Config, "batch_size must be >= 1");
        ensure!(self.replay_capacity >= self.batch_size, Config, "replay_capacity must hold one batch");
        ensure!(self.target_sync >= 1, Config, "target_sync must be >= 1");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major `n_out × n_in`.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn new<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        // He-uniform initialization for rectifier layers.
        let lim = (6.0 / n_in as f64).sqrt();
        let u = Uniform::new(-lim, lim).expect("valid range");
        Self { n_in, n_out, w: (0..n_in * n_out).map(|_| u.sample(rng)).collect(), b: vec![0.0; n_out] }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let nz = nonzeros(x);
        if nz.len() * 2 < self.n_in {
            // History inputs are mostly zeros: touch only the active columns.
            for o in 0..self.n_out {
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                out.push(self.b[o] + nz.iter().map(|&i| row[i] * x[i]).sum::<f64>());
            }
        } else {
            for o in 0..self.n_out {
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                out.push(self.b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>());
            }
        }
    }
}

fn nonzeros(x: &[f64]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
}

/// Multilayer perceptron with rectifier hidden units and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// One replayed transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        Self { layers: sizes.windows(2).map(|w| Layer::new(w[0], w[1], rng)).collect() }
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Activations of every layer (input first, post-rectifier for hidden layers).
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.n_out);
            layer.forward(acts.last().unwrap(), &mut out);
            if i + 1 < self.layers.len() {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().unwrap()
    }

    /// Gradient of `½ Σ (Q(s,a) − y)²` over a batch, flattened in layer order (weights
    /// then biases), together with the loss.
    pub fn td_gradient(&self, batch: &[(&[f64], usize, f64)]) -> (Vec<f64>, f64) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> =
            self.layers.iter().map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()])).collect();
        let mut loss = 0.0;
        for &(x, a, y) in batch {
            let acts = self.activations(x);
            let q = acts.last().unwrap()[a];
            let err = q - y;
            loss += 0.5 * err * err;
            let mut delta = vec![0.0; self.n_outputs()];
            delta[a] = err;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let (gw, gb) = &mut grads[li];
                let nz = nonzeros(input);
                for o in 0..layer.n_out {
                    if delta[o] == 0.0 {
                        continue;
                    }
                    gb[o] += delta[o];
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for &i in &nz {
                        row[i] += delta[o] * input[i];
                    }
                }
                if li == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.n_in];
                for o in 0..layer.n_out {
                    if delta[o] == 0.0 {
                        continue;
                    }
                    let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += delta[o] * w;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        let n = batch.len().max(1) as f64;
        let flat = grads.into_iter().flat_map(|(w, b)| w.into_iter().chain(b)).map(|g| g / n).collect();
        (flat, loss / n)
    }

    /// Mean of `½(Q(s,a) − y)²` over a batch.
    pub fn td_loss(&self, batch: &[(&[f64], usize, f64)]) -> f64 {
        batch.iter().map(|&(x, a, y)| 0.5 * (self.forward(x)[a] - y).powi(2)).sum::<f64>() / batch.len().max(1) as f64
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    /// Plain gradient-descent step.
    pub fn sgd_step(&mut self, grad: &[f64], lr: f64) {
        for (p, g) in self.params_mut().zip(grad) {
            *p -= lr * g;
        }
    }
}

/// Adam optimizer state.
#[derive(Debug, Clone, PartialEq)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, net: &mut Mlp, grad: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for (((p, g), m), v) in net.params_mut().zip(grad).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            *m = B1 * *m + (1.0 - B1) * g;
            *v = B2 * *v + (1.0 - B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + 1e-8);
        }
    }
}

/// Online Q-learning agent around an [`Mlp`].
#[derive(Debug, Clone)]
pub struct NnqAgent {
    pub params: NnqParams,
    pub n_channels: usize,
    pub history_len: usize,
    pub discount: f64,
    net: Mlp,
    target: Mlp,
    opt: Adam,
    replay: Vec<Transition>,
    next_slot: usize,
    steps: usize,
    resets: usize,
}

impl NnqAgent {
    pub fn new<R: Rng + ?Sized>(
        params: NnqParams,
        n_channels: usize,
        history_len: usize,
        discount: f64,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        ensure!(n_channels >= 1 && history_len >= 1, Config, "need at least one channel and one history slot");
        let net = Mlp::new(&[history_len * n_channels, params.hidden, params.hidden, n_channels], rng);
        Ok(Self {
            params,
            n_channels,
            history_len,
            discount,
            target: net.clone(),
            opt: Adam::new(net.n_params()),
            net,
            replay: Vec::new(),
            next_slot: 0,
            steps: 0,
            resets: 0,
        })
    }

    pub fn q_values(&self, h: &HistoryState) -> Vec<f64> {
        self.net.forward(&encode_window(h, self.n_channels))
    }

    /// Store a transition and take one replayed gradient step once warm.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        h: &HistoryState,
        action: usize,
        reward: f64,
        next: &HistoryState,
        rng: &mut R,
    ) -> Result<()> {
        let t = Transition {
            state: encode_window(h, self.n_channels),
            action,
            reward,
            next_state: encode_window(next, self.n_channels),
        };
        if self.replay.len() < self.params.replay_capacity {
            self.replay.push(t);
        } else {
            self.replay[self.next_slot] = t;
            self.next_slot = (self.next_slot + 1) % self.params.replay_capacity;
        }
        if self.replay.len() < self.params.warmup.max(self.params.batch_size) {
            return Ok(());
        }
        let picks: Vec<&Transition> = (0..self.params.batch_size)
            .map(|_| self.replay.choose(rng).expect("nonempty replay"))
            .collect();
        let targets: Vec<f64> = picks
            .iter()
            .map(|t| {
                let next_max = self.target.forward(&t.next_state).into_iter().fold(f64::NEG_INFINITY, f64::max);
                t.reward + self.discount * next_max
            })
            .collect();
        let batch: Vec<(&[f64], usize, f64)> =
            picks.iter().zip(&targets).map(|(t, &y)| (t.state.as_slice(), t.action, y)).collect();
        let (grad, loss) = self.net.td_gradient(&batch);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            ensure!(self.resets == 0, Numerical, "Q-network diverged twice (loss {loss})");
            log::warn!("Q-network loss became non-finite; reinitializing");
            self.resets += 1;
            let sizes = [self.history_len * self.n_channels, self.params.hidden, self.params.hidden, self.n_channels];
            self.net = Mlp::new(&sizes, rng);
            self.target = self.net.clone();
            self.opt = Adam::new(self.net.n_params());
            return Ok(());
        }
        self.opt.step(&mut self.net, &grad, self.params.learning_rate);
        self.steps += 1;
        if self.steps % self.params.target_sync == 0 {
            self.target = self.net.clone();
        }
        Ok(())
    }
}

/// ε-greedy action from the Q-network (ties → lowest index).
pub fn nnq_act<R: Rng + ?Sized>(agent: &NnqAgent, h: &HistoryState, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        return rng.random_range(0..agent.n_channels);
    }
    argmax_first(&agent.q_values(h))
}

/// Index of the largest value; ties → lowest index.
pub fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
