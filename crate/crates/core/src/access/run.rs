//! Learning/testing runs of every access policy on a shared channel realization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{env_step, eval_accuracy, EpisodeTrace, HistoryState, Observation, Phase};
use super::gp::{Feature, GpParams, GpQModel, GpSnapshot};
use super::nnq::{argmax_first, nnq_act, NnqAgent, NnqParams};
use super::whittle::{optimal_act, whittle_act, BeliefTracker};
use crate::error::{ensure, Result};
use crate::rf_env::MarkovChannelSet;

/// Settings of one access experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccessConfig {
    pub n_channels: usize,
    pub n_subsets: usize,
    pub p01: f64,
    pub p11: f64,
    /// Slots per span; the history window restarts empty at every span.
    pub span_len: usize,
    pub learn_spans: usize,
    pub test_spans: usize,
    /// History window length M.
    pub history_len: usize,
    /// Discount used by the Q-learners and the Whittle index.
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub gp: GpParams,
    /// One GP per action over history features instead of one shared GP over
    /// (history, action) features.
    pub gp_per_action: bool,
    pub nnq: NnqParams,
}

impl Default for AccessConfig {
    fn default() -> Self {
        Self {
            n_channels: 16,
            n_subsets: 4,
            p01: 0.2,
            p11: 0.9,
            span_len: 50,
            learn_spans: 120,
            test_spans: 30,
            history_len: 8,
            discount: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.02,
            gp: GpParams::default(),
            gp_per_action: false,
            nnq: NnqParams::default(),
        }
    }
}

impl AccessConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_channels >= 1, Config, "n_channels must be >= 1");
        ensure!(
            (1..=self.n_channels).contains(&self.n_subsets),
            Config,
            "n_subsets must lie in 1..={}, got {}",
            self.n_channels,
            self.n_subsets
        );
        ensure!((0.0..=1.0).contains(&self.p01), Config, "p01 must lie in [0,1]");
        ensure!((0.0..=1.0).contains(&self.p11), Config, "p11 must lie in [0,1]");
        ensure!(self.span_len >= 1, Config, "span_len must be >= 1");
        ensure!(self.test_spans >= 1, Config, "test_spans must be >= 1");
        ensure!(self.history_len >= 1, Config, "history_len must be >= 1");
        ensure!(self.discount > 0.0 && self.discount < 1.0, Config, "discount must lie in (0,1)");
        ensure!(
            (0.0..=1.0).contains(&self.epsilon_start) && (0.0..=1.0).contains(&self.epsilon_end),
            Config,
            "epsilon schedule must lie in [0,1]"
        );
        self.gp.validate()?;
        self.nnq.validate()
    }

    fn epsilon(&self, slot: usize) -> f64 {
        let total = self.learn_spans * self.span_len;
        if total <= 1 {
            return self.epsilon_end;
        }
        let f = slot as f64 / (total - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessMethod {
    Gprl,
    Nnq,
    Whittle,
    Optimal,
    Random,
}

impl AccessMethod {
    pub const ALL: [AccessMethod; 5] = [Self::Optimal, Self::Whittle, Self::Gprl, Self::Nnq, Self::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gprl => "gprl",
            Self::Nnq => "nnq",
            Self::Whittle => "whittle",
            Self::Optimal => "optimal",
            Self::Random => "random",
        }
    }
}

/// Outcome of one run.
#[derive(Debug, Clone)]
pub struct AccessRun {
    pub method: AccessMethod,
    pub trace: EpisodeTrace,
    /// Mean reward of every learning span.
    pub learning_curve: Vec<f64>,
    /// Testing-phase reward rate.
    pub accuracy: f64,
    /// Testing-phase fraction of slots whose channel lies in a max-belief subset.
    pub optimal_agreement: f64,
    pub gp: Option<GpSnapshot>,
}

/// ε-greedy action from GP Q-values (ties → lowest index).
pub fn gprl_act<R: Rng + ?Sized>(
    gp: &GpQModel,
    h: &HistoryState,
    n_channels: usize,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    if rng.random::<f64>() < epsilon {
        return rng.random_range(0..n_channels);
    }
    argmax_first(&gp_q_values(gp, h, n_channels))
}

/// Q-values of every action from a shared GP over (history, action) features.
pub fn gp_q_values(gp: &GpQModel, h: &HistoryState, n_channels: usize) -> Vec<f64> {
    gp.predict_means_one_hot(&Feature::from_window(h, n_channels), h.len() * n_channels, n_channels)
}

/// Q-values of every action from one GP per action over history features.
pub fn per_action_q_values(gps: &[GpQModel], h: &HistoryState, n_channels: usize) -> Vec<f64> {
    let x = Feature::from_window(h, n_channels);
    gps.iter().map(|gp| gp.predict_mean(&x)).collect()
}

/// One GP Q-learning step toward `r + γ·max_a′ Q(h′, a′)`.
pub fn gprl_learn(
    gp: &mut GpQModel,
    h: &HistoryState,
    action: usize,
    reward: f64,
    next: &HistoryState,
    n_channels: usize,
    discount: f64,
) -> Result<()> {
    let next_max = gp_q_values(gp, next, n_channels).into_iter().fold(f64::NEG_INFINITY, f64::max);
    gp.update_feature(Feature::from_history(h, action, n_channels), reward + discount * next_max)?;
    ensure!(gp.dictionary_size() <= gp.params().budget, Numerical, "GP dictionary exceeded its budget");
    Ok(())
}

enum Learner {
    Gp(GpQModel),
    GpPerAction(Vec<GpQModel>),
    Net(Box<NnqAgent>),
    None,
}

/// Independent random streams for the channels and for the agent.
pub fn run_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let env_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent_rng = ChaCha8Rng::seed_from_u64(seed);
    agent_rng.set_stream(1);
    (env_rng, agent_rng)
}

/// Run one method over the learning and testing phases. All methods given the same
/// seed see the same partition and channel sample path.
pub fn run_access(method: AccessMethod, cfg: &AccessConfig, seed: u64) -> Result<AccessRun> {
    cfg.validate()?;
    let (mut env_rng, mut rng) = run_rngs(seed);
    let mut env = MarkovChannelSet::random(cfg.n_channels, cfg.n_subsets, cfg.p01, cfg.p11, &mut env_rng)?;
    let n = cfg.n_channels;
    let mut learner = match method {
        AccessMethod::Gprl if cfg.gp_per_action => {
            Learner::GpPerAction((0..n).map(|_| GpQModel::new(cfg.gp)).collect::<Result<_>>()?)
        }
        AccessMethod::Gprl => Learner::Gp(GpQModel::new(cfg.gp)?),
        AccessMethod::Nnq => Learner::Net(Box::new(NnqAgent::new(cfg.nnq, n, cfg.history_len, cfg.discount, &mut rng)?)),
        _ => Learner::None,
    };
    let mut tracker = BeliefTracker::stationary(&env);
    let mut trace = EpisodeTrace::default();
    let mut curve = Vec::with_capacity(cfg.learn_spans);
    let (mut agree, mut tested) = (0usize, 0usize);
    let mut slot = 0usize;
    for span in 0..cfg.learn_spans + cfg.test_spans {
        let phase = if span < cfg.learn_spans { Phase::Learning } else { Phase::Testing };
        let mut h = HistoryState::new(cfg.history_len);
        let mut span_reward = 0.0;
        for _ in 0..cfg.span_len {
            let eps = if phase == Phase::Learning { cfg.epsilon(slot) } else { 0.0 };
            let action = match (&learner, method) {
                (Learner::Gp(gp), _) => gprl_act(gp, &h, n, eps, &mut rng),
                (Learner::GpPerAction(gps), _) => {
                    if rng.random::<f64>() < eps {
                        rng.random_range(0..n)
                    } else {
                        argmax_first(&per_action_q_values(gps, &h, n))
                    }
                }
                (Learner::Net(agent), _) => nnq_act(agent, &h, eps, &mut rng),
                (_, AccessMethod::Whittle) => whittle_act(&env, &tracker.beliefs, cfg.discount),
                (_, AccessMethod::Optimal) => optimal_act(&env, &tracker.beliefs),
                _ => rng.random_range(0..n),
            };
            if phase == Phase::Testing {
                let best = tracker.beliefs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                agree += usize::from(tracker.beliefs[env.subset_of(action)] >= best);
                tested += 1;
            }
            let (obs, reward) = env_step(&mut env, action, &mut env_rng)?;
            trace.push(phase, action, obs == Observation::Idle);
            span_reward += reward;
            tracker.observe(&env, action, obs);
            let mut next = h.clone();
            next.push(action, obs);
            if phase == Phase::Learning {
                match &mut learner {
                    Learner::Gp(gp) => gprl_learn(gp, &h, action, reward, &next, n, cfg.discount)?,
                    Learner::GpPerAction(gps) => {
                        let next_max = per_action_q_values(gps, &next, n).into_iter().fold(f64::NEG_INFINITY, f64::max);
                        gps[action].update_feature(Feature::from_window(&h, n), reward + cfg.discount * next_max)?;
                    }
                    Learner::Net(agent) => agent.observe(&h, action, reward, &next, &mut rng)?,
                    Learner::None => {}
                }
            }
            h = next;
            slot += 1;
        }
        if phase == Phase::Learning {
            curve.push(span_reward / cfg.span_len as f64);
        }
    }
    let accuracy = eval_accuracy(&trace, Phase::Testing)?;
    Ok(AccessRun {
        method,
        trace,
        learning_curve: curve,
        accuracy,
        optimal_agreement: agree as f64 / tested.max(1) as f64,
        gp: match learner {
            Learner::Gp(gp) => Some(gp.snapshot()),
            _ => None,
        },
    })
}
