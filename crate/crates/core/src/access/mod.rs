//! Single-user correlated multichannel access: environment, belief calculus, the GP
//! and neural Q-learners, the Whittle-index and argmax-belief genie policies.

mod env;
mod gp;
mod nnq;
mod run;
mod whittle;

pub use env::{
    belief_update, encode_history, encode_window, env_step, eval_accuracy, EpisodeTrace, HistoryState, Observation,
    Phase, TraceRow,
};
pub use gp::{Feature, GpParams, GpQModel, GpSnapshot};
pub use nnq::{argmax_first, nnq_act, Mlp, NnqAgent, NnqParams, Transition};
pub use run::{gp_q_values, gprl_act, gprl_learn, per_action_q_values, run_access, run_rngs, AccessConfig, AccessMethod, AccessRun};
pub use whittle::{optimal_act, whittle_act, whittle_index, BeliefTracker};
