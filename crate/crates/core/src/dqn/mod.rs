//! Deep Q-learning agent for the landing grid, with exact tabular solvers
//! used to check it.

mod evaluate;
mod network;
mod optim;
mod replay;
pub mod tabular;
mod td;
mod train;

pub use evaluate::{evaluate, rollout, success_from_all_starts, EpisodeTrace, EvalReport, Policy, TraceStep};
pub use network::{argmax, select_action, soft_update, QGrads, QNetwork, LAYER_SIZES};
pub use optim::Adam;
pub use replay::{ReplayBuffer, Transition};
pub use td::{huber, loss_and_grads, td_targets, td_update};
pub use train::{epsilon_at, train, EpisodeStats, RewardTrace, StopReason, TrainConfig, TrainOutcome};
