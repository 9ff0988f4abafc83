use alloc::format;
use alloc::vec::Vec;

use super::{select_action, soft_update, td_update, Adam, QNetwork, ReplayBuffer, Transition};
use crate::env::{EnvConfig, LanderState, LandingEnv, Terminal};
use crate::error::{ensure, Error, Result};
use crate::rng::Rng;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub episodes: usize,
    pub eps_initial: f64,
    pub eps_final: f64,
    /// Subtracted from ε after every episode.
    pub eps_decrement: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Episodes in the stopping window.
    pub stop_window: usize,
    /// Stop once the window's mean return exceeds this...
    pub stop_mean_threshold: f64,
    /// ...and its minimum return exceeds this.
    pub stop_min_threshold: f64,
    /// Abort when the mean |Q| over the probe states exceeds this.
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 5000,
            eps_initial: 1.0,
            eps_final: 0.1,
            eps_decrement: 0.005,
            gamma: 0.99,
            learning_rate: 0.001,
            tau: 0.01,
            batch_size: 32,
            replay_capacity: 50_000,
            stop_window: 100,
            stop_mean_threshold: 350.0,
            stop_min_threshold: 0.0,
            divergence_threshold: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            0.0 <= self.eps_final && self.eps_final <= self.eps_initial && self.eps_initial <= 1.0,
            "epsilon schedule must satisfy 0 <= final <= initial <= 1"
        );
        ensure!(self.eps_decrement >= 0.0, "epsilon decrement must be non-negative");
        ensure!(self.gamma > 0.0 && self.gamma <= 1.0, "gamma must lie in (0, 1]");
        ensure!(self.tau > 0.0 && self.tau <= 1.0, "tau must lie in (0, 1]");
        ensure!(self.learning_rate > 0.0, "learning rate must be positive");
        ensure!(self.batch_size > 0, "batch size must be positive");
        ensure!(
            self.replay_capacity >= self.batch_size,
            "replay capacity must hold at least one batch"
        );
        ensure!(self.stop_window > 0, "stop window must be positive");
        ensure!(self.divergence_threshold > 0.0, "divergence threshold must be positive");
        Ok(())
    }
}

/// `max(eps_final, eps_initial − episode·eps_decrement)` for the zero-based
/// episode index.
pub fn epsilon_at(config: &TrainConfig, episode: usize) -> f64 {
    (config.eps_initial - episode as f64 * config.eps_decrement).max(config.eps_final)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub total_return: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub terminal: Terminal,
    /// Mean TD loss over the episode's updates, if any ran.
    pub mean_loss: Option<f64>,
}

/// Per-episode training record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RewardTrace {
    pub episodes: Vec<EpisodeStats>,
}

impl RewardTrace {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.total_return).collect()
    }

    /// Trailing mean over up to `window` episodes ending at each episode.
    pub fn moving_average(&self, window: usize) -> Vec<f64> {
        let r = self.returns();
        let mut out = Vec::with_capacity(r.len());
        let mut sum = 0.0;
        for i in 0..r.len() {
            sum += r[i];
            if i >= window {
                sum -= r[i - window];
            }
            out.push(sum / (i + 1).min(window) as f64);
        }
        out
    }

    /// Mean return of the first `n` episodes.
    pub fn head_mean(&self, n: usize) -> f64 {
        let r = self.returns();
        let k = n.min(r.len()).max(1);
        r.iter().take(k).sum::<f64>() / k as f64
    }

    /// Mean return of the last `n` episodes.
    pub fn tail_mean(&self, n: usize) -> f64 {
        let r = self.returns();
        let k = n.min(r.len()).max(1);
        r.iter().rev().take(k).sum::<f64>() / k as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The stopping window criterion held after this many episodes.
    Criterion { episodes: usize },
    EpisodeCap,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: QNetwork,
    pub trace: RewardTrace,
    pub stop: StopReason,
}

fn probe_states(env: &EnvConfig, rng: &mut Rng) -> Vec<LanderState> {
    let grid = crate::env::Grid::new(env);
    let cells = grid.airborne_cells();
    (0..64)
        .map(|_| grid.state_of(cells[rng.below(cells.len() as u64) as usize]))
        .collect()
}

/// Trains an online/target network pair with ε-greedy exploration,
/// experience replay and per-step soft target updates.
///
/// `observer` sees every finished episode together with the current online
/// network.
pub fn train(
    env_config: &EnvConfig,
    config: &TrainConfig,
    seed: u64,
    observer: &mut dyn FnMut(&EpisodeStats, &QNetwork),
) -> Result<TrainOutcome> {
    env_config.validate()?;
    config.validate()?;
    let mut root = Rng::new(seed);
    let mut init_rng = root.fork(1);
    let mut env_rng = root.fork(2);
    let mut act_rng = root.fork(3);
    let mut replay_rng = root.fork(4);
    let probes = probe_states(env_config, &mut root.fork(5));

    let scale = env_config.half_extents().map(|v| v as f32);
    let mut online = QNetwork::init(scale, init_rng.next_u64());
    let mut target = online.clone();
    let mut adam = Adam::new(&online, config.learning_rate);
    let mut replay = ReplayBuffer::new(config.replay_capacity)?;
    let mut env = LandingEnv::new(env_config.clone())?;
    let mut trace = RewardTrace::default();

    for episode in 0..config.episodes {
        let epsilon = epsilon_at(config, episode);
        let mut state = env.reset(&mut env_rng);
        let (mut total, mut loss_sum, mut updates) = (0.0, 0.0, 0usize);
        let terminal = loop {
            let action = select_action(&online, &state, epsilon, &mut act_rng)?;
            let out = env.step(action, &mut env_rng)?;
            replay.push(Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.next,
                done: out.terminal.is_absorbing(),
            })?;
            total += out.reward;
            state = out.next;
            if replay.len() >= config.batch_size {
                let batch = replay.sample(config.batch_size, &mut replay_rng)?;
                loss_sum += td_update(&mut online, &target, &batch, config.gamma, &mut adam)?;
                updates += 1;
                soft_update(&mut target, &online, config.tau)?;
            }
            if out.terminal != Terminal::None {
                break out.terminal;
            }
        };
        let stats = EpisodeStats {
            episode,
            total_return: total,
            epsilon,
            steps: env.steps(),
            terminal,
            mean_loss: (updates > 0).then(|| loss_sum / updates as f64),
        };
        trace.episodes.push(stats);
        observer(&stats, &online);

        let mean_q = online.mean_abs_q(&probes)?;
        if !(mean_q <= config.divergence_threshold) {
            return Err(Error::numeric(
                "train",
                format!("mean |Q| {mean_q:e} exceeds {:e} after episode {episode}", config.divergence_threshold),
            ));
        }
        let done = episode + 1;
        if done >= config.stop_window {
            let window = &trace.episodes[done - config.stop_window..];
            let mean = window.iter().map(|e| e.total_return).sum::<f64>() / window.len() as f64;
            let min = window.iter().map(|e| e.total_return).fold(f64::INFINITY, f64::min);
            if mean > config.stop_mean_threshold && min > config.stop_min_threshold {
                return Ok(TrainOutcome {
                    network: online,
                    trace,
                    stop: StopReason::Criterion { episodes: done },
                });
            }
        }
    }
    Ok(TrainOutcome {
        network: online,
        trace,
        stop: StopReason::EpisodeCap,
    })
}
