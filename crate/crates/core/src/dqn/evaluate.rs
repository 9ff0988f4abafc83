use alloc::vec::Vec;

use super::{argmax, QNetwork};
use crate::env::{Action, EnvConfig, LanderState, LandingEnv, Terminal};
use crate::error::{ensure, Result};
use crate::rng::Rng;

/// Anything that maps a state to an action.
pub trait Policy {
    fn action(&self, state: &LanderState) -> Result<Action>;
}

impl Policy for QNetwork {
    /// Greedy action, lowest index on ties.
    fn action(&self, state: &LanderState) -> Result<Action> {
        Ok(Action::ALL[argmax(&self.q_values(state)?)])
    }
}

impl<F: Fn(&LanderState) -> Action> Policy for F {
    fn action(&self, state: &LanderState) -> Result<Action> {
        Ok(self(state))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceStep {
    pub step: usize,
    pub state: LanderState,
    pub action: Action,
    pub reward: f64,
    pub next: LanderState,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<TraceStep>,
    pub terminal: Terminal,
    pub total_return: f64,
}

impl EpisodeTrace {
    /// Horizontal distance from the pad centre at touchdown.
    pub fn touchdown_deviation(&self) -> Option<f64> {
        if !self.terminal.touched_down() {
            return None;
        }
        self.steps.last().map(|s| s.next.horizontal_distance())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    /// Episodes that ended on the ground, in or out of the zone.
    pub touchdowns: usize,
    /// Mean horizontal touchdown distance; `None` without touchdowns.
    pub mean_final_deviation_m: Option<f64>,
    pub traces: Vec<EpisodeTrace>,
}

impl EvalReport {
    fn from_traces(traces: Vec<EpisodeTrace>) -> Self {
        let episodes = traces.len();
        let successes = traces.iter().filter(|t| t.terminal == Terminal::LandedSuccess).count();
        let devs: Vec<f64> = traces.iter().filter_map(EpisodeTrace::touchdown_deviation).collect();
        let n = episodes.max(1) as f64;
        Self {
            episodes,
            successes,
            success_rate: successes as f64 / n,
            mean_return: traces.iter().map(|t| t.total_return).sum::<f64>() / n,
            touchdowns: devs.len(),
            mean_final_deviation_m: (!devs.is_empty()).then(|| devs.iter().sum::<f64>() / devs.len() as f64),
            traces,
        }
    }
}

/// Runs one episode under `policy`, from `start` or from a random start.
pub fn rollout(
    policy: &dyn Policy,
    env_config: &EnvConfig,
    start: Option<LanderState>,
    rng: &mut Rng,
) -> Result<EpisodeTrace> {
    let mut env = LandingEnv::new(env_config.clone())?;
    let mut state = match start {
        Some(s) => {
            env.reset_to(s)?;
            s
        }
        None => env.reset(rng),
    };
    let mut steps = Vec::new();
    let mut total = 0.0;
    loop {
        let action = policy.action(&state)?;
        let out = env.step(action, rng)?;
        total += out.reward;
        steps.push(TraceStep {
            step: steps.len(),
            state,
            action,
            reward: out.reward,
            next: out.next,
            terminal: out.terminal,
        });
        state = out.next;
        if out.terminal != Terminal::None {
            return Ok(EpisodeTrace {
                steps,
                terminal: out.terminal,
                total_return: total,
            });
        }
    }
}

/// Greedy rollouts from `episodes` seeded random starts.
pub fn evaluate(policy: &dyn Policy, env_config: &EnvConfig, episodes: usize, seed: u64) -> Result<EvalReport> {
    ensure!(episodes > 0, "evaluation needs at least one episode");
    let mut rng = Rng::new(seed);
    let traces = (0..episodes)
        .map(|_| rollout(policy, env_config, None, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_traces(traces))
}

/// One rollout from every eligible start cell (deterministic when windless).
pub fn success_from_all_starts(policy: &dyn Policy, env_config: &EnvConfig, seed: u64) -> Result<EvalReport> {
    let grid = crate::env::Grid::new(env_config);
    let mut rng = Rng::new(seed);
    let traces = grid
        .start_cells(env_config)
        .into_iter()
        .map(|c| rollout(policy, env_config, Some(grid.state_of(c)), &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_traces(traces))
}
