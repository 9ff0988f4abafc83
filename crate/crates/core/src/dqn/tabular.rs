//! Exact solvers on the enumerated MDP: value iteration, policy evaluation
//! and tabular Q-learning, used as references for the deep agent.

use alloc::vec;
use alloc::vec::Vec;

use super::Policy;
use crate::env::{Action, LanderState, MdpTable};
use crate::error::{ensure, Error, Result};
use crate::rng::Rng;

pub type QTable = Vec<[f64; Action::COUNT]>;

/// Optimal values, action values and the greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution {
    pub values: Vec<f64>,
    pub q: QTable,
    /// Greedy action per state, lowest index on ties.
    pub policy: Vec<Action>,
    pub iterations: usize,
    pub residual: f64,
}

fn backup(mdp: &MdpTable, values: &[f64], s: usize, a: usize, gamma: f64) -> f64 {
    let e = &mdp.entries[s][a];
    e.reward + e.next_state.map_or(0.0, |n| gamma * values[n])
}

fn greedy(q: &[f64; Action::COUNT]) -> usize {
    let mut best = 0;
    for a in 1..Action::COUNT {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// In-place value iteration until the largest update falls below `tol`.
pub fn value_iteration(mdp: &MdpTable, gamma: f64, tol: f64, max_sweeps: usize) -> Result<ValueSolution> {
    ensure!((0.0..=1.0).contains(&gamma), "gamma {gamma} outside [0, 1]");
    ensure!(tol > 0.0, "tolerance must be positive");
    let n = mdp.len();
    let mut values = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while residual >= tol {
        if iterations == max_sweeps {
            return Err(Error::numeric("value_iteration", alloc::format!("residual {residual:e} after {max_sweeps} sweeps")));
        }
        residual = 0.0;
        for s in 0..n {
            let best = (0..Action::COUNT)
                .map(|a| backup(mdp, &values, s, a, gamma))
                .fold(f64::NEG_INFINITY, f64::max);
            residual = residual.max((best - values[s]).abs());
            values[s] = best;
        }
        iterations += 1;
    }
    let q = q_from_values(mdp, &values, gamma);
    let policy = q.iter().map(|row| Action::ALL[greedy(row)]).collect();
    Ok(ValueSolution {
        values,
        q,
        policy,
        iterations,
        residual,
    })
}

pub fn q_from_values(mdp: &MdpTable, values: &[f64], gamma: f64) -> QTable {
    (0..mdp.len())
        .map(|s| core::array::from_fn(|a| backup(mdp, values, s, a, gamma)))
        .collect()
}

/// Value of a fixed deterministic policy, by iterating its Bellman
/// equation to `tol`.
pub fn policy_evaluation(mdp: &MdpTable, policy: &[Action], gamma: f64, tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
    ensure!(policy.len() == mdp.len(), "policy must assign an action to every state");
    ensure!(tol > 0.0, "tolerance must be positive");
    let mut values = vec![0.0; mdp.len()];
    for _ in 0..max_sweeps {
        let mut residual: f64 = 0.0;
        for s in 0..mdp.len() {
            let v = backup(mdp, &values, s, policy[s].index(), gamma);
            residual = residual.max((v - values[s]).abs());
            values[s] = v;
        }
        if residual < tol {
            return Ok(values);
        }
    }
    Err(Error::numeric("policy_evaluation", alloc::format!("no convergence in {max_sweeps} sweeps")))
}

/// How tabular Q-learning picks the `(state, action)` pair to update.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum QSchedule {
    /// ε-greedy episodes from random start cells, as an agent would fly.
    Episodes { epsilon: f64 },
    /// Repeated sweeps over every pair, ordered by altitude and then by
    /// horizontal distance to the pad, so each backup sees the freshest
    /// values of the cells below and nearer the pad.
    Sweeps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QLearningConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Number of single-pair updates.
    pub steps: usize,
    pub schedule: QSchedule,
    pub seed: u64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            steps: 100_000,
            schedule: QSchedule::Sweeps,
            seed: 0,
        }
    }
}

/// `Q(s,a) ← (1−α)·Q(s,a) + α·(r + γ·max_a' Q(s',a'))`, zero-initialized.
pub fn q_learning(mdp: &MdpTable, config: &QLearningConfig) -> Result<QTable> {
    ensure!(config.alpha > 0.0 && config.alpha <= 1.0, "alpha must lie in (0, 1]");
    ensure!((0.0..=1.0).contains(&config.gamma), "gamma outside [0, 1]");
    ensure!(!mdp.is_empty(), "MDP has no states");
    let mut q: QTable = vec![[0.0; Action::COUNT]; mdp.len()];
    let update = |q: &mut QTable, s: usize, a: usize| {
        let e = &mdp.entries[s][a];
        let next = e.next_state.map_or(0.0, |n| q[n].iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let target = e.reward + config.gamma * next;
        q[s][a] = (1.0 - config.alpha) * q[s][a] + config.alpha * target;
        e.next_state
    };
    match config.schedule {
        QSchedule::Sweeps => {
            let mut order: Vec<usize> = (0..mdp.len()).collect();
            let key = |s: usize| {
                let st = mdp.state(s);
                (st.dz, st.horizontal_distance())
            };
            order.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap_or(core::cmp::Ordering::Equal));
            let pairs = order.iter().flat_map(|&s| (0..Action::COUNT).map(move |a| (s, a)));
            for (s, a) in pairs.cycle().take(config.steps) {
                update(&mut q, s, a);
            }
        }
        QSchedule::Episodes { epsilon } => {
            ensure!((0.0..=1.0).contains(&epsilon), "epsilon outside [0, 1]");
            let starts = mdp.start_states();
            ensure!(!starts.is_empty(), "MDP has no start states");
            let max_len = mdp.config.max_steps;
            let mut rng = Rng::new(config.seed);
            let mut done = 0;
            while done < config.steps {
                let mut s = starts[rng.below(starts.len() as u64) as usize];
                for _ in 0..max_len {
                    let a = if rng.bernoulli(epsilon) {
                        rng.below(Action::COUNT as u64) as usize
                    } else {
                        greedy(&q[s])
                    };
                    let next = update(&mut q, s, a);
                    done += 1;
                    match next {
                        Some(n) if done < config.steps => s = n,
                        _ => break,
                    }
                }
            }
        }
    }
    Ok(q)
}

/// Actions within `tol` of the best value in each row.
pub fn optimal_sets(q: &QTable, tol: f64) -> Vec<[bool; Action::COUNT]> {
    q.iter()
        .map(|row| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.map(|v| v >= best - tol)
        })
        .collect()
}

/// Fraction of states where the greedy action of `q` lies in the
/// reference's `tol`-optimal action set.
pub fn greedy_agreement(q: &QTable, reference: &ValueSolution, tol: f64) -> f64 {
    let sets = optimal_sets(&reference.q, tol);
    let hits = q.iter().zip(&sets).filter(|(row, set)| set[greedy(row)]).count();
    hits as f64 / q.len().max(1) as f64
}

/// Per-state action table over the MDP's airborne cells.
pub struct TabularPolicy<'a> {
    pub mdp: &'a MdpTable,
    pub actions: Vec<Action>,
}

impl Policy for TabularPolicy<'_> {
    fn action(&self, state: &LanderState) -> Result<Action> {
        let s = self
            .mdp
            .index_of(state)
            .ok_or_else(|| Error::contract(alloc::format!("state {state:?} is not an airborne grid cell")))?;
        Ok(self.actions[s])
    }
}

/// Greedy actions of a Q-table.
pub fn greedy_policy(q: &QTable) -> Vec<Action> {
    q.iter().map(|row| Action::ALL[greedy(row)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::success_from_all_starts;
    use crate::env::{enumerate_mdp, reward::LANDING_BONUS, EnvConfig, Terminal};

    fn mdp() -> MdpTable {
        enumerate_mdp(&EnvConfig::default()).unwrap()
    }

    #[test]
    fn landing_bonus_is_backed_up() {
        let m = mdp();
        let vi = value_iteration(&m, 0.99, 1e-9, 10_000).unwrap();
        let s = m.index_of(&LanderState::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(m.entry(s, Action::Descend).terminal, Terminal::LandedSuccess);
        assert_eq!(vi.q[s][Action::Descend.index()], LANDING_BONUS);
        assert_eq!(vi.policy[s], Action::Descend);
    }

    #[test]
    fn zero_discount_is_myopic() {
        let m = mdp();
        let vi = value_iteration(&m, 0.0, 1e-9, 10).unwrap();
        for s in 0..m.len() {
            let rewards: [f64; Action::COUNT] = core::array::from_fn(|a| m.entries[s][a].reward);
            assert_eq!(vi.q[s], rewards);
            let best = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(rewards[vi.policy[s].index()], best);
        }
    }

    #[test]
    fn greedy_values_match_policy_evaluation() {
        let m = mdp();
        let vi = value_iteration(&m, 0.99, 1e-9, 10_000).unwrap();
        let v = policy_evaluation(&m, &vi.policy, 0.99, 1e-10, 100_000).unwrap();
        for (a, b) in vi.values.iter().zip(&v) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn optimal_policy_lands_from_every_start() {
        let cfg = EnvConfig::default();
        let m = enumerate_mdp(&cfg).unwrap();
        let vi = value_iteration(&m, 0.99, 1e-9, 10_000).unwrap();
        let policy = TabularPolicy {
            mdp: &m,
            actions: vi.policy.clone(),
        };
        let report = success_from_all_starts(&policy, &cfg, 0).unwrap();
        assert_eq!(report.success_rate, 1.0);
        assert!(report.mean_final_deviation_m.unwrap() <= cfg.landing_zone_radius);
    }

    #[test]
    fn q_learning_converges_with_enough_sweeps() {
        let m = mdp();
        let vi = value_iteration(&m, 0.99, 1e-9, 10_000).unwrap();
        let q = q_learning(
            &m,
            &QLearningConfig {
                steps: 3_000_000,
                ..Default::default()
            },
        )
        .unwrap();
        let worst = q
            .iter()
            .zip(&vi.q)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
        assert_eq!(greedy_agreement(&q, &vi, 1e-6), 1.0);
    }

    #[test]
    fn episodic_schedule_is_seeded() {
        let m = mdp();
        let cfg = QLearningConfig {
            steps: 5_000,
            schedule: QSchedule::Episodes { epsilon: 0.3 },
            seed: 4,
            ..Default::default()
        };
        assert_eq!(q_learning(&m, &cfg).unwrap(), q_learning(&m, &cfg).unwrap());
        assert!(q_learning(&m, &QLearningConfig { alpha: 0.0, ..cfg }).is_err());
    }
}
