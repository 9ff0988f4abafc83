//! Discretized 3D landing environment.
//!
//! The UAV sits at an offset `(dx, dy)` from the pad centre and an altitude
//! `dz` above ground, on a regular grid. Four horizontal moves and one
//! descent are available; touching the ground ends the episode. Rewards
//! follow the shaping scheme in [`reward`]: the change in a distance-based
//! shaping value, overridden by a fixed bonus on a landing inside the zone
//! and a distance-proportional penalty on a landing outside it.

mod config;
mod grid;
mod mdp;
pub mod reward;

pub use config::{BoundaryMode, EnvConfig, Wind};
pub use grid::{Action, Grid, LanderState, Terminal};
pub use mdp::{enumerate_mdp, MdpEntry, MdpTable};

use crate::error::{ensure, Error, Result};
use crate::rng::Rng;

/// Result of a single environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: LanderState,
    pub reward: f64,
    pub terminal: Terminal,
}

/// Single-episode state machine over an [`EnvConfig`].
#[derive(Debug, Clone)]
pub struct LandingEnv {
    config: EnvConfig,
    grid: Grid,
    state: LanderState,
    prev_shaping: f64,
    steps: usize,
    done: bool,
}

impl LandingEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let grid = Grid::new(&config);
        let state = LanderState::new(0.0, 0.0, config.z_range.1);
        let prev_shaping = reward::initial_shaping(&state, &config);
        Ok(Self {
            config,
            grid,
            state,
            prev_shaping,
            steps: 0,
            done: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn state(&self) -> LanderState {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Shaping value carried into the next reward computation.
    pub fn prev_shaping(&self) -> f64 {
        self.prev_shaping
    }

    /// Uniformly random on-grid start at or above the configured minimum
    /// start altitude.
    pub fn reset(&mut self, rng: &mut Rng) -> LanderState {
        let starts = self.grid.start_cells(&self.config);
        let cell = starts[rng.below(starts.len() as u64) as usize];
        let state = self.grid.state_of(cell);
        self.begin(state);
        state
    }

    /// Starts an episode from a given non-terminal on-grid state.
    pub fn reset_to(&mut self, state: LanderState) -> Result<()> {
        let cell = self
            .grid
            .cell_of(&state)
            .ok_or_else(|| Error::contract(alloc::format!("{state:?} is not on the grid")))?;
        ensure!(cell.2 > 0, "{state:?} is already on the ground");
        self.begin(self.grid.state_of(cell));
        Ok(())
    }

    fn begin(&mut self, state: LanderState) {
        self.state = state;
        self.prev_shaping = reward::initial_shaping(&state, &self.config);
        self.steps = 0;
        self.done = false;
    }

    pub fn step(&mut self, action: Action, rng: &mut Rng) -> Result<StepOutcome> {
        ensure!(!self.done, "step called on a finished episode");
        let cell = self
            .grid
            .cell_of(&self.state)
            .ok_or_else(|| Error::contract("current state is off the grid"))?;
        let (mut ix, mut iy, iz) = self.grid.shifted(cell, action);
        if let Some(wind) = self.config.wind {
            if rng.bernoulli(wind.probability) {
                let kick = wind.displacement as i64 * if rng.below(2) == 0 { 1 } else { -1 };
                if rng.below(2) == 0 {
                    ix += kick;
                } else {
                    iy += kick;
                }
            }
        }
        let out_of_bounds = !self.grid.contains_horizontal(ix, iy);
        let next = self.grid.state_of(self.grid.clamp(ix, iy, iz));
        self.steps += 1;

        let terminal = if next.dz <= 0.0 {
            if reward::in_zone(&next, &self.config) {
                Terminal::LandedSuccess
            } else {
                Terminal::LandedOutside
            }
        } else if out_of_bounds && self.config.boundary == BoundaryMode::Terminate {
            Terminal::OutOfBounds
        } else if self.steps >= self.config.max_steps {
            Terminal::MaxSteps
        } else {
            Terminal::None
        };
        let update = reward::reward(&self.state, &next, self.prev_shaping, terminal, &self.config);
        self.prev_shaping = update.prev_shaping;
        self.state = next;
        self.done = terminal != Terminal::None;
        Ok(StepOutcome {
            next,
            reward: update.reward,
            terminal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_at(dx: f64, dy: f64, dz: f64) -> LandingEnv {
        let mut env = LandingEnv::new(EnvConfig::default()).unwrap();
        env.reset_to(LanderState::new(dx, dy, dz)).unwrap();
        env
    }

    #[test]
    fn descend_is_unit_move() {
        let mut env = env_at(2.0, 3.0, 5.0);
        let out = env.step(Action::Descend, &mut Rng::new(0)).unwrap();
        assert_eq!(out.next, LanderState::new(2.0, 3.0, 4.0));
        assert_eq!(out.terminal, Terminal::None);
    }

    #[test]
    fn boundary_clamps() {
        let mut env = env_at(6.0, 0.0, 5.0);
        let out = env.step(Action::Forward, &mut Rng::new(0)).unwrap();
        assert_eq!(out.next, LanderState::new(6.0, 0.0, 5.0));
        assert_eq!(out.terminal, Terminal::None);
    }

    #[test]
    fn boundary_can_terminate() {
        let cfg = EnvConfig {
            boundary: BoundaryMode::Terminate,
            ..EnvConfig::default()
        };
        let mut env = LandingEnv::new(cfg).unwrap();
        env.reset_to(LanderState::new(6.0, 0.0, 5.0)).unwrap();
        let out = env.step(Action::Forward, &mut Rng::new(0)).unwrap();
        assert_eq!(out.terminal, Terminal::OutOfBounds);
        assert_eq!(out.reward, -200.0 * 6.0);
    }

    #[test]
    fn landing_on_pad_pays_400() {
        let mut env = env_at(0.0, 0.0, 1.0);
        let out = env.step(Action::Descend, &mut Rng::new(0)).unwrap();
        assert_eq!(out.terminal, Terminal::LandedSuccess);
        assert_eq!(out.reward, 400.0);
        assert!(env.step(Action::Descend, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn landing_outside_is_penalized() {
        let mut env = env_at(2.0, 0.0, 1.0);
        let out = env.step(Action::Descend, &mut Rng::new(0)).unwrap();
        assert_eq!(out.terminal, Terminal::LandedOutside);
        assert_eq!(out.reward, -400.0);
    }

    #[test]
    fn max_steps_terminates() {
        let cfg = EnvConfig {
            max_steps: 3,
            ..EnvConfig::default()
        };
        let mut env = LandingEnv::new(cfg).unwrap();
        env.reset_to(LanderState::new(3.0, 3.0, 8.0)).unwrap();
        let mut rng = Rng::new(0);
        assert_eq!(env.step(Action::Left, &mut rng).unwrap().terminal, Terminal::None);
        assert_eq!(env.step(Action::Right, &mut rng).unwrap().terminal, Terminal::None);
        assert_eq!(env.step(Action::Left, &mut rng).unwrap().terminal, Terminal::MaxSteps);
    }

    #[test]
    fn horizontal_moves_keep_altitude() {
        let mut rng = Rng::new(5);
        for a in [Action::Forward, Action::Backward, Action::Left, Action::Right] {
            let mut env = env_at(1.0, -2.0, 3.0);
            let out = env.step(a, &mut rng).unwrap();
            assert_eq!(out.next.dz, 3.0);
        }
    }

    #[test]
    fn reset_bounds_and_determinism() {
        let mut env = LandingEnv::new(EnvConfig::default()).unwrap();
        let mut a = Rng::new(99);
        let mut b = Rng::new(99);
        for _ in 0..1000 {
            let s = env.reset(&mut a);
            assert_eq!(s, env.clone().reset(&mut b));
            assert!(env.grid().cell_of(&s).is_some());
            assert!((2.0..=8.0).contains(&s.dz));
        }
    }

    #[test]
    fn reset_covers_start_cells() {
        let env = LandingEnv::new(EnvConfig::default()).unwrap();
        let mut seen = alloc::collections::BTreeSet::new();
        let mut rng = Rng::new(1);
        let mut e = env.clone();
        for _ in 0..100_000 {
            let s = e.reset(&mut rng);
            seen.insert(env.grid().cell_of(&s).unwrap());
        }
        let eligible = env.grid().start_cells(env.config()).len();
        assert_eq!(eligible, 13 * 13 * 7);
        assert!(seen.len() as f64 >= 0.9 * eligible as f64);
    }

    #[test]
    fn wind_pushes_sideways() {
        let cfg = EnvConfig {
            wind: Some(Wind {
                probability: 1.0,
                displacement: 1,
            }),
            ..EnvConfig::default()
        };
        let mut env = LandingEnv::new(cfg).unwrap();
        let mut rng = Rng::new(3);
        env.reset_to(LanderState::new(0.0, 0.0, 5.0)).unwrap();
        let out = env.step(Action::Descend, &mut rng).unwrap();
        assert_eq!(out.next.dz, 4.0);
        assert_eq!(out.next.dx.abs() + out.next.dy.abs(), 1.0);
    }
}
