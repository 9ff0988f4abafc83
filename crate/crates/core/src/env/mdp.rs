use alloc::vec;
use alloc::vec::Vec;

use super::grid::Cell;
use super::reward::{self, in_zone};
use super::{Action, BoundaryMode, EnvConfig, Grid, LanderState, Terminal};
use crate::error::{ensure, Result};

/// One deterministic transition of the enumerated MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdpEntry {
    pub next: LanderState,
    /// Index of the successor in [`MdpTable::states`], `None` when the
    /// transition ends the episode.
    pub next_state: Option<usize>,
    pub reward: f64,
    pub terminal: Terminal,
}

/// Exhaustive `(state, action) → (next, reward, terminal)` table over every
/// airborne cell of a windless grid. The step cap is not part of the MDP.
#[derive(Debug, Clone)]
pub struct MdpTable {
    pub config: EnvConfig,
    pub grid: Grid,
    /// Airborne cells, in grid index order.
    pub states: Vec<Cell>,
    pub entries: Vec<[MdpEntry; Action::COUNT]>,
    state_index: Vec<Option<usize>>,
}

impl MdpTable {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Total grid cells, ground level included.
    pub fn total_cells(&self) -> usize {
        self.grid.len()
    }

    pub fn state(&self, i: usize) -> LanderState {
        self.grid.state_of(self.states[i])
    }

    pub fn index_of(&self, state: &LanderState) -> Option<usize> {
        let cell = self.grid.cell_of(state)?;
        self.state_index[self.grid.index(cell)]
    }

    pub fn entry(&self, state: usize, action: Action) -> &MdpEntry {
        &self.entries[state][action.index()]
    }

    /// Indices of states an episode may start from.
    pub fn start_states(&self) -> Vec<usize> {
        self.grid
            .start_cells(&self.config)
            .into_iter()
            .filter_map(|c| self.state_index[self.grid.index(c)])
            .collect()
    }
}

/// Enumerates the windless MDP. The carried shaping value of the reward
/// scheme is a function of the current cell alone, so each entry is exact.
pub fn enumerate_mdp(config: &EnvConfig) -> Result<MdpTable> {
    config.validate()?;
    ensure!(config.wind.is_none(), "the MDP can only be enumerated with wind disabled");
    let grid = Grid::new(config);
    let states = grid.airborne_cells();
    let mut state_index = vec![None; grid.len()];
    for (i, c) in states.iter().enumerate() {
        state_index[grid.index(*c)] = Some(i);
    }
    let entries = states
        .iter()
        .map(|&cell| {
            let prev = grid.state_of(cell);
            let carried = reward::initial_shaping(&prev, config);
            Action::ALL.map(|a| {
                let (ix, iy, iz) = grid.shifted(cell, a);
                let oob = !grid.contains_horizontal(ix, iy);
                let next_cell = grid.clamp(ix, iy, iz);
                let next = grid.state_of(next_cell);
                let terminal = if next_cell.2 == 0 {
                    if in_zone(&next, config) {
                        Terminal::LandedSuccess
                    } else {
                        Terminal::LandedOutside
                    }
                } else if oob && config.boundary == BoundaryMode::Terminate {
                    Terminal::OutOfBounds
                } else {
                    Terminal::None
                };
                let r = reward::reward(&prev, &next, carried, terminal, config);
                MdpEntry {
                    next,
                    next_state: if terminal == Terminal::None {
                        state_index[grid.index(next_cell)]
                    } else {
                        None
                    },
                    reward: r.reward,
                    terminal,
                }
            })
        })
        .collect();
    Ok(MdpTable {
        config: config.clone(),
        grid,
        states,
        entries,
        state_index,
    })
}
