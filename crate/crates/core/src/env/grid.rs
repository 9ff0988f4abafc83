use alloc::vec::Vec;

use super::EnvConfig;

/// Position relative to the pad: horizontal offsets and altitude, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LanderState {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl LanderState {
    pub const fn new(dx: f64, dy: f64, dz: f64) -> Self {
        Self { dx, dy, dz }
    }

    pub fn horizontal_distance(&self) -> f64 {
        libm::sqrt(self.dx * self.dx + self.dy * self.dy)
    }
}

/// The five moves. Forward/Backward move along ±x, Left/Right along ±y and
/// Descend lowers the altitude by one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Action {
    Forward,
    Backward,
    Left,
    Right,
    Descend,
}

impl Action {
    pub const COUNT: usize = 5;
    pub const ALL: [Action; 5] = [Action::Forward, Action::Backward, Action::Left, Action::Right, Action::Descend];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Forward => "forward",
            Action::Backward => "backward",
            Action::Left => "left",
            Action::Right => "right",
            Action::Descend => "descend",
        }
    }

    /// Cell displacement `(dx, dy, dz)`.
    pub fn delta(self) -> (i64, i64, i64) {
        match self {
            Action::Forward => (1, 0, 0),
            Action::Backward => (-1, 0, 0),
            Action::Left => (0, 1, 0),
            Action::Right => (0, -1, 0),
            Action::Descend => (0, 0, -1),
        }
    }
}

/// How an episode ended, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Terminal {
    None,
    LandedSuccess,
    LandedOutside,
    OutOfBounds,
    MaxSteps,
}

impl Terminal {
    pub fn name(self) -> &'static str {
        match self {
            Terminal::None => "none",
            Terminal::LandedSuccess => "landed_success",
            Terminal::LandedOutside => "landed_outside",
            Terminal::OutOfBounds => "out_of_bounds",
            Terminal::MaxSteps => "max_steps",
        }
    }

    /// True for endings that are part of the task (as opposed to the step cap).
    pub fn is_absorbing(self) -> bool {
        matches!(self, Terminal::LandedSuccess | Terminal::LandedOutside | Terminal::OutOfBounds)
    }

    pub fn touched_down(self) -> bool {
        matches!(self, Terminal::LandedSuccess | Terminal::LandedOutside)
    }
}

/// Integer cell coordinates `(ix, iy, iz)` counted from the lower corner.
pub type Cell = (i64, i64, i64);

/// Mapping between metric states and grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: (f64, f64, f64),
    resolution: f64,
    dims: (i64, i64, i64),
}

impl Grid {
    pub fn new(config: &EnvConfig) -> Self {
        let r = config.resolution;
        let n = |(lo, hi): (f64, f64)| libm::round((hi - lo) / r) as i64 + 1;
        Self {
            origin: (config.x_range.0, config.y_range.0, config.z_range.0),
            resolution: r,
            dims: (n(config.x_range), n(config.y_range), n(config.z_range)),
        }
    }

    pub fn dims(&self) -> (i64, i64, i64) {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Total number of cells, ground level included.
    pub fn len(&self) -> usize {
        (self.dims.0 * self.dims.1 * self.dims.2) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state_of(&self, (ix, iy, iz): Cell) -> LanderState {
        let r = self.resolution;
        LanderState::new(
            self.origin.0 + ix as f64 * r,
            self.origin.1 + iy as f64 * r,
            self.origin.2 + iz as f64 * r,
        )
    }

    /// Cell holding `state`, if the state lies exactly on the grid.
    pub fn cell_of(&self, s: &LanderState) -> Option<Cell> {
        let snap = |v: f64, o: f64| {
            let q = (v - o) / self.resolution;
            let i = libm::round(q);
            ((q - i).abs() < 1e-9).then_some(i as i64)
        };
        let cell = (snap(s.dx, self.origin.0)?, snap(s.dy, self.origin.1)?, snap(s.dz, self.origin.2)?);
        self.contains(cell).then_some(cell)
    }

    pub fn contains(&self, (ix, iy, iz): Cell) -> bool {
        self.contains_horizontal(ix, iy) && (0..self.dims.2).contains(&iz)
    }

    pub fn contains_horizontal(&self, ix: i64, iy: i64) -> bool {
        (0..self.dims.0).contains(&ix) && (0..self.dims.1).contains(&iy)
    }

    pub fn clamp(&self, ix: i64, iy: i64, iz: i64) -> Cell {
        (
            ix.clamp(0, self.dims.0 - 1),
            iy.clamp(0, self.dims.1 - 1),
            iz.clamp(0, self.dims.2 - 1),
        )
    }

    pub fn shifted(&self, (ix, iy, iz): Cell, action: Action) -> Cell {
        let (dx, dy, dz) = action.delta();
        (ix + dx, iy + dy, iz + dz)
    }

    pub fn index(&self, (ix, iy, iz): Cell) -> usize {
        ((iz * self.dims.1 + iy) * self.dims.0 + ix) as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let i = index as i64;
        let ix = i % self.dims.0;
        let iy = (i / self.dims.0) % self.dims.1;
        let iz = i / (self.dims.0 * self.dims.1);
        (ix, iy, iz)
    }

    /// All cells above the ground, in index order.
    pub fn airborne_cells(&self) -> Vec<Cell> {
        (0..self.len()).map(|i| self.cell_at(i)).filter(|c| c.2 > 0).collect()
    }

    /// Cells an episode may start from.
    pub fn start_cells(&self, config: &EnvConfig) -> Vec<Cell> {
        let min_iz = libm::ceil(config.min_start_altitude / self.resolution - 1e-9) as i64;
        (0..self.len())
            .map(|i| self.cell_at(i))
            .filter(|c| c.2 >= min_iz.max(1))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_1521_cells() {
        let g = Grid::new(&EnvConfig::default());
        assert_eq!(g.dims(), (13, 13, 9));
        assert_eq!(g.len(), 1521);
        assert_eq!(g.airborne_cells().len(), 13 * 13 * 8);
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(&EnvConfig::default());
        for i in 0..g.len() {
            let c = g.cell_at(i);
            assert_eq!(g.index(c), i);
            assert_eq!(g.cell_of(&g.state_of(c)), Some(c));
        }
    }

    #[test]
    fn off_grid_states_have_no_cell() {
        let g = Grid::new(&EnvConfig::default());
        assert_eq!(g.cell_of(&LanderState::new(0.5, 0.0, 1.0)), None);
        assert_eq!(g.cell_of(&LanderState::new(7.0, 0.0, 1.0)), None);
        assert_eq!(g.cell_of(&LanderState::new(0.0, 0.0, 9.0)), None);
    }

    #[test]
    fn action_indices() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), Some(*a));
        }
        assert_eq!(Action::from_index(5), None);
    }
}
