//! Bridge from a detection in the camera image to the grid state.

use crate::env::{EnvConfig, Grid, LanderState};
use crate::error::{ensure, Result};
use crate::losses::BBox;

/// Downward camera model: image size, principal point, and the linear
/// pinhole scale in metres per pixel per metre of altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CameraFrame {
    pub width: f64,
    pub height: f64,
    pub center: (f64, f64),
    pub scale: f64,
}

pub const DEFAULT_SCALE: f64 = 0.005;

impl CameraFrame {
    /// Frame with the principal point at the image centre and the default
    /// scale.
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            center: (width / 2.0, height / 2.0),
            scale: DEFAULT_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.width > 0.0 && self.height > 0.0, "frame size must be positive");
        ensure!(self.scale > 0.0 && self.scale.is_finite(), "frame scale must be positive");
        ensure!(
            self.center.0.is_finite() && self.center.1.is_finite(),
            "frame centre must be finite"
        );
        Ok(())
    }

    /// Converts a normalized `[0, 1]` box to pixel coordinates.
    pub fn to_pixels(&self, b: &BBox) -> BBox {
        BBox {
            x_min: b.x_min * self.width,
            y_min: b.y_min * self.height,
            x_max: b.x_max * self.width,
            y_max: b.y_max * self.height,
        }
    }
}

impl Default for CameraFrame {
    fn default() -> Self {
        Self::new(160.0, 160.0)
    }
}

/// How a box is reduced to a horizontal pixel offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OffsetMode {
    /// Box centre minus principal point.
    #[default]
    Center,
    /// Half the box extent minus principal point, which ignores where the
    /// box is. Kept only for comparison.
    HalfExtent,
}

/// Pixel offset `(du, dv)` of the marker from the principal point.
pub fn bbox_to_offsets(b: &BBox, frame: &CameraFrame, mode: OffsetMode) -> (f64, f64) {
    let (cx, cy) = frame.center;
    match mode {
        OffsetMode::Center => ((b.x_min + b.x_max) / 2.0 - cx, (b.y_min + b.y_max) / 2.0 - cy),
        OffsetMode::HalfExtent => ((b.x_max - b.x_min) / 2.0 - cx, (b.y_max - b.y_min) / 2.0 - cy),
    }
}

/// Metric state from pixel offsets and altimeter reading; the ground
/// footprint of a pixel grows linearly with altitude.
pub fn offsets_to_state(du: f64, dv: f64, altitude: f64, frame: &CameraFrame) -> Result<LanderState> {
    ensure!(altitude >= 0.0 && altitude.is_finite(), "altitude must be non-negative, got {altitude}");
    let m = frame.scale * altitude;
    Ok(LanderState::new(du * m, dv * m, altitude))
}

/// Snaps each component to the nearest grid value (halves away from zero)
/// and clamps into the configured ranges.
pub fn discretize(state: &LanderState, config: &EnvConfig) -> LanderState {
    let grid = Grid::new(config);
    let r = config.resolution;
    let index = |v: f64, origin: f64| libm::round(libm::round(v / r) - origin / r) as i64;
    let cell = grid.clamp(
        index(state.dx, config.x_range.0),
        index(state.dy, config.y_range.0),
        index(state.dz, config.z_range.0),
    );
    grid.state_of(cell)
}
