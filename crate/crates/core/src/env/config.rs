use crate::error::{ensure, Result};

/// What happens when a move would leave the horizontal extent of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundaryMode {
    /// Stay on the boundary cell; the episode continues.
    #[default]
    Clamp,
    /// End the episode with the crash penalty.
    Terminate,
}

/// Random horizontal disturbance applied after each move.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Wind {
    /// Per-step probability of a gust.
    pub probability: f64,
    /// Gust displacement in grid cells, along a random horizontal axis and
    /// direction.
    pub displacement: u32,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EnvConfig {
    /// Horizontal extents in meters, pad frame.
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Altitude extent in meters; the lower bound is the ground.
    pub z_range: (f64, f64),
    /// Grid cell size in meters.
    pub resolution: f64,
    /// Horizontal radius around the pad centre counted as a successful landing.
    pub landing_zone_radius: f64,
    /// Shaping weights `(Kx, Ky, Kz)`.
    pub k: [f64; 3],
    pub max_steps: usize,
    /// Lowest altitude an episode may start from.
    pub min_start_altitude: f64,
    pub boundary: BoundaryMode,
    pub wind: Option<Wind>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            x_range: (-6.0, 6.0),
            y_range: (-6.0, 6.0),
            z_range: (0.0, 8.0),
            resolution: 1.0,
            landing_zone_radius: 1.0,
            k: [1.0, 1.0, 1.0],
            max_steps: 200,
            min_start_altitude: 2.0,
            boundary: BoundaryMode::Clamp,
            wind: None,
        }
    }
}

fn is_multiple(value: f64, step: f64) -> bool {
    let q = value / step;
    (q - libm::round(q)).abs() < 1e-9
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.resolution.is_finite() && self.resolution > 0.0,
            "resolution must be positive, got {}",
            self.resolution
        );
        for (name, (lo, hi)) in [("x_range", self.x_range), ("y_range", self.y_range), ("z_range", self.z_range)] {
            ensure!(lo.is_finite() && hi.is_finite() && lo < hi, "{name} must satisfy lo < hi, got ({lo}, {hi})");
            ensure!(
                is_multiple(lo, self.resolution) && is_multiple(hi, self.resolution),
                "{name} bounds must be multiples of the resolution {}",
                self.resolution
            );
        }
        ensure!(
            self.x_range.0 <= 0.0 && self.x_range.1 >= 0.0 && self.y_range.0 <= 0.0 && self.y_range.1 >= 0.0,
            "horizontal ranges must contain the pad at the origin"
        );
        ensure!(self.z_range.0 == 0.0, "z_range must start at the ground (0)");
        ensure!(self.k.iter().all(|k| k.is_finite() && *k >= 0.0), "shaping weights must be non-negative");
        ensure!(
            self.landing_zone_radius.is_finite() && self.landing_zone_radius >= 0.0,
            "landing_zone_radius must be non-negative"
        );
        ensure!(self.max_steps > 0, "max_steps must be positive");
        ensure!(
            self.min_start_altitude > 0.0 && self.min_start_altitude <= self.z_range.1,
            "min_start_altitude must lie in (0, {}]",
            self.z_range.1
        );
        if let Some(w) = self.wind {
            ensure!(
                (0.0..=1.0).contains(&w.probability),
                "wind probability must be in [0, 1], got {}",
                w.probability
            );
        }
        Ok(())
    }

    /// Largest absolute coordinate per axis, used to scale network inputs.
    pub fn half_extents(&self) -> [f64; 3] {
        [
            self.x_range.0.abs().max(self.x_range.1.abs()),
            self.y_range.0.abs().max(self.y_range.1.abs()),
            self.z_range.1,
        ]
    }
}
