//! Shaping reward bookkeeping.
//!
//! Each step compares a shaping value for the new state with the value
//! carried from the previous step. Outside the landing zone the shaping uses
//! the full weighted distance (the approach term); inside it uses altitude
//! only (the landing term). On entering the zone the step is scored with the
//! approach term and the landing term is carried forward; on leaving, the
//! carried value is reset to the approach term of the state just left.
//! A landing inside the zone pays a flat bonus and a landing outside pays a
//! penalty proportional to the horizontal distance to the pad.

use super::{EnvConfig, LanderState, Terminal};

/// Reward for touching down inside the landing zone.
pub const LANDING_BONUS: f64 = 400.0;
/// Penalty per meter of horizontal distance when touching down outside.
pub const CRASH_PENALTY_PER_METER: f64 = 200.0;
const SHAPING_SCALE: f64 = 100.0;

/// `-100·√(Kx·dx² + Ky·dy² + Kz·dz²)`, or `-100·√(Kz·dz²)` inside the zone.
pub fn shaping(state: &LanderState, k: [f64; 3], inside_zone: bool) -> f64 {
    let vertical = k[2] * state.dz * state.dz;
    let sum = if inside_zone {
        vertical
    } else {
        k[0] * state.dx * state.dx + k[1] * state.dy * state.dy + vertical
    };
    -SHAPING_SCALE * libm::sqrt(sum)
}

pub fn in_zone(state: &LanderState, config: &EnvConfig) -> bool {
    state.horizontal_distance() <= config.landing_zone_radius
}

/// Full weighted-distance shaping.
pub fn approach_shaping(state: &LanderState, config: &EnvConfig) -> f64 {
    shaping(state, config.k, false)
}

/// Altitude-only shaping.
pub fn landing_shaping(state: &LanderState, config: &EnvConfig) -> f64 {
    shaping(state, config.k, true)
}

/// The carried shaping value at the start of an episode.
pub fn initial_shaping(state: &LanderState, config: &EnvConfig) -> f64 {
    if in_zone(state, config) {
        landing_shaping(state, config)
    } else {
        approach_shaping(state, config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardUpdate {
    pub reward: f64,
    /// Shaping value to carry into the next step.
    pub prev_shaping: f64,
}

/// Reward for moving from `prev` to `next`, given the carried shaping value
/// and how (whether) the step ended the episode.
pub fn reward(
    prev: &LanderState,
    next: &LanderState,
    mut prev_shaping: f64,
    terminal: Terminal,
    config: &EnvConfig,
) -> RewardUpdate {
    let was_inside = in_zone(prev, config);
    let (shaping_now, carried) = if in_zone(next, config) {
        if was_inside {
            let s = landing_shaping(next, config);
            (s, s)
        } else {
            (approach_shaping(next, config), landing_shaping(next, config))
        }
    } else {
        if was_inside {
            prev_shaping = approach_shaping(prev, config);
        }
        let s = approach_shaping(next, config);
        (s, s)
    };
    let reward = match terminal {
        Terminal::LandedSuccess => LANDING_BONUS,
        Terminal::LandedOutside | Terminal::OutOfBounds => -CRASH_PENALTY_PER_METER * next.horizontal_distance(),
        Terminal::None | Terminal::MaxSteps => shaping_now - prev_shaping,
    };
    RewardUpdate {
        reward,
        prev_shaping: carried,
    }
}
