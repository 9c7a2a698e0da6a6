use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PerVisibility, VisibilityLevel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("require 0 < k_low <= k_med <= 1 (got k_low {k_low}, k_med {k_med})")]
    Ratios { k_low: f64, k_med: f64 },
    #[error("{0} window must be positive")]
    Window(&'static str),
    #[error("ghost retweet duration for {0} visibility must be positive")]
    Duration(VisibilityLevel),
}

/// How many ghost retweets an amplified post receives, and over how long.
///
/// The defaults (9/4/1 retweets over 600/300/120 s) are invented configuration, not
/// measured values; tune them per exercise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostRetweetPolicy {
    pub count_by_visibility: PerVisibility<u32>,
    pub duration_by_visibility: PerVisibility<f64>,
}

impl Default for GhostRetweetPolicy {
    fn default() -> Self {
        Self {
            count_by_visibility: PerVisibility::new(9, 4, 1),
            duration_by_visibility: PerVisibility::new(600.0, 300.0, 120.0),
        }
    }
}

impl GhostRetweetPolicy {
    pub fn none() -> Self {
        Self { count_by_visibility: PerVisibility::new(0, 0, 0), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for level in VisibilityLevel::ALL {
            let d = self.duration_by_visibility.get(level);
            if !(d > 0.0 && d.is_finite()) {
                return Err(PolicyError::Duration(level));
            }
        }
        Ok(())
    }
}

/// Burst sizing parameters: high volume tracks the trending baseline and the lower
/// levels are fixed fractions of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VolumePolicy {
    /// Seconds of history behind the trending baseline.
    pub trend_window: f64,
    /// Seconds over which a burst is spread.
    pub burst_window: f64,
    pub k_med: f64,
    pub k_low: f64,
    pub min_volume: u64,
    pub retweet_policy: GhostRetweetPolicy,
}

impl Default for VolumePolicy {
    fn default() -> Self {
        Self {
            trend_window: 300.0,
            burst_window: 300.0,
            k_med: 0.5,
            k_low: 1.0 / 3.0,
            min_volume: 1,
            retweet_policy: GhostRetweetPolicy::default(),
        }
    }
}

impl VolumePolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.k_low > 0.0 && self.k_low <= self.k_med && self.k_med <= 1.0) {
            return Err(PolicyError::Ratios { k_low: self.k_low, k_med: self.k_med });
        }
        if !(self.burst_window > 0.0 && self.burst_window.is_finite()) {
            return Err(PolicyError::Window("burst"));
        }
        if !(self.trend_window > 0.0 && self.trend_window.is_finite()) {
            return Err(PolicyError::Window("trend"));
        }
        self.retweet_policy.validate()
    }
}

/// `floor(k * h)` tolerant of ratios like 1/3 that are not exact in binary.
fn scaled_floor(k: f64, h: u64) -> u64 {
    (k * h as f64 + 1e-9).floor() as u64
}

/// Burst volumes per level for a high-visibility baseline `h`.
///
/// `high = h`; the lower levels are `max(min_volume, floor(k * h))`, all zero when `h`
/// is zero, then clamped so `low <= medium <= high`.
pub fn visibility_volumes(h: u64, policy: &VolumePolicy) -> PerVisibility<u64> {
    if h == 0 {
        return PerVisibility::new(0, 0, 0);
    }
    let medium = scaled_floor(policy.k_med, h).max(policy.min_volume).min(h);
    let low = scaled_floor(policy.k_low, h).max(policy.min_volume).min(medium);
    PerVisibility::new(h, medium, low)
}
