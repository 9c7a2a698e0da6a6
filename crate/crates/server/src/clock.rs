use std::time::{Instant, SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use serde::Serialize;

/// Shared exercise time: scenario seconds advance `compression` times faster than wall
/// time, and stand still while paused.
#[derive(Debug)]
pub struct ExerciseClock {
    compression: f64,
    start_unix_ms: u64,
    state: Mutex<ClockState>,
}

#[derive(Debug, Clone, Copy)]
struct ClockState {
    anchor_wall: Instant,
    anchor_scenario: f64,
    paused: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockSnapshot {
    pub scenario_time: f64,
    pub compression: f64,
    pub paused: bool,
    pub start_unix_ms: u64,
}

pub fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl ExerciseClock {
    /// Starts at scenario time zero, running unless `paused`.
    pub fn start(compression: f64, paused: bool) -> Self {
        assert!(compression > 0.0 && compression.is_finite(), "compression must be positive");
        Self {
            compression,
            start_unix_ms: unix_ms(),
            state: Mutex::new(ClockState { anchor_wall: Instant::now(), anchor_scenario: 0.0, paused }),
        }
    }

    pub fn compression(&self) -> f64 {
        self.compression
    }

    pub fn start_unix_ms(&self) -> u64 {
        self.start_unix_ms
    }

    fn at(&self, s: &ClockState, wall: Instant) -> f64 {
        if s.paused {
            s.anchor_scenario
        } else {
            s.anchor_scenario + wall.saturating_duration_since(s.anchor_wall).as_secs_f64() * self.compression
        }
    }

    pub fn now(&self) -> f64 {
        let s = *self.state.lock();
        self.at(&s, Instant::now())
    }

    pub fn is_paused(&self) -> bool {
        self.state.lock().paused
    }

    pub fn pause(&self) {
        let mut s = self.state.lock();
        if !s.paused {
            let now = Instant::now();
            s.anchor_scenario = self.at(&s, now);
            s.anchor_wall = now;
            s.paused = true;
        }
    }

    pub fn resume(&self) {
        let mut s = self.state.lock();
        if s.paused {
            s.anchor_wall = Instant::now();
            s.paused = false;
        }
    }

    /// Wall seconds until scenario time `t`, or `None` while paused.
    pub fn wall_until(&self, t: f64) -> Option<f64> {
        let s = *self.state.lock();
        if s.paused {
            return None;
        }
        Some(((t - self.at(&s, Instant::now())) / self.compression).max(0.0))
    }

    pub fn snapshot(&self) -> ClockSnapshot {
        ClockSnapshot {
            scenario_time: self.now(),
            compression: self.compression,
            paused: self.is_paused(),
            start_unix_ms: self.start_unix_ms,
        }
    }
}
