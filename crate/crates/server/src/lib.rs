//! Replays a compiled plan on a compressed exercise clock and serves it over HTTP,
//! accepting live posts, retweets and controller injections. See `api::router` for the
//! endpoint list.

pub mod api;
pub mod clock;
pub mod engine;
pub mod roster;
mod service;

pub use api::BANNER_HEADER;
pub use clock::{ClockSnapshot, ExerciseClock};
pub use engine::{Engine, EngineError, MapPin, Page, Progress};
pub use roster::{Roster, RosterEntry, RosterError};
pub use service::{Exercise, ExerciseHost, RunningExercise, ServerConfig, StartError, DEFAULT_BANNER};
