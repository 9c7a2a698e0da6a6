//! Synthetic microblog stimulus engine for emergency-preparedness exercises.
//!
//! The pipeline: background records and parameterized templates are compiled into a
//! timed [`scheduler::SchedulePlan`] whose burst volumes follow the live trending
//! baseline; the plan is later replayed by the exercise server, which writes an
//! append-only [`eventlog`] that the [`analysis`] reports consume.

pub mod analysis;
pub mod corpus;
pub mod eventlog;
pub mod fixtures;
pub mod scheduler;
pub mod template;
pub mod trend;
