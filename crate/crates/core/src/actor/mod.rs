//! The policy network, PPO-clip updates and step-size schedules.

mod policy;
mod ppo;
mod schedule;

pub use policy::{ActorError, BoundPolicy, Head, PolicyParams, LOG_STD_MAX, LOG_STD_MIN};
pub use ppo::{normalize_advantages, policy_gradient, ppo_clip_update, surrogate_with_grad, ClipConfig, PpoBatch};
pub use schedule::{validate_two_timescale, ScheduleError, ScheduleKind, StepsizeSchedule};
