use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    InversePower,
}

/// Step size `base` (constant) or `base / (1 + k)^p` (inverse-power).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepsizeSchedule {
    pub kind: ScheduleKind,
    pub base: f64,
    #[serde(default)]
    pub exponent: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("schedule base rate must be positive and finite, got {0}")]
    BadBase(f64),
    #[error("inverse-power exponent must be finite and non-negative, got {0}")]
    BadExponent(f64),
    #[error("actor rate must become negligible next to the critic rate: {0}")]
    NotTwoTimescale(String),
}

impl StepsizeSchedule {
    pub fn constant(base: f64) -> Self {
        Self { kind: ScheduleKind::Constant, base, exponent: 0.0 }
    }

    pub fn inverse_power(base: f64, exponent: f64) -> Self {
        Self { kind: ScheduleKind::InversePower, base, exponent }
    }

    pub fn rate(&self, k: u64) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.base,
            ScheduleKind::InversePower => self.base / (1.0 + k as f64).powf(self.exponent),
        }
    }

    /// Decay exponent as seen by the ratio test; constant schedules decay at rate 0.
    fn decay(&self) -> f64 {
        match self.kind {
            ScheduleKind::Constant => 0.0,
            ScheduleKind::InversePower => self.exponent,
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(self.base > 0.0) || !self.base.is_finite() {
            return Err(ScheduleError::BadBase(self.base));
        }
        if self.kind == ScheduleKind::InversePower && !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(ScheduleError::BadExponent(self.exponent));
        }
        Ok(())
    }

    /// Σ rate diverges and Σ rate² converges (p-series test with p ∈ (1/2, 1]).
    pub fn is_robbins_monro(&self) -> bool {
        self.kind == ScheduleKind::InversePower && self.exponent > 0.5 && self.exponent <= 1.0
    }
}

/// Accepts `(actor, critic)` when `actor(k)/critic(k)` is non-increasing with limit 0, or when both
/// are constant with the actor rate strictly smaller.
pub fn validate_two_timescale(actor: &StepsizeSchedule, critic: &StepsizeSchedule) -> Result<(), ScheduleError> {
    actor.validate()?;
    critic.validate()?;
    if actor.kind == ScheduleKind::Constant && critic.kind == ScheduleKind::Constant {
        return if actor.base < critic.base {
            Ok(())
        } else {
            Err(ScheduleError::NotTwoTimescale(format!(
                "constant actor rate {} is not below constant critic rate {}",
                actor.base, critic.base
            )))
        };
    }
    // ratio = (a.base / c.base) · (1 + k)^(c.p − a.p)
    if actor.decay() > critic.decay() {
        Ok(())
    } else {
        Err(ScheduleError::NotTwoTimescale(format!(
            "actor decay exponent {} must exceed critic decay exponent {}",
            actor.decay(),
            critic.decay()
        )))
    }
}
