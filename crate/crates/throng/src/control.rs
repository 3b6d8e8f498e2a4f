//! Congestion control: a flying agent per congested region that slows
//! conflicting subgroups, leads groups out along straight or semicircular
//! paths, and escalates to the police when the crowd stops listening.

mod cca;
mod semicircle;

pub use cca::{
    classify_case, plan_straight_lead, Case, CcaState, ControlOutput, Phase, RegionController,
    ResolutionOutcome,
};
pub use semicircle::{plan_semicircle, ArcDirection, SemicirclePath};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::CongestedRegion;
use crate::world::{Directive, GridId};

/// Controller thresholds. All config-overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlParams {
    pub enabled: bool,
    /// Desired-speed multiplier broadcast in a speed-conflict case.
    pub slowdown_factor: f64,
    /// A grid is vacant below this density, persons per square meter.
    pub vacancy_density: f64,
    /// Hard spotlight speed ceiling, m/s.
    pub spotlight_speed_cap: f64,
    /// Spotlight speed as a fraction of the led group's mean v_max.
    pub spotlight_speed_factor: f64,
    /// Flight speed of an unloaded controller, m/s.
    pub return_speed: f64,
    /// Consecutive clear ticks required to call a region resolved.
    pub confirmation_window: u32,
    /// Disobedience fraction at or above which escalation arms.
    pub escalation_threshold: f64,
    /// Consecutive high-disobedience ticks before the police request.
    pub escalation_debounce: u32,
    /// Compliance speed slack, m/s.
    pub tol_speed: f64,
    /// Compliance heading slack, radians.
    pub tol_angle: f64,
}

impl Default for ControlParams {
    fn default() -> ControlParams {
        ControlParams {
            enabled: false,
            slowdown_factor: 0.5,
            vacancy_density: 0.5,
            spotlight_speed_cap: 1.0,
            spotlight_speed_factor: 0.8,
            return_speed: 5.0,
            confirmation_window: 10,
            escalation_threshold: 0.3,
            escalation_debounce: 20,
            tol_speed: 0.3,
            tol_angle: 75f64.to_radians(),
        }
    }
}

/// One broadcast to one group: who was addressed and with what.
/// Spotlight position updates refresh the pedestrians' directives in
/// place; a new Instruction is recorded only when the addressed set or
/// the directive kind changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub directive: Directive,
    pub region_key: GridId,
    pub group_id: u32,
    /// Addressed pedestrian ids, frozen at issue time.
    pub members: Vec<u32>,
    pub issue_tick: u64,
}

/// Emitted when sustained disobedience exceeds the escalation threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoliceRequest {
    pub tick: u64,
    pub region: CongestedRegion,
    pub fraction: f64,
}

/// Debounced threshold trigger for escalation: fires once the observed
/// fraction stays at or above the threshold for `window` consecutive
/// observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Escalation {
    pub threshold: f64,
    pub window: u32,
    streak: u32,
}

impl Escalation {
    pub fn new(threshold: f64, window: u32) -> Escalation {
        Escalation { threshold, window, streak: 0 }
    }

    /// Feeds one tick's disobedience fraction; true when the debounce
    /// window fills.
    pub fn observe(&mut self, fraction: f64) -> bool {
        if fraction >= self.threshold {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.window
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("congested region names no live groups")]
    InvalidRegion,
    #[error("no vacant grid in front of group {0}")]
    NoVacantFront(u32),
    #[error("semicircle needs at least two members, got {0}")]
    DegenerateRegion(usize),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escalation_requires_threshold_and_debounce() {
        let mut e = Escalation::new(0.3, 3);
        assert!(!e.observe(0.29), "below threshold never arms");
        assert!(!e.observe(0.3));
        assert!(!e.observe(0.4));
        assert!(e.observe(1.0), "third consecutive high tick fires");
    }

    #[test]
    fn escalation_streak_resets_on_a_quiet_tick() {
        let mut e = Escalation::new(0.3, 3);
        assert!(!e.observe(0.5));
        assert!(!e.observe(0.5));
        assert!(!e.observe(0.0), "quiet tick resets");
        assert!(!e.observe(0.5));
        assert!(!e.observe(0.5));
        assert!(e.observe(0.5));
    }
}
