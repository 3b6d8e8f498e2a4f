//! Pedestrian state and the control directives a pedestrian can carry.

use serde::{Deserialize, Serialize};

use super::vec2::Vec2;

/// Where a pedestrian wants to go: a fixed target or a fixed walking
/// direction (stored normalized).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Goal {
    Point { target: Vec2 },
    Heading { direction: Vec2 },
}

/// Per-pedestrian projection of a broadcast instruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Directive {
    SlowDown { factor: f64 },
    Wait,
    FollowSpotlight { position: Vec2, speed: f64 },
}

/// Directive currently addressed to a pedestrian, tagged with the tick the
/// underlying instruction was first issued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveDirective {
    pub directive: Directive,
    pub issue_tick: u64,
}

/// One simulated human. |velocity| <= v_max and the position stays in the
/// field and outside obstacles at every tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    pub goal: Goal,
    /// Social group label from the scenario; cohesion and coherency act
    /// only between pedestrians sharing it.
    pub group_hint: u32,
    pub v_max: f64,
    pub obedient: bool,
    pub active_instruction: Option<ActiveDirective>,
}
