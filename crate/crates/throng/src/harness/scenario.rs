//! Scenario schema, validation, and world instantiation.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::ControlParams;
use crate::detection::DetectionParams;
use crate::dynamics::{ForceParams, ScenarioForce, World};
use crate::world::{build_partition, FieldConfig, Goal, GridPartition, Pedestrian, Vec2};

/// Two pedestrians closer than this at tick zero are a validation error.
pub const MIN_SEPARATION: f64 = 0.2;

const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn obedience_rate() -> f64 {
    1.0
}

/// Initial state of one pedestrian. An unset `obedient` flag is sampled
/// from the scenario's `obedience_rate` at instantiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianSpec {
    pub id: u32,
    pub position: Vec2,
    #[serde(default)]
    pub velocity: Vec2,
    pub goal: Goal,
    #[serde(default)]
    pub group_hint: u32,
    pub v_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obedient: Option<bool>,
}

/// A complete experiment description. Deterministic given (scenario,
/// seed): instantiation samples missing obedience flags with a seeded
/// generator and everything downstream is tick-ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub field: FieldConfig,
    /// Detection grid cell edge, meters.
    pub cell_size: f64,
    pub dt: f64,
    pub seed: u64,
    pub tick_budget: u64,
    /// Probability that a pedestrian without an explicit flag obeys.
    #[serde(default = "obedience_rate")]
    pub obedience_rate: f64,
    #[serde(default)]
    pub scenario_force: ScenarioForce,
    #[serde(default)]
    pub forces: ForceParams,
    #[serde(default)]
    pub detection: DetectionParams,
    #[serde(default)]
    pub control: ControlParams,
    pub pedestrians: Vec<PedestrianSpec>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {}", violations.join("; "))]
    Invalid { violations: Vec<String> },
}

/// Reads, parses, and fully validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let violations = scenario.violations();
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid { violations })
    }
}

impl Scenario {
    /// Every violated invariant, empty when the scenario is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(format!(
                "schema_version {} is unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        out.extend(self.field.violations());
        if build_partition(&self.field, self.cell_size).is_err() {
            out.push(format!(
                "cell_size {} must be positive and fit inside the field",
                self.cell_size
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt {} must be positive", self.dt));
        }
        if self.tick_budget == 0 {
            out.push("tick_budget must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.obedience_rate) {
            out.push(format!(
                "obedience_rate {} must lie in [0, 1]",
                self.obedience_rate
            ));
        }
        out.extend(self.param_violations());

        let mut seen = std::collections::BTreeSet::new();
        for spec in &self.pedestrians {
            if !seen.insert(spec.id) {
                out.push(format!("pedestrian id {} appears twice", spec.id));
            }
            out.extend(self.pedestrian_violations(spec));
        }
        for (i, a) in self.pedestrians.iter().enumerate() {
            for b in &self.pedestrians[i + 1..] {
                if a.position.distance(b.position) < MIN_SEPARATION {
                    out.push(format!(
                        "pedestrians {} and {} start closer than {MIN_SEPARATION} m",
                        a.id, b.id
                    ));
                }
            }
        }
        out
    }

    fn pedestrian_violations(&self, spec: &PedestrianSpec) -> Vec<String> {
        let mut out = Vec::new();
        let p = spec.position;
        if !(p.x.is_finite() && p.y.is_finite()) {
            out.push(format!("pedestrian {} has a non-finite position", spec.id));
            return out;
        }
        if !self.field.contains(p) {
            out.push(format!("pedestrian {} starts outside the field", spec.id));
        }
        if self.field.obstacles.iter().any(|o| o.contains(p)) {
            out.push(format!("pedestrian {} starts inside an obstacle", spec.id));
        }
        if !(spec.v_max > 0.0 && spec.v_max.is_finite()) {
            out.push(format!(
                "pedestrian {} v_max {} must be positive",
                spec.id, spec.v_max
            ));
        }
        if spec.velocity.length() > spec.v_max + 1e-9 {
            out.push(format!(
                "pedestrian {} starts faster than its v_max",
                spec.id
            ));
        }
        match spec.goal {
            Goal::Point { target } => {
                if !(target.x.is_finite() && target.y.is_finite()) {
                    out.push(format!("pedestrian {} has a non-finite goal", spec.id));
                }
            }
            Goal::Heading { direction } => {
                if direction.normalized().is_none() {
                    out.push(format!(
                        "pedestrian {} has a degenerate goal heading",
                        spec.id
                    ));
                }
            }
        }
        out
    }

    fn param_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = &self.detection;
        for (name, value) in [
            ("detection.density_max", d.density_max),
            ("detection.r", d.r),
            ("detection.r_connect", d.r_connect),
            ("detection.epsilon_speed", d.epsilon_speed),
            ("detection.rho", d.rho),
            ("detection.flow_window", d.flow_window),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                out.push(format!("{name} {value} must be positive"));
            }
        }
        if !(d.theta_dir > 0.0 && d.theta_dir <= std::f64::consts::PI) {
            out.push(format!(
                "detection.theta_dir {} must lie in (0, pi] radians",
                d.theta_dir
            ));
        }
        let c = &self.control;
        if !(c.slowdown_factor > 0.0 && c.slowdown_factor <= 1.0) {
            out.push(format!(
                "control.slowdown_factor {} must lie in (0, 1]",
                c.slowdown_factor
            ));
        }
        for (name, value) in [
            ("control.vacancy_density", c.vacancy_density),
            ("control.spotlight_speed_cap", c.spotlight_speed_cap),
            ("control.spotlight_speed_factor", c.spotlight_speed_factor),
            ("control.return_speed", c.return_speed),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                out.push(format!("{name} {value} must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&c.escalation_threshold) {
            out.push(format!(
                "control.escalation_threshold {} must lie in [0, 1]",
                c.escalation_threshold
            ));
        }
        out
    }

    /// The detection partition for this scenario. Panics on an invalid
    /// scenario; call `violations` first.
    pub fn partition(&self) -> GridPartition {
        build_partition(&self.field, self.cell_size).expect("validated scenario")
    }

    /// Builds the initial world. Missing obedience flags are sampled in
    /// ascending id order from a generator seeded by `seed`, so the same
    /// (scenario, seed) always yields the same crowd.
    pub fn instantiate(&self) -> World {
        let mut specs: Vec<&PedestrianSpec> = self.pedestrians.iter().collect();
        specs.sort_by_key(|s| s.id);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let pedestrians = specs
            .into_iter()
            .map(|spec| Pedestrian {
                id: spec.id,
                position: spec.position,
                velocity: spec.velocity,
                goal: spec.goal,
                group_hint: spec.group_hint,
                v_max: spec.v_max,
                obedient: spec
                    .obedient
                    .unwrap_or_else(|| rng.gen_bool(self.obedience_rate)),
                active_instruction: None,
            })
            .collect();
        World::new(
            self.field.clone(),
            self.forces,
            self.scenario_force,
            pedestrians,
            self.dt,
        )
    }
}
