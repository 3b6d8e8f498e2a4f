//! Social-force pedestrian dynamics: intent, cohesion, coherency,
//! avoidance, and obstacle repulsion, plus per-scenario attraction forces.
//! Momentum is the velocity carried forward by the semi-implicit Euler
//! integrator; |velocity| is clamped to v_max after every force update.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::NeighborIndex;
use crate::world::{Directive, FieldConfig, Goal, Pedestrian, Snapshot, Vec2};

/// Force gains and ranges. The paper names the forces but fixes no
/// magnitudes, so every value is config-overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForceParams {
    /// Relaxation rate toward the desired velocity, 1/s.
    pub intent_gain: f64,
    /// Pull toward the same-hint local centroid, per meter of offset.
    pub cohesion_gain: f64,
    /// Pull toward the same-hint local mean velocity.
    pub coherency_gain: f64,
    /// Peak pedestrian repulsion, m/s^2 at contact.
    pub avoidance_gain: f64,
    /// Repulsion decay length, m.
    pub avoidance_range: f64,
    /// Peak obstacle repulsion, m/s^2 at the surface.
    pub obstacle_gain: f64,
    /// Obstacle repulsion decay length, m.
    pub obstacle_range: f64,
    /// Interaction cutoff radius for neighbor queries, m.
    pub neighbor_range: f64,
    /// Approach taper radius around point goals, m.
    pub arrival_radius: f64,
}

impl Default for ForceParams {
    fn default() -> ForceParams {
        ForceParams {
            intent_gain: 2.0,
            cohesion_gain: 0.3,
            coherency_gain: 0.3,
            avoidance_gain: 8.0,
            avoidance_range: 1.0,
            obstacle_gain: 8.0,
            obstacle_range: 0.5,
            neighbor_range: 3.0,
            arrival_radius: 1.0,
        }
    }
}

/// Extra scenario-wide attraction: toward the exits in an evacuation,
/// toward a fixed point in the localized-congestion scenario.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioForce {
    #[default]
    None,
    ExitAttraction {
        gain: f64,
    },
    FixedPointAttraction {
        target: Vec2,
        gain: f64,
    },
}

/// What a pedestrian is currently trying to do, after folding in any
/// instruction it obeys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveIntent {
    pub goal: Goal,
    pub desired_speed: f64,
    /// False while commandeered by Wait/FollowSpotlight: the pedestrian
    /// stops pursuing its own goal, its group, and the scenario force.
    /// Avoidance and obstacle repulsion always stay on.
    pub volitional: bool,
}

/// Effective goal and speed for a pedestrian. Disobedient pedestrians
/// ignore instructions entirely; SlowDown keeps the pedestrian volitional
/// at a scaled speed; Wait parks it; FollowSpotlight retargets it at the
/// spotlight, capped at the spotlight speed.
pub fn apply_instruction(ped: &Pedestrian) -> EffectiveIntent {
    let base =
        EffectiveIntent { goal: ped.goal, desired_speed: ped.v_max, volitional: true };
    let Some(active) = &ped.active_instruction else {
        return base;
    };
    if !ped.obedient {
        return base;
    }
    match active.directive {
        Directive::SlowDown { factor } => {
            EffectiveIntent { desired_speed: ped.v_max * factor, ..base }
        }
        Directive::Wait => {
            EffectiveIntent { desired_speed: 0.0, volitional: false, ..base }
        }
        Directive::FollowSpotlight { position, speed } => EffectiveIntent {
            goal: Goal::Point { target: position },
            desired_speed: speed.min(ped.v_max),
            volitional: false,
        },
    }
}

/// Read-only per-tick inputs to the force model.
#[derive(Debug, Clone, Copy)]
pub struct ForceContext<'a> {
    pub params: &'a ForceParams,
    pub field: &'a FieldConfig,
    pub scenario_force: &'a ScenarioForce,
}

fn desired_velocity(ped: &Pedestrian, intent: &EffectiveIntent, arrival_radius: f64) -> Vec2 {
    match intent.goal {
        Goal::Heading { direction } => direction * intent.desired_speed,
        Goal::Point { target } => {
            let to_target = target - ped.position;
            let dist = to_target.length();
            match to_target.normalized() {
                // Taper the approach inside the arrival radius.
                Some(dir) => dir * intent.desired_speed * (dist / arrival_radius).min(1.0),
                None => Vec2::ZERO,
            }
        }
    }
}

/// Sum of intent, cohesion, coherency, avoidance, obstacle repulsion, and
/// the scenario force, as an acceleration. `neighbors` must hold every
/// pedestrian within `neighbor_range` (and may hold more).
pub fn compute_force(ped: &Pedestrian, neighbors: &[&Pedestrian], ctx: &ForceContext) -> Vec2 {
    let p = ctx.params;
    let intent = apply_instruction(ped);
    let mut force =
        (desired_velocity(ped, &intent, p.arrival_radius) - ped.velocity) * p.intent_gain;

    if intent.volitional {
        // Cohesion and coherency over same-hint pedestrians nearby,
        // including self so a lone member feels nothing.
        let mut centroid = ped.position;
        let mut mean_v = ped.velocity;
        let mut count = 1.0;
        for other in neighbors {
            if other.group_hint == ped.group_hint {
                centroid += other.position;
                mean_v += other.velocity;
                count += 1.0;
            }
        }
        centroid = centroid / count;
        mean_v = mean_v / count;
        force += (centroid - ped.position) * p.cohesion_gain;
        force += (mean_v - ped.velocity) * p.coherency_gain;

        force += match *ctx.scenario_force {
            ScenarioForce::None => Vec2::ZERO,
            ScenarioForce::ExitAttraction { gain } => ctx
                .field
                .exits
                .iter()
                .map(|e| e.closest_point(ped.position) - ped.position)
                .min_by(|a, b| a.length_sq().total_cmp(&b.length_sq()))
                .and_then(|d| d.normalized())
                .map_or(Vec2::ZERO, |dir| dir * gain),
            ScenarioForce::FixedPointAttraction { target, gain } => (target - ped.position)
                .normalized()
                .map_or(Vec2::ZERO, |dir| dir * gain),
        };
    }

    for other in neighbors {
        let sep = ped.position - other.position;
        let dist = sep.length();
        if dist > p.neighbor_range {
            continue;
        }
        // Coincident pedestrians get an id-ordered deterministic push.
        let away = sep.normalized().unwrap_or_else(|| {
            if ped.id < other.id {
                Vec2::new(1.0, 0.0)
            } else {
                Vec2::new(-1.0, 0.0)
            }
        });
        force += away * p.avoidance_gain * (-dist / p.avoidance_range).exp();
    }

    for obstacle in &ctx.field.obstacles {
        let (away, dist) = obstacle.repulsion(ped.position);
        if dist <= p.neighbor_range {
            force += away * p.obstacle_gain * (-dist / p.obstacle_range).exp();
        }
    }

    force
}

/// Mutable simulation state: the field, the crowd, and the integrator.
#[derive(Debug, Clone)]
pub struct World {
    pub field: FieldConfig,
    pub params: ForceParams,
    pub scenario_force: ScenarioForce,
    /// Ascending by id.
    pub pedestrians: Vec<Pedestrian>,
    /// Ids deactivated by exit crossings, in crossing order.
    pub exited: Vec<u32>,
    pub tick: u64,
    pub dt: f64,
    previous_positions: BTreeMap<u32, Vec2>,
}

impl World {
    pub fn new(
        field: FieldConfig,
        params: ForceParams,
        scenario_force: ScenarioForce,
        mut pedestrians: Vec<Pedestrian>,
        dt: f64,
    ) -> World {
        assert!(dt > 0.0, "dt must be positive");
        pedestrians.sort_by_key(|p| p.id);
        World {
            field,
            params,
            scenario_force,
            pedestrians,
            exited: Vec::new(),
            tick: 0,
            dt,
            previous_positions: BTreeMap::new(),
        }
    }

    /// Advances one tick: parallel force pass over the previous state, then
    /// a serial integrate/clamp/exit/clip write-back. Results are identical
    /// for any worker count because the force pass is order-preserving.
    pub fn step(&mut self) {
        let positions: Vec<Vec2> = self.pedestrians.iter().map(|p| p.position).collect();
        let index = NeighborIndex::build(&positions, self.params.neighbor_range);
        let ctx = ForceContext {
            params: &self.params,
            field: &self.field,
            scenario_force: &self.scenario_force,
        };
        let forces: Vec<Vec2> = self
            .pedestrians
            .par_iter()
            .enumerate()
            .map(|(i, ped)| {
                let neighbors: Vec<&Pedestrian> = index
                    .neighbors_of(i, self.params.neighbor_range)
                    .into_iter()
                    .map(|j| &self.pedestrians[j])
                    .collect();
                compute_force(ped, &neighbors, &ctx)
            })
            .collect();

        let dt = self.dt;
        let mut crossed: Vec<u32> = Vec::new();
        for (ped, force) in self.pedestrians.iter_mut().zip(&forces) {
            let from = ped.position;
            ped.velocity = (ped.velocity + *force * dt).clamp_length(ped.v_max);
            let mut to = from + ped.velocity * dt;
            if self.field.exits.iter().any(|e| e.crossed_by(from, to)) {
                crossed.push(ped.id);
                continue;
            }
            to = self.field.clamp(to);
            for obstacle in &self.field.obstacles {
                if obstacle.contains(to) {
                    to = obstacle.project_out(to, 1e-6);
                }
            }
            ped.position = to;
        }

        self.previous_positions = self
            .pedestrians
            .iter()
            .filter(|p| !crossed.contains(&p.id))
            .map(|p| (p.id, positions[self.index_of(p.id)]))
            .collect();
        self.pedestrians.retain(|p| !crossed.contains(&p.id));
        self.exited.extend(crossed);
        self.tick += 1;
    }

    fn index_of(&self, id: u32) -> usize {
        self.pedestrians
            .binary_search_by_key(&id, |p| p.id)
            .expect("id present")
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            tick: self.tick,
            sim_time: self.tick as f64 * self.dt,
            dt: self.dt,
            pedestrians: self.pedestrians.clone(),
            previous_positions: self.previous_positions.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{ped, XorShift};
    use crate::world::{ActiveDirective, ExitSegment, Obstacle};

    fn quiet_params() -> ForceParams {
        ForceParams {
            cohesion_gain: 0.0,
            coherency_gain: 0.0,
            avoidance_gain: 0.0,
            obstacle_gain: 0.0,
            ..ForceParams::default()
        }
    }

    #[test]
    fn lone_pedestrian_feels_pure_intent() {
        let p = ped(0, 10.0, 10.0);
        let ctx = ForceContext {
            params: &ForceParams::default(),
            field: &FieldConfig::open(50.0, 50.0),
            scenario_force: &ScenarioForce::None,
        };
        let f = compute_force(&p, &[], &ctx);
        // Goal due east, zero velocity: force = gain * v_max eastward.
        assert!((f.x - 2.0 * 1.5).abs() < 1e-12);
        assert_eq!(f.y, 0.0);
    }

    #[test]
    fn at_centroid_with_group_velocity_group_terms_vanish() {
        let params = ForceParams {
            intent_gain: 0.0,
            avoidance_gain: 0.0,
            obstacle_gain: 0.0,
            ..ForceParams::default()
        };
        let mut a = ped(0, 5.0, 4.0);
        let mut b = ped(1, 5.0, 5.0);
        let mut c = ped(2, 5.0, 6.0);
        for q in [&mut a, &mut b, &mut c] {
            q.velocity = Vec2::new(1.0, 0.0);
        }
        let ctx = ForceContext {
            params: &params,
            field: &FieldConfig::open(50.0, 50.0),
            scenario_force: &ScenarioForce::None,
        };
        let f = compute_force(&b, &[&a, &c], &ctx);
        assert!(f.length() < 1e-12);
    }

    #[test]
    fn head_on_pair_repel_each_other() {
        let params = ForceParams {
            intent_gain: 0.0,
            cohesion_gain: 0.0,
            coherency_gain: 0.0,
            ..ForceParams::default()
        };
        let left = ped(0, 10.0, 10.0);
        let right = ped(1, 10.8, 10.0);
        let ctx = ForceContext {
            params: &params,
            field: &FieldConfig::open(50.0, 50.0),
            scenario_force: &ScenarioForce::None,
        };
        let f_left = compute_force(&left, &[&right], &ctx);
        let f_right = compute_force(&right, &[&left], &ctx);
        assert!(f_left.x < 0.0, "left pedestrian pushed west");
        assert!(f_right.x > 0.0, "right pedestrian pushed east");
        // Expected magnitude: gain * exp(-d / range).
        let expect = 8.0 * (-0.8f64 / 1.0).exp();
        assert!((f_left.x + expect).abs() < 1e-12);
        assert!((f_right.x - expect).abs() < 1e-12);
    }

    #[test]
    fn relaxation_matches_closed_form() {
        let mut w = World::new(
            FieldConfig::open(200.0, 50.0),
            quiet_params(),
            ScenarioForce::None,
            vec![{
                let mut p = ped(0, 5.0, 25.0);
                p.v_max = 1.3;
                p
            }],
            0.1,
        );
        // Discrete relaxation: v_k = v_d (1 - (1 - g dt)^k).
        for k in 1..=25u32 {
            w.step();
            let want = 1.3 * (1.0 - 0.8f64.powi(k as i32));
            let got = w.pedestrians[0].velocity.x;
            assert!((got - want).abs() < 1e-12, "tick {k}: {got} vs {want}");
        }
        // After 5/gain seconds the speed is within 1% of desired.
        assert!((w.pedestrians[0].velocity.x - 1.3).abs() < 0.013);
    }

    #[test]
    fn speeds_never_exceed_v_max_and_never_tunnel() {
        let mut rng = XorShift(0x0dd_ba11);
        let mut peds = Vec::new();
        for id in 0..50u32 {
            let mut p = ped(id, rng.range(1.0, 29.0), rng.range(1.0, 29.0));
            p.goal = Goal::Point { target: Vec2::new(15.0, 15.0) };
            p.v_max = rng.range(0.8, 1.6);
            peds.push(p);
        }
        let mut w = World::new(
            FieldConfig::open(30.0, 30.0),
            ForceParams::default(),
            ScenarioForce::FixedPointAttraction { target: Vec2::new(15.0, 15.0), gain: 1.0 },
            peds,
            0.1,
        );
        for _ in 0..200 {
            let before: Vec<Vec2> = w.pedestrians.iter().map(|p| p.position).collect();
            w.step();
            for (p, b) in w.pedestrians.iter().zip(&before) {
                assert!(p.velocity.length() <= p.v_max + 1e-9);
                assert!(p.position.distance(*b) <= p.v_max * w.dt + 1e-9);
                assert!(w.field.contains(p.position));
            }
        }
    }

    #[test]
    fn empty_world_still_ticks() {
        let mut w = World::new(
            FieldConfig::open(10.0, 10.0),
            ForceParams::default(),
            ScenarioForce::None,
            Vec::new(),
            0.1,
        );
        w.step();
        assert_eq!(w.tick, 1);
        assert!(w.pedestrians.is_empty());
    }

    #[test]
    fn exit_crossing_deactivates() {
        let mut field = FieldConfig::open(20.0, 10.0);
        field.exits.push(ExitSegment { a: Vec2::new(20.0, 2.0), b: Vec2::new(20.0, 8.0) });
        let mut p = ped(7, 18.5, 5.0);
        p.v_max = 1.5;
        let mut w = World::new(field, quiet_params(), ScenarioForce::None, vec![p], 0.1);
        for _ in 0..30 {
            w.step();
            if w.pedestrians.is_empty() {
                break;
            }
        }
        assert!(w.pedestrians.is_empty(), "pedestrian should have left");
        assert_eq!(w.exited, vec![7]);
    }

    #[test]
    fn obstacles_stay_impenetrable() {
        let mut field = FieldConfig::open(30.0, 10.0);
        field.obstacles.push(Obstacle::Circle { center: Vec2::new(15.0, 5.0), radius: 2.0 });
        let mut p = ped(0, 2.0, 5.0);
        p.goal = Goal::Heading { direction: Vec2::new(1.0, 0.0) };
        let mut w =
            World::new(field.clone(), ForceParams::default(), ScenarioForce::None, vec![p], 0.1);
        for _ in 0..300 {
            w.step();
            let pos = w.pedestrians[0].position;
            assert!(!field.obstacles[0].contains(pos), "inside obstacle at {pos:?}");
        }
    }

    #[test]
    fn head_on_pair_keep_minimum_separation() {
        let mut left = ped(0, 5.0, 10.0);
        left.goal = Goal::Heading { direction: Vec2::new(1.0, 0.0) };
        let mut right = ped(1, 15.0, 10.0);
        right.goal = Goal::Heading { direction: Vec2::new(-1.0, 0.0) };
        right.group_hint = 1;
        let mut w = World::new(
            FieldConfig::open(20.0, 20.0),
            ForceParams::default(),
            ScenarioForce::None,
            vec![left, right],
            0.1,
        );
        let mut min_gap = f64::INFINITY;
        for _ in 0..400 {
            w.step();
            let gap = w.pedestrians[0].position.distance(w.pedestrians[1].position);
            min_gap = min_gap.min(gap);
        }
        assert!(min_gap >= 0.3, "closest approach {min_gap} m");
    }

    #[test]
    fn step_is_identical_across_worker_counts() {
        let run = |threads: usize| -> Vec<(u32, Vec2, Vec2)> {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let mut rng = XorShift(0xfeed);
            let mut peds = Vec::new();
            for id in 0..40u32 {
                let mut p = ped(id, rng.range(2.0, 38.0), rng.range(2.0, 38.0));
                p.group_hint = id % 4;
                peds.push(p);
            }
            let mut w = World::new(
                FieldConfig::open(40.0, 40.0),
                ForceParams::default(),
                ScenarioForce::None,
                peds,
                0.1,
            );
            pool.install(|| {
                for _ in 0..100 {
                    w.step();
                }
            });
            w.pedestrians.iter().map(|p| (p.id, p.position, p.velocity)).collect()
        };
        assert_eq!(run(1), run(4), "bit-identical states regardless of workers");
    }

    #[test]
    fn wait_brakes_and_slow_down_scales() {
        let mut waiting = ped(0, 10.0, 10.0);
        waiting.velocity = Vec2::new(1.5, 0.0);
        waiting.active_instruction =
            Some(ActiveDirective { directive: Directive::Wait, issue_tick: 0 });
        let mut slowed = ped(1, 20.0, 10.0);
        slowed.active_instruction = Some(ActiveDirective {
            directive: Directive::SlowDown { factor: 0.5 },
            issue_tick: 0,
        });
        let mut deaf = ped(2, 30.0, 10.0);
        deaf.obedient = false;
        deaf.active_instruction =
            Some(ActiveDirective { directive: Directive::Wait, issue_tick: 0 });

        let mut w = World::new(
            FieldConfig::open(60.0, 20.0),
            quiet_params(),
            ScenarioForce::None,
            vec![waiting, slowed, deaf],
            0.1,
        );
        for _ in 0..60 {
            w.step();
        }
        assert!(w.pedestrians[0].velocity.length() < 1e-5, "waiting pedestrian stops");
        assert!((w.pedestrians[1].velocity.length() - 0.75).abs() < 1e-4, "half of v_max 1.5");
        assert!((w.pedestrians[2].velocity.length() - 1.5).abs() < 1e-4, "disobedient ignores");
    }

    #[test]
    fn follow_spotlight_caps_speed_and_retargets() {
        let mut p = ped(0, 10.0, 10.0);
        p.active_instruction = Some(ActiveDirective {
            directive: Directive::FollowSpotlight {
                position: Vec2::new(40.0, 10.0),
                speed: 1.0,
            },
            issue_tick: 0,
        });
        let intent = apply_instruction(&p);
        assert_eq!(intent.goal, Goal::Point { target: Vec2::new(40.0, 10.0) });
        assert_eq!(intent.desired_speed, 1.0);
        assert!(!intent.volitional);

        let mut w = World::new(
            FieldConfig::open(60.0, 20.0),
            quiet_params(),
            ScenarioForce::None,
            vec![p],
            0.1,
        );
        for _ in 0..60 {
            w.step();
        }
        let v = w.pedestrians[0].velocity;
        assert!((v.length() - 1.0).abs() < 1e-4, "cruises at spotlight speed");
        assert!(v.x > 0.99, "heading at the spotlight");
    }
}
