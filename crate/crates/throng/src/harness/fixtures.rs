//! Bundled scenario builders. The committed scenario files are generated
//! from these builders; a drift test keeps them in sync.

use super::scenario::{PedestrianSpec, Scenario};
use crate::control::ControlParams;
use crate::detection::DetectionParams;
use crate::dynamics::{ForceParams, ScenarioForce};
use crate::world::{ExitSegment, FieldConfig, Goal, Vec2};

/// Table rows the resolution-trend experiment sweeps:
/// (humans, conflicting groups, uniform v_max). The same stride on every
/// row keeps the spotlight speed cap binding throughout, so resolution
/// time scales with crowd size and ring radius rather than gait.
pub const TABLE_ROWS: [(u32, u32, f64); 6] = [
    (6, 3, 1.4),
    (12, 3, 1.4),
    (19, 3, 1.4),
    (28, 5, 1.4),
    (34, 6, 1.4),
    (41, 8, 1.4),
];

fn unit(angle: f64) -> Vec2 {
    Vec2::new(angle.cos(), angle.sin())
}

fn spec(id: u32, position: Vec2, goal: Goal, group_hint: u32, v_max: f64) -> PedestrianSpec {
    PedestrianSpec {
        id,
        position,
        velocity: Vec2::ZERO,
        goal,
        group_hint,
        v_max,
        obedient: None,
    }
}

/// A calm crowd walking to a wall-wide exit gate. Free flow everywhere,
/// yet density-style detectors misfire: a packed square block trips both
/// the naive occupancy threshold and the trapped-neighbors rule, and the
/// flow counter reads any freshly occupied grid as congested.
pub fn evacuation_scenario() -> Scenario {
    let mut pedestrians = Vec::new();
    // Sparse marching lattice, 15 columns by 5 rows.
    for i in 0..75u32 {
        let col = (i % 15) as f64;
        let row = (i / 15) as f64;
        pedestrians.push(spec(
            i,
            Vec2::new(3.0 + 1.5 * col, 11.0 + 1.5 * row),
            Goal::Heading {
                direction: Vec2::new(1.0, 0.0),
            },
            0,
            1.4,
        ));
    }
    // Packed block ahead of the lattice, 5 by 5 at 0.7 m spacing, dense
    // enough for the occupancy and trapped-neighbor rules yet marching
    // coherently as one parallel-heading group.
    for i in 0..25u32 {
        let col = (i % 5) as f64;
        let row = (i / 5) as f64;
        pedestrians.push(spec(
            75 + i,
            Vec2::new(28.0 + 0.7 * col, 13.0 + 0.7 * row),
            Goal::Heading {
                direction: Vec2::new(1.0, 0.0),
            },
            0,
            1.4,
        ));
    }
    Scenario {
        schema_version: 1,
        name: "evacuation".into(),
        field: FieldConfig {
            width: 40.0,
            height: 30.0,
            obstacles: Vec::new(),
            exits: vec![ExitSegment {
                a: Vec2::new(40.0, 0.0),
                b: Vec2::new(40.0, 30.0),
            }],
        },
        cell_size: 4.0,
        dt: 0.1,
        seed: 42,
        tick_budget: 600,
        obedience_rate: 1.0,
        scenario_force: ScenarioForce::ExitAttraction { gain: 1.0 },
        // Contact-scale repulsion: at the default range the packed block
        // churns into diverging fragments instead of flowing freely.
        forces: ForceParams {
            avoidance_range: 0.3,
            ..ForceParams::default()
        },
        detection: DetectionParams {
            density_max: 0.5,
            ..DetectionParams::default()
        },
        control: ControlParams::default(),
        pedestrians,
    }
}

const LOCALIZED_CENTER: Vec2 = Vec2 { x: 30.0, y: 30.0 };

/// Gap between members of a single-file formation. Wide enough that the
/// avoidance force stays dormant, close enough for group connectivity.
const FILE_SPACING: f64 = 1.5;

/// One single-file formation: `count` members strung behind `head` along
/// the direction of travel, each walking a parallel track to its own goal.
/// Files are direction-stable: member jostle is longitudinal, so headings
/// stay aligned and the formation reads as one group throughout.
fn file_formation(
    first_id: u32,
    head: Vec2,
    target: Vec2,
    count: u32,
    hint: u32,
    v_max: f64,
    out: &mut Vec<PedestrianSpec>,
) {
    let dir = (target - head).normalized().expect("separated endpoints");
    for j in 0..count {
        let back = dir * (FILE_SPACING * j as f64);
        let mut ped = spec(
            first_id + j,
            head - back,
            Goal::Point { target: target - back },
            hint,
            v_max,
        );
        // At cruise from the first tick: a standing start sends a
        // compression wave down the file that breaks it apart.
        ped.velocity = dir * v_max;
        out.push(ped);
    }
}

/// Angle to rotate each group's target off the exact antipode. A walk
/// from radius `r_in` to radius `r_out` then misses the center by about
/// 0.45 m, which keeps the crossing mechanically asymmetric while the
/// pairwise ray intersections still cluster inside the rho gate (the
/// intersection triangle has sides of roughly 2 * sqrt(3) * miss).
fn crossing_skew(r_in: f64, r_out: f64) -> f64 {
    (0.45 * (r_in + r_out) / (r_in * r_out)).asin()
}

/// Three groups on a ring walking to near-antipodal targets; their paths
/// all cross by the ring center.
fn ring_crossing(extra: Vec<PedestrianSpec>) -> Vec<PedestrianSpec> {
    let mut pedestrians = extra;
    let skew = crossing_skew(18.0, 26.0);
    for k in 0..3u32 {
        let angle = f64::to_radians(120.0 * k as f64);
        let anchor = LOCALIZED_CENTER + unit(angle) * 18.0;
        let target = LOCALIZED_CENTER + unit(angle + std::f64::consts::PI + skew) * 26.0;
        file_formation(10 * k, anchor, target, 5, k, 1.5, &mut pedestrians);
    }
    pedestrians.sort_by_key(|p| p.id);
    pedestrians
}

/// Localized congestion: three small groups converge on one point inside
/// an otherwise empty field. Only direction analysis can see it coming.
pub fn localized_scenario() -> Scenario {
    Scenario {
        schema_version: 1,
        name: "localized".into(),
        field: FieldConfig::open(60.0, 60.0),
        cell_size: 10.0,
        dt: 0.1,
        seed: 11,
        tick_budget: 3000,
        obedience_rate: 1.0,
        scenario_force: ScenarioForce::FixedPointAttraction {
            target: LOCALIZED_CENTER,
            gain: 0.3,
        },
        // The scripted files hold shape through parallel per-member goals
        // alone: no flocking pull, and contact-scale repulsion, because at
        // the default range the tail of a file is pushed backward by the
        // whole column ahead and the formation stretches until it splits.
        forces: ForceParams {
            cohesion_gain: 0.0,
            avoidance_range: 0.3,
            ..ForceParams::default()
        },
        // The horizon just covers the ring, so predicted collisions are
        // seen early while short post-resolution jostle rays stay quiet.
        detection: DetectionParams {
            d_max: Some(22.0),
            ..DetectionParams::default()
        },
        control: ControlParams {
            enabled: true,
            ..ControlParams::default()
        },
        pedestrians: ring_crossing(Vec::new()),
    }
}

/// Localized scenario with standing bystanders packed across every
/// converging group's front grid, forcing the controller off the straight
/// lead and onto the semicircular detour.
pub fn detour_scenario() -> Scenario {
    // One standing trio in the cell each file is about to enter, so no
    // group has a vacant lane in front, plus one trio inside the region
    // itself for the detour planner to sweep around.
    let trios = [
        (90u32, 41.0, 29.0),
        (91, 42.2, 29.0),
        (92, 43.4, 29.0),
        (93, 22.2, 38.5),
        (94, 23.4, 38.5),
        (95, 24.6, 38.5),
        (96, 22.0, 21.5),
        (97, 23.2, 21.5),
        (98, 24.4, 21.5),
        (99, 31.6, 28.0),
        (100, 32.8, 28.0),
        (101, 34.0, 28.0),
    ];
    let bystanders = trios
        .into_iter()
        .map(|(id, x, y)| {
            let position = Vec2::new(x, y);
            spec(id, position, Goal::Point { target: position }, 9, 0.6)
        })
        .collect();
    let mut scenario = localized_scenario();
    scenario.name = "detour".into();
    scenario.pedestrians = ring_crossing(bystanders);
    scenario.control.vacancy_density = 0.02;
    scenario
}

/// Localized scenario with six pedestrians who ignore instructions: 40%
/// of the instructed crowd once an episode is under way, enough to trip
/// the escalation watch.
pub fn escalation_scenario() -> Scenario {
    let mut scenario = localized_scenario();
    scenario.name = "escalation".into();
    scenario.tick_budget = 800;
    for ped in &mut scenario.pedestrians {
        ped.obedient = Some(!matches!(ped.id, 10 | 11 | 12 | 20 | 21 | 22));
    }
    scenario
}

/// Two pedestrians walking at each other along one corridor; the slight
/// lateral offset lets avoidance swing them past one another.
pub fn headon_scenario() -> Scenario {
    Scenario {
        schema_version: 1,
        name: "headon".into(),
        field: FieldConfig::open(20.0, 6.0),
        cell_size: 2.0,
        dt: 0.1,
        seed: 1,
        tick_budget: 200,
        obedience_rate: 1.0,
        scenario_force: ScenarioForce::None,
        forces: ForceParams::default(),
        detection: DetectionParams::default(),
        control: ControlParams::default(),
        pedestrians: vec![
            spec(
                0,
                Vec2::new(5.0, 3.0),
                Goal::Heading {
                    direction: Vec2::new(1.0, 0.0),
                },
                0,
                1.4,
            ),
            spec(
                1,
                Vec2::new(15.0, 3.2),
                Goal::Heading {
                    direction: Vec2::new(-1.0, 0.0),
                },
                1,
                1.4,
            ),
        ],
    }
}

/// One resolution-trend scenario: `humans` pedestrians in `groups`
/// single-file formations on a ring whose radius grows with the crowd, all
/// crossing the ring center at once. Resolution work scales with both
/// inputs: larger crowds start farther out, and every group past the
/// second needs its own leading episode.
pub fn table_scenario(humans: u32, groups: u32, v_max: f64) -> Scenario {
    // Cell-interior center: on a cell corner the convergence cluster
    // scatters across four grids and the region seed flickers.
    let center = Vec2::new(65.0, 65.0);
    // Steep enough that walk-out distance dominates the per-episode
    // fixed cost (region crossing, catch-up, confirmation), keeping the
    // largest row an order of magnitude above the smallest.
    let radius = 1.45 * humans as f64 - 5.0;
    let base = humans / groups;
    let extra = (humans % groups) as usize;
    let skew = crossing_skew(radius, radius + 8.0);
    let mut pedestrians = Vec::new();
    for k in 0..groups {
        let members = base + u32::from((k as usize) < extra);
        let angle = std::f64::consts::TAU * k as f64 / groups as f64 + 0.3;
        let anchor = center + unit(angle) * radius;
        let target = center + unit(angle + std::f64::consts::PI + skew) * (radius + 8.0);
        file_formation(10 * k, anchor, target, members, k, v_max, &mut pedestrians);
    }
    pedestrians.sort_by_key(|p| p.id);
    Scenario {
        schema_version: 1,
        name: format!("table-{humans}-{groups}"),
        field: FieldConfig::open(130.0, 130.0),
        cell_size: 10.0,
        dt: 0.1,
        seed: 5,
        tick_budget: 7000,
        obedience_rate: 1.0,
        scenario_force: ScenarioForce::FixedPointAttraction {
            target: center,
            gain: 0.3,
        },
        // See localized_scenario: default-range repulsion stretches the
        // files apart.
        forces: ForceParams {
            cohesion_gain: 0.0,
            avoidance_range: 0.3,
            ..ForceParams::default()
        },
        // Horizon tracks the ring so the crossing is predicted right away
        // at every crowd size, keeping lead-out distance tied to radius.
        detection: DetectionParams {
            d_max: Some(radius + 4.0),
            ..DetectionParams::default()
        },
        control: ControlParams {
            enabled: true,
            ..ControlParams::default()
        },
        pedestrians,
    }
}
