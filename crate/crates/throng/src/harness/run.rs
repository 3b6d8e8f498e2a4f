//! The simulation driver: step, detect, grow regions, tick controllers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::Scenario;
use super::trace::{RunEvent, TraceRecord, TraceSink};
use crate::control::{RegionController, ResolutionOutcome};
use crate::detection::{
    detect_naive, detect_trapped, disobedience_fraction, find_congested_region, is_vacant,
    FlowTracker, MacroMicroContext, NeighborIndex,
};
use crate::world::{derive_kinematics, GridId, Snapshot};

/// Which congestion detector drives the run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[value(name = "naive")]
    Naive,
    #[value(name = "freeflow")]
    FreeFlow,
    #[value(name = "trapped")]
    Trapped,
    #[value(name = "macromicro")]
    MacroMicro,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Naive,
        Strategy::FreeFlow,
        Strategy::Trapped,
        Strategy::MacroMicro,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::FreeFlow => "freeflow",
            Strategy::Trapped => "trapped",
            Strategy::MacroMicro => "macromicro",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-run overrides on top of the scenario file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub strategy: Strategy,
    /// Overrides `scenario.control.enabled` when set.
    pub control: Option<bool>,
    pub seed: Option<u64>,
    /// Overrides `scenario.tick_budget` when set.
    pub ticks: Option<u64>,
    pub dt: Option<f64>,
    pub workers: usize,
    /// Run the detection pass every `stride` ticks; controllers still
    /// tick every tick.
    pub stride: u64,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions {
            strategy: Strategy::MacroMicro,
            control: None,
            seed: None,
            ticks: None,
            dt: None,
            workers: 1,
            stride: 1,
        }
    }
}

/// Table row for one controlled region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub key: GridId,
    pub detected_tick: u64,
    /// Pedestrians inside the region bounding box at detection.
    pub humans: u32,
    pub conflicting_groups: u32,
    pub outcome: ResolutionOutcome,
    /// Resolved only; detection tick to resolution tick.
    pub ticks_to_resolve: Option<u64>,
    /// ticks_to_resolve times dt.
    pub seconds_to_resolve: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub rows: Vec<MetricsRow>,
    /// Disobedience fraction over standing directives at the final tick.
    pub final_disobedience: f64,
    pub ticks_run: u64,
    pub exited: u32,
}

/// What a run produced beyond its trace.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: Metrics,
    pub events: Vec<(u64, RunEvent)>,
    pub final_snapshot: Snapshot,
    pub exited: Vec<u32>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid scenario: {}", violations.join("; "))]
    Invalid { violations: Vec<String> },
    #[error("control requires the macro-micro strategy")]
    ControlNeedsMacroMicro,
    #[error("trace write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Applies option overrides, producing the effective scenario a run and
/// its trace header use.
fn effective(scenario: &Scenario, options: &RunOptions) -> Scenario {
    let mut s = scenario.clone();
    if let Some(seed) = options.seed {
        s.seed = seed;
    }
    if let Some(ticks) = options.ticks {
        s.tick_budget = ticks;
    }
    if let Some(dt) = options.dt {
        s.dt = dt;
    }
    if let Some(control) = options.control {
        s.control.enabled = control;
    }
    s
}

/// Executes the tick loop until the budget runs out, the field empties, or
/// every detected region has been dealt with and the field shows no
/// further congestion. Fully deterministic for a given (scenario, seed,
/// dt), independent of `workers`.
pub fn run(
    scenario: &Scenario,
    options: &RunOptions,
    sink: &mut dyn TraceSink,
) -> Result<RunOutcome, RunError> {
    let scenario = effective(scenario, options);
    let violations = scenario.violations();
    if !violations.is_empty() {
        return Err(RunError::Invalid { violations });
    }
    let control_enabled = scenario.control.enabled;
    if control_enabled && options.strategy != Strategy::MacroMicro {
        return Err(RunError::ControlNeedsMacroMicro);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .expect("worker pool");
    pool.install(|| run_inner(&scenario, options, sink))
}

fn run_inner(
    scenario: &Scenario,
    options: &RunOptions,
    sink: &mut dyn TraceSink,
) -> Result<RunOutcome, RunError> {
    let strategy = options.strategy;
    let control_enabled = scenario.control.enabled;
    let partition = scenario.partition();
    let mut world = scenario.instantiate();
    let mut flow = FlowTracker::new(&partition, scenario.detection.flow_window, scenario.dt);
    let mut controllers: BTreeMap<GridId, RegionController> = BTreeMap::new();
    // (tick, humans, conflicting groups) at detection, by region key.
    let mut detected: BTreeMap<GridId, (u64, u32, u32)> = BTreeMap::new();
    let mut metrics = Metrics::default();
    let mut events: Vec<(u64, RunEvent)> = Vec::new();

    sink.record(&TraceRecord::Header {
        scenario: Box::new(scenario.clone()),
        strategy,
        control: control_enabled,
        workers: options.workers,
    })?;

    let stride = options.stride.max(1);
    let mut last_snapshot = world.snapshot();
    let mut last_disobedience = 0.0;
    let mut episodes_started = 0u64;

    for tick in 0..scenario.tick_budget {
        let snap = world.snapshot();
        for ped in &snap.pedestrians {
            sink.record(&TraceRecord::Pedestrian {
                tick,
                id: ped.id,
                position: ped.position,
                velocity: ped.velocity,
                group_hint: ped.group_hint,
                instruction: ped.active_instruction,
            })?;
        }
        flow.observe(&snap);
        let kinematics = derive_kinematics(&snap).expect("validated dt");
        last_disobedience = disobedience_fraction(
            &snap,
            &kinematics,
            scenario.control.tol_speed,
            scenario.control.tol_angle,
        );

        // Pedestrians commandeered off their own goals are invisible to
        // the detector; they move on the controller's authority.
        let exclude = controllers
            .values()
            .flat_map(|c| c.commandeered())
            .collect();
        let ctx = MacroMicroContext::build(&snap, &kinematics, &partition, &scenario.detection, &exclude);

        let mut congested_now = false;
        if tick % stride == 0 {
            let verdicts = detection_pass(strategy, &snap, &partition, &flow, &ctx, scenario);
            congested_now = !verdicts.is_empty();
            for (grid, cause) in &verdicts {
                sink.record(&TraceRecord::Verdict {
                    tick,
                    grid: *grid,
                    cause: *cause,
                })?;
            }

            if control_enabled {
                // Seeds inside a live controller's region belong to that
                // controller, as does any region claiming a pedestrian
                // someone already instructs or queues; everything else
                // starts a new episode. Claims are settled per pedestrian
                // because group ids shift as groups shear and merge.
                let mut covered: std::collections::BTreeSet<GridId> = controllers
                    .values()
                    .flat_map(|c| c.state.assigned_region.grids.iter().copied())
                    .collect();
                let mut addressed: std::collections::BTreeSet<u32> = controllers
                    .values()
                    .flat_map(|c| c.addressed_members())
                    .collect();
                let group_members = |gid: u32| -> &[u32] {
                    ctx.groups
                        .iter()
                        .find(|g| g.id == gid)
                        .map(|g| g.members.as_slice())
                        .unwrap_or(&[])
                };
                for (grid, _) in &verdicts {
                    if covered.contains(grid) {
                        continue;
                    }
                    let Some(region) =
                        find_congested_region(&partition, *grid, |g| ctx.verdict(&partition, g))
                    else {
                        continue;
                    };
                    let key = region.key();
                    if controllers.contains_key(&key)
                        || region
                            .converging_groups
                            .iter()
                            .flat_map(|&g| group_members(g))
                            .any(|id| addressed.contains(id))
                    {
                        continue;
                    }
                    covered.extend(region.grids.iter().copied());
                    for &g in &region.converging_groups {
                        addressed.extend(group_members(g).iter().copied());
                    }
                    let humans = snap
                        .pedestrians
                        .iter()
                        .filter(|p| region.bounding_box.contains(p.position))
                        .count() as u32;
                    let groups = region.converging_groups.len() as u32;
                    detected.insert(key, (tick, humans, groups));
                    sink.record(&TraceRecord::Region {
                        tick,
                        region: region.clone(),
                    })?;
                    let event = RunEvent::Detected { key, humans, groups };
                    sink.record(&TraceRecord::Event {
                        tick,
                        event: event.clone(),
                    })?;
                    events.push((tick, event));
                    controllers.insert(
                        key,
                        RegionController::new(region, scenario.control, tick),
                    );
                    episodes_started += 1;
                }
            }
        }

        if control_enabled {
            for (&key, controller) in controllers.iter_mut() {
                if controller.finished().is_some() {
                    continue;
                }
                let out = controller.tick(&snap, &kinematics, &ctx, &partition, &mut |g| {
                    is_vacant(&snap, &partition, g, scenario.control.vacancy_density)
                });
                for (id, directive) in &out.assignments {
                    if let Ok(i) = world.pedestrians.binary_search_by_key(id, |p| p.id) {
                        world.pedestrians[i].active_instruction = *directive;
                    }
                }
                for instruction in &out.issued {
                    sink.record(&TraceRecord::Instruction {
                        tick,
                        instruction: instruction.clone(),
                    })?;
                }
                sink.record(&TraceRecord::Controller {
                    tick,
                    key,
                    state: controller.state.clone(),
                })?;
                if let Some(request) = out.police {
                    let event = RunEvent::PoliceRequest { key, request };
                    sink.record(&TraceRecord::Event {
                        tick,
                        event: event.clone(),
                    })?;
                    events.push((tick, event));
                }
                if let Some(outcome) = out.outcome {
                    if let ResolutionOutcome::Resolved {
                        detected_tick,
                        resolved_tick,
                    } = outcome
                    {
                        let event = RunEvent::Resolved {
                            key,
                            detected_tick,
                            resolved_tick,
                        };
                        sink.record(&TraceRecord::Event {
                            tick,
                            event: event.clone(),
                        })?;
                        events.push((tick, event));
                    }
                    metrics
                        .rows
                        .push(metrics_row(key, &detected, outcome, scenario.dt));
                }
            }
            // Resolved regions are done; escalated ones stay as tombstones
            // so the police-held area is not re-detected.
            controllers.retain(|_, c| {
                !matches!(c.finished(), Some(ResolutionOutcome::Resolved { .. }))
            });
        }

        metrics.ticks_run = tick + 1;
        last_snapshot = snap;

        // Quiescence: everyone out, or every episode ended and the field
        // shows no congestion on a detection tick.
        if world.pedestrians.is_empty() {
            break;
        }
        if control_enabled
            && episodes_started > 0
            && tick % stride == 0
            && !congested_now
            && controllers.values().all(|c| c.finished().is_some())
        {
            break;
        }

        world.step();
    }

    // Budget exhausted with live episodes: report them honestly.
    let last_tick = metrics.ticks_run.saturating_sub(1);
    for (&key, controller) in controllers.iter_mut() {
        if controller.finished().is_none() {
            let outcome = ResolutionOutcome::Unresolved { last_tick };
            let event = RunEvent::Unresolved { key, last_tick };
            sink.record(&TraceRecord::Event {
                tick: last_tick,
                event: event.clone(),
            })?;
            events.push((last_tick, event));
            metrics
                .rows
                .push(metrics_row(key, &detected, outcome, scenario.dt));
        }
    }

    metrics.final_disobedience = last_disobedience;
    metrics.exited = world.exited.len() as u32;
    sink.record(&TraceRecord::Exited {
        tick: last_tick,
        ids: world.exited.clone(),
    })?;

    Ok(RunOutcome {
        metrics,
        events,
        final_snapshot: last_snapshot,
        exited: world.exited,
    })
}

fn metrics_row(
    key: GridId,
    detected: &BTreeMap<GridId, (u64, u32, u32)>,
    outcome: ResolutionOutcome,
    dt: f64,
) -> MetricsRow {
    let (detected_tick, humans, groups) = detected.get(&key).copied().unwrap_or((0, 0, 0));
    let ticks_to_resolve = match outcome {
        ResolutionOutcome::Resolved {
            detected_tick,
            resolved_tick,
        } => Some(resolved_tick.saturating_sub(detected_tick)),
        _ => None,
    };
    MetricsRow {
        key,
        detected_tick,
        humans,
        conflicting_groups: groups,
        outcome,
        ticks_to_resolve,
        seconds_to_resolve: ticks_to_resolve.map(|t| t as f64 * dt),
    }
}

/// One detection sweep over the base grids; returns the congested grids
/// in ascending order with the macro-micro cause where known. Fans out to
/// the worker pool; results are position-stable, so worker count never
/// changes the outcome.
fn detection_pass(
    strategy: Strategy,
    snap: &Snapshot,
    partition: &crate::world::GridPartition,
    flow: &FlowTracker,
    ctx: &MacroMicroContext,
    scenario: &Scenario,
) -> Vec<(GridId, Option<crate::detection::Cause>)> {
    use rayon::prelude::*;

    let grids: Vec<GridId> = partition.base_ids().collect();
    let trapped_index = (strategy == Strategy::Trapped)
        .then(|| NeighborIndex::build(&snap.positions(), scenario.detection.r));
    let verdicts: Vec<Option<(GridId, Option<crate::detection::Cause>)>> = grids
        .par_iter()
        .map(|&grid| match strategy {
            Strategy::Naive => {
                let v = detect_naive(snap, partition, grid, scenario.detection.density_max);
                v.congested.then_some((grid, None))
            }
            Strategy::FreeFlow => flow.verdict(grid).then_some((grid, None)),
            Strategy::Trapped => {
                let v = detect_trapped(
                    snap,
                    trapped_index.as_ref().expect("built for this strategy"),
                    partition,
                    grid,
                    scenario.detection.min_n,
                    scenario.detection.r,
                );
                v.congested.then_some((grid, None))
            }
            Strategy::MacroMicro => {
                let check = ctx.verdict(partition, grid);
                check.congested.then_some((grid, check.cause))
            }
        })
        .collect();
    verdicts.into_iter().flatten().collect()
}
