//! Side-by-side strategy comparison on one shared simulation.

use std::collections::{BTreeMap, BTreeSet};

use super::run::{RunError, Strategy};
use super::scenario::Scenario;
use crate::detection::{
    detect_naive, detect_trapped, Cause, FlowTracker, MacroMicroContext, NeighborIndex,
};
use crate::world::{derive_kinematics, GridId};

/// Positive verdicts per strategy over the base grids of one run, with
/// the macro-micro cause where known. Absence of a (tick, grid) pair
/// means that strategy saw no congestion there.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyMatrix {
    pub ticks_run: u64,
    pub naive: BTreeSet<(u64, GridId)>,
    pub freeflow: BTreeSet<(u64, GridId)>,
    pub trapped: BTreeSet<(u64, GridId)>,
    pub macromicro: BTreeMap<(u64, GridId), Cause>,
}

impl StrategyMatrix {
    pub fn positives(&self, strategy: Strategy) -> BTreeSet<(u64, GridId)> {
        match strategy {
            Strategy::Naive => self.naive.clone(),
            Strategy::FreeFlow => self.freeflow.clone(),
            Strategy::Trapped => self.trapped.clone(),
            Strategy::MacroMicro => self.macromicro.keys().copied().collect(),
        }
    }

    /// True when the strategy reported congestion at any tick anywhere.
    pub fn ever_congested(&self, strategy: Strategy) -> bool {
        !self.positives(strategy).is_empty()
    }

    /// True when the strategy ever reported congestion in `grid`.
    pub fn grid_ever_congested(&self, strategy: Strategy, grid: GridId) -> bool {
        self.positives(strategy).iter().any(|(_, g)| *g == grid)
    }

    /// One line per positive verdict: strategy,tick,layer,column,row,cause.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,tick,layer,column,row,cause\n");
        for strategy in Strategy::ALL {
            for (tick, grid) in self.positives(strategy) {
                let cause = match strategy {
                    Strategy::MacroMicro => match self.macromicro[&(tick, grid)] {
                        Cause::DirectionConflict => "direction-conflict",
                        Cause::SpeedConflict => "speed-conflict",
                    },
                    _ => "",
                };
                out.push_str(&format!(
                    "{},{},{:?},{},{},{}\n",
                    strategy.name(),
                    tick,
                    grid.layer,
                    grid.column,
                    grid.row,
                    cause
                ));
            }
        }
        out
    }
}

/// Runs all four detectors over the same snapshots with control off.
/// Every strategy sees the identical crowd, so the matrices differ only
/// by detector behavior.
pub fn compare_strategies(scenario: &Scenario, workers: usize) -> Result<StrategyMatrix, RunError> {
    let violations = scenario.violations();
    if !violations.is_empty() {
        return Err(RunError::Invalid { violations });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool");
    pool.install(|| Ok(compare_inner(scenario)))
}

fn compare_inner(scenario: &Scenario) -> StrategyMatrix {
    use rayon::prelude::*;

    let partition = scenario.partition();
    let mut world = scenario.instantiate();
    let mut flow = FlowTracker::new(&partition, scenario.detection.flow_window, scenario.dt);
    let mut matrix = StrategyMatrix::default();
    let grids: Vec<GridId> = partition.base_ids().collect();
    let no_exclusions = BTreeSet::new();

    for tick in 0..scenario.tick_budget {
        let snap = world.snapshot();
        if snap.pedestrians.is_empty() {
            break;
        }
        flow.observe(&snap);
        let kinematics = derive_kinematics(&snap).expect("validated dt");
        let ctx = MacroMicroContext::build(
            &snap,
            &kinematics,
            &partition,
            &scenario.detection,
            &no_exclusions,
        );
        let trapped_index = NeighborIndex::build(&snap.positions(), scenario.detection.r);

        let rows: Vec<(bool, bool, bool, Option<Cause>)> = grids
            .par_iter()
            .map(|&grid| {
                let naive =
                    detect_naive(&snap, &partition, grid, scenario.detection.density_max).congested;
                let freeflow = flow.verdict(grid);
                let trapped = detect_trapped(
                    &snap,
                    &trapped_index,
                    &partition,
                    grid,
                    scenario.detection.min_n,
                    scenario.detection.r,
                )
                .congested;
                let check = ctx.verdict(&partition, grid);
                (naive, freeflow, trapped, check.congested.then_some(check.cause).flatten())
            })
            .collect();

        for (&grid, &(naive, freeflow, trapped, macro_cause)) in grids.iter().zip(&rows) {
            if naive {
                matrix.naive.insert((tick, grid));
            }
            if freeflow {
                matrix.freeflow.insert((tick, grid));
            }
            if trapped {
                matrix.trapped.insert((tick, grid));
            }
            if let Some(cause) = macro_cause {
                matrix.macromicro.insert((tick, grid), cause);
            }
        }
        matrix.ticks_run = tick + 1;
        world.step();
    }
    matrix
}
