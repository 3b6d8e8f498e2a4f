//! Scenario loading, the simulation driver, strategy comparison, run
//! traces, and plot-data export.
//!
//! The harness owns the tick loop: step the world, run the selected
//! detector over the grid, grow positive verdicts into regions, tick one
//! controller per region, and write every observation into an append-only
//! trace. A run is fully determined by (scenario, seed, dt); reruns are
//! byte-identical for any worker count.

mod compare;
mod fixtures;
mod plot;
mod run;
mod scenario;
mod trace;

pub use compare::{compare_strategies, StrategyMatrix};
pub use fixtures::{
    detour_scenario, escalation_scenario, evacuation_scenario, headon_scenario,
    localized_scenario, table_scenario, TABLE_ROWS,
};
pub use plot::{emit_plot_data, frames_from_trace, Frame, FrameRow, PlotError};
pub use run::{run, Metrics, MetricsRow, RunError, RunOptions, RunOutcome, Strategy};
pub use scenario::{load_scenario, PedestrianSpec, Scenario, ScenarioError, MIN_SEPARATION};
pub use trace::{
    read_trace, NullSink, RunEvent, TraceError, TraceRecord, TraceSink, TraceWriter,
};
