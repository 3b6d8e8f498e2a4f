//! Congestion detection: the four strategies, group and sub-group
//! construction, the spatial-hash neighbor index, overlapping-grid region
//! growing, the vacancy test, and the disobedience monitor.
//!
//! Every detector is a pure function of (snapshot, params): same inputs,
//! same verdict, regardless of worker count.

mod disobedience;
mod flow;
mod groups;
mod index;
mod macromicro;
mod region;
mod strategies;

pub use disobedience::{complies, disobedience_fraction};
pub use flow::{detect_free_flow, FlowCounter, FlowTracker};
pub use groups::{build_groups, split_subgroups, Group, SubGroup};
pub use index::NeighborIndex;
pub use macromicro::{
    detect_macro, detect_macro_micro, detect_micro, micro_conflicts, Cause, ConvergenceCluster,
    MacroMicroContext, MacroVerdict, MicroConflict,
};
pub use region::{find_congested_region, overlapping_grids, CongestedRegion, GridCheck};
pub use strategies::{
    detect_naive, detect_trapped, is_vacant, occupants, trapped_ids, NaiveVerdict, TrappedVerdict,
};

use serde::{Deserialize, Serialize};

use crate::world::GridPartition;

/// Thresholds shared by the detection strategies. All config-overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    /// Naive capacity, persons per square meter.
    pub density_max: f64,
    /// Trapped-humans neighbor count: trapped means strictly more than
    /// `min_n` others within `r`.
    pub min_n: usize,
    /// Trapped-humans neighborhood radius, meters.
    pub r: f64,
    /// Group connectivity radius, meters.
    pub r_connect: f64,
    /// Maximum heading difference between chained group members, radians.
    pub theta_dir: f64,
    /// Sub-group speed tolerance, m/s.
    pub epsilon_speed: f64,
    /// Convergence cluster radius, meters.
    pub rho: f64,
    /// Convergence horizon, meters; None means twice the cell diagonal.
    pub d_max: Option<f64>,
    /// Free-flow counting window, seconds.
    pub flow_window: f64,
}

impl Default for DetectionParams {
    fn default() -> DetectionParams {
        DetectionParams {
            density_max: 4.0,
            min_n: 6,
            r: 1.0,
            r_connect: 2.0,
            theta_dir: 30f64.to_radians(),
            epsilon_speed: 0.2,
            rho: 2.0,
            d_max: None,
            flow_window: 1.0,
        }
    }
}

impl DetectionParams {
    /// Effective convergence horizon for a partition.
    pub fn horizon(&self, partition: &GridPartition) -> f64 {
        self.d_max.unwrap_or(2.0 * partition.cell_diagonal())
    }
}
