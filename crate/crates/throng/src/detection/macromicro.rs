//! Macro-micro strategy: inter-group convergence (three or more groups
//! heading at one point) and intra-group speed inversions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::detection::groups::{build_groups, split_subgroups, DisjointSet, Group, SubGroup};
use crate::detection::index::NeighborIndex;
use crate::detection::region::GridCheck;
use crate::detection::DetectionParams;
use crate::world::{locate, GridId, GridPartition, Kinematics, Snapshot, Vec2};

/// What triggered a macro-micro verdict. Direction conflicts take
/// precedence when both fire in one grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cause {
    DirectionConflict,
    SpeedConflict,
}

/// Spatial cluster of heading-ray intersections fed by three or more
/// distinct groups. `point` is the cluster centroid, `group_ids` ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCluster {
    pub point: Vec2,
    pub group_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroVerdict {
    pub congested: bool,
    pub clusters: Vec<ConvergenceCluster>,
}

/// A rear subgroup overtaking the subgroup in front of it.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroConflict {
    pub group_id: u32,
    /// Rank of the slower front subgroup; the overtaking rear is rank + 1.
    pub front_rank: usize,
    /// Interface point: midpoint of the two subgroup centroids.
    pub point: Vec2,
}

/// Parameters of `o1 + t1*d1 = o2 + t2*d2`, None for (anti)parallel rays.
fn ray_intersection(o1: Vec2, d1: Vec2, o2: Vec2, d2: Vec2) -> Option<(f64, f64, Vec2)> {
    let denom = d1.cross(d2);
    if denom.abs() < 1e-12 {
        return None;
    }
    let diff = o2 - o1;
    let t1 = diff.cross(d2) / denom;
    let t2 = diff.cross(d1) / denom;
    Some((t1, t2, o1 + d1 * t1))
}

/// Macro check: congested iff some cluster (radius rho) of pairwise
/// heading-ray intersections, each strictly ahead of both contributing
/// groups within d_max, gathers rays of at least three distinct groups.
pub fn detect_macro(groups: &[Group], rho: f64, d_max: f64) -> MacroVerdict {
    let mut points: Vec<Vec2> = Vec::new();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for (i, gi) in groups.iter().enumerate() {
        if gi.heading == Vec2::ZERO {
            continue;
        }
        for gj in &groups[i + 1..] {
            if gj.heading == Vec2::ZERO {
                continue;
            }
            if let Some((ti, tj, p)) =
                ray_intersection(gi.centroid, gi.heading, gj.centroid, gj.heading)
            {
                if ti > 1e-9 && tj > 1e-9 && ti <= d_max && tj <= d_max {
                    points.push(p);
                    pairs.push((gi.id, gj.id));
                }
            }
        }
    }

    let n = points.len();
    let mut dsu = DisjointSet::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if points[a].distance(points[b]) <= rho {
                dsu.union(a, b);
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        components.entry(dsu.find(i)).or_default().push(i);
    }

    let mut clusters = Vec::new();
    for idxs in components.into_values() {
        let mut ids: BTreeSet<u32> = BTreeSet::new();
        let mut sum = Vec2::ZERO;
        for &i in &idxs {
            ids.insert(pairs[i].0);
            ids.insert(pairs[i].1);
            sum += points[i];
        }
        if ids.len() >= 3 {
            clusters.push(ConvergenceCluster {
                point: sum / idxs.len() as f64,
                group_ids: ids.into_iter().collect(),
            });
        }
    }
    MacroVerdict { congested: !clusters.is_empty(), clusters }
}

/// Micro check over one group's ranked subgroups.
pub fn detect_micro(subgroups: &[SubGroup], epsilon_speed: f64) -> bool {
    subgroups
        .windows(2)
        .any(|w| w[1].mean_speed > w[0].mean_speed + epsilon_speed)
}

/// Every consecutive-rank inversion in one group's ranked subgroups.
pub fn micro_conflicts(
    group_id: u32,
    subgroups: &[SubGroup],
    epsilon_speed: f64,
) -> Vec<MicroConflict> {
    subgroups
        .windows(2)
        .filter(|w| w[1].mean_speed > w[0].mean_speed + epsilon_speed)
        .map(|w| MicroConflict {
            group_id,
            front_rank: w[0].rank,
            point: (w[0].centroid + w[1].centroid) * 0.5,
        })
        .collect()
}

/// Per-tick macro-micro state, built once over a snapshot and queried per
/// grid. A congestion anchors to the grids (in all four layers) containing
/// its convergence cluster or micro-conflict point.
#[derive(Debug, Clone)]
pub struct MacroMicroContext {
    pub groups: Vec<Group>,
    /// Ranked subgroups keyed by group id.
    pub subgroups: BTreeMap<u32, Vec<SubGroup>>,
    pub clusters: Vec<ConvergenceCluster>,
    pub micro_conflicts: Vec<MicroConflict>,
}

impl MacroMicroContext {
    /// Builds the group structure over every pedestrian not in `exclude`.
    /// The harness excludes pedestrians commandeered by Wait or
    /// FollowSpotlight so that groups being led out do not spawn fresh
    /// regions on the way; slowed pedestrians still pursue their own
    /// goals and stay visible.
    pub fn build(
        snap: &Snapshot,
        kinematics: &BTreeMap<u32, Kinematics>,
        partition: &GridPartition,
        params: &DetectionParams,
        exclude: &BTreeSet<u32>,
    ) -> MacroMicroContext {
        let filtered;
        let view = if exclude.is_empty() {
            snap
        } else {
            filtered = Snapshot {
                tick: snap.tick,
                sim_time: snap.sim_time,
                dt: snap.dt,
                pedestrians: snap
                    .pedestrians
                    .iter()
                    .filter(|p| !exclude.contains(&p.id))
                    .cloned()
                    .collect(),
                previous_positions: snap.previous_positions.clone(),
            };
            &filtered
        };
        let index = NeighborIndex::build(&view.positions(), params.r_connect);
        let groups = build_groups(view, kinematics, &index, params.r_connect, params.theta_dir);
        let macro_verdict = detect_macro(&groups, params.rho, params.horizon(partition));
        let mut subgroups = BTreeMap::new();
        let mut conflicts = Vec::new();
        for g in &groups {
            let subs =
                split_subgroups(g, view, kinematics, params.epsilon_speed, params.r_connect);
            conflicts.extend(micro_conflicts(g.id, &subs, params.epsilon_speed));
            subgroups.insert(g.id, subs);
        }
        MacroMicroContext {
            groups,
            subgroups,
            clusters: macro_verdict.clusters,
            micro_conflicts: conflicts,
        }
    }

    /// Grid verdict with macro-over-micro cause precedence.
    pub fn verdict(&self, partition: &GridPartition, grid: GridId) -> GridCheck {
        let mut check = GridCheck::clear();
        for cluster in &self.clusters {
            if locate(partition, cluster.point, grid.layer) == Ok(grid) {
                check.congested = true;
                check.cause = Some(Cause::DirectionConflict);
                if check.convergence_point.is_none() {
                    check.convergence_point = Some(cluster.point);
                }
                for &id in &cluster.group_ids {
                    if !check.converging_groups.contains(&id) {
                        check.converging_groups.push(id);
                    }
                }
            }
        }
        if !check.congested {
            for mc in &self.micro_conflicts {
                if locate(partition, mc.point, grid.layer) == Ok(grid) {
                    check.congested = true;
                    check.cause = Some(Cause::SpeedConflict);
                    if !check.converging_groups.contains(&mc.group_id) {
                        check.converging_groups.push(mc.group_id);
                    }
                }
            }
        }
        check.converging_groups.sort_unstable();
        check
    }
}

/// One-shot macro-micro verdict for a grid, no exclusions.
pub fn detect_macro_micro(
    snap: &Snapshot,
    kinematics: &BTreeMap<u32, Kinematics>,
    partition: &GridPartition,
    grid: GridId,
    params: &DetectionParams,
) -> GridCheck {
    MacroMicroContext::build(snap, kinematics, partition, params, &BTreeSet::new())
        .verdict(partition, grid)
}
