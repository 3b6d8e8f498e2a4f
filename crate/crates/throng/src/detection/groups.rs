//! Connected-component grouping by proximity and heading, and subgroup
//! splitting by speed.

use std::collections::BTreeMap;

use crate::detection::index::NeighborIndex;
use crate::world::{Kinematics, Snapshot, Vec2};

/// Connected set of pedestrians moving in one direction. `id` is the
/// smallest member id, `members` ascend, `heading` is the normalized mean
/// of member headings (zero when it cancels out).
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: u32,
    pub members: Vec<u32>,
    pub centroid: Vec2,
    pub heading: Vec2,
    pub mean_speed: f64,
}

/// Connected run of similar-speed members inside one group, ranked
/// front-to-back: rank 0 projects farthest along the group heading.
#[derive(Debug, Clone, PartialEq)]
pub struct SubGroup {
    pub group_id: u32,
    pub rank: usize,
    pub members: Vec<u32>,
    pub centroid: Vec2,
    pub mean_speed: f64,
}

/// Min-rooted union-find: every root is its component's smallest index.
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> DisjointSet {
        DisjointSet { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            self.parent[i] = self.find(self.parent[i]);
        }
        self.parent[i]
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Partitions moving pedestrians into connected components under
/// (distance <= r_connect AND heading difference <= theta_dir); stationary
/// pedestrians become singletons. Groups ascend by id (= min member id).
pub fn build_groups(
    snap: &Snapshot,
    kinematics: &BTreeMap<u32, Kinematics>,
    index: &NeighborIndex,
    r_connect: f64,
    theta_dir: f64,
) -> Vec<Group> {
    let n = snap.pedestrians.len();
    let mut dsu = DisjointSet::new(n);
    for i in 0..n {
        let a = &snap.pedestrians[i];
        let ha = match kinematics[&a.id].heading {
            Some(h) => h,
            None => continue,
        };
        for j in index.neighbors_of(i, r_connect) {
            if j <= i {
                continue;
            }
            let b = &snap.pedestrians[j];
            if let Some(hb) = kinematics[&b.id].heading {
                if ha.angle_between(hb) <= theta_dir {
                    dsu.union(i, j);
                }
            }
        }
    }

    // Union always parents the larger root under the smaller, so every
    // root is its component's smallest index, hence smallest id.
    let mut components: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = dsu.find(i);
        components.entry(snap.pedestrians[root].id).or_default().push(i);
    }

    components
        .into_iter()
        .map(|(id, idxs)| summarize_group(snap, kinematics, id, &idxs))
        .collect()
}

fn summarize_group(
    snap: &Snapshot,
    kinematics: &BTreeMap<u32, Kinematics>,
    id: u32,
    idxs: &[usize],
) -> Group {
    let mut centroid = Vec2::ZERO;
    let mut heading_sum = Vec2::ZERO;
    let mut speed_sum = 0.0;
    let mut members = Vec::with_capacity(idxs.len());
    for &i in idxs {
        let p = &snap.pedestrians[i];
        members.push(p.id);
        centroid += p.position;
        let k = &kinematics[&p.id];
        speed_sum += k.speed;
        if let Some(h) = k.heading {
            heading_sum += h;
        }
    }
    let n = idxs.len() as f64;
    Group {
        id,
        members,
        centroid: centroid / n,
        heading: heading_sum.normalized().unwrap_or(Vec2::ZERO),
        mean_speed: speed_sum / n,
    }
}

/// Splits one group into connected components under
/// (distance <= r_connect AND |speed difference| <= epsilon_speed), ranked
/// by centroid projection on the group heading, frontmost first.
pub fn split_subgroups(
    group: &Group,
    snap: &Snapshot,
    kinematics: &BTreeMap<u32, Kinematics>,
    epsilon_speed: f64,
    r_connect: f64,
) -> Vec<SubGroup> {
    let n = group.members.len();
    let peds: Vec<_> = group
        .members
        .iter()
        .map(|&id| snap.pedestrian(id).expect("group member in snapshot"))
        .collect();
    let mut dsu = DisjointSet::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let close = peds[i].position.distance(peds[j].position) <= r_connect;
            let similar =
                (kinematics[&peds[i].id].speed - kinematics[&peds[j].id].speed).abs() <= epsilon_speed;
            if close && similar {
                dsu.union(i, j);
            }
        }
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = dsu.find(i);
        components.entry(root).or_default().push(i);
    }

    let mut subs: Vec<SubGroup> = components
        .into_values()
        .map(|idxs| {
            let mut centroid = Vec2::ZERO;
            let mut speed_sum = 0.0;
            let mut members = Vec::with_capacity(idxs.len());
            for &i in &idxs {
                members.push(peds[i].id);
                centroid += peds[i].position;
                speed_sum += kinematics[&peds[i].id].speed;
            }
            let m = idxs.len() as f64;
            SubGroup {
                group_id: group.id,
                rank: 0,
                members,
                centroid: centroid / m,
                mean_speed: speed_sum / m,
            }
        })
        .collect();

    // Frontmost = largest projection along the group heading; ties keep the
    // smaller leading id first for determinism.
    subs.sort_by(|a, b| {
        let pa = a.centroid.dot(group.heading);
        let pb = b.centroid.dot(group.heading);
        pb.partial_cmp(&pa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.members[0].cmp(&b.members[0]))
    });
    for (rank, sub) in subs.iter_mut().enumerate() {
        sub.rank = rank;
    }
    subs
}
