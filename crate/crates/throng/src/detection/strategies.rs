//! Naive capacity, trapped-humans, and vacancy detectors.

use crate::detection::index::NeighborIndex;
use crate::world::{locate, GridId, GridPartition, Snapshot};

/// Naive verdict: head count against the grid's capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveVerdict {
    pub grid: GridId,
    pub congested: bool,
    pub count: u32,
    pub capacity: u32,
}

/// Indices into `snap.pedestrians` of the pedestrians inside the grid,
/// ascending (snapshot order is ascending id).
pub fn occupants(snap: &Snapshot, partition: &GridPartition, grid: GridId) -> Vec<usize> {
    snap.pedestrians
        .iter()
        .enumerate()
        .filter(|(_, p)| locate(partition, p.position, grid.layer) == Ok(grid))
        .map(|(i, _)| i)
        .collect()
}

/// Congested iff strictly more occupants than floor(area * density_max).
pub fn detect_naive(
    snap: &Snapshot,
    partition: &GridPartition,
    grid: GridId,
    density_max: f64,
) -> NaiveVerdict {
    let count = occupants(snap, partition, grid).len() as u32;
    let capacity = (partition.grid_area(grid) * density_max).floor() as u32;
    NaiveVerdict { grid, congested: count > capacity, count, capacity }
}

/// Trapped verdict: ids of trapped occupants, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TrappedVerdict {
    pub grid: GridId,
    pub congested: bool,
    pub trapped: Vec<u32>,
}

/// Ids of every pedestrian with strictly more than min_n others within the
/// closed ball of radius r, ascending. `index` must be built over
/// `snap.positions()`.
pub fn trapped_ids(snap: &Snapshot, index: &NeighborIndex, min_n: usize, r: f64) -> Vec<u32> {
    snap.pedestrians
        .iter()
        .enumerate()
        .filter(|(i, _)| index.neighbors_of(*i, r).len() > min_n)
        .map(|(_, p)| p.id)
        .collect()
}

/// Congested iff the grid holds at least one trapped pedestrian.
pub fn detect_trapped(
    snap: &Snapshot,
    index: &NeighborIndex,
    partition: &GridPartition,
    grid: GridId,
    min_n: usize,
    r: f64,
) -> TrappedVerdict {
    let trapped: Vec<u32> = occupants(snap, partition, grid)
        .into_iter()
        .filter(|&i| index.neighbors_of(i, r).len() > min_n)
        .map(|i| snap.pedestrians[i].id)
        .collect();
    TrappedVerdict { grid, congested: !trapped.is_empty(), trapped }
}

/// Vacant iff occupancy density is strictly below vacancy_density.
pub fn is_vacant(
    snap: &Snapshot,
    partition: &GridPartition,
    grid: GridId,
    vacancy_density: f64,
) -> bool {
    let count = occupants(snap, partition, grid).len() as f64;
    count / partition.grid_area(grid) < vacancy_density
}
