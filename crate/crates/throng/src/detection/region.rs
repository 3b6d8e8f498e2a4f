//! Region growing: FIFO expansion of a congested seed grid through the
//! four overlapping layers.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::detection::macromicro::Cause;
use crate::world::{GridId, GridPartition, Rect, Vec2};

/// One grid's congestion check, optionally carrying macro-micro context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub congested: bool,
    pub cause: Option<Cause>,
    pub converging_groups: Vec<u32>,
    pub convergence_point: Option<Vec2>,
}

impl GridCheck {
    pub fn clear() -> GridCheck {
        GridCheck {
            congested: false,
            cause: None,
            converging_groups: Vec::new(),
            convergence_point: None,
        }
    }

    /// Bare positive verdict from a cause-less strategy.
    pub fn hit() -> GridCheck {
        GridCheck { congested: true, ..GridCheck::clear() }
    }

    pub fn plain(congested: bool) -> GridCheck {
        if congested {
            GridCheck::hit()
        } else {
            GridCheck::clear()
        }
    }
}

/// Grown congested area with aggregated attribution. Grids are non-empty
/// and were all reported congested at detection time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestedRegion {
    pub grids: BTreeSet<GridId>,
    pub bounding_box: Rect,
    pub cause: Option<Cause>,
    /// Distinct converging group ids, ascending.
    pub converging_groups: Vec<u32>,
    pub convergence_point: Option<Vec2>,
}

impl CongestedRegion {
    /// Smallest grid id: stable key for a region across its lifetime.
    pub fn key(&self) -> GridId {
        *self.grids.iter().next().expect("region grids are non-empty")
    }
}

/// The up-to-four grids overlapping `g`, each differing in exactly one
/// shift axis: an unshifted column c is straddled by shifted columns
/// {c, c+1}; a shifted column j straddles unshifted columns {j-1, j}
/// (likewise rows). Ids whose cell would fall entirely outside the field
/// are dropped, which happens only past a fractional field edge.
pub fn overlapping_grids(partition: &GridPartition, g: GridId) -> Vec<GridId> {
    let mut out = Vec::with_capacity(4);
    let xl = g.layer.toggle_x();
    if g.layer.shifted_x() {
        if g.column > 0 {
            out.push(GridId::new(xl, g.column - 1, g.row));
        }
        out.push(GridId::new(xl, g.column, g.row));
    } else {
        out.push(GridId::new(xl, g.column, g.row));
        out.push(GridId::new(xl, g.column + 1, g.row));
    }
    let yl = g.layer.toggle_y();
    if g.layer.shifted_y() {
        if g.row > 0 {
            out.push(GridId::new(yl, g.column, g.row - 1));
        }
        out.push(GridId::new(yl, g.column, g.row));
    } else {
        out.push(GridId::new(yl, g.column, g.row));
        out.push(GridId::new(yl, g.column, g.row + 1));
    }
    out.retain(|id| partition.contains_id(*id));
    out
}

/// FIFO worklist seeded with `seed`: congested grids accumulate and enqueue
/// their overlapping grids unless those are already accumulated. Returns
/// None when the seed itself is clear. `check` must be pure over the
/// current snapshot; clear grids may be checked more than once.
pub fn find_congested_region(
    partition: &GridPartition,
    seed: GridId,
    mut check: impl FnMut(GridId) -> GridCheck,
) -> Option<CongestedRegion> {
    let mut grids: BTreeSet<GridId> = BTreeSet::new();
    let mut worklist: VecDeque<GridId> = VecDeque::new();
    let mut cause: Option<Cause> = None;
    let mut converging: BTreeSet<u32> = BTreeSet::new();
    let mut convergence_point: Option<Vec2> = None;
    let mut bounding_box: Option<Rect> = None;

    worklist.push_back(seed);
    while let Some(current) = worklist.pop_front() {
        let verdict = check(current);
        // insert() is false on a duplicate pop of an accumulated grid;
        // re-expanding it would re-check the same clear neighbors.
        if !(verdict.congested && grids.insert(current)) {
            continue;
        }
        let rect = partition.grid_rect(current);
        bounding_box = Some(match bounding_box {
            Some(b) => b.union(&rect),
            None => rect,
        });
        if verdict.cause == Some(Cause::DirectionConflict) {
            cause = Some(Cause::DirectionConflict);
            if convergence_point.is_none() {
                convergence_point = verdict.convergence_point;
            }
        } else if cause.is_none() {
            cause = verdict.cause;
        }
        converging.extend(verdict.converging_groups.iter().copied());
        for neighbor in overlapping_grids(partition, current) {
            if !grids.contains(&neighbor) {
                worklist.push_back(neighbor);
            }
        }
    }

    Some(CongestedRegion {
        grids,
        bounding_box: bounding_box?,
        cause,
        converging_groups: converging.into_iter().collect(),
        convergence_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::XorShift;
    use crate::world::{build_partition, FieldConfig, Layer};

    fn partition(w: f64, h: f64, cell: f64) -> GridPartition {
        build_partition(&FieldConfig::open(w, h), cell).unwrap()
    }

    fn overlap_area(p: &GridPartition, a: GridId, b: GridId) -> f64 {
        let (ra, rb) = (p.grid_rect(a), p.grid_rect(b));
        let w = ra.max.x.min(rb.max.x) - ra.min.x.max(rb.min.x);
        let h = ra.max.y.min(rb.max.y) - ra.min.y.max(rb.min.y);
        w.max(0.0) * h.max(0.0)
    }

    #[test]
    fn interior_grid_has_four_half_overlaps() {
        let p = partition(100.0, 100.0, 10.0);
        let g = GridId::new(Layer::Base, 3, 3);
        let over = overlapping_grids(&p, g);
        assert_eq!(over.len(), 4);
        for o in &over {
            assert!((overlap_area(&p, g, *o) - 50.0).abs() < 1e-9);
            let dx = g.layer.shifted_x() != o.layer.shifted_x();
            let dy = g.layer.shifted_y() != o.layer.shifted_y();
            assert!(dx ^ dy, "exactly one shift axis differs");
        }
    }

    #[test]
    fn corner_grid_keeps_four_truncated_overlaps() {
        let p = partition(100.0, 100.0, 10.0);
        let over = overlapping_grids(&p, GridId::new(Layer::Base, 0, 0));
        assert_eq!(over.len(), 4);
        assert!(over.contains(&GridId::new(Layer::ShiftedX, 0, 0)));
        assert!(over.contains(&GridId::new(Layer::ShiftedX, 1, 0)));
        assert!(over.contains(&GridId::new(Layer::ShiftedY, 0, 0)));
        assert!(over.contains(&GridId::new(Layer::ShiftedY, 0, 1)));
        // The truncated shifted cells still share positive area.
        for o in &over {
            assert!(overlap_area(&p, GridId::new(Layer::Base, 0, 0), *o) > 0.0);
        }
    }

    #[test]
    fn fractional_far_edge_drops_missing_cells() {
        // 93/10: shifted column 10 would start at 95 > 93 and is not a cell.
        let p = partition(93.0, 93.0, 10.0);
        let over = overlapping_grids(&p, GridId::new(Layer::Base, 9, 5));
        assert_eq!(over.len(), 3);
        assert!(!over.contains(&GridId::new(Layer::ShiftedX, 10, 5)));
    }

    #[test]
    fn overlap_relation_is_symmetric() {
        for p in [partition(100.0, 100.0, 10.0), partition(93.0, 87.0, 10.0)] {
            for g in p.all_ids() {
                for o in overlapping_grids(&p, g) {
                    assert!(
                        overlapping_grids(&p, o).contains(&g),
                        "{o} overlaps {g} but not back"
                    );
                    assert!(overlap_area(&p, g, o) > 0.0);
                }
            }
        }
    }

    #[test]
    fn isolated_seed_is_its_own_region() {
        let p = partition(100.0, 100.0, 10.0);
        let seed = GridId::new(Layer::Base, 5, 5);
        let region =
            find_congested_region(&p, seed, |g| GridCheck::plain(g == seed)).unwrap();
        assert_eq!(region.grids.iter().copied().collect::<Vec<_>>(), vec![seed]);
        assert_eq!(region.bounding_box, p.grid_rect(seed));
        assert_eq!(region.cause, None);
        assert!(region.converging_groups.is_empty());
    }

    #[test]
    fn clear_seed_yields_no_region() {
        let p = partition(100.0, 100.0, 10.0);
        let seed = GridId::new(Layer::Base, 5, 5);
        assert!(find_congested_region(&p, seed, |_| GridCheck::clear()).is_none());
    }

    #[test]
    fn plus_mask_is_fully_collected() {
        let p = partition(100.0, 100.0, 10.0);
        let seed = GridId::new(Layer::Base, 5, 5);
        let mut mask: BTreeSet<GridId> = overlapping_grids(&p, seed).into_iter().collect();
        mask.insert(seed);
        assert_eq!(mask.len(), 5);
        let region =
            find_congested_region(&p, seed, |g| GridCheck::plain(mask.contains(&g))).unwrap();
        assert_eq!(region.grids, mask);
        let bb = region.bounding_box;
        assert_eq!((bb.min.x, bb.min.y, bb.max.x, bb.max.y), (45.0, 45.0, 65.0, 65.0));
    }

    #[test]
    fn direction_conflict_wins_region_cause() {
        let p = partition(100.0, 100.0, 10.0);
        let seed = GridId::new(Layer::Base, 5, 5);
        let neighbor = GridId::new(Layer::ShiftedX, 6, 5);
        let region = find_congested_region(&p, seed, |g| {
            if g == seed {
                GridCheck {
                    congested: true,
                    cause: Some(Cause::SpeedConflict),
                    converging_groups: vec![7],
                    convergence_point: None,
                }
            } else if g == neighbor {
                GridCheck {
                    congested: true,
                    cause: Some(Cause::DirectionConflict),
                    converging_groups: vec![3, 9],
                    convergence_point: Some(Vec2::new(57.0, 55.0)),
                }
            } else {
                GridCheck::clear()
            }
        })
        .unwrap();
        assert_eq!(region.cause, Some(Cause::DirectionConflict));
        assert_eq!(region.converging_groups, vec![3, 7, 9]);
        assert_eq!(region.convergence_point, Some(Vec2::new(57.0, 55.0)));
        assert_eq!(region.grids.len(), 2);
        assert_eq!(region.key(), seed, "base ids sort before shifted ids");
    }

    /// Independent geometric flood fill: component of the seed under
    /// (positive-area rect overlap AND exactly one differing shift axis).
    fn oracle_component(
        p: &GridPartition,
        seed: GridId,
        mask: &BTreeSet<GridId>,
    ) -> BTreeSet<GridId> {
        if !mask.contains(&seed) {
            return BTreeSet::new();
        }
        let adjacent = |a: GridId, b: GridId| {
            let dx = a.layer.shifted_x() != b.layer.shifted_x();
            let dy = a.layer.shifted_y() != b.layer.shifted_y();
            (dx ^ dy) && p.grid_rect(a).overlaps(&p.grid_rect(b))
        };
        let mut component = BTreeSet::from([seed]);
        let mut frontier = vec![seed];
        while let Some(g) = frontier.pop() {
            for &other in mask.iter() {
                if !component.contains(&other) && adjacent(g, other) {
                    component.insert(other);
                    frontier.push(other);
                }
            }
        }
        component
    }

    #[test]
    fn region_matches_geometric_flood_fill_on_random_masks() {
        let p = partition(200.0, 200.0, 10.0);
        let all: Vec<GridId> = p.all_ids().collect();
        let mut rng = XorShift(0x0b5e_55ed);
        for round in 0..100 {
            let mask: BTreeSet<GridId> = all
                .iter()
                .copied()
                .filter(|_| rng.next_f64() < 0.30)
                .collect();
            let seed = all[(rng.next_u64() % all.len() as u64) as usize];
            let got = find_congested_region(&p, seed, |g| GridCheck::plain(mask.contains(&g)))
                .map(|r| r.grids)
                .unwrap_or_default();
            let want = oracle_component(&p, seed, &mask);
            assert_eq!(got, want, "round {round} seed {seed}");
        }
    }
}
