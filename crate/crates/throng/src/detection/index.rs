//! Uniform spatial hash for exact radius queries.

use std::collections::HashMap;

use crate::world::Vec2;

/// Buckets point indices by cell; radius queries scan the covering cell
/// block and filter exactly, so results carry no false positives or
/// negatives. Distances compare closed: dist == r is inside.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    bucket: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    positions: Vec<Vec2>,
}

impl NeighborIndex {
    pub fn build(positions: &[Vec2], bucket: f64) -> NeighborIndex {
        assert!(bucket > 0.0, "bucket size must be positive");
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            cells.entry(cell_of(*p, bucket)).or_default().push(i);
        }
        NeighborIndex { bucket, cells, positions: positions.to_vec() }
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    /// Indices of all points with dist(point, center) <= r, ascending.
    pub fn within(&self, center: Vec2, r: f64) -> Vec<usize> {
        let span = (r / self.bucket).ceil() as i64;
        let (cx, cy) = cell_of(center, self.bucket);
        let r_sq = r * r;
        let mut out = Vec::new();
        for dx in -span..=span {
            for dy in -span..=span {
                if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) {
                    for &i in bucket {
                        if self.positions[i].distance_sq(center) <= r_sq {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Neighbors of point `i` within `r`, excluding `i` itself.
    pub fn neighbors_of(&self, i: usize, r: f64) -> Vec<usize> {
        let mut out = self.within(self.positions[i], r);
        out.retain(|&j| j != i);
        out
    }
}

fn cell_of(p: Vec2, bucket: f64) -> (i64, i64) {
    ((p.x / bucket).floor() as i64, (p.y / bucket).floor() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(positions: &[Vec2], center: Vec2, r: f64) -> Vec<usize> {
        (0..positions.len())
            .filter(|&i| positions[i].distance_sq(center) <= r * r)
            .collect()
    }

    #[test]
    fn single_point_has_no_neighbors() {
        let index = NeighborIndex::build(&[Vec2::new(5.0, 5.0)], 1.0);
        assert!(index.neighbors_of(0, 100.0).is_empty());
    }

    #[test]
    fn boundary_distance_is_included() {
        // Two points exactly r apart are in each other's neighborhood.
        let pts = [Vec2::ZERO, Vec2::new(3.0, 4.0)];
        let index = NeighborIndex::build(&pts, 2.0);
        assert_eq!(index.neighbors_of(0, 5.0), vec![1]);
        assert_eq!(index.neighbors_of(1, 5.0), vec![0]);
        assert!(index.neighbors_of(0, 4.999).is_empty());
    }

    #[test]
    fn matches_brute_force_scan() {
        // Deterministic pseudo-random cloud.
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let positions: Vec<Vec2> =
            (0..200).map(|_| Vec2::new(next() * 50.0, next() * 50.0)).collect();
        let index = NeighborIndex::build(&positions, 1.5);
        for q in 0..200 {
            let center = positions[q];
            for r in [0.5, 1.5, 4.0, 9.0] {
                assert_eq!(index.within(center, r), brute_force(&positions, center, r));
            }
        }
    }
}
