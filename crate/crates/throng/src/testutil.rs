//! Snapshot builders shared by unit tests.

use std::collections::BTreeMap;

use crate::world::{Goal, Pedestrian, Snapshot, Vec2};

pub fn ped(id: u32, x: f64, y: f64) -> Pedestrian {
    Pedestrian {
        id,
        position: Vec2::new(x, y),
        velocity: Vec2::ZERO,
        goal: Goal::Heading { direction: Vec2::new(1.0, 0.0) },
        group_hint: 0,
        v_max: 1.5,
        obedient: true,
        active_instruction: None,
    }
}

/// Snapshot with no motion history: every pedestrian derives as stationary.
pub fn still_snapshot(positions: &[(u32, f64, f64)]) -> Snapshot {
    let mut pedestrians: Vec<Pedestrian> =
        positions.iter().map(|&(id, x, y)| ped(id, x, y)).collect();
    pedestrians.sort_by_key(|p| p.id);
    Snapshot {
        tick: 0,
        sim_time: 0.0,
        dt: 0.1,
        pedestrians,
        previous_positions: BTreeMap::new(),
    }
}

/// Snapshot whose previous positions are back-computed so that
/// derive_kinematics yields exactly the requested velocity per pedestrian.
pub fn moving_snapshot(entries: &[(u32, f64, f64, f64, f64)], dt: f64) -> Snapshot {
    let mut pedestrians = Vec::with_capacity(entries.len());
    let mut previous_positions = BTreeMap::new();
    for &(id, x, y, vx, vy) in entries {
        let mut p = ped(id, x, y);
        p.velocity = Vec2::new(vx, vy);
        previous_positions.insert(id, Vec2::new(x - vx * dt, y - vy * dt));
        pedestrians.push(p);
    }
    pedestrians.sort_by_key(|p| p.id);
    Snapshot {
        tick: 1,
        sim_time: dt,
        dt,
        pedestrians,
        previous_positions,
    }
}

/// Deterministic xorshift stream for oracle point clouds.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
