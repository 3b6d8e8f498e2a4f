//! Immutable per-tick world state and position-derived kinematics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pedestrian::Pedestrian;
use super::vec2::Vec2;
use super::WorldError;

/// Speed below this many meters per second counts as standing still, so
/// contact-repulsion jitter around a resting position never mints a heading.
/// Anyone actually traveling moves well above a quarter meter per second.
pub const STILLNESS_SPEED: f64 = 0.25;

/// State of one tick. Published once, then read-only; any number of
/// detectors may consume it concurrently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub sim_time: f64,
    /// Seconds between this snapshot and the previous positions.
    pub dt: f64,
    /// Active pedestrians in ascending id order.
    pub pedestrians: Vec<Pedestrian>,
    /// Position of every pedestrian present in the prior tick.
    pub previous_positions: BTreeMap<u32, Vec2>,
}

impl Snapshot {
    pub fn pedestrian(&self, id: u32) -> Option<&Pedestrian> {
        self.pedestrians
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.pedestrians[i])
    }

    /// Positions in snapshot (ascending id) order; feeds the neighbor index.
    pub fn positions(&self) -> Vec<Vec2> {
        self.pedestrians.iter().map(|p| p.position).collect()
    }
}

/// Speed and direction recovered from consecutive positions. `heading` is
/// None exactly when the pedestrian is flagged stationary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub speed: f64,
    pub heading: Option<Vec2>,
}

impl Kinematics {
    pub const STATIONARY: Kinematics = Kinematics { speed: 0.0, heading: None };

    pub fn is_stationary(&self) -> bool {
        self.heading.is_none()
    }
}

/// Derives per-pedestrian speed and heading from previous and current
/// positions. Pedestrians absent from `previous_positions` (first tick)
/// are stationary.
pub fn derive_kinematics(snap: &Snapshot) -> Result<BTreeMap<u32, Kinematics>, WorldError> {
    if !(snap.dt > 0.0) {
        return Err(WorldError::InvalidSnapshot);
    }
    let mut out = BTreeMap::new();
    for ped in &snap.pedestrians {
        let kin = match snap.previous_positions.get(&ped.id) {
            Some(&prev) => {
                let delta = ped.position - prev;
                let dist = delta.length();
                let speed = dist / snap.dt;
                if speed < STILLNESS_SPEED {
                    Kinematics::STATIONARY
                } else {
                    Kinematics { speed, heading: Some(delta / dist) }
                }
            }
            None => Kinematics::STATIONARY,
        };
        out.insert(ped.id, kin);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Goal, Vec2};

    fn snap(prev: Vec2, cur: Vec2, dt: f64) -> Snapshot {
        Snapshot {
            tick: 1,
            sim_time: dt,
            dt,
            pedestrians: vec![Pedestrian {
                id: 7,
                position: cur,
                velocity: Vec2::ZERO,
                goal: Goal::Heading { direction: Vec2::new(1.0, 0.0) },
                group_hint: 0,
                v_max: 1.4,
                obedient: true,
                active_instruction: None,
            }],
            previous_positions: [(7, prev)].into_iter().collect(),
        }
    }

    #[test]
    fn unit_displacement_gives_unit_speed() {
        let kin = derive_kinematics(&snap(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0)).unwrap();
        let k = kin[&7];
        assert_eq!(k.speed, 1.0);
        assert_eq!(k.heading, Some(Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn zero_displacement_is_stationary() {
        let p = Vec2::new(3.0, 3.0);
        let kin = derive_kinematics(&snap(p, p, 1.0)).unwrap();
        assert!(kin[&7].is_stationary());
        assert_eq!(kin[&7].speed, 0.0);
    }

    #[test]
    fn pythagorean_displacement() {
        // prev (0,0), cur (3,4), dt 5: speed 1 m/s, heading (0.6, 0.8).
        let kin = derive_kinematics(&snap(Vec2::ZERO, Vec2::new(3.0, 4.0), 5.0)).unwrap();
        let k = kin[&7];
        assert!((k.speed - 1.0).abs() < 1e-15);
        let h = k.heading.unwrap();
        assert!((h.x - 0.6).abs() < 1e-15);
        assert!((h.y - 0.8).abs() < 1e-15);
    }

    #[test]
    fn missing_previous_position_is_stationary() {
        let mut s = snap(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0);
        s.previous_positions.clear();
        assert!(derive_kinematics(&s).unwrap()[&7].is_stationary());
    }

    #[test]
    fn zero_dt_is_invalid() {
        let s = snap(Vec2::ZERO, Vec2::new(1.0, 0.0), 0.0);
        assert_eq!(derive_kinematics(&s), Err(WorldError::InvalidSnapshot));
    }

    #[test]
    fn speed_matches_scalar_recomputation() {
        for i in 0..50 {
            let cur = Vec2::new(0.31 * i as f64, 4.0 - 0.17 * i as f64);
            let s = snap(Vec2::new(1.0, 2.0), cur, 0.1);
            let k = derive_kinematics(&s).unwrap()[&7];
            let dx = cur.x - 1.0;
            let dy = cur.y - 2.0;
            let scalar = (dx * dx + dy * dy).sqrt() / 0.1;
            if scalar > STILLNESS_SPEED {
                assert!((k.speed - scalar).abs() <= 1e-12 * scalar.max(1.0));
            }
        }
    }
}
