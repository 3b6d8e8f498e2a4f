//! Compliance monitoring: observed speeds and directions against the
//! directives pedestrians were issued.

use std::collections::BTreeMap;

use crate::world::{Directive, Kinematics, Pedestrian, Snapshot};

/// Within this distance of the spotlight a follower is judged by speed;
/// beyond it, by heading toward the spotlight.
pub const CATCH_RADIUS: f64 = 2.0;

/// Whether observed kinematics satisfy a directive within tolerances.
pub fn complies(
    ped: &Pedestrian,
    kin: &Kinematics,
    directive: &Directive,
    tol_speed: f64,
    tol_angle: f64,
) -> bool {
    match *directive {
        Directive::Wait => kin.speed <= tol_speed,
        Directive::SlowDown { factor } => kin.speed <= factor * ped.v_max + tol_speed,
        Directive::FollowSpotlight { position, speed } => {
            let to_spot = position - ped.position;
            if to_spot.length() <= CATCH_RADIUS {
                return kin.speed <= speed + tol_speed;
            }
            match (kin.heading, to_spot.normalized()) {
                (Some(h), Some(dir)) => h.angle_between(dir) <= tol_angle,
                // Standing still far from the spotlight is not following it.
                _ => false,
            }
        }
    }
}

/// Fraction of addressed pedestrians that currently disobey their
/// directive; 0 when nobody is addressed.
pub fn disobedience_fraction(
    snap: &Snapshot,
    kinematics: &BTreeMap<u32, Kinematics>,
    tol_speed: f64,
    tol_angle: f64,
) -> f64 {
    let mut addressed = 0u32;
    let mut disobeying = 0u32;
    for ped in &snap.pedestrians {
        let Some(active) = &ped.active_instruction else {
            continue;
        };
        addressed += 1;
        if !complies(ped, &kinematics[&ped.id], &active.directive, tol_speed, tol_angle) {
            disobeying += 1;
        }
    }
    if addressed == 0 {
        0.0
    } else {
        f64::from(disobeying) / f64::from(addressed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{moving_snapshot, ped};
    use crate::world::{derive_kinematics, ActiveDirective, Vec2};

    const TOL_SPEED: f64 = 0.3;
    const TOL_ANGLE: f64 = 1.3089969389957472; // 75 degrees

    fn kin(speed: f64, heading: Option<Vec2>) -> Kinematics {
        Kinematics { speed, heading }
    }

    #[test]
    fn wait_bounds_speed() {
        let p = ped(0, 10.0, 10.0);
        let east = Some(Vec2::new(1.0, 0.0));
        assert!(complies(&p, &kin(0.0, None), &Directive::Wait, TOL_SPEED, TOL_ANGLE));
        assert!(complies(&p, &kin(0.29, east), &Directive::Wait, TOL_SPEED, TOL_ANGLE));
        assert!(!complies(&p, &kin(0.8, east), &Directive::Wait, TOL_SPEED, TOL_ANGLE));
    }

    #[test]
    fn slow_down_scales_v_max() {
        let p = ped(0, 10.0, 10.0); // v_max 1.5
        let east = Some(Vec2::new(1.0, 0.0));
        let d = Directive::SlowDown { factor: 0.5 };
        // Limit 0.5 * 1.5 + 0.3 = 1.05.
        assert!(complies(&p, &kin(1.0, east), &d, TOL_SPEED, TOL_ANGLE));
        assert!(!complies(&p, &kin(1.2, east), &d, TOL_SPEED, TOL_ANGLE));
    }

    #[test]
    fn follow_spotlight_checks_heading_far_and_speed_near() {
        let p = ped(0, 10.0, 10.0);
        let far = Directive::FollowSpotlight { position: Vec2::new(20.0, 10.0), speed: 1.0 };
        let toward = Some(Vec2::new(1.0, 0.0));
        let oblique = Some(Vec2::new(0.5, 1.0).normalized().unwrap()); // ~63 degrees off
        let away = Some(Vec2::new(-1.0, 0.0));
        assert!(complies(&p, &kin(1.0, toward), &far, TOL_SPEED, TOL_ANGLE));
        assert!(complies(&p, &kin(1.0, oblique), &far, TOL_SPEED, TOL_ANGLE));
        assert!(!complies(&p, &kin(1.0, away), &far, TOL_SPEED, TOL_ANGLE));
        assert!(!complies(&p, &kin(0.0, None), &far, TOL_SPEED, TOL_ANGLE));

        let near = Directive::FollowSpotlight { position: Vec2::new(11.0, 10.0), speed: 1.0 };
        assert!(complies(&p, &kin(1.2, toward), &near, TOL_SPEED, TOL_ANGLE));
        assert!(complies(&p, &kin(0.0, None), &near, TOL_SPEED, TOL_ANGLE));
        assert!(!complies(&p, &kin(1.5, toward), &near, TOL_SPEED, TOL_ANGLE));
    }

    #[test]
    fn fraction_counts_only_addressed_pedestrians() {
        // Ten pedestrians under Wait: ids 0..3 keep walking, 4..9 stand.
        let mut entries = Vec::new();
        for id in 0..10u32 {
            let v = if id < 4 { 1.0 } else { 0.0 };
            entries.push((id, id as f64 * 3.0, 5.0, v, 0.0));
        }
        // Two more pedestrians without instructions, moving fast.
        entries.push((20, 50.0, 5.0, 1.5, 0.0));
        entries.push((21, 53.0, 5.0, 1.5, 0.0));
        let mut snap = moving_snapshot(&entries, 0.1);
        for p in snap.pedestrians.iter_mut().filter(|p| p.id < 10) {
            p.active_instruction =
                Some(ActiveDirective { directive: Directive::Wait, issue_tick: 0 });
        }
        let kin = derive_kinematics(&snap).unwrap();
        let f = disobedience_fraction(&snap, &kin, TOL_SPEED, TOL_ANGLE);
        assert!((f - 0.4).abs() < 1e-12);
    }

    #[test]
    fn no_instructions_means_zero() {
        let snap = moving_snapshot(&[(0, 1.0, 1.0, 1.5, 0.0)], 0.1);
        let kin = derive_kinematics(&snap).unwrap();
        assert_eq!(disobedience_fraction(&snap, &kin, TOL_SPEED, TOL_ANGLE), 0.0);
    }
}
