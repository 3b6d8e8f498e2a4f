//! Semicircular detour planning: the arc's diameter is the farthest pair
//! of humans in the congested area, so the path clears the whole crowd.

use serde::{Deserialize, Serialize};

use crate::control::ControlError;
use crate::world::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcDirection {
    Clockwise,
    Counterclockwise,
}

/// Half-circle path from the entry endpoint of the diameter to the exit
/// endpoint. The arc always spans pi radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemicirclePath {
    pub center: Vec2,
    pub radius: f64,
    pub entry_angle: f64,
    pub exit_angle: f64,
    pub direction: ArcDirection,
}

impl SemicirclePath {
    fn at_angle(&self, theta: f64) -> Vec2 {
        self.center + Vec2::new(theta.cos(), theta.sin()) * self.radius
    }

    pub fn entry_point(&self) -> Vec2 {
        self.at_angle(self.entry_angle)
    }

    pub fn exit_point(&self) -> Vec2 {
        self.at_angle(self.exit_angle)
    }

    /// Arc length, pi * radius.
    pub fn length(&self) -> f64 {
        std::f64::consts::PI * self.radius
    }

    /// Point after walking `s` meters from the entry; `s` is clamped to
    /// the arc.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let sign = match self.direction {
            ArcDirection::Counterclockwise => 1.0,
            ArcDirection::Clockwise => -1.0,
        };
        self.at_angle(self.entry_angle + sign * s / self.radius)
    }

    /// Same geometric arc walked from the other end.
    pub fn reversed(&self) -> SemicirclePath {
        SemicirclePath {
            center: self.center,
            radius: self.radius,
            entry_angle: self.exit_angle,
            exit_angle: self.entry_angle,
            direction: match self.direction {
                ArcDirection::Clockwise => ArcDirection::Counterclockwise,
                ArcDirection::Counterclockwise => ArcDirection::Clockwise,
            },
        }
    }
}

/// Plans the detour semicircle over the humans in the congested area:
/// center is the midpoint of the farthest pair, radius half its distance,
/// and the arc bulges into the half-plane holding fewer humans. Ties on
/// pair distance break toward the lexicographically smallest id pair; a
/// density tie bulges counterclockwise. Entry is the smaller-id endpoint.
pub fn plan_semicircle(members: &[(u32, Vec2)]) -> Result<SemicirclePath, ControlError> {
    if members.len() < 2 {
        return Err(ControlError::DegenerateRegion(members.len()));
    }
    let mut best: Option<(f64, (u32, Vec2), (u32, Vec2))> = None;
    for (i, &(id_a, pa)) in members.iter().enumerate() {
        for &(id_b, pb) in &members[i + 1..] {
            let (lo, hi) = if id_a <= id_b { ((id_a, pa), (id_b, pb)) } else { ((id_b, pb), (id_a, pa)) };
            let d2 = pa.distance_sq(pb);
            let better = match &best {
                None => true,
                Some((best_d2, (a, _), (b, _))) => {
                    d2 > *best_d2 || (d2 == *best_d2 && (lo.0, hi.0) < (*a, *b))
                }
            };
            if better {
                best = Some((d2, lo, hi));
            }
        }
    }
    let (d2, (_, a), (_, b)) = best.expect("at least one pair");

    let center = (a + b) * 0.5;
    let radius = d2.sqrt() * 0.5;
    let u = b - a;
    // Humans strictly left/right of the diameter through a -> b.
    let mut left = 0usize;
    let mut right = 0usize;
    for &(_, p) in members {
        let side = u.cross(p - a);
        if side > 0.0 {
            left += 1;
        } else if side < 0.0 {
            right += 1;
        }
    }
    // A counterclockwise sweep from the entry bulges right of a -> b.
    let direction = if right > left {
        ArcDirection::Clockwise
    } else {
        ArcDirection::Counterclockwise
    };
    let entry_angle = (a - center).y.atan2((a - center).x);
    let exit_angle = (b - center).y.atan2((b - center).x);
    Ok(SemicirclePath { center, radius, entry_angle, exit_angle, direction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::XorShift;

    #[test]
    fn two_point_case_is_forced() {
        let path =
            plan_semicircle(&[(0, Vec2::new(0.0, 0.0)), (1, Vec2::new(4.0, 0.0))]).unwrap();
        assert_eq!(path.center, Vec2::new(2.0, 0.0));
        assert_eq!(path.radius, 2.0);
        assert!(path.entry_point().distance(Vec2::new(0.0, 0.0)) < 1e-12);
        assert!(path.exit_point().distance(Vec2::new(4.0, 0.0)) < 1e-12);
        assert!((path.length() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        // Endpoints sit on the circle; a half-turn links them.
        let mid = path.point_at(path.length() * 0.5);
        assert!((mid.distance(path.center) - path.radius).abs() < 1e-12);
    }

    #[test]
    fn equilateral_tie_breaks_to_lowest_id_pair() {
        let members = [
            (0, Vec2::new(0.0, 0.0)),
            (1, Vec2::new(2.0, 0.0)),
            (2, Vec2::new(1.0, 3f64.sqrt())),
        ];
        let path = plan_semicircle(&members).unwrap();
        // All pair distances are 2; pair (0, 1) wins the tie.
        assert!(path.center.distance(Vec2::new(1.0, 0.0)) < 1e-12);
        assert!((path.radius - 1.0).abs() < 1e-12);
        // The third member sits above the diameter, so the arc dips below.
        let mid = path.point_at(path.length() * 0.5);
        assert!(mid.y < 0.0, "arc bulges into the empty half-plane");
    }

    #[test]
    fn fifty_random_members_match_exhaustive_farthest_pair() {
        let mut rng = XorShift(0x5eed);
        for _ in 0..20 {
            let members: Vec<(u32, Vec2)> = (0..50)
                .map(|id| (id, Vec2::new(rng.range(0.0, 40.0), rng.range(0.0, 40.0))))
                .collect();
            let path = plan_semicircle(&members).unwrap();
            let mut max_d = 0f64;
            for (i, &(_, pa)) in members.iter().enumerate() {
                for &(_, pb) in &members[i + 1..] {
                    max_d = max_d.max(pa.distance(pb));
                }
            }
            assert!((path.radius - max_d * 0.5).abs() < 1e-9);
            // Farthest pair lies on the circle boundary.
            assert!((path.entry_point().distance(path.center) - path.radius).abs() < 1e-9);
            assert!((path.exit_point().distance(path.center) - path.radius).abs() < 1e-9);
            assert!((path.entry_point().distance(path.exit_point()) - max_d).abs() < 1e-9);
        }
    }

    #[test]
    fn arc_avoids_the_denser_half_plane() {
        // Diameter along x, crowd above it: the arc must dip below.
        let mut members = vec![(0, Vec2::new(0.0, 0.0)), (1, Vec2::new(10.0, 0.0))];
        for i in 0..6 {
            members.push((2 + i, Vec2::new(3.0 + i as f64, 2.0)));
        }
        let below = plan_semicircle(&members).unwrap();
        assert!(below.point_at(below.length() * 0.5).y < 0.0);

        // Mirror the crowd below the diameter: the arc flips above.
        for m in members.iter_mut().skip(2) {
            m.1.y = -m.1.y;
        }
        let above = plan_semicircle(&members).unwrap();
        assert!(above.point_at(above.length() * 0.5).y > 0.0);
    }

    #[test]
    fn reversed_walks_the_same_points_backwards() {
        let members = [
            (4, Vec2::new(1.0, 2.0)),
            (9, Vec2::new(7.0, 5.0)),
            (2, Vec2::new(3.0, 8.0)),
        ];
        let path = plan_semicircle(&members).unwrap();
        let rev = path.reversed();
        assert_eq!(rev.entry_point(), path.exit_point());
        for k in 0..=10 {
            let s = path.length() * k as f64 / 10.0;
            let p = path.point_at(s);
            let q = rev.point_at(path.length() - s);
            assert!(p.distance(q) < 1e-9, "reversal preserves the arc");
        }
    }

    #[test]
    fn single_member_is_degenerate() {
        let err = plan_semicircle(&[(3, Vec2::new(1.0, 1.0))]).unwrap_err();
        assert_eq!(err, ControlError::DegenerateRegion(1));
    }
}
