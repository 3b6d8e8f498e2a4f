//! Field bounds, obstacles, and exit segments.

use serde::{Deserialize, Serialize};

use super::vec2::Vec2;

/// Axis-aligned rectangle, closed on all edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Rect {
        Rect { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        (self.max.x - self.min.x).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.max.y - self.min.y).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect::new(
            Vec2::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            Vec2::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        )
    }

    /// True when the rectangles share interior area, not just an edge.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min.x < other.max.x
            && other.min.x < self.max.x
            && self.min.y < other.max.y
            && other.min.y < self.max.y
    }
}

/// Impassable area inside the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Obstacle {
    Rect { min: Vec2, max: Vec2 },
    Circle { center: Vec2, radius: f64 },
}

impl Obstacle {
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Obstacle::Rect { min, max } => Rect::new(min, max).contains(p),
            Obstacle::Circle { center, radius } => p.distance_sq(center) <= radius * radius,
        }
    }

    /// Direction pointing away from the obstacle and the distance from `p`
    /// to its surface; the distance is 0 when `p` is inside.
    pub fn repulsion(&self, p: Vec2) -> (Vec2, f64) {
        match *self {
            Obstacle::Rect { min, max } => {
                let clamped = Vec2::new(p.x.clamp(min.x, max.x), p.y.clamp(min.y, max.y));
                if clamped != p {
                    let away = (p - clamped).normalized().unwrap_or(Vec2::new(1.0, 0.0));
                    (away, p.distance(clamped))
                } else {
                    // Inside: push through the nearest face.
                    let faces = [
                        (p.x - min.x, Vec2::new(-1.0, 0.0)),
                        (max.x - p.x, Vec2::new(1.0, 0.0)),
                        (p.y - min.y, Vec2::new(0.0, -1.0)),
                        (max.y - p.y, Vec2::new(0.0, 1.0)),
                    ];
                    let (_, dir) = faces
                        .iter()
                        .copied()
                        .min_by(|a, b| a.0.total_cmp(&b.0))
                        .expect("rect has four faces");
                    (dir, 0.0)
                }
            }
            Obstacle::Circle { center, radius } => {
                let radial = p - center;
                let dist = radial.length();
                let away = radial.normalized().unwrap_or(Vec2::new(1.0, 0.0));
                (away, (dist - radius).max(0.0))
            }
        }
    }

    /// Nearest point strictly outside the obstacle, `margin` off the surface.
    pub fn project_out(&self, p: Vec2, margin: f64) -> Vec2 {
        match *self {
            Obstacle::Rect { min, max } => {
                if !self.contains(p) {
                    return p;
                }
                let faces = [
                    (p.x - min.x, Vec2::new(min.x - margin, p.y)),
                    (max.x - p.x, Vec2::new(max.x + margin, p.y)),
                    (p.y - min.y, Vec2::new(p.x, min.y - margin)),
                    (max.y - p.y, Vec2::new(p.x, max.y + margin)),
                ];
                faces
                    .iter()
                    .copied()
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("rect has four faces")
                    .1
            }
            Obstacle::Circle { center, radius } => {
                if !self.contains(p) {
                    return p;
                }
                let away = (p - center).normalized().unwrap_or(Vec2::new(1.0, 0.0));
                center + away * (radius + margin)
            }
        }
    }
}

/// Axis-aligned segment on the field boundary through which pedestrians
/// leave the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSegment {
    pub a: Vec2,
    pub b: Vec2,
}

impl ExitSegment {
    /// True when the motion segment `from -> to` touches or crosses the exit.
    pub fn crossed_by(&self, from: Vec2, to: Vec2) -> bool {
        segments_intersect(from, to, self.a, self.b)
    }

    /// Point on the exit nearest to `p`.
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let ab = self.b - self.a;
        let len_sq = ab.length_sq();
        if len_sq == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(ab) / len_sq).clamp(0.0, 1.0);
        self.a + ab * t
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

/// Segment intersection including endpoint touches and collinear overlap.
fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1.abs() <= 1e-12 && on_segment(q1, q2, p1))
        || (d2.abs() <= 1e-12 && on_segment(q1, q2, p2))
        || (d3.abs() <= 1e-12 && on_segment(p1, p2, q1))
        || (d4.abs() <= 1e-12 && on_segment(p1, p2, q2))
}

/// Rectangular field with obstacles and boundary exits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub exits: Vec<ExitSegment>,
}

impl FieldConfig {
    /// Obstacle-free field with no exits.
    pub fn open(width: f64, height: f64) -> FieldConfig {
        FieldConfig { width, height, obstacles: Vec::new(), exits: Vec::new() }
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(Vec2::ZERO, Vec2::new(self.width, self.height))
    }

    /// In-field test, closed on all edges.
    pub fn contains(&self, p: Vec2) -> bool {
        self.bounds().contains(p)
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    /// Every violated field invariant, empty when the config is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.width > 0.0 && self.width.is_finite()) {
            out.push(format!("field width {} must be positive", self.width));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            out.push(format!("field height {} must be positive", self.height));
        }
        for (i, obs) in self.obstacles.iter().enumerate() {
            match *obs {
                Obstacle::Rect { min, max } => {
                    if !(min.x < max.x && min.y < max.y) {
                        out.push(format!("obstacle {i}: rect min must be below max"));
                    }
                    if !self.contains(min) || !self.contains(max) {
                        out.push(format!("obstacle {i}: rect exceeds field bounds"));
                    }
                }
                Obstacle::Circle { center, radius } => {
                    if !(radius > 0.0) {
                        out.push(format!("obstacle {i}: circle radius must be positive"));
                    }
                    let r = Vec2::new(radius, radius);
                    if !self.contains(center - r) || !self.contains(center + r) {
                        out.push(format!("obstacle {i}: circle exceeds field bounds"));
                    }
                }
            }
        }
        for (i, exit) in self.exits.iter().enumerate() {
            if exit.a.distance(exit.b) < 1e-9 {
                out.push(format!("exit {i}: degenerate segment"));
            }
            if !self.contains(exit.a) || !self.contains(exit.b) {
                out.push(format!("exit {i}: endpoints outside the field"));
            }
            if !self.on_boundary(exit.a, exit.b) {
                out.push(format!("exit {i}: segment must lie on the field boundary"));
            }
        }
        out
    }

    fn on_boundary(&self, a: Vec2, b: Vec2) -> bool {
        let eps = 1e-9;
        (a.x.abs() < eps && b.x.abs() < eps)
            || ((a.x - self.width).abs() < eps && (b.x - self.width).abs() < eps)
            || (a.y.abs() < eps && b.y.abs() < eps)
            || ((a.y - self.height).abs() < eps && (b.y - self.height).abs() < eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> FieldConfig {
        FieldConfig {
            width: 100.0,
            height: 50.0,
            obstacles: vec![
                Obstacle::Rect {
                    min: Vec2::new(10.0, 10.0),
                    max: Vec2::new(20.0, 20.0),
                },
                Obstacle::Circle {
                    center: Vec2::new(50.0, 25.0),
                    radius: 5.0,
                },
            ],
            exits: vec![ExitSegment {
                a: Vec2::new(100.0, 10.0),
                b: Vec2::new(100.0, 40.0),
            }],
        }
    }

    #[test]
    fn valid_field_has_no_violations() {
        assert!(field().violations().is_empty());
    }

    #[test]
    fn off_boundary_exit_is_rejected() {
        let mut f = field();
        f.exits.push(ExitSegment {
            a: Vec2::new(50.0, 10.0),
            b: Vec2::new(50.0, 40.0),
        });
        assert!(f.violations().iter().any(|v| v.contains("boundary")));
    }

    #[test]
    fn obstacle_repulsion_points_away() {
        let f = field();
        let (dir, dist) = f.obstacles[0].repulsion(Vec2::new(25.0, 15.0));
        assert_eq!(dir, Vec2::new(1.0, 0.0));
        assert!((dist - 5.0).abs() < 1e-12);
        let (_, inside) = f.obstacles[0].repulsion(Vec2::new(15.0, 15.0));
        assert_eq!(inside, 0.0);
    }

    #[test]
    fn project_out_leaves_outside_points_alone() {
        let obs = field().obstacles[1];
        let p = Vec2::new(70.0, 25.0);
        assert_eq!(obs.project_out(p, 0.1), p);
        let pushed = obs.project_out(Vec2::new(52.0, 25.0), 0.1);
        assert!(!obs.contains(pushed));
    }

    #[test]
    fn exit_crossing_detects_boundary_passage() {
        let exit = field().exits[0];
        assert!(exit.crossed_by(Vec2::new(99.5, 25.0), Vec2::new(100.2, 25.0)));
        assert!(exit.crossed_by(Vec2::new(99.5, 25.0), Vec2::new(100.0, 25.0)));
        assert!(!exit.crossed_by(Vec2::new(99.5, 5.0), Vec2::new(100.2, 5.0)));
        assert!(!exit.crossed_by(Vec2::new(98.0, 25.0), Vec2::new(99.0, 25.0)));
    }
}
