//! Planar geometry shared by the world model, perception and scoring.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at `angle` radians, counterclockwise from +x.
    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Planar pose: position plus heading (radians, counterclockwise positive).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose2 { x, y, yaw }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if w <= -PI {
        w += TAU;
    }
    w
}

/// Axis-aligned rectangle, closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Aabb { min, max }
    }

    /// Square of side `side` centered at `center`.
    pub fn square(center: Vec2, side: f64) -> Self {
        let h = side / 2.0;
        Aabb::new(Vec2::new(center.x - h, center.y - h), Vec2::new(center.x + h, center.y + h))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        o.min.x >= self.min.x && o.max.x <= self.max.x && o.min.y >= self.min.y && o.max.y <= self.max.y
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Corners in counterclockwise order starting at `min`.
    pub fn corners(&self) -> [Vec2; 4] {
        [self.min, Vec2::new(self.max.x, self.min.y), self.max, Vec2::new(self.min.x, self.max.y)]
    }

    /// Per-axis distance outside the box (zero on an axis where `p` is within range).
    pub fn exterior_offsets(&self, p: Vec2) -> (f64, f64) {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(0.0);
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(0.0);
        (dx, dy)
    }

    /// Clips the segment `a→b` to the box (Liang–Barsky). Returns the parameter
    /// interval `[t0, t1]` of the inside portion, or `None` if it misses.
    pub fn clip_segment(&self, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        self.clip_ray(a, b - a, 1.0)
    }

    /// Clips the ray `origin + t·dir`, `t ∈ [0, t_max]`, to the box. The returned
    /// interval is in units of `dir`, so it does not depend on `t_max` unless
    /// clamped by it.
    pub fn clip_ray(&self, origin: Vec2, dir: Vec2, t_max: f64) -> Option<(f64, f64)> {
        let (a, d) = (origin, dir);
        let mut t0 = 0.0_f64;
        let mut t1 = t_max;
        let checks =
            [(-d.x, a.x - self.min.x), (d.x, self.max.x - a.x), (-d.y, a.y - self.min.y), (d.y, self.max.y - a.y)];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    if r > t1 {
                        return None;
                    }
                    t0 = t0.max(r);
                } else {
                    if r < t0 {
                        return None;
                    }
                    t1 = t1.min(r);
                }
            }
        }
        Some((t0, t1))
    }
}

/// Closest point on segment `a→b` to `p`.
pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    a + d * t
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.dist(closest_on_segment(p, a, b))
}

/// True iff the open segments `p1→p2` and `q1→q2` cross at a single interior point
/// of both. Touching endpoints and collinear overlap do not count.
pub fn segments_cross_properly(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Minimum distance between two closed segments.
pub fn segment_segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> f64 {
    if segments_cross_properly(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// Ray parameter of the first intersection of `origin + t·dir` (|dir| = 1) with the
/// circle, for `t >= 0`. An origin inside the circle hits at 0.
pub fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let c = oc.norm_sq() - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = oc.dot(dir);
    if b >= 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    // numerically stable smaller root: c / (−b + √disc)
    Some(c / (-b + disc.sqrt()))
}

/// Ray parameter of the intersection of `origin + t·dir` with the closed segment
/// `a→b`, for `t >= 0`. Parallel rays never hit.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom == 0.0 {
        return None;
    }
    let w = a - origin;
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Ray against a capsule (segment `a→b` inflated by `radius`). Circles are
/// capsules with `a == b`.
pub fn ray_capsule(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2, radius: f64) -> Option<f64> {
    if point_segment_distance(origin, a, b) <= radius {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    let mut take = |t: Option<f64>| {
        if let Some(t) = t {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    };
    take(ray_circle(origin, dir, a, radius));
    if a != b {
        take(ray_circle(origin, dir, b, radius));
        let e = b - a;
        if radius > 0.0 {
            let n = Vec2::new(-e.y, e.x) * (radius / e.norm());
            take(ray_segment(origin, dir, a + n, b + n));
            take(ray_segment(origin, dir, a - n, b - n));
        } else {
            take(ray_segment(origin, dir, a, b));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(TAU + 0.25) - 0.25).abs() < 1e-12);
        for i in -1000..1000 {
            let w = wrap_angle(i as f64 * 0.37);
            assert!(w > -PI && w <= PI);
        }
    }

    #[test]
    fn ray_circle_closed_form() {
        let t = ray_circle(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), 0.5).unwrap();
        assert!((t - 1.5).abs() < 1e-12);
        assert!(ray_circle(Vec2::ZERO, Vec2::new(-1.0, 0.0), Vec2::new(2.0, 0.0), 0.5).is_none());
    }

    #[test]
    fn capsule_with_zero_radius_is_segment() {
        let t = ray_capsule(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(3.0, -1.0), Vec2::new(3.0, 1.0), 0.0).unwrap();
        assert!((t - 3.0).abs() < 1e-12);
        let t = ray_capsule(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(3.0, -1.0), Vec2::new(3.0, 1.0), 0.1).unwrap();
        assert!((t - 2.9).abs() < 1e-12);
    }

    #[test]
    fn proper_crossing_excludes_touching() {
        let a = Vec2::new(0.0, -1.0);
        let b = Vec2::new(0.0, 1.0);
        assert!(segments_cross_properly(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), a, b));
        assert!(!segments_cross_properly(Vec2::new(-1.0, 1.0), Vec2::new(1.0, 1.0), a, b));
        assert!(!segments_cross_properly(Vec2::new(-1.0, 0.0), Vec2::new(0.0, 0.0), a, b));
    }

    #[test]
    fn clip_segment_partial() {
        let bx = Aabb::square(Vec2::ZERO, 8.0);
        let (t0, t1) = bx.clip_segment(Vec2::new(1.0, 0.0), Vec2::new(5.0, 0.0)).unwrap();
        assert_eq!(t0, 0.0);
        assert!((t1 - 0.75).abs() < 1e-12);
        assert!(bx.clip_segment(Vec2::new(5.0, 0.0), Vec2::new(6.0, 0.0)).is_none());
    }
}
