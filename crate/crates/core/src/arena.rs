//! World model: the competition arena with its mission area, obstacles and
//! gates, plus the ray-casting queries perception is built on.
//!
//! The arena is centered on the origin. The outer walls bound a square of side
//! `outer`, the scoring (mission) area is a concentric square of side `mission`
//! and the four waypoints sit at the corners of a concentric square of half-side
//! `wp_half_side`, listed counterclockwise starting from the `(−, −)` corner.
//!
//! Every solid shape is handled as a capsule: a core segment inflated by a
//! radius. Poles are capsules with coincident endpoints, panels and gate posts
//! are capsules of radius `thickness / 2`.

use crate::geom::{point_segment_distance, ray_capsule, segment_segment_distance, segments_cross_properly, Aabb, Vec2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Rejection-sampling budget for obstacle placement.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
/// Minimum distance between a relocated obstacle and the drone.
pub const DRONE_CLEARANCE: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("obstacle placement failed: {0}")]
    PlacementFailed(PlacementFailure),
    #[error("arena json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementFailure {
    NoMovable,
    Exhausted,
}

impl std::fmt::Display for PlacementFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlacementFailure::NoMovable => write!(f, "no movable obstacle"),
            PlacementFailure::Exhausted => {
                write!(f, "no valid pose after {MAX_PLACEMENT_ATTEMPTS} attempts")
            }
        }
    }
}

/// Surface classification; the numeric codes are the segmentation raster values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[repr(u8)]
pub enum SurfaceClass {
    None = 0,
    Obstacle = 1,
    GateFrame = 2,
    Wall = 3,
    OutOfAreaGround = 4,
}

impl SurfaceClass {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<SurfaceClass> {
        Some(match code {
            0 => SurfaceClass::None,
            1 => SurfaceClass::Obstacle,
            2 => SurfaceClass::GateFrame,
            3 => SurfaceClass::Wall,
            4 => SurfaceClass::OutOfAreaGround,
            _ => return None,
        })
    }

    /// Whether the class is labeled as an obstacle. Out-of-area ground only
    /// counts for ground-aware perception.
    pub fn is_obstacle(self, ground_aware: bool) -> bool {
        match self {
            SurfaceClass::Obstacle | SurfaceClass::GateFrame | SurfaceClass::Wall => true,
            SurfaceClass::OutOfAreaGround => ground_aware,
            SurfaceClass::None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { center: Vec2, radius: f64 },
    Segment { p0: Vec2, p1: Vec2, thickness: f64 },
}

impl Shape {
    /// Core segment and inflation radius.
    pub fn capsule(&self) -> (Vec2, Vec2, f64) {
        match *self {
            Shape::Circle { center, radius } => (center, center, radius),
            Shape::Segment { p0, p1, thickness } => (p0, p1, thickness / 2.0),
        }
    }

    pub fn center(&self) -> Vec2 {
        match *self {
            Shape::Circle { center, .. } => center,
            Shape::Segment { p0, p1, .. } => p0.lerp(p1, 0.5),
        }
    }

    /// Signed clearance from `p` to the shape surface (negative inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let (a, b, r) = self.capsule();
        point_segment_distance(p, a, b) - r
    }

    /// Surface-to-surface gap between two shapes (negative when overlapping).
    pub fn gap(&self, other: &Shape) -> f64 {
        let (a0, a1, ra) = self.capsule();
        let (b0, b1, rb) = other.capsule();
        segment_segment_distance(a0, a1, b0, b1) - ra - rb
    }

    /// Axis-aligned bounds including the inflation radius.
    pub fn bounds(&self) -> Aabb {
        let (a, b, r) = self.capsule();
        Aabb::new(Vec2::new(a.x.min(b.x) - r, a.y.min(b.y) - r), Vec2::new(a.x.max(b.x) + r, a.y.max(b.y) + r))
    }

    /// Same shape moved so that its center is `center` and, for segments, its
    /// direction is `angle`.
    pub fn placed(&self, center: Vec2, angle: f64) -> Shape {
        match *self {
            Shape::Circle { radius, .. } => Shape::Circle { center, radius },
            Shape::Segment { p0, p1, thickness } => {
                let half = Vec2::from_angle(angle) * (p0.dist(p1) / 2.0);
                Shape::Segment { p0: center - half, p1: center + half, thickness }
            }
        }
    }

    fn validate(&self) -> Result<(), ArenaError> {
        match *self {
            Shape::Circle { radius, .. } if !(radius > 0.0) => {
                Err(ArenaError::InvalidGeometry(format!("circle radius must be > 0, got {radius}")))
            }
            Shape::Segment { p0, p1, thickness } => {
                if !(p0.dist(p1) > 0.0) {
                    Err(ArenaError::InvalidGeometry("segment has zero length".into()))
                } else if !(thickness >= 0.0) {
                    Err(ArenaError::InvalidGeometry(format!("segment thickness must be >= 0, got {thickness}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub shape: Shape,
    pub movable: bool,
    pub surface_class: SurfaceClass,
}

/// A gate: an opening flanked by two posts. Posts are collinear with the
/// opening and extend outward from its endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub posts: [Obstacle; 2],
    pub opening: (Vec2, Vec2),
    pub pass_direction_agnostic: bool,
}

impl Gate {
    pub fn new(a: Vec2, b: Vec2, post_length: f64, post_thickness: f64) -> Result<Gate, ArenaError> {
        if !(a.dist(b) > 0.0) {
            return Err(ArenaError::InvalidGeometry("gate opening has zero width".into()));
        }
        if !(post_length > 0.0) {
            return Err(ArenaError::InvalidGeometry("gate post length must be > 0".into()));
        }
        let u = (b - a) * (1.0 / a.dist(b));
        let post = |from: Vec2, dir: Vec2| Obstacle {
            shape: Shape::Segment { p0: from, p1: from + dir * post_length, thickness: post_thickness },
            movable: false,
            surface_class: SurfaceClass::GateFrame,
        };
        Ok(Gate { posts: [post(a, -u), post(b, u)], opening: (a, b), pass_direction_agnostic: true })
    }

    pub fn center(&self) -> Vec2 {
        self.opening.0.lerp(self.opening.1, 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub surface_class: SurfaceClass,
}

impl Hit {
    pub const NONE: Hit = Hit { distance: f64::INFINITY, surface_class: SurfaceClass::None };

    pub fn is_none(&self) -> bool {
        self.surface_class == SurfaceClass::None
    }
}

/// JSON description of one obstacle.
///
/// `circle` params: `[cx, cy, radius]`; `segment` params: `[x0, y0, x1, y1, thickness]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    #[serde(rename = "type")]
    pub kind: ShapeKind,
    pub params: Vec<f64>,
    #[serde(default)]
    pub movable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Circle,
    Segment,
}

/// JSON description of one gate: `params` is the opening `[ax, ay, bx, by]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub params: [f64; 4],
    #[serde(default = "default_post_length")]
    pub post_length: f64,
    #[serde(default = "default_thickness")]
    pub post_thickness: f64,
}

fn default_post_length() -> f64 {
    0.1
}

fn default_thickness() -> f64 {
    0.05
}

/// Arena layout document. Lengths in meters; `outer` and `mission` are square
/// side lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaConfig {
    pub outer: f64,
    pub mission: f64,
    pub wp_half_side: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub gates: Vec<GateSpec>,
}

pub const POLE_RADIUS: f64 = 0.15;
pub const PANEL_THICKNESS: f64 = 0.05;
pub const PANEL_WIDTHS: [f64; 3] = [1.0, 1.5, 3.0];

impl Default for ArenaConfig {
    /// Two poles, three panels (1 m, 1.5 m, 3 m) and two gates.
    fn default() -> Self {
        let circle =
            |x: f64, y: f64| ObstacleSpec { kind: ShapeKind::Circle, params: vec![x, y, POLE_RADIUS], movable: true };
        let segment = |x0: f64, y0: f64, x1: f64, y1: f64| ObstacleSpec {
            kind: ShapeKind::Segment,
            params: vec![x0, y0, x1, y1, PANEL_THICKNESS],
            movable: true,
        };
        let gate = |ax: f64, ay: f64, bx: f64, by: f64| GateSpec {
            params: [ax, ay, bx, by],
            post_length: default_post_length(),
            post_thickness: default_thickness(),
        };
        ArenaConfig {
            outer: 10.0,
            mission: 8.0,
            wp_half_side: 3.0,
            obstacles: vec![
                circle(-1.5, 1.0),
                circle(1.6, -1.2),
                segment(-2.2, -1.0, -1.2, -1.0),
                segment(0.5, 1.6, 2.0, 1.6),
                segment(0.0, -1.5, 0.0, 1.5),
            ],
            gates: vec![gate(-0.5, -2.3, 0.5, -2.3), gate(2.3, -0.5, 2.3, 0.5)],
        }
    }
}

impl ArenaConfig {
    /// Same dimensions, no obstacles and no gates.
    pub fn empty() -> Self {
        ArenaConfig { obstacles: Vec::new(), gates: Vec::new(), ..ArenaConfig::default() }
    }

    pub fn from_json(s: &str) -> Result<ArenaConfig, ArenaError> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub outer_bounds: Aabb,
    pub mission_area: Aabb,
    pub wp_half_side: f64,
    pub waypoints: [Vec2; 4],
    pub obstacles: Vec<Obstacle>,
    pub gates: Vec<Gate>,
    walls: [(Vec2, Vec2); 4],
}

/// Builds and validates an arena from its layout description.
pub fn build_arena(config: &ArenaConfig) -> Result<Arena, ArenaError> {
    if !(config.outer > 0.0) || !(config.mission > 0.0) || !(config.wp_half_side >= 0.0) {
        return Err(ArenaError::InvalidGeometry("outer and mission sizes must be > 0, wp_half_side >= 0".into()));
    }
    let outer = Aabb::square(Vec2::ZERO, config.outer);
    let mission = Aabb::square(Vec2::ZERO, config.mission);
    if !outer.contains_box(&mission) {
        return Err(ArenaError::InvalidGeometry(format!(
            "mission area {}x{} does not fit in outer bounds {}x{}",
            config.mission, config.mission, config.outer, config.outer
        )));
    }
    let h = config.wp_half_side;
    let wp_square = Aabb::square(Vec2::ZERO, 2.0 * h);
    if !mission.contains_box(&wp_square) {
        return Err(ArenaError::InvalidGeometry(format!(
            "waypoint square of half-side {h} does not fit in the mission area"
        )));
    }

    let mut obstacles = Vec::with_capacity(config.obstacles.len());
    for spec in &config.obstacles {
        let shape = match (spec.kind, spec.params.as_slice()) {
            (ShapeKind::Circle, &[x, y, r]) => Shape::Circle { center: Vec2::new(x, y), radius: r },
            (ShapeKind::Segment, &[x0, y0, x1, y1, t]) => {
                Shape::Segment { p0: Vec2::new(x0, y0), p1: Vec2::new(x1, y1), thickness: t }
            }
            (kind, params) => {
                return Err(ArenaError::InvalidGeometry(format!(
                    "{kind:?} obstacle takes {} params, got {}",
                    if kind == ShapeKind::Circle { 3 } else { 5 },
                    params.len()
                )))
            }
        };
        shape.validate()?;
        obstacles.push(Obstacle { shape, movable: spec.movable, surface_class: SurfaceClass::Obstacle });
    }

    let mut gates = Vec::with_capacity(config.gates.len());
    for spec in &config.gates {
        let [ax, ay, bx, by] = spec.params;
        gates.push(Gate::new(Vec2::new(ax, ay), Vec2::new(bx, by), spec.post_length, spec.post_thickness)?);
    }

    let c = outer.corners();
    Ok(Arena {
        outer_bounds: outer,
        mission_area: mission,
        wp_half_side: h,
        waypoints: [Vec2::new(-h, -h), Vec2::new(h, -h), Vec2::new(h, h), Vec2::new(-h, h)],
        obstacles,
        gates,
        walls: [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])],
    })
}

impl Arena {
    pub fn to_config(&self) -> ArenaConfig {
        let obstacles = self
            .obstacles
            .iter()
            .map(|o| match o.shape {
                Shape::Circle { center, radius } => ObstacleSpec {
                    kind: ShapeKind::Circle,
                    params: vec![center.x, center.y, radius],
                    movable: o.movable,
                },
                Shape::Segment { p0, p1, thickness } => ObstacleSpec {
                    kind: ShapeKind::Segment,
                    params: vec![p0.x, p0.y, p1.x, p1.y, thickness],
                    movable: o.movable,
                },
            })
            .collect();
        let gates = self
            .gates
            .iter()
            .map(|g| {
                let (p0, p1, r) = g.posts[0].shape.capsule();
                GateSpec {
                    params: [g.opening.0.x, g.opening.0.y, g.opening.1.x, g.opening.1.y],
                    post_length: p0.dist(p1),
                    post_thickness: 2.0 * r,
                }
            })
            .collect();
        ArenaConfig {
            outer: self.outer_bounds.width(),
            mission: self.mission_area.width(),
            wp_half_side: self.wp_half_side,
            obstacles,
            gates,
        }
    }

    /// All solid objects: free-standing obstacles followed by gate posts.
    pub fn solids(&self) -> impl Iterator<Item = &Obstacle> {
        self.obstacles.iter().chain(self.gates.iter().flat_map(|g| g.posts.iter()))
    }

    /// Nearest hit among solids and walls, ignoring the ground fence and the range cap.
    pub fn cast_solids(&self, origin: Vec2, dir: Vec2) -> Hit {
        let mut best = Hit::NONE;
        for o in self.solids() {
            let (a, b, r) = o.shape.capsule();
            if let Some(t) = ray_capsule(origin, dir, a, b, r) {
                if t < best.distance {
                    best = Hit { distance: t, surface_class: o.surface_class };
                }
            }
        }
        for &(a, b) in &self.walls {
            if let Some(t) = ray_capsule(origin, dir, a, b, 0.0) {
                if t < best.distance {
                    best = Hit { distance: t, surface_class: SurfaceClass::Wall };
                }
            }
        }
        best
    }

    /// Distance at which the ray leaves the mission area, if it does so within `max_range`.
    fn fence_exit(&self, origin: Vec2, dir: Vec2, max_range: f64) -> Option<f64> {
        match self.mission_area.clip_ray(origin, dir, max_range) {
            Some((_, t1)) if t1 < max_range => Some(t1),
            _ => None,
        }
    }

    /// Is the drone at `p` (modeled as a disc of `radius`) touching a solid or a wall?
    pub fn contact(&self, p: Vec2, radius: f64) -> Option<SurfaceClass> {
        let o = &self.outer_bounds;
        if p.x - radius <= o.min.x || p.x + radius >= o.max.x || p.y - radius <= o.min.y || p.y + radius >= o.max.y {
            return Some(SurfaceClass::Wall);
        }
        self.solids().find(|s| s.shape.distance_to(p) <= radius).map(|s| s.surface_class)
    }
}

/// Casts a ray from `origin` at heading `angle`. Hits farther than `max_range`
/// are reported as [`Hit::NONE`].
///
/// With `ground_aware`, the mission-area boundary acts as a one-sided virtual
/// fence: a ray is stopped where it leaves the mission area. A ray from outside
/// the area toward the area is not stopped on entry.
pub fn ray_cast(arena: &Arena, origin: Vec2, angle: f64, max_range: f64, ground_aware: bool) -> Hit {
    let dir = Vec2::from_angle(angle);
    let mut hit = arena.cast_solids(origin, dir);
    if ground_aware {
        if let Some(t) = arena.fence_exit(origin, dir, max_range) {
            if t < hit.distance {
                hit = Hit { distance: t, surface_class: SurfaceClass::OutOfAreaGround };
            }
        }
    }
    if hit.distance > max_range {
        Hit::NONE
    } else {
        hit
    }
}

/// Distance along `dir` at which a ray from `origin` leaves the mission area,
/// `∞` if it stays inside up to `max_range` or never enters.
pub fn ray_cast_ground(arena: &Arena, origin: Vec2, dir: Vec2, max_range: f64) -> f64 {
    arena.fence_exit(origin, dir, max_range).unwrap_or(f64::INFINITY)
}

/// Boundary counts as inside.
pub fn in_mission_area(arena: &Arena, p: Vec2) -> bool {
    arena.mission_area.contains(p)
}

/// True iff the motion `p_prev → p_next` properly crosses the gate opening, in
/// either direction.
pub fn gate_pass(gate: &Gate, p_prev: Vec2, p_next: Vec2) -> bool {
    segments_cross_properly(p_prev, p_next, gate.opening.0, gate.opening.1)
}

/// Samples a pose for `shape` inside the mission area that keeps `clearance`
/// from `keep_clear` and does not overlap any of `others`.
fn sample_placement<R: Rng + ?Sized>(
    arena: &Arena,
    shape: &Shape,
    others: &[Shape],
    keep_clear: Vec2,
    clearance: f64,
    rng: &mut R,
) -> Option<Shape> {
    let m = arena.mission_area;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let center = Vec2::new(rng.random_range(m.min.x..=m.max.x), rng.random_range(m.min.y..=m.max.y));
        let angle = rng.random_range(0.0..PI);
        let cand = shape.placed(center, angle);
        if m.contains_box(&cand.bounds())
            && cand.distance_to(keep_clear) >= clearance
            && others.iter().all(|o| cand.gap(o) > 0.0)
        {
            return Some(cand);
        }
    }
    None
}

/// Relocates one movable obstacle, chosen uniformly, to a fresh pose inside the
/// mission area. Returns the new arena and the index of the moved obstacle.
pub fn move_dynamic_obstacle<R: Rng + ?Sized>(
    arena: &Arena,
    drone: Vec2,
    rng: &mut R,
) -> Result<(Arena, usize), ArenaError> {
    let movable: Vec<usize> = (0..arena.obstacles.len()).filter(|&i| arena.obstacles[i].movable).collect();
    if movable.is_empty() {
        return Err(ArenaError::PlacementFailed(PlacementFailure::NoMovable));
    }
    let idx = movable[rng.random_range(0..movable.len())];
    let others: Vec<Shape> = arena.solids().enumerate().filter(|&(i, _)| i != idx).map(|(_, o)| o.shape).collect();
    let shape = sample_placement(arena, &arena.obstacles[idx].shape, &others, drone, DRONE_CLEARANCE, rng)
        .ok_or(ArenaError::PlacementFailed(PlacementFailure::Exhausted))?;
    let mut next = arena.clone();
    next.obstacles[idx].shape = shape;
    Ok((next, idx))
}

/// Re-places every movable obstacle at random, one after another, keeping
/// clearance from `keep_clear` (typically the take-off point).
pub fn randomize_layout<R: Rng + ?Sized>(arena: &Arena, keep_clear: Vec2, rng: &mut R) -> Result<Arena, ArenaError> {
    let mut next = arena.clone();
    for idx in 0..next.obstacles.len() {
        if !next.obstacles[idx].movable {
            continue;
        }
        let others: Vec<Shape> = next.solids().enumerate().filter(|&(i, _)| i != idx).map(|(_, o)| o.shape).collect();
        let shape = sample_placement(&next, &next.obstacles[idx].shape, &others, keep_clear, DRONE_CLEARANCE, rng)
            .ok_or(ArenaError::PlacementFailed(PlacementFailure::Exhausted))?;
        next.obstacles[idx].shape = shape;
    }
    Ok(next)
}
