//! Three-sector collision perception.
//!
//! The camera's horizontal field of view is sampled by a fan of rays, one per
//! output-image column, and split into left/center/right thirds. A sector is
//! labeled blocked when at least a fraction `f` of its rays see an obstacle
//! within `d_max`. The graded variant reports `1 − d_f / d_max`, where `d_f` is
//! the nearest-rank `f`-quantile of the sector's obstacle distances.

pub mod frame;
pub mod raster;

pub use frame::{decode_frame, encode_frame, FrameError, FRAME_HEADER, FRAME_LEN};
pub use raster::{label_from_rasters, DepthRaster, RasterError, SegRaster};

use crate::arena::{Arena, SurfaceClass};
use crate::geom::{Pose2, Vec2};
use crate::stats::{kth_smallest, nearest_rank};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SectorProbs {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl SectorProbs {
    pub const ZERO: SectorProbs = SectorProbs { left: 0.0, center: 0.0, right: 0.0 };

    pub const fn new(left: f64, center: f64, right: f64) -> Self {
        SectorProbs { left, center, right }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.left, self.center, self.right]
    }

    pub fn from_array([left, center, right]: [f64; 3]) -> Self {
        SectorProbs { left, center, right }
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        SectorProbs::new(f(self.left), f(self.center), f(self.right))
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|p| (0.0..=1.0).contains(p))
    }

    /// Left and right swapped.
    pub fn mirrored(self) -> Self {
        SectorProbs::new(self.right, self.center, self.left)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct SectorProbsQ8 {
    pub left: u8,
    pub center: u8,
    pub right: u8,
}

impl SectorProbsQ8 {
    pub const fn new(left: u8, center: u8, right: u8) -> Self {
        SectorProbsQ8 { left, center, right }
    }
}

/// Binary per-sector labels, `[left, center, right]`.
pub type SectorLabels = [u8; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorGeometry {
    /// Horizontal field of view, radians.
    pub fov: f64,
    pub n_rays: usize,
    /// Range within which an obstacle counts, meters.
    pub d_max: f64,
    /// Fraction of a sector that must be blocked.
    pub pixel_fraction: f64,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        SensorGeometry { fov: 87f64.to_radians(), n_rays: 162, d_max: 2.0, pixel_fraction: 0.10 }
    }
}

impl SensorGeometry {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_rays < 3 || !self.n_rays.is_multiple_of(3) {
            return Err(format!("n_rays must be >= 3 and divisible by 3, got {}", self.n_rays));
        }
        if !(self.fov > 0.0 && self.fov < std::f64::consts::PI) {
            return Err(format!("fov must be in (0, pi), got {}", self.fov));
        }
        if !(self.d_max > 0.0) {
            return Err(format!("d_max must be > 0, got {}", self.d_max));
        }
        if !(self.pixel_fraction > 0.0 && self.pixel_fraction <= 1.0) {
            return Err(format!("pixel_fraction must be in (0, 1], got {}", self.pixel_fraction));
        }
        Ok(())
    }

    pub fn rays_per_sector(&self) -> usize {
        self.n_rays / 3
    }

    /// Bearing of ray `i` relative to the heading. Ray 0 is the leftmost
    /// (largest bearing); rays sit at column centers.
    pub fn bearing(&self, i: usize) -> f64 {
        self.fov / 2.0 - (i as f64 + 0.5) * self.fov / self.n_rays as f64
    }

    /// Smallest blocked count that meets the fraction threshold for `n` samples.
    pub fn min_blocked(&self, n: usize) -> usize {
        nearest_rank(self.pixel_fraction, n)
    }
}

/// What one ray sees: the nearest solid surface (walls included) and, separately,
/// where it would leave the mission area. Ground is a floor-level layer, so it
/// never hides a solid standing behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayReturn {
    pub solid: f64,
    pub solid_class: SurfaceClass,
    pub ground: f64,
}

impl RayReturn {
    /// Distance to the nearest obstacle-class return, `∞` if none.
    pub fn obstacle_distance(&self, ground_aware: bool) -> f64 {
        let solid = if self.solid_class.is_obstacle(ground_aware) { self.solid } else { f64::INFINITY };
        if ground_aware {
            solid.min(self.ground)
        } else {
            solid
        }
    }
}

/// Casts the full ray fan from `pose`, up to `d_max`.
pub fn cast_fan(arena: &Arena, pose: Pose2, geom: &SensorGeometry) -> Vec<RayReturn> {
    let origin = pose.position();
    (0..geom.n_rays)
        .map(|i| {
            let angle = pose.yaw + geom.bearing(i);
            let solid = crate::arena::ray_cast(arena, origin, angle, geom.d_max, false);
            let ground = crate::arena::ray_cast_ground(arena, origin, Vec2::from_angle(angle), geom.d_max);
            RayReturn { solid: solid.distance, solid_class: solid.surface_class, ground }
        })
        .collect()
}

/// Labels from a precomputed fan.
pub fn labels_from_returns(returns: &[RayReturn], geom: &SensorGeometry, ground_aware: bool) -> SectorLabels {
    let per = returns.len() / 3;
    let need = geom.min_blocked(per);
    let mut out = [0u8; 3];
    for (s, chunk) in returns.chunks_exact(per).enumerate() {
        let blocked = chunk.iter().filter(|r| r.obstacle_distance(ground_aware) <= geom.d_max).count();
        out[s] = u8::from(blocked >= need);
    }
    out
}

/// Graded probabilities from a precomputed fan.
pub fn soft_probs_from_returns(returns: &[RayReturn], geom: &SensorGeometry, ground_aware: bool) -> SectorProbs {
    let per = returns.len() / 3;
    let k = geom.min_blocked(per);
    let mut out = [0.0; 3];
    let mut buf = Vec::with_capacity(per);
    for (s, chunk) in returns.chunks_exact(per).enumerate() {
        buf.clear();
        buf.extend(chunk.iter().map(|r| r.obstacle_distance(ground_aware)));
        let d_f = kth_smallest(&mut buf, k);
        out[s] = if d_f.is_finite() { (1.0 - d_f / geom.d_max).clamp(0.0, 1.0) } else { 0.0 };
    }
    SectorProbs::from_array(out)
}

pub fn sector_labels(arena: &Arena, pose: Pose2, geom: &SensorGeometry, ground_aware: bool) -> SectorLabels {
    labels_from_returns(&cast_fan(arena, pose, geom), geom, ground_aware)
}

pub fn sector_soft_probs(arena: &Arena, pose: Pose2, geom: &SensorGeometry, ground_aware: bool) -> SectorProbs {
    soft_probs_from_returns(&cast_fan(arena, pose, geom), geom, ground_aware)
}

/// Round-half-away-from-zero to the `[0, 255]` code.
pub fn quantize(p: SectorProbs) -> SectorProbsQ8 {
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    SectorProbsQ8::new(q(p.left), q(p.center), q(p.right))
}

pub fn dequantize(q: SectorProbsQ8) -> SectorProbs {
    SectorProbs::new(q.left as f64 / 255.0, q.center as f64 / 255.0, q.right as f64 / 255.0)
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma` and clamps to `[0, 1]`.
/// `sigma == 0` returns the input without consuming randomness.
pub fn perception_noise<R: Rng + ?Sized>(p: SectorProbs, sigma: f64, rng: &mut R) -> SectorProbs {
    if sigma <= 0.0 {
        return p;
    }
    let mut noisy = |v: f64| {
        let z: f64 = rng.sample(StandardNormal);
        (v + sigma * z).clamp(0.0, 1.0)
    };
    let l = noisy(p.left);
    let c = noisy(p.center);
    let r = noisy(p.right);
    SectorProbs::new(l, c, r)
}
