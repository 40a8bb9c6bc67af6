//! Photometric augmentation of grayscale frames and the dataset pose sampler.
//!
//! Stages always run in the same order: motion blur, Gaussian blur, exposure
//! (gain, gamma, output window, vignette), additive noise. Intermediate values
//! stay in floating point; the result is rounded and clamped once at the end.

use crate::arena::Arena;
use crate::geom::{wrap_angle, Vec2};
use crate::pgm::{self, Pgm, PgmError};
use crate::stats::{derive_seed, rng_for};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error("expected an 8-bit PGM, maxval is {0}")]
    NotEightBit(u16),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("image dimensions must be > 0")]
    EmptyImage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let pixels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        GrayImage { width, height, pixels }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        if self.pixels.is_empty() {
            return 0.0;
        }
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, AugmentError> {
    let p = pgm::decode(bytes)?;
    if p.maxval > 255 {
        return Err(AugmentError::NotEightBit(p.maxval));
    }
    Ok(GrayImage { width: p.width, height: p.height, pixels: p.samples.iter().map(|&s| s as u8).collect() })
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    pgm::encode(&Pgm {
        width: img.width,
        height: img.height,
        maxval: 255,
        samples: img.pixels.iter().map(|&p| p as u16).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionBlur {
    /// Kernel length, px.
    pub length: f64,
    /// Direction of motion, rad.
    pub angle: f64,
}

impl Default for MotionBlur {
    fn default() -> Self {
        MotionBlur { length: 0.0, angle: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianBlur {
    pub sigma: f64,
}

impl Default for GaussianBlur {
    fn default() -> Self {
        GaussianBlur { sigma: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Noise {
    /// Std-dev in intensity units.
    pub sigma: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Noise { sigma: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Exposure {
    pub gain: f64,
    pub gamma: f64,
    /// Output window the full input range is mapped onto.
    pub range: (f64, f64),
    /// 0 disables vignetting; 1 fully darkens the corners.
    pub vignette_strength: f64,
}

impl Default for Exposure {
    fn default() -> Self {
        Exposure { gain: 1.0, gamma: 1.0, range: (0.0, 255.0), vignette_strength: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugParams {
    pub motion_blur: MotionBlur,
    pub gaussian_blur: GaussianBlur,
    pub noise: Noise,
    pub exposure: Exposure,
}

impl AugParams {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: &str| Err(AugmentError::InvalidParams(m.into()));
        if !(self.motion_blur.length >= 0.0) || !self.motion_blur.angle.is_finite() {
            return bad("motion_blur.length must be >= 0 and angle finite");
        }
        if !(self.gaussian_blur.sigma >= 0.0) || !(self.noise.sigma >= 0.0) {
            return bad("sigmas must be >= 0");
        }
        let e = &self.exposure;
        if !(e.gamma > 0.0) || !(e.gain >= 0.0) {
            return bad("exposure.gamma must be > 0 and gain >= 0");
        }
        if !(e.range.0 < e.range.1) {
            return bad("exposure.range needs lo < hi");
        }
        if !(0.0..=1.0).contains(&e.vignette_strength) {
            return bad("exposure.vignette_strength must be in [0, 1]");
        }
        Ok(())
    }
}

struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn at(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.w as isize - 1) as usize;
        let yc = y.clamp(0, self.h as isize - 1) as usize;
        self.v[yc * self.w + xc]
    }

    /// Bilinear sample at continuous pixel coordinates, clamp-to-edge.
    fn sample(&self, x: f64, y: f64) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (xi, yi) = (x0 as isize, y0 as isize);
        let top = self.at(xi, yi) * (1.0 - fx) + self.at(xi + 1, yi) * fx;
        let bottom = self.at(xi, yi + 1) * (1.0 - fx) + self.at(xi + 1, yi + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

fn motion_blur(p: &Plane, mb: &MotionBlur) -> Plane {
    if mb.length <= 0.0 {
        return Plane { w: p.w, h: p.h, v: p.v.clone() };
    }
    let taps = mb.length.ceil() as usize + 1;
    let dir = Vec2::from_angle(mb.angle);
    let offsets: Vec<Vec2> = (0..taps).map(|i| dir * (mb.length * (i as f64 / (taps - 1) as f64 - 0.5))).collect();
    let mut v = Vec::with_capacity(p.v.len());
    for y in 0..p.h {
        for x in 0..p.w {
            let s: f64 = offsets.iter().map(|o| p.sample(x as f64 + o.x, y as f64 + o.y)).sum();
            v.push(s / taps as f64);
        }
    }
    Plane { w: p.w, h: p.h, v }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|w| w / s).collect()
}

fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    if sigma <= 0.0 {
        return Plane { w: p.w, h: p.h, v: p.v.clone() };
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let pass = |src: &Plane, horizontal: bool| {
        let mut v = Vec::with_capacity(src.v.len());
        for y in 0..src.h as isize {
            for x in 0..src.w as isize {
                let s: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(j, w)| {
                        let o = j as isize - r;
                        w * if horizontal { src.at(x + o, y) } else { src.at(x, y + o) }
                    })
                    .sum();
                v.push(s);
            }
        }
        Plane { w: src.w, h: src.h, v }
    };
    pass(&pass(p, true), false)
}

fn exposure(p: &mut Plane, e: &Exposure) {
    let (cx, cy) = ((p.w as f64 - 1.0) / 2.0, (p.h as f64 - 1.0) / 2.0);
    let d_max = cx.hypot(cy);
    let (lo, hi) = e.range;
    for y in 0..p.h {
        for x in 0..p.w {
            let vig = if e.vignette_strength > 0.0 && d_max > 0.0 {
                let d = (x as f64 - cx).hypot(y as f64 - cy) / d_max;
                1.0 - e.vignette_strength * d * d
            } else {
                1.0
            };
            let i = y * p.w + x;
            let light = (e.gain * vig * p.v[i] / 255.0).clamp(0.0, 1.0);
            p.v[i] = lo + (hi - lo) * light.powf(e.gamma);
        }
    }
}

/// Applies the augmentation pipeline. Only the noise stage consumes randomness,
/// so noiseless parameters give the same output for every seed.
pub fn augment(img: &GrayImage, params: &AugParams, seed: u64) -> GrayImage {
    if img.pixels.is_empty() {
        return img.clone();
    }
    let mut p = Plane { w: img.width, h: img.height, v: img.pixels.iter().map(|&x| x as f64).collect() };
    p = motion_blur(&p, &params.motion_blur);
    p = gaussian_blur(&p, params.gaussian_blur.sigma);
    exposure(&mut p, &params.exposure);
    if params.noise.sigma > 0.0 {
        let mut rng = rng_for(seed, &[]);
        for v in &mut p.v {
            let z: f64 = rng.sample(StandardNormal);
            *v += params.noise.sigma * z;
        }
    }
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: p.v.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect(),
    }
}

/// Bilinear resize with half-pixel centers and clamp-to-edge.
pub fn resize_gray(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage, AugmentError> {
    if img.width == 0 || img.height == 0 || out_w == 0 || out_h == 0 {
        return Err(AugmentError::EmptyImage);
    }
    let p = Plane { w: img.width, h: img.height, v: img.pixels.iter().map(|&x| x as f64).collect() };
    let sx = img.width as f64 / out_w as f64;
    let sy = img.height as f64 / out_h as f64;
    Ok(GrayImage::from_fn(out_w, out_h, |x, y| {
        let u = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (img.width - 1) as f64);
        let v = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (img.height - 1) as f64);
        p.sample(u, v).round().clamp(0.0, 255.0) as u8
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupCounts {
    pub random_spawn: usize,
    pub scan_360: usize,
    pub square_path: usize,
}

impl Default for GroupCounts {
    fn default() -> Self {
        GroupCounts { random_spawn: 10_000, scan_360: 21_000, square_path: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetPlan {
    pub counts: GroupCounts,
    /// (train, val, test)
    pub split: (f64, f64, f64),
    /// Half-widths of the uniform attitude jitter, degrees.
    pub pitch_jitter_deg: f64,
    pub roll_jitter_deg: f64,
    pub yaw_jitter_deg: f64,
    pub height_range: (f64, f64),
    pub ring_radius: f64,
    pub poses_per_ring: usize,
    /// Distance of the square path from the mission-area edges.
    pub square_inset: f64,
}

impl Default for DatasetPlan {
    fn default() -> Self {
        DatasetPlan {
            counts: GroupCounts::default(),
            split: (0.7, 0.1, 0.2),
            pitch_jitter_deg: 5.0,
            roll_jitter_deg: 5.0,
            yaw_jitter_deg: 5.0,
            height_range: (0.45, 0.55),
            ring_radius: 1.5,
            poses_per_ring: 360,
            square_inset: 0.5,
        }
    }
}

impl DatasetPlan {
    pub fn validate(&self) -> Result<(), String> {
        let (a, b, c) = self.split;
        if a < 0.0 || b < 0.0 || c < 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err("split fractions must be >= 0 and sum to 1".into());
        }
        if !(self.height_range.0 <= self.height_range.1) {
            return Err("height_range needs lo <= hi".into());
        }
        if self.poses_per_ring == 0 || !(self.ring_radius > 0.0) || !(self.square_inset >= 0.0) {
            return Err("ring and square parameters must be positive".into());
        }
        for j in [self.pitch_jitter_deg, self.roll_jitter_deg, self.yaw_jitter_deg] {
            if !(j >= 0.0) {
                return Err("jitter half-widths must be >= 0".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Background {
    Empty,
    Populated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Nominal heading before jitter, rad.
    pub heading: f64,
    pub yaw_jitter: f64,
    pub pitch: f64,
    pub roll: f64,
    /// 1 random spawn, 2 obstacle scan, 3 square path.
    pub group: u8,
    pub split: Split,
    /// Scanned object (group 2 only).
    pub object: Option<usize>,
    pub background: Option<Background>,
}

impl DatasetPose {
    pub fn yaw(&self) -> f64 {
        wrap_angle(self.heading + self.yaw_jitter)
    }
}

/// Sizes of (train, val, test): val and test are floored, train takes the rest.
pub fn split_sizes(n: usize, split: (f64, f64, f64)) -> (usize, usize, usize) {
    let val = (n as f64 * split.1 + 1e-9).floor() as usize;
    let test = (n as f64 * split.2 + 1e-9).floor() as usize;
    let val = val.min(n);
    let test = test.min(n - val);
    (n - val - test, val, test)
}

/// Ranks group members by a seeded hash and cuts the ranking into splits.
fn assign_splits(n: usize, group: u8, seed: u64, split: (f64, f64, f64)) -> Vec<Split> {
    let (_, val, test) = split_sizes(n, split);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (derive_seed(seed, &[0x5b17, group as u64, i as u64]), i));
    let mut out = vec![Split::Train; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < val {
            out[i] = Split::Val;
        } else if rank < val + test {
            out[i] = Split::Test;
        }
    }
    out
}

fn split_evenly(n: usize, buckets: usize) -> Vec<usize> {
    (0..buckets).map(|b| n / buckets + usize::from(b < n % buckets)).collect()
}

/// Centers of the objects scanned in group 2: obstacles, then gates.
pub fn scan_targets(arena: &Arena) -> Vec<Vec2> {
    arena.obstacles.iter().map(|o| o.shape.center()).chain(arena.gates.iter().map(|g| g.center())).collect()
}

/// Position and travel direction at arc length `s` along the square of half
/// side `h`, starting at its (−, −) corner.
fn square_point(h: f64, s: f64, clockwise: bool) -> (Vec2, f64) {
    let ccw = [Vec2::new(-h, -h), Vec2::new(h, -h), Vec2::new(h, h), Vec2::new(-h, h)];
    let corner = |k: usize| if clockwise { ccw[(4 - k % 4) % 4] } else { ccw[k % 4] };
    let side = 2.0 * h;
    let leg = ((s / side).floor() as usize).min(3);
    let (a, b) = (corner(leg), corner(leg + 1));
    (a.lerp(b, (s - leg as f64 * side) / side), (b - a).angle())
}

/// Deterministic pose list for dataset collection.
pub fn sample_dataset_poses(arena: &Arena, plan: &DatasetPlan, seed: u64) -> Vec<DatasetPose> {
    let deg = PI / 180.0;
    let jitter = |group: u8, i: usize| {
        let mut rng = rng_for(seed, &[group as u64, i as u64]);
        let mut sym = |half: f64| if half > 0.0 { rng.random_range(-half..=half) * deg } else { 0.0 };
        let pitch = sym(plan.pitch_jitter_deg);
        let roll = sym(plan.roll_jitter_deg);
        let yaw = sym(plan.yaw_jitter_deg);
        let (lo, hi) = plan.height_range;
        let z = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        (rng, pitch, roll, yaw, z)
    };
    let blank = |group: u8, x: f64, y: f64, heading: f64, i: usize, split: Split| {
        let (_, pitch, roll, yaw_jitter, z) = jitter(group, i);
        DatasetPose { x, y, z, heading, yaw_jitter, pitch, roll, group, split, object: None, background: None }
    };
    let mut out = Vec::new();

    let n1 = plan.counts.random_spawn;
    let splits = assign_splits(n1, 1, seed, plan.split);
    let area = arena.mission_area;
    for (i, &split) in splits.iter().enumerate() {
        let (mut rng, pitch, roll, yaw_jitter, z) = jitter(1, i);
        let x = rng.random_range(area.min.x..area.max.x);
        let y = rng.random_range(area.min.y..area.max.y);
        let heading = rng.random_range(-PI..PI);
        out.push(DatasetPose {
            x,
            y,
            z,
            heading,
            yaw_jitter,
            pitch,
            roll,
            group: 1,
            split,
            object: None,
            background: None,
        });
    }

    let targets = scan_targets(arena);
    if !targets.is_empty() {
        let n2 = plan.counts.scan_360;
        let splits = assign_splits(n2, 2, seed, plan.split);
        let per_bucket = split_evenly(n2, targets.len() * 2);
        let mut i = 0;
        for (b, &m) in per_bucket.iter().enumerate() {
            let (obj, background) = (b / 2, if b % 2 == 0 { Background::Empty } else { Background::Populated });
            let c = targets[obj];
            for k in 0..m {
                let theta = TAU * (k % plan.poses_per_ring) as f64 / plan.poses_per_ring as f64;
                let p = c + Vec2::from_angle(theta) * plan.ring_radius;
                let mut pose = blank(2, p.x, p.y, (c - p).angle(), i, splits[i]);
                pose.object = Some(obj);
                pose.background = Some(background);
                out.push(pose);
                i += 1;
            }
        }
    }

    let n3 = plan.counts.square_path;
    let splits = assign_splits(n3, 3, seed, plan.split);
    let h = area.width() / 2.0 - plan.square_inset;
    let c = area.center();
    let perimeter = 8.0 * h;
    let halves = [n3 - n3 / 2, n3 / 2];
    let mut i = 0;
    for (dir, &m) in halves.iter().enumerate() {
        for k in 0..m {
            let (p, heading) = square_point(h, perimeter * k as f64 / m as f64, dir == 1);
            out.push(blank(3, c.x + p.x, c.y + p.y, heading, i, splits[i]));
            i += 1;
        }
    }
    out
}
