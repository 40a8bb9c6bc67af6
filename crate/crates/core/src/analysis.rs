//! Dead-reckoning error model fitting and the Monte Carlo safety-margin study.
//!
//! An error model is fitted from pairs of relative poses (ground truth versus
//! odometry) over fixed-length windows and rescaled to one second. The model
//! then corrupts an ideal square-lap trajectory many times over; for each
//! realization the largest excursion outside the reference bounding box is its
//! minimum safety margin.

use crate::geom::{wrap_angle, Aabb, Pose2, Vec2};
use crate::stats::{derive_seed, quantile_sorted};
use crate::vehicle::{estimate_step, Drift, ErrorModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("insufficient data: need at least 2 windows, got {0}")]
    InsufficientData(usize),
    #[error("window length must be > 0, got {0}")]
    InvalidWindow(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
}

/// Relative motion over one window, from ground truth and from odometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosePairWindow {
    pub truth: Pose2,
    pub odometry: Pose2,
    /// Window length, s.
    pub length: f64,
}

/// Zero-mean Gaussian fit per component (x, y, yaw), rescaled to per-√second.
/// Windows of different lengths are normalized individually before pooling.
pub fn fit_error_model(windows: &[PosePairWindow]) -> Result<ErrorModel, AnalysisError> {
    if windows.len() < 2 {
        return Err(AnalysisError::InsufficientData(windows.len()));
    }
    let mut acc = [0.0f64; 3];
    for w in windows {
        if !(w.length > 0.0) {
            return Err(AnalysisError::InvalidWindow(w.length));
        }
        let scale = 1.0 / w.length;
        let ex = w.odometry.x - w.truth.x;
        let ey = w.odometry.y - w.truth.y;
        let eyaw = wrap_angle(w.odometry.yaw - w.truth.yaw);
        acc[0] += ex * ex * scale;
        acc[1] += ey * ey * scale;
        acc[2] += eyaw * eyaw * scale;
    }
    let n = windows.len() as f64;
    Ok(ErrorModel {
        sigma_x: (acc[0] / n).sqrt(),
        sigma_y: (acc[1] / n).sqrt(),
        sigma_yaw: (acc[2] / n).sqrt(),
        ..ErrorModel::zero()
    })
}

/// Uniformly sampled pose series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub poses: Vec<Pose2>,
}

impl Trajectory {
    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.poses.iter().map(|p| p.position())
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.poses.len().saturating_sub(1) as f64
    }

    /// Builds from `(t, pose)` rows, checking that the step is uniform.
    pub fn from_timed(rows: &[(f64, Pose2)]) -> Result<Trajectory, AnalysisError> {
        if rows.len() < 2 {
            return Ok(Trajectory { dt: 1.0, poses: rows.iter().map(|r| r.1).collect() });
        }
        let dt = rows[1].0 - rows[0].0;
        if !(dt > 0.0) {
            return Err(AnalysisError::InvalidTrajectory("time must increase".into()));
        }
        for (i, w) in rows.windows(2).enumerate() {
            if ((w[1].0 - w[0].0) - dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(AnalysisError::InvalidTrajectory(format!("non-uniform step at row {}", i + 1)));
            }
        }
        Ok(Trajectory { dt, poses: rows.iter().map(|r| r.1).collect() })
    }
}

/// Square-lap nominal trajectory: the drone flies a square of half-side
/// `half_side` centered on the origin, starting at the `(−, −)` corner,
/// alternating counterclockwise and clockwise laps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SquareLaps {
    pub half_side: f64,
    pub speed: f64,
    pub duration: f64,
    pub dt: f64,
    pub alternate: bool,
}

impl Default for SquareLaps {
    fn default() -> Self {
        SquareLaps { half_side: 3.0, speed: 2.0, duration: 300.0, dt: 0.01, alternate: true }
    }
}

impl SquareLaps {
    pub fn generate(&self) -> Trajectory {
        let h = self.half_side;
        let ccw = [Vec2::new(-h, -h), Vec2::new(h, -h), Vec2::new(h, h), Vec2::new(-h, h)];
        let side = 2.0 * h;
        let perimeter = 4.0 * side;
        let n = (self.duration / self.dt).round() as usize;
        let poses = (0..=n)
            .map(|i| {
                if perimeter == 0.0 {
                    return Pose2::new(-h, -h, 0.0);
                }
                let s = self.speed * self.dt * i as f64;
                let lap = (s / perimeter).floor() as u64;
                let along = s - lap as f64 * perimeter;
                let leg = ((along / side).floor() as usize).min(3);
                let frac = (along - leg as f64 * side) / side;
                let reverse = self.alternate && lap % 2 == 1;
                let (a, b) = if reverse {
                    // clockwise: corners 0, 3, 2, 1
                    let idx = |k: usize| (4 - k % 4) % 4;
                    (ccw[idx(leg)], ccw[idx(leg + 1)])
                } else {
                    (ccw[leg], ccw[(leg + 1) % 4])
                };
                let p = a.lerp(b, frac);
                Pose2::new(p.x, p.y, (b - a).angle())
            })
            .collect();
        Trajectory { dt: self.dt, poses }
    }
}

/// Applies drift to a nominal trajectory, the same way the episode engine
/// corrupts the onboard estimate: yaw error rotates later increments.
pub fn corrupt_trajectory(nominal: &Trajectory, model: &ErrorModel, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drift = Drift::default();
    let mut out = Vec::with_capacity(nominal.poses.len());
    if let Some(&first) = nominal.poses.first() {
        out.push(first);
    }
    for w in nominal.poses.windows(2) {
        drift = estimate_step(&drift, w[0], w[1], model, nominal.dt, &mut rng);
        out.push(drift.estimate(w[1]));
    }
    Trajectory { dt: nominal.dt, poses: out }
}

pub type BBox = Aabb;

/// Axis-aligned bounds of every point of every trajectory.
pub fn reference_bbox(trajs: &[Trajectory]) -> Result<BBox, AnalysisError> {
    let mut pts = trajs.iter().flat_map(|t| t.positions());
    let first = pts.next().ok_or(AnalysisError::EmptyInput)?;
    Ok(pts.fold(Aabb::new(first, first), |b, p| {
        Aabb::new(Vec2::new(b.min.x.min(p.x), b.min.y.min(p.y)), Vec2::new(b.max.x.max(p.x), b.max.y.max(p.y)))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Largest per-axis excursion (distance to the nearest face).
    #[default]
    Linf,
    L2,
}

pub fn exterior_distance(p: Vec2, bbox: &BBox, metric: Metric) -> f64 {
    let (dx, dy) = bbox.exterior_offsets(p);
    match metric {
        Metric::Linf => dx.max(dy),
        Metric::L2 => dx.hypot(dy),
    }
}

/// Largest exterior distance over the trajectory; 0 if it never leaves the box.
pub fn min_safety_margin(traj: &Trajectory, bbox: &BBox, metric: Metric) -> f64 {
    traj.positions().map(|p| exterior_distance(p, bbox, metric)).fold(0.0, f64::max)
}

/// Per-realization excursion statistics for one threshold band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    /// Seconds spent farther than the threshold from the box.
    pub time_outside: f64,
    /// Number of in/out transitions across the band edge.
    pub crossings: usize,
}

pub fn band_stats(traj: &Trajectory, bbox: &BBox, threshold: f64, metric: Metric) -> BandStats {
    let mut outside_samples = 0usize;
    let mut crossings = 0usize;
    let mut prev: Option<bool> = None;
    for p in traj.positions() {
        let out = exterior_distance(p, bbox, metric) > threshold;
        outside_samples += usize::from(out);
        if let Some(was) = prev {
            crossings += usize::from(was != out);
        }
        prev = Some(out);
    }
    BandStats { time_outside: outside_samples as f64 * traj.dt, crossings }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyOptions {
    pub thresholds: Vec<f64>,
    pub metric: Metric,
    /// Reference box; defaults to the nominal trajectory's own bounds.
    pub bbox: Option<BBox>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { thresholds: vec![1.0, 2.0], metric: Metric::Linf, bbox: None }
    }
}

/// Aggregates for one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub threshold: f64,
    pub fraction_within: f64,
    pub time_outside_median: f64,
    pub time_outside_p95: f64,
    /// Over the realizations that exceed the threshold; 0 if none do.
    pub crossings_median: f64,
    pub crossings_p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginStats {
    pub thresholds: Vec<f64>,
    pub bbox: BBox,
    pub metric: Metric,
    pub margins: Vec<f64>,
    /// `bands[r][k]`: realization `r`, threshold `k`.
    pub bands: Vec<Vec<BandStats>>,
    pub margin_median: f64,
    pub margin_p95: f64,
    pub summaries: Vec<BandSummary>,
}

impl MarginStats {
    pub fn fraction_within(&self, threshold: f64) -> f64 {
        if self.margins.is_empty() {
            return 0.0;
        }
        self.margins.iter().filter(|&&m| m <= threshold).count() as f64 / self.margins.len() as f64
    }

    fn threshold_index(&self, threshold: f64) -> Option<usize> {
        self.thresholds.iter().position(|&t| t == threshold)
    }

    /// Per-realization seconds beyond `threshold` (one of the configured thresholds).
    pub fn time_outside(&self, threshold: f64) -> Option<Vec<f64>> {
        let k = self.threshold_index(threshold)?;
        Some(self.bands.iter().map(|b| b[k].time_outside).collect())
    }

    pub fn crossings(&self, threshold: f64) -> Option<Vec<usize>> {
        let k = self.threshold_index(threshold)?;
        Some(self.bands.iter().map(|b| b[k].crossings).collect())
    }

    /// Nearest-rank quantile of the margins.
    pub fn margin_quantile(&self, q: f64) -> f64 {
        let mut m = self.margins.clone();
        m.sort_by(|a, b| a.total_cmp(b));
        quantile_sorted(&m, q)
    }
}

/// Seed of realization `index` in a study seeded with `seed`.
pub fn realization_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, &[index as u64])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Runs `n` drift realizations of `nominal`. Realizations are independent and
/// seeded by index, so the result does not depend on scheduling.
pub fn margin_study(
    nominal: &Trajectory,
    model: &ErrorModel,
    n: usize,
    seed: u64,
    opts: &StudyOptions,
) -> Result<MarginStats, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    let bbox = match opts.bbox {
        Some(b) => b,
        None => reference_bbox(std::slice::from_ref(nominal))?,
    };
    let per: Vec<(f64, Vec<BandStats>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let traj = corrupt_trajectory(nominal, model, realization_seed(seed, i));
            let margin = min_safety_margin(&traj, &bbox, opts.metric);
            let bands = opts.thresholds.iter().map(|&t| band_stats(&traj, &bbox, t, opts.metric)).collect();
            (margin, bands)
        })
        .collect();
    let (margins, bands): (Vec<f64>, Vec<Vec<BandStats>>) = per.into_iter().unzip();

    let sorted_margins = sorted(margins.clone());
    let summaries = opts
        .thresholds
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let times = sorted(bands.iter().map(|b| b[k].time_outside).collect());
            let exceeding: Vec<f64> =
                margins.iter().zip(&bands).filter(|(m, _)| **m > t).map(|(_, b)| b[k].crossings as f64).collect();
            let exceeding = sorted(exceeding);
            let within = margins.iter().filter(|&&m| m <= t).count() as f64 / n as f64;
            BandSummary {
                threshold: t,
                fraction_within: within,
                time_outside_median: quantile_sorted(&times, 0.5),
                time_outside_p95: quantile_sorted(&times, 0.95),
                crossings_median: if exceeding.is_empty() { 0.0 } else { quantile_sorted(&exceeding, 0.5) },
                crossings_p95: if exceeding.is_empty() { 0.0 } else { quantile_sorted(&exceeding, 0.95) },
            }
        })
        .collect();

    Ok(MarginStats {
        thresholds: opts.thresholds.clone(),
        bbox,
        metric: opts.metric,
        margin_median: quantile_sorted(&sorted_margins, 0.5),
        margin_p95: quantile_sorted(&sorted_margins, 0.95),
        margins,
        bands,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn short_square() -> Trajectory {
        SquareLaps { duration: 30.0, ..SquareLaps::default() }.generate()
    }

    #[test]
    fn fit_zero_error() {
        let w = PosePairWindow { truth: Pose2::new(1.0, 2.0, 0.3), odometry: Pose2::new(1.0, 2.0, 0.3), length: 10.0 };
        let m = fit_error_model(&[w, w]).unwrap();
        assert_eq!((m.sigma_x, m.sigma_y, m.sigma_yaw), (0.0, 0.0, 0.0));
    }

    #[test]
    fn fit_needs_two_windows() {
        let w = PosePairWindow { truth: Pose2::default(), odometry: Pose2::default(), length: 10.0 };
        assert_eq!(fit_error_model(&[w]), Err(AnalysisError::InsufficientData(1)));
        let bad = PosePairWindow { length: 0.0, ..w };
        assert_eq!(fit_error_model(&[w, bad]), Err(AnalysisError::InvalidWindow(0.0)));
    }

    #[test]
    fn fit_recovers_injected_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let windows: Vec<_> = (0..10_000)
            .map(|_| {
                let truth = Pose2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 0.0);
                let z: f64 = rng.sample(StandardNormal);
                PosePairWindow { truth, odometry: Pose2::new(truth.x + 0.2 * z, truth.y, 0.0), length: 10.0 }
            })
            .collect();
        let m = fit_error_model(&windows).unwrap();
        let expected = 0.2 / 10f64.sqrt();
        assert!((m.sigma_x - expected).abs() / expected < 0.05, "{}", m.sigma_x);
    }

    #[test]
    fn square_laps_shape() {
        let t = SquareLaps { duration: 24.0, speed: 1.0, dt: 0.5, ..SquareLaps::default() }.generate();
        assert_eq!(t.poses.len(), 49);
        assert_eq!(t.poses[0].position(), Vec2::new(-3.0, -3.0));
        assert_eq!(t.poses[12].position(), Vec2::new(3.0, -3.0));
        assert_eq!(t.poses[24].position(), Vec2::new(3.0, 3.0));
        let bbox = reference_bbox(&[t]).unwrap();
        assert_eq!(bbox, Aabb::new(Vec2::new(-3.0, -3.0), Vec2::new(3.0, 3.0)));
        // second lap runs clockwise: first leg goes up the x = -3 side
        let t = SquareLaps { duration: 30.0, speed: 1.0, dt: 0.5, ..SquareLaps::default() }.generate();
        assert_eq!(t.poses[50].position(), Vec2::new(-3.0, -2.0));
    }

    #[test]
    fn zero_model_leaves_trajectory_untouched() {
        let nominal = short_square();
        assert_eq!(corrupt_trajectory(&nominal, &ErrorModel::zero(), 3), nominal);
    }

    #[test]
    fn corruption_is_seeded() {
        let nominal = short_square();
        let m = ErrorModel::default();
        assert_eq!(corrupt_trajectory(&nominal, &m, 1), corrupt_trajectory(&nominal, &m, 1));
        assert_ne!(corrupt_trajectory(&nominal, &m, 1), corrupt_trajectory(&nominal, &m, 2));
    }

    #[test]
    fn position_spread_follows_diffusion() {
        let m = ErrorModel { sigma_x: 0.05, sigma_y: 0.05, ..ErrorModel::zero() };
        let spread = |secs: f64| {
            let nominal = SquareLaps { duration: secs, dt: 0.05, ..SquareLaps::default() }.generate();
            let end = *nominal.poses.last().unwrap();
            let n = 2000;
            let ms = (0..n)
                .map(|i| {
                    let c = corrupt_trajectory(&nominal, &m, i);
                    let e = *c.poses.last().unwrap();
                    (e.x - end.x).powi(2) + (e.y - end.y).powi(2)
                })
                .sum::<f64>()
                / n as f64;
            ms.sqrt()
        };
        let ratio = spread(100.0) / spread(25.0);
        assert!((ratio - 2.0).abs() / 2.0 < 0.15, "ratio {ratio}");
    }

    #[test]
    fn bbox_cases() {
        let a = Trajectory { dt: 1.0, poses: vec![Pose2::new(0.0, 0.0, 0.0), Pose2::new(1.0, 1.0, 0.0)] };
        let b = Trajectory { dt: 1.0, poses: vec![Pose2::new(5.0, -2.0, 0.0)] };
        assert_eq!(reference_bbox(&[a, b]).unwrap(), Aabb::new(Vec2::new(0.0, -2.0), Vec2::new(5.0, 1.0)));
        assert_eq!(reference_bbox(&[]), Err(AnalysisError::EmptyInput));
    }

    #[test]
    fn margin_examples() {
        let bbox = Aabb::square(Vec2::ZERO, 6.0);
        let inside = Trajectory { dt: 1.0, poses: vec![Pose2::new(1.0, 1.0, 0.0), Pose2::new(-3.0, 3.0, 0.0)] };
        assert_eq!(min_safety_margin(&inside, &bbox, Metric::Linf), 0.0);
        let out = Trajectory { dt: 1.0, poses: vec![Pose2::new(4.3, 0.0, 0.0)] };
        assert!((min_safety_margin(&out, &bbox, Metric::Linf) - 1.3).abs() < 1e-12);
        let corner = Trajectory { dt: 1.0, poses: vec![Pose2::new(6.0, 7.0, 0.0)] };
        assert_eq!(min_safety_margin(&corner, &bbox, Metric::Linf), 4.0);
        assert_eq!(min_safety_margin(&corner, &bbox, Metric::L2), 5.0);
    }

    proptest! {
        #[test]
        fn margin_matches_scan(pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..100)) {
            let bbox = Aabb::square(Vec2::ZERO, 6.0);
            let traj = Trajectory { dt: 0.1, poses: pts.iter().map(|&(x, y)| Pose2::new(x, y, 0.0)).collect() };
            let mut expected = 0.0f64;
            for &(x, y) in &pts {
                let dx = if x > 3.0 { x - 3.0 } else if x < -3.0 { -3.0 - x } else { 0.0 };
                let dy = if y > 3.0 { y - 3.0 } else if y < -3.0 { -3.0 - y } else { 0.0 };
                expected = expected.max(dx.max(dy));
            }
            prop_assert_eq!(min_safety_margin(&traj, &bbox, Metric::Linf), expected);
        }

        #[test]
        fn band_invariants(pts in proptest::collection::vec((-8.0f64..8.0, -8.0f64..8.0), 1..80)) {
            let bbox = Aabb::square(Vec2::ZERO, 6.0);
            let mut poses: Vec<Pose2> = vec![Pose2::default()];
            poses.extend(pts.iter().map(|&(x, y)| Pose2::new(x, y, 0.0)));
            let traj = Trajectory { dt: 0.1, poses };
            let b1 = band_stats(&traj, &bbox, 1.0, Metric::Linf);
            let b2 = band_stats(&traj, &bbox, 2.0, Metric::Linf);
            prop_assert!(b2.time_outside <= b1.time_outside);
            let end = *traj.poses.last().unwrap();
            if exterior_distance(end.position(), &bbox, Metric::Linf) <= 1.0 {
                prop_assert_eq!(b1.crossings % 2, 0);
            }
        }
    }

    #[test]
    fn zero_model_study() {
        let nominal = short_square();
        let s = margin_study(&nominal, &ErrorModel::zero(), 16, 5, &StudyOptions::default()).unwrap();
        assert!(s.margins.iter().all(|&m| m == 0.0));
        assert_eq!(s.fraction_within(1.0), 1.0);
        assert_eq!(s.summaries[0].time_outside_p95, 0.0);
    }

    #[test]
    fn single_realization_study() {
        let nominal = short_square();
        let m = ErrorModel::default().scaled(4.0);
        let s = margin_study(&nominal, &m, 1, 99, &StudyOptions::default()).unwrap();
        let traj = corrupt_trajectory(&nominal, &m, realization_seed(99, 0));
        assert_eq!(s.margins, vec![min_safety_margin(&traj, &s.bbox, Metric::Linf)]);
    }

    #[test]
    fn study_is_schedule_independent() {
        let nominal = short_square();
        let m = ErrorModel::default();
        let a = margin_study(&nominal, &m, 64, 7, &StudyOptions::default()).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| margin_study(&nominal, &m, 64, 7, &StudyOptions::default()).unwrap());
        assert_eq!(a, b);
        assert!(a.fraction_within(2.0) >= a.fraction_within(1.0));
    }
}
