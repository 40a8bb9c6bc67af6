//! Closed-loop episode engine.
//!
//! A fixed-step loop advances unicycle kinematics at the control rate, runs
//! perception and the policy at the (slower) perception rate, relocates one
//! movable obstacle every `obstacle_move_period`, and integrates dead-reckoning
//! drift on the onboard estimate. Everything downstream of the seed is
//! deterministic.
//!
//! Probabilities travel the same path they do on the drone: graded sector
//! probabilities are quantized to 8 bits, framed, decoded, converted back to
//! the unit interval and low-pass filtered before thresholding.

use crate::arena::{gate_pass, in_mission_area, move_dynamic_obstacle, Arena, ArenaConfig};
use crate::geom::{wrap_angle, Pose2, Vec2};
use crate::perception::{
    decode_frame, dequantize, encode_frame, perception_noise, quantize, sector_soft_probs, SectorProbs, SensorGeometry,
};
use crate::policy::{policy_step, wp_update, Mode, PolicyParams, PolicyState, Setpoint};
use crate::stats::rng_for;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const STREAM_POLICY: u64 = 1;
const STREAM_DRIFT: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_OBSTACLES: u64 = 4;

#[derive(Debug, Error)]
pub enum VehicleError {
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error("wire path: {0}")]
    Frame(#[from] crate::perception::FrameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrueState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// Current forward speed, m/s.
    pub v: f64,
}

impl TrueState {
    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.yaw)
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Onboard pose estimate.
pub type EstState = Pose2;

/// Gaussian dead-reckoning drift. Sigmas are per √second so that the variance
/// accumulated over one second equals `sigma²`; biases are per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorModel {
    /// m/√s
    pub sigma_x: f64,
    /// m/√s
    pub sigma_y: f64,
    /// rad/√s
    pub sigma_yaw: f64,
    pub bias_x: f64,
    pub bias_y: f64,
    pub bias_yaw: f64,
}

impl Default for ErrorModel {
    /// Illustrative drift levels for an optical-flow nano-drone (5 cm and 1°
    /// per √s); not fitted to any flight data.
    fn default() -> Self {
        ErrorModel {
            sigma_x: 0.05,
            sigma_y: 0.05,
            sigma_yaw: 1f64.to_radians(),
            bias_x: 0.0,
            bias_y: 0.0,
            bias_yaw: 0.0,
        }
    }
}

impl ErrorModel {
    pub fn zero() -> Self {
        ErrorModel { sigma_x: 0.0, sigma_y: 0.0, sigma_yaw: 0.0, bias_x: 0.0, bias_y: 0.0, bias_yaw: 0.0 }
    }

    pub fn scaled(&self, k: f64) -> Self {
        ErrorModel { sigma_x: self.sigma_x * k, sigma_y: self.sigma_y * k, sigma_yaw: self.sigma_yaw * k, ..*self }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma_x >= 0.0 && self.sigma_y >= 0.0 && self.sigma_yaw >= 0.0) {
            return Err("error model sigmas must be >= 0".into());
        }
        if ![self.bias_x, self.bias_y, self.bias_yaw].iter().all(|b| b.is_finite()) {
            return Err("error model biases must be finite".into());
        }
        Ok(())
    }
}

/// Accumulated estimate error, kept as an offset from the truth so that a
/// zero model reproduces the truth bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Drift {
    pub ex: f64,
    pub ey: f64,
    pub eyaw: f64,
}

impl Drift {
    pub fn estimate(&self, truth: Pose2) -> EstState {
        Pose2::new(truth.x + self.ex, truth.y + self.ey, wrap_angle(truth.yaw + self.eyaw))
    }
}

/// Propagates drift over one step. The estimate integrates the true
/// displacement rotated by its current yaw error, plus Gaussian noise of
/// variance `sigma²·dt` per axis. Always draws three normals so that streams
/// stay aligned across models.
pub fn estimate_step<R: Rng + ?Sized>(
    drift: &Drift,
    truth_prev: Pose2,
    truth_next: Pose2,
    model: &ErrorModel,
    dt: f64,
    rng: &mut R,
) -> Drift {
    let zx: f64 = rng.sample(StandardNormal);
    let zy: f64 = rng.sample(StandardNormal);
    let zyaw: f64 = rng.sample(StandardNormal);
    let sq = dt.sqrt();
    let delta = truth_next.position() - truth_prev.position();
    let (s, c) = drift.eyaw.sin_cos();
    let rot_x = (c * delta.x - s * delta.y) - delta.x;
    let rot_y = (s * delta.x + c * delta.y) - delta.y;
    Drift {
        ex: drift.ex + rot_x + model.sigma_x * sq * zx + model.bias_x * dt,
        ey: drift.ey + rot_y + model.sigma_y * sq * zy + model.bias_y * dt,
        eyaw: wrap_angle(drift.eyaw + model.sigma_yaw * sq * zyaw + model.bias_yaw * dt),
    }
}

/// Unicycle kinematics with a first-order speed lag of time constant `tau_v`.
pub fn low_level_step(s: &TrueState, sp: &Setpoint, dt: f64, tau_v: f64) -> TrueState {
    let gain = if tau_v > 0.0 { (dt / tau_v).min(1.0) } else { 1.0 };
    let v = s.v + (sp.forward_speed - s.v) * gain;
    let yaw = wrap_angle(s.yaw + sp.yaw_rate * dt);
    TrueState { x: s.x + v * yaw.cos() * dt, y: s.y + v * yaw.sin() * dt, yaw, v }
}

pub fn low_pass(prev: SectorProbs, new: SectorProbs, alpha: f64) -> SectorProbs {
    SectorProbs::new(
        prev.left + alpha * (new.left - prev.left),
        prev.center + alpha * (new.center - prev.center),
        prev.right + alpha * (new.right - prev.right),
    )
}

/// Raw probabilities through the quantize → frame → decode → dequantize path.
pub fn wire_roundtrip(p: SectorProbs) -> Result<SectorProbs, VehicleError> {
    Ok(dequantize(decode_frame(&encode_frame(quantize(p)))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopTimings {
    pub perception_period: f64,
    pub control_period: f64,
    pub episode_length: f64,
    pub obstacle_move_period: f64,
}

impl Default for LoopTimings {
    fn default() -> Self {
        LoopTimings {
            perception_period: 1.0 / 30.0,
            control_period: 1.0 / 100.0,
            episode_length: 300.0,
            obstacle_move_period: 30.0,
        }
    }
}

impl LoopTimings {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.control_period > 0.0) || !(self.perception_period >= self.control_period) {
            return Err("need 0 < control_period <= perception_period".into());
        }
        if !(self.episode_length > 0.0) || !(self.obstacle_move_period > 0.0) {
            return Err("episode_length and obstacle_move_period must be > 0".into());
        }
        Ok(())
    }
}

/// Everything an episode needs besides the arena layout and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    pub policy: PolicyParams,
    pub error_model: ErrorModel,
    pub timings: LoopTimings,
    pub sensor: SensorGeometry,
    /// Std-dev of Gaussian noise on raw probabilities; 0 for the ideal oracle.
    pub perception_noise: f64,
    pub low_pass_alpha: f64,
    /// Speed-lag time constant, s.
    pub tau_v: f64,
    /// Contact radius of the drone, m.
    pub drone_radius: f64,
    /// Time the drone stays grounded after a contact, s.
    pub crash_penalty: f64,
    pub start: Pose2,
    pub dynamic_obstacles: bool,
    /// Send probabilities through the 8-bit wire path.
    pub wire_path: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            policy: PolicyParams::default(),
            error_model: ErrorModel::zero(),
            timings: LoopTimings::default(),
            sensor: SensorGeometry::default(),
            perception_noise: 0.0,
            low_pass_alpha: 0.3,
            tau_v: 0.3,
            drone_radius: 0.05,
            crash_penalty: 10.0,
            start: Pose2::new(-3.0, -3.0, 0.0),
            dynamic_obstacles: true,
            wire_path: true,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), VehicleError> {
        self.policy.validate().map_err(VehicleError::Config)?;
        self.error_model.validate().map_err(VehicleError::Config)?;
        self.timings.validate().map_err(VehicleError::Config)?;
        self.sensor.validate().map_err(VehicleError::Config)?;
        if !(self.low_pass_alpha > 0.0 && self.low_pass_alpha <= 1.0) {
            return Err(VehicleError::Config(format!("low_pass_alpha must be in (0, 1], got {}", self.low_pass_alpha)));
        }
        if !(self.perception_noise >= 0.0) || !(self.tau_v >= 0.0) || !(self.drone_radius >= 0.0) {
            return Err(VehicleError::Config("perception_noise, tau_v and drone_radius must be >= 0".into()));
        }
        if !(self.crash_penalty >= 0.0) {
            return Err(VehicleError::Config("crash_penalty must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    GatePass,
    ObstacleMoved,
    AreaExit,
    AreaEnter,
    WallContact,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::GatePass => "GATE_PASS",
            EventKind::ObstacleMoved => "OBSTACLE_MOVED",
            EventKind::AreaExit => "AREA_EXIT",
            EventKind::AreaEnter => "AREA_ENTER",
            EventKind::WallContact => "WALL_CONTACT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    /// Index into `RunRecord::samples` of the sample the event belongs to.
    pub sample: usize,
    pub kind: EventKind,
    /// Gate or obstacle index where relevant.
    pub index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub truth: TrueState,
    pub est: EstState,
    /// Filtered probabilities in force at this step.
    pub probs: SectorProbs,
    pub setpoint: Setpoint,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub distance_in_area: f64,
    pub total_distance: f64,
    pub gates: usize,
    pub exits: usize,
    pub crashes: usize,
    pub obstacle_moves: usize,
    pub time_outside: f64,
    pub time_outside_fraction: f64,
    pub laps: u32,
    pub waypoints_reached: u32,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config: EpisodeConfig,
    pub arena: ArenaConfig,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub summary: RunSummary,
}

impl RunRecord {
    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.samples.iter().map(|s| s.truth.position())
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// One perception cycle: raw → optional wire path → low-pass.
pub fn filter_probs(prev: SectorProbs, raw: SectorProbs, alpha: f64, wire: bool) -> Result<SectorProbs, VehicleError> {
    let received = if wire { wire_roundtrip(raw)? } else { raw };
    Ok(low_pass(prev, received, alpha))
}

/// Simulates one episode on `arena` from `cfg.start`.
pub fn run_episode(arena: &Arena, cfg: &EpisodeConfig, seed: u64) -> Result<RunRecord, VehicleError> {
    cfg.validate()?;
    let tm = &cfg.timings;
    let dt = tm.control_period;
    let n_steps = (tm.episode_length / dt).round() as usize;
    let eps = dt * 1e-6;
    let params = &cfg.policy;
    let ground_aware = params.kind.ground_aware();

    let mut policy_rng = rng_for(seed, &[STREAM_POLICY]);
    let mut drift_rng = rng_for(seed, &[STREAM_DRIFT]);
    let mut noise_rng = rng_for(seed, &[STREAM_NOISE]);
    let mut obstacle_rng = rng_for(seed, &[STREAM_OBSTACLES]);

    let mut world = arena.clone();
    let mut truth = TrueState { x: cfg.start.x, y: cfg.start.y, yaw: wrap_angle(cfg.start.yaw), v: 0.0 };
    let mut drift = Drift::default();
    let mut est = drift.estimate(truth.pose());
    let mut filtered = SectorProbs::ZERO;
    let mut state = PolicyState::default();
    let mut setpoint = Setpoint::STOP;
    let mut waypoints_reached = 0u32;
    let mut grounded_until: Option<f64> = None;
    let mut inside = in_mission_area(&world, truth.position());

    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut events = Vec::new();
    samples.push(Sample { t: 0.0, truth, est, probs: filtered, setpoint, mode: state.mode });

    let mut perception_tick = 0u64;
    let mut move_tick = 1u64;

    for k in 0..n_steps {
        let t = k as f64 * dt;

        if cfg.dynamic_obstacles && t + eps >= move_tick as f64 * tm.obstacle_move_period {
            move_tick += 1;
            if let Ok((next, idx)) = move_dynamic_obstacle(&world, truth.position(), &mut obstacle_rng) {
                world = next;
                events.push(Event { t, sample: k, kind: EventKind::ObstacleMoved, index: Some(idx) });
            }
        }

        if let Some(until) = grounded_until {
            if t + eps >= until {
                grounded_until = None;
                state.start_spin(est.yaw, params, &mut policy_rng);
            }
        }

        if t + eps >= perception_tick as f64 * tm.perception_period {
            perception_tick += 1;
            let mut raw = sector_soft_probs(&world, truth.pose(), &cfg.sensor, ground_aware);
            raw = perception_noise(raw, cfg.perception_noise, &mut noise_rng);
            filtered = filter_probs(filtered, raw, cfg.low_pass_alpha, cfg.wire_path)?;
            if grounded_until.is_some() {
                setpoint = Setpoint::STOP;
            } else {
                if params.kind == crate::policy::PolicyKind::Policy2 {
                    let before = state.wp_index;
                    state = wp_update(&state, est, params, &world.waypoints);
                    if state.wp_index != before {
                        waypoints_reached += 1;
                    }
                }
                let (sp, next) = policy_step(&state, filtered, est, params, &world.waypoints, &mut policy_rng);
                setpoint = sp;
                state = next;
            }
        }

        let prev = truth;
        let mut next = low_level_step(&truth, &setpoint, dt, cfg.tau_v);
        if world.contact(next.position(), cfg.drone_radius).is_some() {
            next = TrueState { v: 0.0, ..prev };
            setpoint = Setpoint::STOP;
            grounded_until = Some(t + dt + cfg.crash_penalty);
            events.push(Event { t: t + dt, sample: k + 1, kind: EventKind::WallContact, index: None });
        }
        truth = next;
        drift = estimate_step(&drift, prev.pose(), truth.pose(), &cfg.error_model, dt, &mut drift_rng);
        est = drift.estimate(truth.pose());

        for (gi, gate) in world.gates.iter().enumerate() {
            if gate_pass(gate, prev.position(), truth.position()) {
                events.push(Event { t: t + dt, sample: k + 1, kind: EventKind::GatePass, index: Some(gi) });
            }
        }
        let now_inside = in_mission_area(&world, truth.position());
        if now_inside != inside {
            let kind = if now_inside { EventKind::AreaEnter } else { EventKind::AreaExit };
            events.push(Event { t: t + dt, sample: k + 1, kind, index: None });
            inside = now_inside;
        }

        samples.push(Sample { t: (k + 1) as f64 * dt, truth, est, probs: filtered, setpoint, mode: state.mode });
    }

    let mut record = RunRecord {
        seed,
        config: cfg.clone(),
        arena: arena.to_config(),
        samples,
        events,
        summary: RunSummary::default(),
    };
    record.summary = summarize(&record, arena, state.laps, waypoints_reached);
    Ok(record)
}

fn summarize(rec: &RunRecord, arena: &Arena, laps: u32, waypoints_reached: u32) -> RunSummary {
    let dt = rec.config.timings.control_period;
    let outside = rec.samples.iter().skip(1).filter(|s| !in_mission_area(arena, s.truth.position())).count();
    let steps = rec.samples.len().saturating_sub(1);
    let total_distance = rec.samples.windows(2).map(|w| w[0].truth.position().dist(w[1].truth.position())).sum();
    RunSummary {
        distance_in_area: crate::scoring::in_area_distance(rec, arena),
        total_distance,
        gates: rec.count(EventKind::GatePass),
        exits: rec.count(EventKind::AreaExit),
        crashes: rec.count(EventKind::WallContact),
        obstacle_moves: rec.count(EventKind::ObstacleMoved),
        time_outside: outside as f64 * dt,
        time_outside_fraction: if steps == 0 { 0.0 } else { outside as f64 / steps as f64 },
        laps,
        waypoints_reached,
        duration: steps as f64 * dt,
    }
}
