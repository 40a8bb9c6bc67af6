//! Navigation policies as a pure state machine: filtered sector probabilities
//! and the estimated pose in, a `{forward speed, yaw rate}` setpoint out.
//!
//! Yaw is positive counterclockwise. A blocked left sector turns the drone
//! right (negative yaw rate) and vice versa.

use crate::geom::{wrap_angle, Pose2, Vec2};
use crate::perception::SectorProbs;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PolicyKind {
    Baseline,
    Policy1,
    Policy2,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Baseline, PolicyKind::Policy1, PolicyKind::Policy2];

    /// Policies 1 and 2 treat the ground outside the mission area as an obstacle.
    pub fn ground_aware(self) -> bool {
        !matches!(self, PolicyKind::Baseline)
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Baseline => "baseline",
            PolicyKind::Policy1 => "policy1",
            PolicyKind::Policy2 => "policy2",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(PolicyKind::Baseline),
            "policy1" | "policy_1" | "p1" => Ok(PolicyKind::Policy1),
            "policy2" | "policy_2" | "p2" => Ok(PolicyKind::Policy2),
            _ => Err(format!("unknown policy kind {s:?}")),
        }
    }
}

/// Policy tuning. Angular rates are in degrees per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyParams {
    pub kind: PolicyKind,
    /// m/s
    pub v_target: f64,
    pub threshold: f64,
    pub turn_rate_deg: f64,
    /// Waypoint capture radius, meters.
    pub wp_radius: f64,
    pub spin_rate_deg: f64,
    /// Heading gain in waypoint mode, 1/s.
    pub k_yaw: f64,
    /// Exponent on `(1 − p_center)` in the speed law.
    pub speed_exponent: f64,
    pub spin_exit_tol_deg: f64,
    /// Width of the random extension added to the 180° spin.
    pub spin_jitter_deg: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            kind: PolicyKind::Policy2,
            v_target: 1.5,
            threshold: 0.7,
            turn_rate_deg: 90.0,
            wp_radius: 0.5,
            spin_rate_deg: 90.0,
            k_yaw: 2.0,
            speed_exponent: 1.0,
            spin_exit_tol_deg: 5.0,
            spin_jitter_deg: 30.0,
        }
    }
}

impl PolicyParams {
    pub fn with_kind(kind: PolicyKind, v_target: f64) -> Self {
        PolicyParams { kind, v_target, ..PolicyParams::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.v_target > 0.0) {
            return Err(format!("v_target must be > 0, got {}", self.v_target));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(format!("threshold must be in (0, 1), got {}", self.threshold));
        }
        if !(self.wp_radius > 0.0) {
            return Err(format!("wp_radius must be > 0, got {}", self.wp_radius));
        }
        if !(self.turn_rate_deg > 0.0 && self.spin_rate_deg > 0.0) {
            return Err("turn and spin rates must be > 0".into());
        }
        if !(self.speed_exponent > 0.0) || !(self.k_yaw >= 0.0) || !(self.spin_exit_tol_deg > 0.0) {
            return Err("speed_exponent and spin_exit_tol_deg must be > 0, k_yaw >= 0".into());
        }
        if !(0.0..180.0).contains(&self.spin_jitter_deg) {
            return Err(format!("spin_jitter_deg must be in [0, 180), got {}", self.spin_jitter_deg));
        }
        Ok(())
    }

    pub fn turn_rate(&self) -> f64 {
        self.turn_rate_deg.to_radians()
    }

    pub fn spin_rate(&self) -> f64 {
        self.spin_rate_deg.to_radians()
    }

    /// Forward speed for a given center probability.
    pub fn speed_for(&self, p_center: f64) -> f64 {
        self.v_target * (1.0 - p_center.clamp(0.0, 1.0)).powf(self.speed_exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Cruise,
    Avoid,
    Spin,
    WpNav,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Cruise => "CRUISE",
            Mode::Avoid => "AVOID",
            Mode::Spin => "SPIN",
            Mode::WpNav => "WP_NAV",
        }
    }
}

/// Cyclic waypoint order. Waypoints are stored counterclockwise, so `Ccw`
/// walks indices upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WpOrder {
    Cw,
    Ccw,
}

impl WpOrder {
    pub fn flipped(self) -> WpOrder {
        match self {
            WpOrder::Cw => WpOrder::Ccw,
            WpOrder::Ccw => WpOrder::Cw,
        }
    }

    pub fn next(self, index: usize) -> usize {
        match self {
            WpOrder::Ccw => (index + 1) % 4,
            WpOrder::Cw => (index + 3) % 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub mode: Mode,
    /// Target heading while spinning.
    pub spin_target_yaw: f64,
    /// +1 counterclockwise, −1 clockwise.
    pub spin_direction: f64,
    pub wp_index: usize,
    pub wp_order: WpOrder,
    pub visited: [bool; 4],
    pub laps: u32,
    pub order_flips: u32,
}

impl Default for PolicyState {
    fn default() -> Self {
        PolicyState {
            mode: Mode::Cruise,
            spin_target_yaw: 0.0,
            spin_direction: 1.0,
            wp_index: 0,
            wp_order: WpOrder::Ccw,
            visited: [false; 4],
            laps: 0,
            order_flips: 0,
        }
    }
}

impl PolicyState {
    /// Forces a spin from `yaw`, as after a contact.
    pub fn start_spin<R: Rng + ?Sized>(&mut self, yaw: f64, params: &PolicyParams, rng: &mut R) {
        let (sign, u) = spin_draw(params, rng);
        self.mode = Mode::Spin;
        self.spin_direction = sign;
        self.spin_target_yaw = spin_target_from(yaw, sign, u);
        if params.kind == PolicyKind::Policy2 {
            self.wp_order = self.wp_order.flipped();
            self.wp_index = self.wp_order.next(self.wp_index);
            self.order_flips += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Setpoint {
    /// m/s, non-negative.
    pub forward_speed: f64,
    /// rad/s, counterclockwise positive.
    pub yaw_rate: f64,
}

impl Setpoint {
    pub const STOP: Setpoint = Setpoint { forward_speed: 0.0, yaw_rate: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Center,
    Right,
}

/// Direction with the lowest probability; ties prefer center, then left.
pub fn select_direction(p: SectorProbs) -> Direction {
    let mut best = (Direction::Center, p.center);
    for (d, v) in [(Direction::Left, p.left), (Direction::Right, p.right)] {
        if v < best.1 {
            best = (d, v);
        }
    }
    best.0
}

/// Draws the spin sign (uniform ±1) and the extra angle `U[0, jitter]` in radians.
pub fn spin_draw<R: Rng + ?Sized>(params: &PolicyParams, rng: &mut R) -> (f64, f64) {
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let u = rng.random_range(0.0..=params.spin_jitter_deg.to_radians());
    (sign, u)
}

/// `entry_yaw + sign·(π + extra)`, wrapped.
pub fn spin_target_from(entry_yaw: f64, sign: f64, extra: f64) -> f64 {
    wrap_angle(entry_yaw + sign * (PI + extra))
}

pub fn spin_target<R: Rng + ?Sized>(entry_yaw: f64, params: &PolicyParams, rng: &mut R) -> f64 {
    let (sign, u) = spin_draw(params, rng);
    spin_target_from(entry_yaw, sign, u)
}

/// Marks the current waypoint visited and advances once the estimate is
/// within `wp_radius` of it.
pub fn wp_update(state: &PolicyState, est: Pose2, params: &PolicyParams, waypoints: &[Vec2; 4]) -> PolicyState {
    let mut next = *state;
    if est.position().dist(waypoints[state.wp_index]) <= params.wp_radius {
        next.visited[state.wp_index] = true;
        if next.visited.iter().all(|&v| v) {
            next.laps += 1;
            next.visited = [false; 4];
        }
        next.wp_index = state.wp_order.next(state.wp_index);
    }
    next
}

/// One decision step.
pub fn policy_step<R: Rng + ?Sized>(
    state: &PolicyState,
    probs: SectorProbs,
    est: Pose2,
    params: &PolicyParams,
    waypoints: &[Vec2; 4],
    rng: &mut R,
) -> (Setpoint, PolicyState) {
    let mut next = *state;
    let spin = |s: &PolicyState| Setpoint { forward_speed: 0.0, yaw_rate: s.spin_direction * params.spin_rate() };

    if state.mode == Mode::Spin {
        let err = wrap_angle(state.spin_target_yaw - est.yaw);
        if err.abs() >= params.spin_exit_tol_deg.to_radians() {
            return (spin(state), next);
        }
    }

    let th = params.threshold;
    let (l, c, r) = (probs.left >= th, probs.center >= th, probs.right >= th);
    let speed = params.speed_for(probs.center);
    let turn = params.turn_rate();

    if l && c && r {
        next.start_spin(est.yaw, params, rng);
        return (spin(&next), next);
    }

    let yaw_rate = match (l, c, r) {
        (true, _, false) => Some(-turn),
        (false, _, true) => Some(turn),
        (false, true, false) => {
            Some(match select_direction(SectorProbs::new(probs.left, f64::INFINITY, probs.right)) {
                Direction::Right => -turn,
                _ => turn,
            })
        }
        (true, false, true) => Some(0.0),
        _ => None,
    };

    if let Some(yaw_rate) = yaw_rate {
        next.mode = Mode::Avoid;
        return (Setpoint { forward_speed: speed, yaw_rate }, next);
    }

    match params.kind {
        PolicyKind::Baseline | PolicyKind::Policy1 => {
            next.mode = Mode::Cruise;
            (Setpoint { forward_speed: speed, yaw_rate: 0.0 }, next)
        }
        PolicyKind::Policy2 => {
            next.mode = Mode::WpNav;
            let target = waypoints[next.wp_index];
            let bearing = (target - est.position()).angle();
            let yaw_rate = (params.k_yaw * wrap_angle(bearing - est.yaw)).clamp(-turn, turn);
            (Setpoint { forward_speed: speed, yaw_rate }, next)
        }
    }
}
