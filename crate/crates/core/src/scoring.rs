//! Competition score and in-area distance accounting.
//!
//! `score = (distance + 10 · gates) · α_env · α_comp`, with `α_env ∈ {1, 5, 10}`
//! (static gates / static obstacles / dynamic obstacles) and `α_comp ∈ {1, 5}`
//! (off-board / onboard computation).

use crate::arena::{gate_pass, Arena};
use crate::geom::Vec2;
use crate::vehicle::RunRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance credited per gate pass, meters.
pub const GATE_BONUS: f64 = 10.0;
pub const ENV_MULTIPLIERS: [u32; 3] = [1, 5, 10];
pub const COMP_MULTIPLIERS: [u32; 2] = [1, 5];

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("invalid multiplier: alpha_env {env} must be one of 1/5/10, alpha_comp {comp} one of 1/5")]
    InvalidMultiplier { env: u32, comp: u32 },
    #[error("distance must be finite and >= 0, got {0}")]
    InvalidDistance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreInput {
    pub distance: f64,
    pub gates: u32,
    pub alpha_env: u32,
    pub alpha_comp: u32,
}

pub fn score(s: &ScoreInput) -> Result<f64, ScoreError> {
    if !ENV_MULTIPLIERS.contains(&s.alpha_env) || !COMP_MULTIPLIERS.contains(&s.alpha_comp) {
        return Err(ScoreError::InvalidMultiplier { env: s.alpha_env, comp: s.alpha_comp });
    }
    if !(s.distance >= 0.0) || !s.distance.is_finite() {
        return Err(ScoreError::InvalidDistance(s.distance));
    }
    Ok((s.distance + GATE_BONUS * s.gates as f64) * s.alpha_env as f64 * s.alpha_comp as f64)
}

/// Length of the polyline's portion inside the mission area. Segments crossing
/// the boundary are clipped.
pub fn in_area_path_length(points: impl IntoIterator<Item = Vec2>, arena: &Arena) -> f64 {
    let mut it = points.into_iter();
    let Some(mut prev) = it.next() else { return 0.0 };
    let mut total = 0.0;
    for p in it {
        if let Some((t0, t1)) = arena.mission_area.clip_segment(prev, p) {
            total += (t1 - t0) * prev.dist(p);
        }
        prev = p;
    }
    total
}

pub fn in_area_distance(rec: &RunRecord, arena: &Arena) -> f64 {
    in_area_path_length(rec.positions(), arena)
}

/// Gate-opening crossings along a polyline; each crossing counts, either direction.
pub fn count_gate_crossings(points: impl IntoIterator<Item = Vec2>, arena: &Arena) -> usize {
    let mut it = points.into_iter();
    let Some(mut prev) = it.next() else { return 0 };
    let mut n = 0;
    for p in it {
        n += arena.gates.iter().filter(|g| gate_pass(g, prev, p)).count();
        prev = p;
    }
    n
}

/// Gate passes recorded by an episode.
pub fn count_gate_passes(rec: &RunRecord, arena: &Arena) -> usize {
    count_gate_crossings(rec.positions(), arena)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub distance: f64,
    pub gates: u32,
    pub gate_bonus: f64,
    pub alpha_env: u32,
    pub alpha_comp: u32,
    pub score: f64,
}

pub fn breakdown(s: &ScoreInput) -> Result<ScoreBreakdown, ScoreError> {
    Ok(ScoreBreakdown {
        distance: s.distance,
        gates: s.gates,
        gate_bonus: GATE_BONUS * s.gates as f64,
        alpha_env: s.alpha_env,
        alpha_comp: s.alpha_comp,
        score: score(s)?,
    })
}
