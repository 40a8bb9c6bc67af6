//! C ABI for the `nanorace` simulator.
//!
//! Conventions:
//! - Every fallible function returns an [`NrStatus`]; results go through out-pointers.
//! - Arenas and policies are opaque handles, created by `nr_*_new*` and released by
//!   the matching `nr_*_free`. Freeing `NULL` is a no-op.
//! - After a non-`NR_STATUS_OK` status, `nr_last_error_message` describes the failure
//!   on the calling thread.
//! - Panics never cross the boundary; they surface as `NR_STATUS_PANIC`.
//!
//! The header `include/nanorace.h` is generated by cbindgen at build time.

// `!(x >= 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nanorace::analysis::{margin_study, StudyOptions, Trajectory};
use nanorace::arena::{build_arena, in_mission_area, ray_cast, Arena, ArenaConfig};
use nanorace::geom::{Pose2, Vec2};
use nanorace::perception::{
    decode_frame, dequantize, encode_frame, quantize, sector_labels, sector_soft_probs, FrameError, SectorProbs,
    SectorProbsQ8, SensorGeometry,
};
use nanorace::policy::{policy_step, PolicyKind, PolicyParams, PolicyState};
use nanorace::scoring::{score, ScoreInput};
use nanorace::stats::rng_for;
use nanorace::vehicle::{run_episode, EpisodeConfig, ErrorModel};
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    BadHeader = 4,
    BadChecksum = 5,
    ShortFrame = 6,
    LongFrame = 7,
    InvalidMultiplier = 8,
    Panic = 9,
}

/// Surface class codes as returned by ray casts.
pub const NR_CLASS_NONE: u8 = 0;
pub const NR_CLASS_OBSTACLE: u8 = 1;
pub const NR_CLASS_GATE_FRAME: u8 = 2;
pub const NR_CLASS_WALL: u8 = 3;
pub const NR_CLASS_OUT_OF_AREA_GROUND: u8 = 4;

/// Policy kinds accepted by `nr_policy_new`.
pub const NR_POLICY_BASELINE: u32 = 0;
pub const NR_POLICY_1: u32 = 1;
pub const NR_POLICY_2: u32 = 2;

/// Length of an encoded wire frame.
pub const NR_FRAME_LEN: usize = 5;

/// Per-sector collision probabilities in `[0, 1]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NrProbs {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

/// Per-sector 8-bit probability codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NrProbsQ8 {
    pub left: u8,
    pub center: u8,
    pub right: u8,
}

/// Velocity command: forward speed (m/s) and yaw rate (rad/s, counterclockwise positive).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NrSetpoint {
    pub forward_speed: f64,
    pub yaw_rate: f64,
}

/// Outcome of one simulated episode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NrRunSummary {
    pub distance_in_area: f64,
    pub total_distance: f64,
    pub time_outside_fraction: f64,
    pub duration: f64,
    pub gates: u32,
    pub exits: u32,
    pub crashes: u32,
    pub laps: u32,
}

/// Dead-reckoning drift model; sigmas per √s, biases per s.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NrErrorModel {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_yaw: f64,
    pub bias_x: f64,
    pub bias_y: f64,
    pub bias_yaw: f64,
}

/// Summary of a Monte Carlo safety-margin study (L∞ metric, bbox of the nominal).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NrMarginSummary {
    pub margin_median: f64,
    pub margin_p95: f64,
    pub fraction_within_1m: f64,
    pub fraction_within_2m: f64,
}

/// Opaque arena handle.
pub struct NrArena {
    arena: Arena,
}

/// Opaque closed-loop policy handle: parameters, state and its random stream.
pub struct NrPolicy {
    params: PolicyParams,
    state: PolicyState,
    waypoints: [Vec2; 4],
    rng: ChaCha8Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: NrStatus, msg: impl Into<String>) -> NrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> NrStatus) -> NrStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(NrStatus::Panic, "internal panic"))
}

macro_rules! deref {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(v) => v,
            None => return fail(NrStatus::NullPointer, concat!(stringify!($ptr), " is NULL")),
        }
    };
}

macro_rules! deref_mut {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(v) => v,
            None => return fail(NrStatus::NullPointer, concat!(stringify!($ptr), " is NULL")),
        }
    };
}

fn to_probs(p: NrProbs) -> SectorProbs {
    SectorProbs::new(p.left, p.center, p.right)
}

fn from_probs(p: SectorProbs) -> NrProbs {
    NrProbs { left: p.left, center: p.center, right: p.right }
}

fn from_model(m: &NrErrorModel) -> ErrorModel {
    ErrorModel {
        sigma_x: m.sigma_x,
        sigma_y: m.sigma_y,
        sigma_yaw: m.sigma_yaw,
        bias_x: m.bias_x,
        bias_y: m.bias_y,
        bias_yaw: m.bias_yaw,
    }
}

fn c_str<'a>(s: *const c_char) -> Result<&'a str, NrStatus> {
    if s.is_null() {
        return Err(fail(NrStatus::NullPointer, "string argument is NULL"));
    }
    unsafe { CStr::from_ptr(s) }.to_str().map_err(|_| fail(NrStatus::InvalidArgument, "string is not UTF-8"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates the default arena layout.
///
/// # Safety
/// `out` must be NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nr_arena_new_default(out: *mut *mut NrArena) -> NrStatus {
    guard(|| {
        let out = deref_mut!(out);
        match build_arena(&ArenaConfig::default()) {
            Ok(arena) => {
                *out = Box::into_raw(Box::new(NrArena { arena }));
                NrStatus::Ok
            }
            Err(e) => fail(NrStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Creates an arena from a layout JSON document.
///
/// # Safety
/// `json` must be NULL or a NUL-terminated string; `out` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_arena_new_from_json(json: *const c_char, out: *mut *mut NrArena) -> NrStatus {
    guard(|| {
        let out = deref_mut!(out);
        let text = match c_str(json) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match ArenaConfig::from_json(text).and_then(|c| build_arena(&c)) {
            Ok(arena) => {
                *out = Box::into_raw(Box::new(NrArena { arena }));
                NrStatus::Ok
            }
            Err(e) => fail(NrStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Releases an arena.
///
/// # Safety
/// `arena` must be NULL or a handle from `nr_arena_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nr_arena_free(arena: *mut NrArena) {
    if !arena.is_null() {
        drop(Box::from_raw(arena));
    }
}

/// Casts a ray; `*out_distance` is `INFINITY` and `*out_class` is
/// `NR_CLASS_NONE` when nothing lies within `max_range`.
///
/// # Safety
/// All pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_ray_cast(
    arena: *const NrArena,
    x: f64,
    y: f64,
    angle: f64,
    max_range: f64,
    ground_aware: bool,
    out_distance: *mut f64,
    out_class: *mut u8,
) -> NrStatus {
    guard(|| {
        let arena = deref!(arena);
        let (d, c) = (deref_mut!(out_distance), deref_mut!(out_class));
        if !(max_range >= 0.0) || !x.is_finite() || !y.is_finite() || !angle.is_finite() {
            return fail(NrStatus::InvalidArgument, "non-finite pose or negative range");
        }
        let hit = ray_cast(&arena.arena, Vec2::new(x, y), angle, max_range, ground_aware);
        *d = hit.distance;
        *c = hit.surface_class.code();
        NrStatus::Ok
    })
}

/// Whether `(x, y)` lies in the mission area (boundary inclusive).
///
/// # Safety
/// All pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_in_mission_area(arena: *const NrArena, x: f64, y: f64, out: *mut bool) -> NrStatus {
    guard(|| {
        let arena = deref!(arena);
        *deref_mut!(out) = in_mission_area(&arena.arena, Vec2::new(x, y));
        NrStatus::Ok
    })
}

/// Ideal-perception probabilities and binary labels at a pose, with the
/// default sensor geometry. Either out-pointer may be NULL.
///
/// # Safety
/// `arena` must be valid; `out_probs` NULL or valid; `out_labels` NULL or 3 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nr_perceive(
    arena: *const NrArena,
    x: f64,
    y: f64,
    yaw: f64,
    ground_aware: bool,
    out_probs: *mut NrProbs,
    out_labels: *mut u8,
) -> NrStatus {
    guard(|| {
        let arena = deref!(arena);
        let geom = SensorGeometry::default();
        let pose = Pose2::new(x, y, yaw);
        if let Some(p) = out_probs.as_mut() {
            *p = from_probs(sector_soft_probs(&arena.arena, pose, &geom, ground_aware));
        }
        if !out_labels.is_null() {
            let labels = sector_labels(&arena.arena, pose, &geom, ground_aware);
            std::ptr::copy_nonoverlapping(labels.as_ptr(), out_labels, 3);
        }
        NrStatus::Ok
    })
}

/// Quantizes probabilities to 8-bit codes (values are clamped to `[0, 1]`).
#[no_mangle]
pub extern "C" fn nr_quantize(p: NrProbs) -> NrProbsQ8 {
    let q = quantize(to_probs(p));
    NrProbsQ8 { left: q.left, center: q.center, right: q.right }
}

#[no_mangle]
pub extern "C" fn nr_dequantize(q: NrProbsQ8) -> NrProbs {
    from_probs(dequantize(SectorProbsQ8::new(q.left, q.center, q.right)))
}

/// Encodes a frame into `out[0..5]`.
///
/// # Safety
/// `out` must be NULL or point to `NR_FRAME_LEN` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nr_frame_encode(q: NrProbsQ8, out: *mut u8) -> NrStatus {
    guard(|| {
        if out.is_null() {
            return fail(NrStatus::NullPointer, "out is NULL");
        }
        let frame = encode_frame(SectorProbsQ8::new(q.left, q.center, q.right));
        std::ptr::copy_nonoverlapping(frame.as_ptr(), out, frame.len());
        NrStatus::Ok
    })
}

/// Decodes and validates a frame of `len` bytes.
///
/// # Safety
/// `bytes` must be NULL or point to `len` readable bytes; `out` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_frame_decode(bytes: *const u8, len: usize, out: *mut NrProbsQ8) -> NrStatus {
    guard(|| {
        let out = deref_mut!(out);
        if bytes.is_null() {
            return fail(NrStatus::NullPointer, "bytes is NULL");
        }
        match decode_frame(std::slice::from_raw_parts(bytes, len)) {
            Ok(q) => {
                *out = NrProbsQ8 { left: q.left, center: q.center, right: q.right };
                NrStatus::Ok
            }
            Err(e) => {
                let status = match e {
                    FrameError::BadHeader(_) => NrStatus::BadHeader,
                    FrameError::BadChecksum { .. } => NrStatus::BadChecksum,
                    FrameError::ShortFrame(_) => NrStatus::ShortFrame,
                    FrameError::LongFrame(_) => NrStatus::LongFrame,
                };
                fail(status, e.to_string())
            }
        }
    })
}

/// Competition score for an in-area distance (m) and gate count.
///
/// # Safety
/// `out` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_score(
    distance: f64,
    gates: u32,
    alpha_env: u32,
    alpha_comp: u32,
    out: *mut f64,
) -> NrStatus {
    guard(|| {
        let out = deref_mut!(out);
        match score(&ScoreInput { distance, gates, alpha_env, alpha_comp }) {
            Ok(s) => {
                *out = s;
                NrStatus::Ok
            }
            Err(e) => fail(NrStatus::InvalidMultiplier, e.to_string()),
        }
    })
}

/// Creates a policy with default parameters for `kind` (`NR_POLICY_*`) and
/// target speed, flying the waypoints of `arena`. `seed` drives spin draws.
///
/// # Safety
/// `arena` must be valid; `out` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_policy_new(
    arena: *const NrArena,
    kind: u32,
    v_target: f64,
    seed: u64,
    out: *mut *mut NrPolicy,
) -> NrStatus {
    guard(|| {
        let arena = deref!(arena);
        let out = deref_mut!(out);
        let kind = match kind {
            NR_POLICY_BASELINE => PolicyKind::Baseline,
            NR_POLICY_1 => PolicyKind::Policy1,
            NR_POLICY_2 => PolicyKind::Policy2,
            other => return fail(NrStatus::InvalidArgument, format!("unknown policy kind {other}")),
        };
        let params = PolicyParams::with_kind(kind, v_target);
        if let Err(e) = params.validate() {
            return fail(NrStatus::InvalidArgument, e);
        }
        *out = Box::into_raw(Box::new(NrPolicy {
            params,
            state: PolicyState::default(),
            waypoints: arena.arena.waypoints,
            rng: rng_for(seed, &[]),
        }));
        NrStatus::Ok
    })
}

/// Advances the policy by one decision given filtered probabilities and the
/// estimated pose.
///
/// # Safety
/// `policy` must be a live handle; `out` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_policy_step(
    policy: *mut NrPolicy,
    probs: NrProbs,
    x: f64,
    y: f64,
    yaw: f64,
    out: *mut NrSetpoint,
) -> NrStatus {
    guard(|| {
        let policy = deref_mut!(policy);
        let out = deref_mut!(out);
        let p = to_probs(probs);
        if !p.is_valid() {
            return fail(NrStatus::InvalidArgument, "probabilities must lie in [0, 1]");
        }
        let (sp, next) =
            policy_step(&policy.state, p, Pose2::new(x, y, yaw), &policy.params, &policy.waypoints, &mut policy.rng);
        policy.state = next;
        *out = NrSetpoint { forward_speed: sp.forward_speed, yaw_rate: sp.yaw_rate };
        NrStatus::Ok
    })
}

/// Index of the waypoint the policy is currently flying to.
///
/// # Safety
/// `policy` must be a live handle; `out` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_policy_waypoint(policy: *const NrPolicy, out: *mut u32) -> NrStatus {
    guard(|| {
        let policy = deref!(policy);
        *deref_mut!(out) = policy.state.wp_index as u32;
        NrStatus::Ok
    })
}

/// Releases a policy.
///
/// # Safety
/// `policy` must be NULL or a handle from `nr_policy_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nr_policy_free(policy: *mut NrPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Simulates one episode. `config_json` is an episode configuration document,
/// or NULL for the defaults.
///
/// # Safety
/// `arena` must be valid; `config_json` NULL or NUL-terminated; `out` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nr_run_episode(
    arena: *const NrArena,
    config_json: *const c_char,
    seed: u64,
    out: *mut NrRunSummary,
) -> NrStatus {
    guard(|| {
        let arena = deref!(arena);
        let out = deref_mut!(out);
        let cfg: EpisodeConfig = if config_json.is_null() {
            EpisodeConfig::default()
        } else {
            let text = match c_str(config_json) {
                Ok(s) => s,
                Err(status) => return status,
            };
            match serde_json::from_str(text) {
                Ok(c) => c,
                Err(e) => return fail(NrStatus::InvalidConfig, e.to_string()),
            }
        };
        match run_episode(&arena.arena, &cfg, seed) {
            Ok(rec) => {
                let s = rec.summary;
                *out = NrRunSummary {
                    distance_in_area: s.distance_in_area,
                    total_distance: s.total_distance,
                    time_outside_fraction: s.time_outside_fraction,
                    duration: s.duration,
                    gates: s.gates as u32,
                    exits: s.exits as u32,
                    crashes: s.crashes as u32,
                    laps: s.laps,
                };
                NrStatus::Ok
            }
            Err(e) => fail(NrStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Monte Carlo safety-margin study of a nominal trajectory sampled every `dt`
/// seconds. `out_margins` may be NULL, else it receives `n` per-realization margins.
///
/// # Safety
/// `xs`, `ys`, `yaws` must each point to `len` readable doubles; `model` and
/// `out` must be valid; `out_margins` NULL or `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_margin_study(
    xs: *const f64,
    ys: *const f64,
    yaws: *const f64,
    len: usize,
    dt: f64,
    model: *const NrErrorModel,
    n: usize,
    seed: u64,
    out: *mut NrMarginSummary,
    out_margins: *mut f64,
) -> NrStatus {
    guard(|| {
        let model = from_model(deref!(model));
        let out = deref_mut!(out);
        if xs.is_null() || ys.is_null() || yaws.is_null() {
            return fail(NrStatus::NullPointer, "trajectory arrays must not be NULL");
        }
        if let Err(e) = model.validate() {
            return fail(NrStatus::InvalidArgument, e);
        }
        let (xs, ys, yaws) = (
            std::slice::from_raw_parts(xs, len),
            std::slice::from_raw_parts(ys, len),
            std::slice::from_raw_parts(yaws, len),
        );
        let poses = (0..len).map(|i| Pose2::new(xs[i], ys[i], yaws[i])).collect();
        let nominal = Trajectory { dt, poses };
        match margin_study(&nominal, &model, n, seed, &StudyOptions::default()) {
            Ok(stats) => {
                *out = NrMarginSummary {
                    margin_median: stats.margin_median,
                    margin_p95: stats.margin_p95,
                    fraction_within_1m: stats.fraction_within(1.0),
                    fraction_within_2m: stats.fraction_within(2.0),
                };
                if !out_margins.is_null() {
                    std::ptr::copy_nonoverlapping(stats.margins.as_ptr(), out_margins, stats.margins.len());
                }
                NrStatus::Ok
            }
            Err(e) => fail(NrStatus::InvalidArgument, e.to_string()),
        }
    })
}
