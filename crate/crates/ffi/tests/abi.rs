//! Exercises the C ABI from Rust, and compiles the C example against the
//! generated header and the static library.

use nanorace_ffi::*;
use std::ffi::{c_char, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { nr_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    String::from_utf8_lossy(&buf[..n.min(511)]).into_owned()
}

fn default_arena() -> *mut NrArena {
    let mut arena = ptr::null_mut();
    assert_eq!(unsafe { nr_arena_new_default(&mut arena) }, NrStatus::Ok);
    assert!(!arena.is_null());
    arena
}

#[test]
fn score_and_multiplier_errors() {
    let mut s = 0.0;
    assert_eq!(unsafe { nr_score(115.0, 0, 10, 5, &mut s) }, NrStatus::Ok);
    assert_eq!(s, 5750.0);
    assert_eq!(unsafe { nr_score(1.0, 0, 3, 1, &mut s) }, NrStatus::InvalidMultiplier);
    assert!(last_error().contains("multiplier"));
    assert_eq!(unsafe { nr_score(1.0, 0, 1, 1, ptr::null_mut()) }, NrStatus::NullPointer);
}

#[test]
fn arena_lifecycle_and_queries() {
    let arena = default_arena();
    let (mut d, mut c) = (0.0, 0u8);
    // straight up from the center, past the 3 m panel at x = 0: first hit is the panel
    assert_eq!(
        unsafe { nr_ray_cast(arena, 0.5, 0.0, std::f64::consts::PI, 20.0, false, &mut d, &mut c) },
        NrStatus::Ok
    );
    assert_eq!(c, NR_CLASS_OBSTACLE);
    assert!((d - 0.475).abs() < 1e-9, "{d}");
    assert_eq!(unsafe { nr_ray_cast(arena, 3.5, 3.5, 0.0, 20.0, true, &mut d, &mut c) }, NrStatus::Ok);
    assert_eq!(c, NR_CLASS_OUT_OF_AREA_GROUND);
    assert!((d - 0.5).abs() < 1e-12);
    assert_eq!(unsafe { nr_ray_cast(arena, 0.0, 0.0, 0.0, -1.0, false, &mut d, &mut c) }, NrStatus::InvalidArgument);

    let mut inside = false;
    assert_eq!(unsafe { nr_in_mission_area(arena, 4.0, -4.0, &mut inside) }, NrStatus::Ok);
    assert!(inside);

    let mut probs = NrProbs::default();
    let mut labels = [9u8; 3];
    assert_eq!(
        unsafe { nr_perceive(arena, 0.5, 0.0, std::f64::consts::PI, false, &mut probs, labels.as_mut_ptr()) },
        NrStatus::Ok
    );
    assert_eq!(labels[1], 1);
    assert!(probs.center > 0.7);
    unsafe { nr_arena_free(arena) };
    unsafe { nr_arena_free(ptr::null_mut()) };
}

#[test]
fn arena_from_json_reports_errors() {
    let good = CString::new(r#"{"outer": 10, "mission": 8, "wp_half_side": 3}"#).unwrap();
    let mut arena = ptr::null_mut();
    assert_eq!(unsafe { nr_arena_new_from_json(good.as_ptr(), &mut arena) }, NrStatus::Ok);
    unsafe { nr_arena_free(arena) };

    let bad = CString::new(r#"{"outer": 10}"#).unwrap();
    let mut arena = ptr::null_mut();
    assert_eq!(unsafe { nr_arena_new_from_json(bad.as_ptr(), &mut arena) }, NrStatus::InvalidConfig);
    assert!(arena.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { nr_arena_new_from_json(ptr::null(), &mut arena) }, NrStatus::NullPointer);
}

#[test]
fn wire_frames() {
    let q = nr_quantize(NrProbs { left: 0.5, center: 1.2, right: -0.1 });
    assert_eq!(q, NrProbsQ8 { left: 128, center: 255, right: 0 });
    let p = nr_dequantize(q);
    assert_eq!(p.center, 1.0);

    let mut frame = [0u8; NR_FRAME_LEN];
    assert_eq!(unsafe { nr_frame_encode(q, frame.as_mut_ptr()) }, NrStatus::Ok);
    let mut back = NrProbsQ8::default();
    assert_eq!(unsafe { nr_frame_decode(frame.as_ptr(), frame.len(), &mut back) }, NrStatus::Ok);
    assert_eq!(back, q);

    let mut bad = frame;
    bad[0] = 0x55;
    assert_eq!(unsafe { nr_frame_decode(bad.as_ptr(), 5, &mut back) }, NrStatus::BadHeader);
    bad = frame;
    bad[2] ^= 0x10;
    assert_eq!(unsafe { nr_frame_decode(bad.as_ptr(), 5, &mut back) }, NrStatus::BadChecksum);
    assert_eq!(unsafe { nr_frame_decode(frame.as_ptr(), 4, &mut back) }, NrStatus::ShortFrame);
    let long = [frame.as_slice(), &[0]].concat();
    assert_eq!(unsafe { nr_frame_decode(long.as_ptr(), 6, &mut back) }, NrStatus::LongFrame);
}

#[test]
fn policy_steps_and_turns_away() {
    let arena = default_arena();
    let mut policy = ptr::null_mut();
    assert_eq!(unsafe { nr_policy_new(arena, 9, 1.0, 0, &mut policy) }, NrStatus::InvalidArgument);
    assert_eq!(unsafe { nr_policy_new(arena, NR_POLICY_1, 1.0, 0, &mut policy) }, NrStatus::Ok);
    let mut sp = NrSetpoint::default();
    let blocked_left = NrProbs { left: 0.9, center: 0.1, right: 0.0 };
    assert_eq!(unsafe { nr_policy_step(policy, blocked_left, -3.0, -3.0, 0.0, &mut sp) }, NrStatus::Ok);
    assert!(sp.yaw_rate < 0.0, "{sp:?}");
    let invalid = NrProbs { left: 2.0, center: 0.0, right: 0.0 };
    assert_eq!(unsafe { nr_policy_step(policy, invalid, -3.0, -3.0, 0.0, &mut sp) }, NrStatus::InvalidArgument);
    let mut wp = 99;
    assert_eq!(unsafe { nr_policy_waypoint(policy, &mut wp) }, NrStatus::Ok);
    assert!(wp < 4);
    unsafe { nr_policy_free(policy) };
    unsafe { nr_arena_free(arena) };
}

#[test]
fn episode_and_margin_study() {
    let arena = default_arena();
    let cfg = CString::new(r#"{"timings": {"episode_length": 10.0}}"#).unwrap();
    let mut a = NrRunSummary::default();
    let mut b = NrRunSummary::default();
    assert_eq!(unsafe { nr_run_episode(arena, cfg.as_ptr(), 4, &mut a) }, NrStatus::Ok);
    assert_eq!(unsafe { nr_run_episode(arena, cfg.as_ptr(), 4, &mut b) }, NrStatus::Ok);
    assert_eq!(a, b);
    assert!(a.total_distance > 0.0);
    let bad = CString::new(r#"{"bogus": 1}"#).unwrap();
    assert_eq!(unsafe { nr_run_episode(arena, bad.as_ptr(), 4, &mut a) }, NrStatus::InvalidConfig);
    unsafe { nr_arena_free(arena) };

    let n = 200;
    let xs: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / n as f64).collect();
    let ys = vec![-3.0; n];
    let yaws = vec![0.0; n];
    let zero = NrErrorModel::default();
    let mut summary = NrMarginSummary::default();
    let mut margins = vec![f64::NAN; 16];
    let status = unsafe {
        nr_margin_study(
            xs.as_ptr(),
            ys.as_ptr(),
            yaws.as_ptr(),
            n,
            0.01,
            &zero,
            16,
            1,
            &mut summary,
            margins.as_mut_ptr(),
        )
    };
    assert_eq!(status, NrStatus::Ok, "{}", last_error());
    assert!(margins.iter().all(|&m| m == 0.0));
    assert_eq!(summary.fraction_within_1m, 1.0);

    let noisy = NrErrorModel { sigma_x: 0.2, sigma_y: 0.2, sigma_yaw: 0.05, ..zero };
    let status = unsafe {
        nr_margin_study(xs.as_ptr(), ys.as_ptr(), yaws.as_ptr(), n, 0.01, &noisy, 64, 1, &mut summary, ptr::null_mut())
    };
    assert_eq!(status, NrStatus::Ok);
    assert!(summary.margin_p95 >= summary.margin_median && summary.margin_median > 0.0);
    let negative = NrErrorModel { sigma_x: -1.0, ..zero };
    let status = unsafe {
        nr_margin_study(
            xs.as_ptr(),
            ys.as_ptr(),
            yaws.as_ptr(),
            n,
            0.01,
            &negative,
            4,
            1,
            &mut summary,
            ptr::null_mut(),
        )
    };
    assert_eq!(status, NrStatus::InvalidArgument);
}

fn target_dir() -> PathBuf {
    // tests/…/deps/abi-xxxx → the profile directory holding the library artifacts
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_example_compiles_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("nanorace.h").exists(), "header is generated by build.rs");
    let lib = target_dir().join("libnanorace_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out = tempfile_path("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&out)
        .arg(crate_dir.join("examples/smoke.c"))
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("a C compiler (cc) is required for this test");
    assert!(status.success(), "C example failed to compile");
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("nanorace-{stem}-{}", std::process::id()))
}
