//! End-to-end runs of the command-line entry point against temporary directories.

use nanorace::cli::{main_with_args, EXIT_CONFIG, EXIT_OK, EXIT_USAGE};
use nanorace::perception::DepthRaster;
use std::path::Path;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("nanorace").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_writes_trace_events_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run(&[
        "run",
        "--policy",
        "policy2",
        "--speed",
        "1.5",
        "--duration",
        "20",
        "--seed",
        "3",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let summary: serde_json::Value = serde_json::from_str(&out).unwrap();
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary, on_disk);
    assert!(summary["distance_in_area"].as_f64().unwrap() > 0.0);
    let trace = std::fs::read_to_string(dir.path().join("record.csv")).unwrap();
    assert!(trace.starts_with("t,x,y,yaw,"));
    assert!(dir.path().join("events.csv").exists());
}

#[test]
fn mc_writes_margins_stats_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("laps.json");
    std::fs::write(&cfg, r#"{"duration": 30.0, "dt": 0.05}"#).unwrap();
    let (code, _, err) =
        run(&["mc", "--config", p(&cfg), "--n", "40", "--dump", "2", "--seed", "9", "--out", p(dir.path())]);
    assert_eq!(code, EXIT_OK, "{err}");
    let margins = std::fs::read_to_string(dir.path().join("margins.csv")).unwrap();
    assert_eq!(margins.lines().count(), 41);
    assert!(margins.starts_with("realization,margin,time_outside_1,crossings_1,time_outside_2,crossings_2"));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n"], 40);
    assert_eq!(stats["bands"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("realizations/0001.csv").exists());
    assert!(!dir.path().join("realizations/0002.csv").exists());

    // the dumped realization is a valid nominal for a second study
    let (code, _, err) = run(&[
        "mc",
        "--nominal",
        p(&dir.path().join("realizations/0000.csv")),
        "--n",
        "4",
        "--out",
        p(&dir.path().join("second")),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
}

#[test]
fn score_from_trajectory_counts_distance() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.csv");
    std::fs::write(&traj, "t,x,y\n0,-3,-3\n1,-1,-3\n2,-1,-2\n").unwrap();
    let arena = dir.path().join("arena.json");
    std::fs::write(&arena, r#"{"outer": 10, "mission": 8, "wp_half_side": 3}"#).unwrap();
    let (code, out, err) = run(&["score", "--trajectory", p(&traj), "--arena", p(&arena), "--env", "5", "--comp", "1"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["score"].as_f64().unwrap(), 15.0);
}

#[test]
fn augment_and_label_from_pgm_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let mut pgm = b"P5\n6 2\n255\n".to_vec();
    pgm.extend([128u8; 12]);
    std::fs::write(&input, &pgm).unwrap();
    let cfg = dir.path().join("aug.json");
    std::fs::write(&cfg, r#"{"exposure": {"gamma": 2.0}}"#).unwrap();
    let out = dir.path().join("out.pgm");
    let (code, _, err) =
        run(&["augment", "--input", p(&input), "--config", p(&cfg), "--resize", "12x4", "--out", p(&out)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let bytes = std::fs::read(&out).unwrap();
    assert!(bytes.starts_with(b"P5\n12 4\n255\n"));
    assert!(bytes[bytes.len() - 48..].iter().all(|&b| b == 64));

    // depth 1 m everywhere; class 1 only in the right third
    let depth = dir.path().join("d.pgm");
    let seg = dir.path().join("s.pgm");
    std::fs::write(&depth, DepthRaster::filled(6, 2, 1.0).to_pgm_bytes()).unwrap();
    let mut s = b"P5\n6 2\n255\n".to_vec();
    s.extend([0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1]);
    std::fs::write(&seg, s).unwrap();
    let (code, out, err) = run(&["label", "--depth", p(&depth), "--seg", p(&seg)]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out.trim(), r#"{"labels":[0,0,1]}"#);
}

#[test]
fn poses_csv_has_requested_counts() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(&plan, r#"{"counts": {"random_spawn": 10, "scan_360": 14, "square_path": 6}}"#).unwrap();
    let out = dir.path().join("poses.csv");
    let (code, _, err) = run(&["poses", "--config", p(&plan), "--seed", "4", "--out", p(&out)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 31);
    assert!(text.starts_with("x,y,z,yaw,pitch,roll,group,split"));
}

#[test]
fn errors_map_to_exit_codes() {
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&[]).0, EXIT_CONFIG);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"runs_per_config": 0}"#).unwrap();
    assert_eq!(run(&["batch", "--config", p(&bad)]).0, EXIT_CONFIG);
    std::fs::write(&bad, r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(run(&["batch", "--config", p(&bad)]).0, EXIT_CONFIG);
    assert_eq!(run(&["label", "--pose", "1,2"]).0, EXIT_CONFIG);
}
