//! Batch artifacts agree with each other and with the in-memory summary.

use nanorace::arena::{build_arena, ArenaConfig};
use nanorace::experiment::{run_batch, BatchSummary, ExperimentConfig};
use nanorace::policy::PolicyKind;
use nanorace::stats::median;
use std::collections::BTreeMap;

#[test]
fn cell_medians_recompute_from_runs_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { runs_per_config: 3, episode_seconds: 30.0, seed: 21, ..ExperimentConfig::default() };
    let arena = build_arena(&ArenaConfig::default()).unwrap();
    let summary = run_batch(&cfg, &arena, Some(dir.path())).unwrap();

    let mut rdr = csv::Reader::from_path(dir.path().join("runs.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (policy, speed, dist, outside) = (col("policy"), col("speed"), col("distance"), col("time_outside_pct"));
    let mut groups: BTreeMap<(String, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let e = groups.entry((rec[policy].to_string(), rec[speed].to_string())).or_default();
        e.0.push(rec[dist].parse().unwrap());
        e.1.push(rec[outside].parse().unwrap());
        rows += 1;
    }
    assert_eq!(rows, 3 * 3 * 3);
    assert_eq!(groups.len(), 9);
    for c in &summary.cells {
        let (d, o) = &groups[&(c.policy.name().to_string(), c.speed.to_string())];
        assert_eq!(median(d).unwrap(), c.median_distance);
        assert_eq!(median(o).unwrap(), c.median_time_outside_pct);
    }

    let json: BatchSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json, summary);
    assert!(summary.cell(PolicyKind::Policy2, 1.5).is_some());
}

#[test]
fn shared_layouts_across_cells() {
    let cfg = ExperimentConfig { runs_per_config: 2, episode_seconds: 5.0, seed: 2, ..ExperimentConfig::default() };
    let arena = build_arena(&ArenaConfig::default()).unwrap();
    let s = run_batch(&cfg, &arena, None).unwrap();
    for r in &s.runs {
        assert_eq!(r.layout_seed, cfg.layout_seed(r.run));
        assert_eq!(r.seed, cfg.episode_seed(r.policy, r.speed, r.run));
    }
    let seeds: std::collections::HashSet<u64> = s.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), s.runs.len(), "episode seeds must be distinct");
}
