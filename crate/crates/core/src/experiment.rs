//! Batch experiments: every (policy, speed) cell flies `runs_per_config`
//! episodes. Run `r` of every cell starts from the same randomized obstacle
//! layout so cells are compared on equal footing; the policy, drift, noise and
//! obstacle-move streams are derived per cell.

use crate::arena::{build_arena, randomize_layout, Arena, ArenaConfig, ArenaError};
use crate::io::{self, IoError};
use crate::policy::{PolicyKind, PolicyParams};
use crate::stats::{derive_seed, median, rng_for};
use crate::vehicle::{run_episode, EpisodeConfig, ErrorModel, RunRecord, VehicleError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

const STREAM_LAYOUT: u64 = 10;
const STREAM_EPISODE: u64 = 11;

/// Speed-law exponent of the batch protocol. A steeper-than-linear slowdown
/// with center probability stands in for the cautious, "inversely
/// proportional" speed modulation of the real platform; with the linear law
/// an ideal-perception kinematic drone flies far more in-area distance than
/// any real flight.
pub const BATCH_SPEED_EXPONENT: f64 = 2.75;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Batch description. `arena` may be inline or a path (`arena_path`, resolved
/// by the caller); inline wins when both are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub arena: Option<ArenaConfig>,
    pub arena_path: Option<PathBuf>,
    pub policies: Vec<PolicyKind>,
    pub speeds: Vec<f64>,
    pub runs_per_config: usize,
    pub episode_seconds: f64,
    pub seed: u64,
    pub error_model: ErrorModel,
    pub perception_noise: f64,
    /// Re-place the movable obstacles before each run index.
    pub randomize_layout: bool,
    /// Also write per-run trace and event CSVs.
    pub write_traces: bool,
    /// Base episode settings; policy kind, speed, duration, error model and
    /// noise are overridden by the fields above.
    pub episode: EpisodeConfig,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            arena: None,
            arena_path: None,
            policies: PolicyKind::ALL.to_vec(),
            speeds: vec![1.0, 1.5, 2.0],
            runs_per_config: 10,
            episode_seconds: 300.0,
            seed: 0,
            error_model: ErrorModel::default(),
            perception_noise: 0.0,
            randomize_layout: true,
            write_traces: false,
            episode: EpisodeConfig {
                policy: PolicyParams { speed_exponent: BATCH_SPEED_EXPONENT, ..PolicyParams::default() },
                ..EpisodeConfig::default()
            },
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.runs_per_config == 0 {
            return bad("runs_per_config must be >= 1".into());
        }
        if self.policies.is_empty() || self.speeds.is_empty() {
            return bad("policies and speeds must be non-empty".into());
        }
        if let Some(s) = self.speeds.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return bad(format!("speeds must be > 0, got {s}"));
        }
        self.cell_config(self.policies[0], self.speeds[0]).validate()?;
        Ok(())
    }

    /// Episode configuration of one cell.
    pub fn cell_config(&self, kind: PolicyKind, speed: f64) -> EpisodeConfig {
        let mut cfg = self.episode.clone();
        cfg.policy = PolicyParams { kind, v_target: speed, ..self.episode.policy };
        cfg.timings.episode_length = self.episode_seconds;
        cfg.error_model = self.error_model;
        cfg.perception_noise = self.perception_noise;
        cfg
    }

    pub fn layout_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, &[STREAM_LAYOUT, run as u64])
    }

    pub fn episode_seed(&self, kind: PolicyKind, speed: f64, run: usize) -> u64 {
        derive_seed(self.seed, &[STREAM_EPISODE, kind as u64, speed.to_bits(), run as u64])
    }

    /// Arena of run `run`, identical across cells.
    pub fn layout(&self, base: &Arena, run: usize) -> Result<Arena, ExperimentError> {
        if !self.randomize_layout {
            return Ok(base.clone());
        }
        let mut rng = rng_for(self.layout_seed(run), &[]);
        Ok(randomize_layout(base, self.episode.start.position(), &mut rng)?)
    }
}

/// One episode's outcome, as written to `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub policy: PolicyKind,
    pub speed: f64,
    pub run: usize,
    pub seed: u64,
    pub layout_seed: u64,
    pub distance: f64,
    pub total_distance: f64,
    pub time_outside_pct: f64,
    pub crashes: usize,
    pub gates: usize,
    pub exits: usize,
    pub obstacle_moves: usize,
    pub laps: u32,
}

/// Medians over the runs of one cell, plus the raw per-run values for box plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub policy: PolicyKind,
    pub speed: f64,
    pub runs: usize,
    pub median_distance: f64,
    pub median_time_outside_pct: f64,
    pub median_crashes: f64,
    pub median_gates: f64,
    pub distances: Vec<f64>,
    pub time_outside_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub seed: u64,
    pub runs: Vec<RunRow>,
    pub cells: Vec<CellSummary>,
}

impl BatchSummary {
    pub fn cell(&self, policy: PolicyKind, speed: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.policy == policy && c.speed == speed)
    }
}

fn row_of(kind: PolicyKind, speed: f64, run: usize, layout_seed: u64, rec: &RunRecord) -> RunRow {
    let s = &rec.summary;
    RunRow {
        policy: kind,
        speed,
        run,
        seed: rec.seed,
        layout_seed,
        distance: s.distance_in_area,
        total_distance: s.total_distance,
        time_outside_pct: 100.0 * s.time_outside_fraction,
        crashes: s.crashes,
        gates: s.gates,
        exits: s.exits,
        obstacle_moves: s.obstacle_moves,
        laps: s.laps,
    }
}

pub fn summarize_cells(runs: &[RunRow], policies: &[PolicyKind], speeds: &[f64]) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    for &policy in policies {
        for &speed in speeds {
            let rows: Vec<&RunRow> = runs.iter().filter(|r| r.policy == policy && r.speed == speed).collect();
            let col = |f: &dyn Fn(&RunRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let distances = col(&|r| r.distance);
            let outside = col(&|r| r.time_outside_pct);
            let med = |v: &[f64]| median(v).unwrap_or(0.0);
            cells.push(CellSummary {
                policy,
                speed,
                runs: rows.len(),
                median_distance: med(&distances),
                median_time_outside_pct: med(&outside),
                median_crashes: med(&col(&|r| r.crashes as f64)),
                median_gates: med(&col(&|r| r.gates as f64)),
                distances,
                time_outside_pct: outside,
            });
        }
    }
    cells
}

/// Runs every cell. Episodes run in parallel; results are reduced in
/// (policy, speed, run) order. When `out` is given, artifacts are written
/// under it.
pub fn run_batch(cfg: &ExperimentConfig, base: &Arena, out: Option<&Path>) -> Result<BatchSummary, ExperimentError> {
    cfg.validate()?;
    let layouts = (0..cfg.runs_per_config).map(|r| cfg.layout(base, r)).collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(PolicyKind, f64, usize)> = cfg
        .policies
        .iter()
        .flat_map(|&p| cfg.speeds.iter().flat_map(move |&s| (0..cfg.runs_per_config).map(move |r| (p, s, r))))
        .collect();

    let runs = jobs
        .par_iter()
        .map(|&(kind, speed, run)| -> Result<RunRow, ExperimentError> {
            let ep = cfg.cell_config(kind, speed);
            let rec = run_episode(&layouts[run], &ep, cfg.episode_seed(kind, speed, run))?;
            if let (Some(dir), true) = (out, cfg.write_traces) {
                let stem = format!("{}_v{}_r{:02}_", kind.name(), speed, run);
                io::write_run(&dir.join("traces"), &stem, &rec)?;
            }
            Ok(row_of(kind, speed, run, cfg.layout_seed(run), &rec))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let summary = BatchSummary { seed: cfg.seed, cells: summarize_cells(&runs, &cfg.policies, &cfg.speeds), runs };
    if let Some(dir) = out {
        write_batch(dir, &summary)?;
    }
    Ok(summary)
}

pub fn write_batch(dir: &Path, summary: &BatchSummary) -> Result<(), IoError> {
    let mut runs = csv::Writer::from_writer(Vec::new());
    runs.write_record([
        "policy",
        "speed",
        "run",
        "seed",
        "layout_seed",
        "distance",
        "total_distance",
        "time_outside_pct",
        "crashes",
        "gates",
        "exits",
        "obstacle_moves",
        "laps",
    ])?;
    for r in &summary.runs {
        runs.write_record([
            r.policy.name().to_string(),
            r.speed.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            r.layout_seed.to_string(),
            r.distance.to_string(),
            r.total_distance.to_string(),
            r.time_outside_pct.to_string(),
            r.crashes.to_string(),
            r.gates.to_string(),
            r.exits.to_string(),
            r.obstacle_moves.to_string(),
            r.laps.to_string(),
        ])?;
    }
    io::write_file(&dir.join("runs.csv"), runs.into_inner().map_err(|e| e.into_error())?)?;

    let mut cells = csv::Writer::from_writer(Vec::new());
    cells.write_record([
        "policy",
        "speed",
        "runs",
        "median_distance",
        "median_time_outside_pct",
        "median_crashes",
        "median_gates",
    ])?;
    for c in &summary.cells {
        cells.write_record([
            c.policy.name().to_string(),
            c.speed.to_string(),
            c.runs.to_string(),
            c.median_distance.to_string(),
            c.median_time_outside_pct.to_string(),
            c.median_crashes.to_string(),
            c.median_gates.to_string(),
        ])?;
    }
    io::write_file(&dir.join("cells.csv"), cells.into_inner().map_err(|e| e.into_error())?)?;
    io::write_file(&dir.join("summary.json"), io::to_json(summary)?)
}

/// Resolves the arena of an experiment: inline config, else `arena_path`
/// (relative to `base_dir`), else the default layout.
pub fn resolve_arena(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Arena, ExperimentError> {
    let config = match (&cfg.arena, &cfg.arena_path) {
        (Some(a), _) => a.clone(),
        (None, Some(p)) => {
            let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
            ArenaConfig::from_json(&io::read_text(&path)?)?
        }
        (None, None) => ArenaConfig::default(),
    };
    Ok(build_arena(&config)?)
}
