//! Command-line front end. Exit codes: 0 success, 2 usage, 3 config, 4 runtime.

use crate::analysis::{margin_study, reference_bbox, Metric, SquareLaps, StudyOptions, Trajectory};
use crate::arena::{build_arena, Arena, ArenaConfig};
use crate::augment::{augment, read_pgm, resize_gray, sample_dataset_poses, write_pgm, AugParams, DatasetPlan};
use crate::experiment::{resolve_arena, run_batch, ExperimentConfig};
use crate::geom::Pose2;
use crate::io;
use crate::perception::{label_from_rasters, sector_labels, sector_soft_probs, DepthRaster, SegRaster, SensorGeometry};
use crate::policy::PolicyKind;
use crate::scoring::{breakdown, count_gate_crossings, in_area_path_length, ScoreInput};
use crate::vehicle::{run_episode, EpisodeConfig, ErrorModel};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nanorace", version, about = "Nano-drone racing simulator and analysis toolkit")]
pub struct Cli {
    /// Print every default configuration as JSON and exit.
    #[arg(long)]
    pub dump_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (or file, where noted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fly one episode. --config takes an episode config.
    Run {
        #[command(flatten)]
        common: Common,
        /// Arena layout JSON; default layout if omitted.
        #[arg(long)]
        arena: Option<PathBuf>,
        #[arg(long)]
        policy: Option<PolicyKind>,
        /// Target speed, m/s.
        #[arg(long)]
        speed: Option<f64>,
        /// Episode length, s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run a policy × speed batch. --config takes an experiment config.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Monte Carlo safety-margin study. --config takes square-lap generator params.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Nominal trajectory CSV (t,x,y[,yaw]); replaces the generator.
        #[arg(long)]
        nominal: Option<PathBuf>,
        /// Error model JSON; defaults if omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Reference trajectories defining the bounding box; the nominal if omitted.
        #[arg(long)]
        reference: Vec<PathBuf>,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
        thresholds: Vec<f64>,
        #[arg(long, value_enum, default_value_t = MetricArg::Linf)]
        metric: MetricArg,
        /// Dump the first K corrupted trajectories as CSV.
        #[arg(long, default_value_t = 0)]
        dump: usize,
    },
    /// Competition score from numbers or from a trajectory.
    Score {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "trajectory")]
        dist: Option<f64>,
        #[arg(long, conflicts_with = "trajectory")]
        gates: Option<u32>,
        /// Trajectory CSV (t,x,y); distance and gates are measured from it.
        #[arg(long, requires = "arena")]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        arena: Option<PathBuf>,
        #[arg(long)]
        env: u32,
        #[arg(long)]
        comp: u32,
        /// Print the full breakdown as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Sector labels from depth + segmentation PGMs, or from an arena pose.
    Label {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "seg")]
        depth: Option<PathBuf>,
        #[arg(long, requires = "depth")]
        seg: Option<PathBuf>,
        #[arg(long, conflicts_with = "depth")]
        arena: Option<PathBuf>,
        /// Pose as x,y,yaw (radians).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pose: Option<Vec<f64>>,
        #[arg(long)]
        ground_aware: bool,
    },
    /// Photometric augmentation of an 8-bit PGM. --config takes augmentation params.
    Augment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Resize to WxH before augmenting, e.g. 162x162.
        #[arg(long)]
        resize: Option<String>,
    },
    /// Dataset pose list as CSV. --config takes a dataset plan.
    Poses {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        arena: Option<PathBuf>,
    },
    /// Print every default configuration as JSON.
    DumpDefaults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricArg {
    Linf,
    L2,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn parse_cli<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = io::read_text(path).map_err(config)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_json_or_default<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T, CliError> {
    path.map(|p| load_json(p)).unwrap_or_else(|| Ok(T::default()))
}

fn load_arena(path: Option<&PathBuf>) -> Result<Arena, CliError> {
    let cfg = match path {
        Some(p) => ArenaConfig::from_json(&io::read_text(p).map_err(config)?).map_err(config)?,
        None => ArenaConfig::default(),
    };
    build_arena(&cfg).map_err(config)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

pub fn defaults_json() -> serde_json::Value {
    json!({
        "arena": ArenaConfig::default(),
        "episode": EpisodeConfig::default(),
        "error_model": ErrorModel::default(),
        "experiment": ExperimentConfig::default(),
        "square_laps": SquareLaps::default(),
        "study": StudyOptions::default(),
        "augment": AugParams::default(),
        "dataset_plan": DatasetPlan::default(),
        "sensor": SensorGeometry::default(),
    })
}

/// Executes a parsed command, writing human-facing output to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let say = |stdout: &mut dyn Write, s: String| writeln!(stdout, "{s}").map_err(runtime);
    if cli.dump_defaults {
        return say(stdout, io::to_json(&defaults_json()).map_err(runtime)?.trim_end().to_string());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given; see --help".into()));
    };
    match command {
        Command::DumpDefaults => say(stdout, io::to_json(&defaults_json()).map_err(runtime)?.trim_end().to_string()),

        Command::Run { common, arena, policy, speed, duration } => {
            let mut cfg: EpisodeConfig = load_json_or_default(common.config.as_ref())?;
            if let Some(k) = policy {
                cfg.policy.kind = k;
            }
            if let Some(v) = speed {
                cfg.policy.v_target = v;
            }
            if let Some(d) = duration {
                cfg.timings.episode_length = d;
            }
            cfg.validate().map_err(config)?;
            let arena = load_arena(arena.as_ref())?;
            let rec = run_episode(&arena, &cfg, common.seed.unwrap_or(0)).map_err(runtime)?;
            io::write_run(&out_dir(&common), "", &rec).map_err(runtime)?;
            say(stdout, io::to_json(&rec.summary).map_err(runtime)?.trim_end().to_string())
        }

        Command::Batch { common, runs, duration } => {
            let mut cfg: ExperimentConfig = load_json_or_default(common.config.as_ref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(r) = runs {
                cfg.runs_per_config = r;
            }
            if let Some(d) = duration {
                cfg.episode_seconds = d;
            }
            let out = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
            cfg.validate().map_err(config)?;
            let base_dir = common.config.as_ref().and_then(|p| p.parent()).unwrap_or(Path::new("."));
            let arena = resolve_arena(&cfg, base_dir).map_err(config)?;
            let summary = run_batch(&cfg, &arena, Some(&out)).map_err(runtime)?;
            for c in &summary.cells {
                say(
                    stdout,
                    format!(
                        "{:<9} v={:<4} median distance {:>8.2} m  outside {:>6.2} %  crashes {:>4}",
                        c.policy.name(),
                        c.speed,
                        c.median_distance,
                        c.median_time_outside_pct,
                        c.median_crashes
                    ),
                )?;
            }
            Ok(())
        }

        Command::Mc { common, nominal, model, reference, n, thresholds, metric, dump } => {
            let model: ErrorModel = load_json_or_default(model.as_ref())?;
            model.validate().map_err(CliError::Config)?;
            let read_traj = |p: &PathBuf| -> Result<Trajectory, CliError> {
                let rows = io::read_trajectory_csv(&io::read_file(p).map_err(config)?[..]).map_err(config)?;
                Trajectory::from_timed(&rows).map_err(config)
            };
            let nominal = match nominal {
                Some(p) => read_traj(&p)?,
                None => load_json_or_default::<SquareLaps>(common.config.as_ref())?.generate(),
            };
            let bbox = if reference.is_empty() {
                None
            } else {
                let refs = reference.iter().map(read_traj).collect::<Result<Vec<_>, _>>()?;
                Some(reference_bbox(&refs).map_err(config)?)
            };
            let metric = match metric {
                MetricArg::Linf => Metric::Linf,
                MetricArg::L2 => Metric::L2,
            };
            let opts = StudyOptions { thresholds, metric, bbox };
            let seed = common.seed.unwrap_or(0);
            let stats = margin_study(&nominal, &model, n, seed, &opts).map_err(config)?;
            let out = out_dir(&common);
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["realization".to_string(), "margin".to_string()];
            for t in &stats.thresholds {
                header.push(format!("time_outside_{t}"));
                header.push(format!("crossings_{t}"));
            }
            w.write_record(&header).map_err(runtime)?;
            for (i, (m, bands)) in stats.margins.iter().zip(&stats.bands).enumerate() {
                let mut row = vec![i.to_string(), m.to_string()];
                for b in bands {
                    row.push(b.time_outside.to_string());
                    row.push(b.crossings.to_string());
                }
                w.write_record(&row).map_err(runtime)?;
            }
            io::write_file(&out.join("margins.csv"), w.into_inner().map_err(runtime)?).map_err(runtime)?;
            let report = json!({
                "n": n,
                "seed": seed,
                "bbox": stats.bbox,
                "metric": stats.metric,
                "margin_median": stats.margin_median,
                "margin_p95": stats.margin_p95,
                "bands": stats.summaries,
            });
            io::write_file(&out.join("stats.json"), io::to_json(&report).map_err(runtime)?).map_err(runtime)?;
            for i in 0..dump.min(n) {
                let traj =
                    crate::analysis::corrupt_trajectory(&nominal, &model, crate::analysis::realization_seed(seed, i));
                let mut buf = Vec::new();
                io::write_trajectory_csv(traj.dt, &traj.poses, &mut buf).map_err(runtime)?;
                io::write_file(&out.join("realizations").join(format!("{i:04}.csv")), buf).map_err(runtime)?;
            }
            say(stdout, io::to_json(&report).map_err(runtime)?.trim_end().to_string())
        }

        Command::Score { common: _, dist, gates, trajectory, arena, env, comp, json: as_json } => {
            let (distance, gates) = match trajectory {
                Some(p) => {
                    let arena = load_arena(arena.as_ref())?;
                    let rows = io::read_trajectory_csv(&io::read_file(&p).map_err(config)?[..]).map_err(config)?;
                    let pts: Vec<_> = rows.iter().map(|r| r.1.position()).collect();
                    (in_area_path_length(pts.iter().copied(), &arena), count_gate_crossings(pts, &arena) as u32)
                }
                None => {
                    (dist.ok_or_else(|| CliError::Config("give --dist or --trajectory".into()))?, gates.unwrap_or(0))
                }
            };
            let b = breakdown(&ScoreInput { distance, gates, alpha_env: env, alpha_comp: comp }).map_err(config)?;
            if as_json || dist.is_none() {
                say(stdout, io::to_json(&b).map_err(runtime)?.trim_end().to_string())
            } else {
                say(stdout, b.score.to_string())
            }
        }

        Command::Label { common, depth, seg, arena, pose, ground_aware } => {
            let geom: SensorGeometry = load_json_or_default(common.config.as_ref())?;
            geom.validate().map_err(CliError::Config)?;
            if let (Some(d), Some(s)) = (depth, seg) {
                let d = DepthRaster::from_pgm_bytes(&io::read_file(&d).map_err(config)?).map_err(config)?;
                let s = SegRaster::from_pgm_bytes(&io::read_file(&s).map_err(config)?).map_err(config)?;
                let labels = label_from_rasters(&d, &s, &geom, ground_aware).map_err(config)?;
                return say(stdout, json!({ "labels": labels }).to_string());
            }
            let pose = pose.ok_or_else(|| CliError::Config("give --depth/--seg or --pose".into()))?;
            if pose.len() != 3 {
                return Err(CliError::Config("--pose takes x,y,yaw".into()));
            }
            let arena = load_arena(arena.as_ref())?;
            let p = Pose2::new(pose[0], pose[1], pose[2]);
            let labels = sector_labels(&arena, p, &geom, ground_aware);
            let probs = sector_soft_probs(&arena, p, &geom, ground_aware);
            say(stdout, json!({ "labels": labels, "probs": probs }).to_string())
        }

        Command::Augment { common, input, resize } => {
            let params: AugParams = load_json_or_default(common.config.as_ref())?;
            params.validate().map_err(config)?;
            let out = common.out.clone().ok_or_else(|| CliError::Config("augment needs --out <file.pgm>".into()))?;
            let mut img = read_pgm(&io::read_file(&input).map_err(config)?).map_err(config)?;
            if let Some(spec) = resize {
                let (w, h) = spec
                    .split_once(['x', 'X'])
                    .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
                    .ok_or_else(|| CliError::Config(format!("bad --resize {spec:?}, expected WxH")))?;
                img = resize_gray(&img, w, h).map_err(config)?;
            }
            let result = augment(&img, &params, common.seed.unwrap_or(0));
            io::write_file(&out, write_pgm(&result)).map_err(runtime)
        }

        Command::Poses { common, arena } => {
            let plan: DatasetPlan = load_json_or_default(common.config.as_ref())?;
            plan.validate().map_err(CliError::Config)?;
            let arena = load_arena(arena.as_ref())?;
            let poses = sample_dataset_poses(&arena, &plan, common.seed.unwrap_or(0));
            let mut buf = Vec::new();
            io::write_poses_csv(&poses, &mut buf).map_err(runtime)?;
            match &common.out {
                Some(p) => io::write_file(p, buf).map_err(runtime),
                None => stdout.write_all(&buf).map_err(runtime),
            }
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_cli(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{rendered}") } else { write!(stdout, "{rendered}") };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
