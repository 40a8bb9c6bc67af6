//! CSV and JSON artifacts: episode traces, events, trajectories, poses.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use crate::augment::DatasetPose;
use crate::geom::Pose2;
use crate::vehicle::RunRecord;
use serde::Serialize;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: bad number in column {column:?}")]
    BadNumber { row: usize, column: &'static str },
}

pub const RECORD_COLUMNS: [&str; 13] =
    ["t", "x", "y", "yaw", "x_hat", "y_hat", "yaw_hat", "pl", "pc", "pr", "speed", "yawrate", "mode"];

pub fn write_record_csv<W: Write>(rec: &RunRecord, w: W) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RECORD_COLUMNS)?;
    for s in &rec.samples {
        out.write_record([
            s.t.to_string(),
            s.truth.x.to_string(),
            s.truth.y.to_string(),
            s.truth.yaw.to_string(),
            s.est.x.to_string(),
            s.est.y.to_string(),
            s.est.yaw.to_string(),
            s.probs.left.to_string(),
            s.probs.center.to_string(),
            s.probs.right.to_string(),
            s.truth.v.to_string(),
            s.setpoint.yaw_rate.to_string(),
            s.mode.name().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_events_csv<W: Write>(rec: &RunRecord, w: W) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "sample", "kind", "index"])?;
    for e in &rec.events {
        out.write_record([
            e.t.to_string(),
            e.sample.to_string(),
            e.kind.name().to_string(),
            e.index.map(|i| i.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| IoError::File { path: dir.display().to_string(), source })?;
        }
    }
    fs::write(path, bytes).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Writes `record.csv`, `events.csv` and `summary.json` under `dir`.
pub fn write_run(dir: &Path, stem: &str, rec: &RunRecord) -> Result<(), IoError> {
    let mut trace = Vec::new();
    write_record_csv(rec, &mut trace)?;
    write_file(&dir.join(format!("{stem}record.csv")), trace)?;
    let mut events = Vec::new();
    write_events_csv(rec, &mut events)?;
    write_file(&dir.join(format!("{stem}events.csv")), events)?;
    write_file(&dir.join(format!("{stem}summary.json")), to_json(&rec.summary)?)
}

/// Reads `(t, pose)` rows from any CSV with `t`, `x`, `y` columns and an
/// optional `yaw` column; other columns are ignored.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<(f64, Pose2)>, IoError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h.trim() == name);
    let t = col("t").ok_or(IoError::MissingColumn("t"))?;
    let x = col("x").ok_or(IoError::MissingColumn("x"))?;
    let y = col("y").ok_or(IoError::MissingColumn("y"))?;
    let yaw = col("yaw");
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |idx: usize, column: &'static str| -> Result<f64, IoError> {
            rec.get(idx).and_then(|s| s.trim().parse().ok()).ok_or(IoError::BadNumber { row: i + 1, column })
        };
        let yaw_v = match yaw {
            Some(c) => num(c, "yaw")?,
            None => 0.0,
        };
        rows.push((num(t, "t")?, Pose2::new(num(x, "x")?, num(y, "y")?, yaw_v)));
    }
    Ok(rows)
}

pub fn write_trajectory_csv<W: Write>(dt: f64, poses: &[Pose2], w: W) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "y", "yaw"])?;
    for (i, p) in poses.iter().enumerate() {
        out.write_record([(i as f64 * dt).to_string(), p.x.to_string(), p.y.to_string(), p.yaw.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_poses_csv<W: Write>(poses: &[DatasetPose], w: W) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "z", "yaw", "pitch", "roll", "group", "split"])?;
    for p in poses {
        out.write_record([
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            p.yaw().to_string(),
            p.pitch.to_string(),
            p.roll.to_string(),
            p.group.to_string(),
            p.split.name().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{build_arena, ArenaConfig};
    use crate::vehicle::{run_episode, EpisodeConfig, LoopTimings};

    fn short_record() -> RunRecord {
        let arena = build_arena(&ArenaConfig::default()).unwrap();
        let cfg = EpisodeConfig {
            timings: LoopTimings { episode_length: 2.0, ..LoopTimings::default() },
            ..EpisodeConfig::default()
        };
        run_episode(&arena, &cfg, 1).unwrap()
    }

    #[test]
    fn record_csv_shape_and_readback() {
        let rec = short_record();
        let mut buf = Vec::new();
        write_record_csv(&rec, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,y,yaw,x_hat,y_hat,yaw_hat,pl,pc,pr,speed,yawrate,mode\n"));
        assert_eq!(text.lines().count(), rec.samples.len() + 1);
        let rows = read_trajectory_csv(&buf[..]).unwrap();
        for (row, s) in rows.iter().zip(&rec.samples) {
            assert_eq!(row.0, s.t);
            assert_eq!(row.1, s.truth.pose());
        }
    }

    #[test]
    fn trajectory_roundtrip() {
        let poses = vec![Pose2::new(0.1, 0.2, 0.3), Pose2::new(-1.0, 1e-17, 3.0)];
        let mut buf = Vec::new();
        write_trajectory_csv(0.01, &poses, &mut buf).unwrap();
        let back: Vec<Pose2> = read_trajectory_csv(&buf[..]).unwrap().into_iter().map(|r| r.1).collect();
        assert_eq!(back, poses);
    }

    #[test]
    fn trajectory_errors() {
        assert!(matches!(read_trajectory_csv(&b"t,x\n0,1\n"[..]), Err(IoError::MissingColumn("y"))));
        assert!(matches!(
            read_trajectory_csv(&b"t,x,y\n0,1,zz\n"[..]),
            Err(IoError::BadNumber { row: 1, column: "y" })
        ));
    }
}
