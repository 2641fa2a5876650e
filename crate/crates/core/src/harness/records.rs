//! Per-seed CSV artefacts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::EvalRecord;
use crate::error::{Error, Result};

pub const EVAL_FILE: &str = "eval.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const EVAL_TIMES_FILE: &str = "eval_times.csv";

/// Writes `step, seed, ep_return_1..ep_return_K, mean_return`.
pub fn write_eval_csv(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let k = records.first().map_or(0, |r| r.returns.len());
    if records.iter().any(|r| r.returns.len() != k) {
        return Err(Error::Report("evaluation records differ in episode count".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["step".to_string(), "seed".to_string()];
    header.extend((1..=k).map(|i| format!("ep_return_{i}")));
    header.push("mean_return".into());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.step.to_string(), r.seed.to_string()];
        row.extend(r.returns.iter().map(f64::to_string));
        row.push(r.mean_return.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a file written by [`write_eval_csv`]. Wall-clock times are not part
/// of the file and come back as zero.
pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let k = header.len().saturating_sub(3);
    let expected: Vec<String> = std::iter::once("step".to_string())
        .chain(std::iter::once("seed".to_string()))
        .chain((1..=k).map(|i| format!("ep_return_{i}")))
        .chain(std::iter::once("mean_return".to_string()))
        .collect();
    if header.len() < 3 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Report(format!("{}: unexpected eval CSV header", path.display())));
    }
    let bad = |what: &str| Error::Report(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let step = row[0].parse().map_err(|_| bad("step"))?;
        let seed = row[1].parse().map_err(|_| bad("seed"))?;
        let returns = (0..k)
            .map(|i| row[2 + i].parse::<f64>().map_err(|_| bad("return")))
            .collect::<Result<Vec<_>>>()?;
        let mean_return = row[2 + k].parse().map_err(|_| bad("mean_return"))?;
        out.push(EvalRecord {
            step,
            seed,
            returns,
            mean_return,
            wall_clock: 0.0,
        });
    }
    Ok(out)
}

pub fn write_eval_times(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "unix_time"])?;
    for r in records {
        w.write_record([r.step.to_string(), format!("{:.3}", r.wall_clock)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Training statistics aggregated over one diagnostics window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub step: u64,
    pub episodes: u64,
    pub updates: u64,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub action_mean: f64,
    pub action_std: f64,
    pub random_actions: u64,
    pub clamped_actions: u64,
    /// Mean undiscounted return of training episodes finished in the window.
    pub episode_return: Option<f64>,
}

pub fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "step",
            "episodes",
            "updates",
            "critic_loss",
            "actor_loss",
            "action_mean",
            "action_std",
            "random_actions",
            "clamped_actions",
            "episode_return",
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EVAL_FILE);
        let records = vec![
            EvalRecord::new(5000, 3, vec![100.0, -100.0, 100.0]),
            EvalRecord::new(10_000, 3, vec![-0.1, 1.0 / 3.0, -412.123_456_789]),
        ];
        write_eval_csv(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,seed,ep_return_1,ep_return_2,ep_return_3,mean_return\n"));
        let back = read_eval_csv(&path).unwrap();
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(
                (a.step, a.seed, &a.returns, a.mean_return),
                (b.step, b.seed, &b.returns, b.mean_return)
            );
        }
    }

    #[test]
    fn foreign_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "step,seed,score\n1,2,3\n").unwrap();
        assert!(read_eval_csv(&path).is_err());
    }

    #[test]
    fn diagnostics_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(DIAGNOSTICS_FILE);
        let rows = vec![DiagnosticsRow {
            step: 1000,
            episodes: 16,
            updates: 0,
            critic_loss: None,
            actor_loss: Some(-1.5),
            action_mean: 0.01,
            action_std: 0.57,
            random_actions: 1000,
            clamped_actions: 0,
            episode_return: Some(-75.0),
        }];
        write_diagnostics(&path, &rows).unwrap();
        assert_eq!(read_diagnostics(&path).unwrap(), rows);
    }
}
