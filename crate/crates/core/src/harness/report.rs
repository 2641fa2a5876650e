//! Cross-seed aggregation, smoothing and learning-curve plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::EvalRecord;
use super::records::{read_eval_csv, EVAL_FILE};
use crate::error::{Error, Result};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const PLOT_FILE: &str = "learning_curve.svg";
pub const DEFAULT_SMOOTHING: f64 = 0.9;

/// Exponential smoothing `y'_k = w·y'_{k−1} + (1−w)·y_k`, `y'_0 = y_0`.
pub fn smooth(series: &[f64], weight: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&weight) {
        return Err(Error::Config(format!("smoothing weight {weight} outside [0, 1)")));
    }
    let mut out = Vec::with_capacity(series.len());
    for (k, &y) in series.iter().enumerate() {
        out.push(if k == 0 {
            y
        } else {
            weight * out[k - 1] + (1.0 - weight) * y
        });
    }
    Ok(out)
}

/// One row of the cross-seed aggregate. Bands are mean ± 2 standard
/// deviations (population, over seeds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub step: u64,
    pub seeds: usize,
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
    pub smoothed_mean: f64,
    pub smoothed_lower: f64,
    pub smoothed_upper: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// A labelled evaluation series (one seed).
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub label: String,
    pub records: Vec<EvalRecord>,
}

/// Aggregates per-step `mean_return` across runs that share one step grid.
pub fn aggregate(runs: &[RunSeries], weight: f64) -> Result<Vec<Aggregate>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Report("no runs to aggregate".into()))?;
    let grid: Vec<u64> = first.records.iter().map(|r| r.step).collect();
    let offending: Vec<&str> = runs
        .iter()
        .filter(|r| r.records.iter().map(|x| x.step).ne(grid.iter().copied()))
        .map(|r| r.label.as_str())
        .collect();
    if !offending.is_empty() {
        return Err(Error::Report(format!(
            "step grid differs from {} in: {}",
            first.label,
            offending.join(", ")
        )));
    }
    let raw: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| r.records.iter().map(|x| x.mean_return).collect())
        .collect();
    let smoothed = raw.iter().map(|s| smooth(s, weight)).collect::<Result<Vec<_>>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(k, &step)| {
            let (m, s) = mean_std(&raw.iter().map(|r| r[k]).collect::<Vec<_>>());
            let (sm, ss) = mean_std(&smoothed.iter().map(|r| r[k]).collect::<Vec<_>>());
            Aggregate {
                step,
                seeds: runs.len(),
                mean: m,
                std: s,
                lower: m - 2.0 * s,
                upper: m + 2.0 * s,
                smoothed_mean: sm,
                smoothed_lower: sm - 2.0 * ss,
                smoothed_upper: sm + 2.0 * ss,
            }
        })
        .collect())
}

/// Finds eval CSVs under each path: either a seed directory holding one, or a
/// training output directory with `seed_*` children.
pub fn collect_runs(paths: &[PathBuf]) -> Result<Vec<RunSeries>> {
    let mut runs = Vec::new();
    for p in paths {
        let direct = p.join(EVAL_FILE);
        if direct.is_file() {
            runs.push(RunSeries {
                label: p.display().to_string(),
                records: read_eval_csv(&direct)?,
            });
            continue;
        }
        let mut children: Vec<PathBuf> = std::fs::read_dir(p)
            .map_err(|e| Error::io(p, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|c| c.join(EVAL_FILE).is_file())
            .collect();
        if children.is_empty() {
            return Err(Error::Report(format!("{}: no {EVAL_FILE} found", p.display())));
        }
        children.sort();
        for c in children {
            runs.push(RunSeries {
                label: c.display().to_string(),
                records: read_eval_csv(&c.join(EVAL_FILE))?,
            });
        }
    }
    Ok(runs)
}

pub fn write_aggregate(path: &Path, rows: &[Aggregate]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Self-contained SVG of the smoothed mean with its ±2σ band.
pub fn render_svg(rows: &[Aggregate], title: &str) -> String {
    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let x_max = rows.last().map_or(1.0, |r| r.step as f64).max(1.0);
    let mut y_min = rows.iter().map(|r| r.smoothed_lower).fold(f64::INFINITY, f64::min);
    let mut y_max = rows.iter().map(|r| r.smoothed_upper).fold(f64::NEG_INFINITY, f64::max);
    if !y_min.is_finite() || !y_max.is_finite() {
        (y_min, y_max) = (-1.0, 1.0);
    }
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let px = |x: f64| left + x / x_max * (w - left - right);
    let py = |y: f64| top + (y_max - y) / (y_max - y_min) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    for i in 0..=4 {
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{}" y1="{py:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{y:.1}</text>"##,
            w - right,
            left - 6.0,
            py(y) + 4.0,
            py = py(y)
        );
        let x = x_max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{x:.0}</text>"#,
            px(x),
            h - bottom + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">training step</text>"#,
        (left + w - right) / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">return</text>"#,
        h / 2.0,
        h / 2.0
    );
    if !rows.is_empty() {
        let mut band: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.step as f64), py(r.smoothed_upper)))
            .collect();
        band.extend(
            rows.iter()
                .rev()
                .map(|r| format!("{:.2},{:.2}", px(r.step as f64), py(r.smoothed_lower))),
        );
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.25"/>"##,
            band.join(" ")
        );
        let line: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.step as f64), py(r.smoothed_mean)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
            line.join(" ")
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Reads the runs under `paths`, writes `aggregate.csv` and
/// `learning_curve.svg` into `out`, and returns the aggregate.
pub fn report(paths: &[PathBuf], out: &Path, weight: f64) -> Result<Vec<Aggregate>> {
    let runs = collect_runs(paths)?;
    let rows = aggregate(&runs, weight)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_aggregate(&out.join(AGGREGATE_FILE), &rows)?;
    let title = format!("mean return over {} run(s), ±2 std, smoothing {weight}", runs.len());
    let svg_path = out.join(PLOT_FILE);
    std::fs::write(&svg_path, render_svg(&rows, &title)).map_err(|e| Error::io(&svg_path, e))?;
    Ok(rows)
}
