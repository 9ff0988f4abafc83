//! CSV and JSON records: detection labels, episode traces, reward curves
//! and metric reports. Every writer is deterministic.

use std::fs;
use std::io::Write;
use std::path::Path;

use gridlander_core::dqn::{EpisodeTrace, RewardTrace};
use gridlander_core::losses::{BBox, MetricsSummary};

use crate::error::{Error, Result};

pub const LABEL_HEADER: [&str; 6] = ["image", "x_min", "y_min", "x_max", "y_max", "objectness"];
pub const TRACE_HEADER: [&str; 11] = [
    "episode", "step", "dx", "dy", "dz", "action", "reward", "next_dx", "next_dy", "next_dz", "terminal",
];
pub const REWARD_HEADER: [&str; 4] = ["episode", "return", "moving_avg", "epsilon"];

/// Ground truth for one image. `bbox` is `None` when the marker is absent
/// (objectness 0); coordinates are normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub image: String,
    pub bbox: Option<BBox>,
}

impl SampleRecord {
    pub fn objectness(&self) -> u8 {
        u8::from(self.bbox.is_some())
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

/// Reads a label file. Coordinates are parsed as `f32` so that labels carry
/// the same precision as image-derived values.
pub fn read_labels(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(LABEL_HEADER) {
        return Err(Error::format(path, format!("header must be {}", LABEL_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let bad = |what: &str| Error::format(path, format!("line {line}: {what}"));
        let image = row[0].to_string();
        if image.is_empty() {
            return Err(bad("empty image name"));
        }
        let bbox = match &row[5] {
            "0" => None,
            "1" => {
                let mut c = [0.0f64; 4];
                for (k, v) in c.iter_mut().enumerate() {
                    let x: f32 = row[k + 1].parse().map_err(|_| bad(&format!("bad {}", LABEL_HEADER[k + 1])))?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(bad(&format!("{} = {x} outside [0, 1]", LABEL_HEADER[k + 1])));
                    }
                    *v = x as f64;
                }
                Some(BBox::from_corners(c).map_err(|e| bad(&e.to_string()))?)
            }
            other => return Err(bad(&format!("objectness '{other}' is not 0 or 1"))),
        };
        if out.iter().any(|r: &SampleRecord| r.image == image) {
            return Err(bad(&format!("duplicate image {image}")));
        }
        out.push(SampleRecord { image, bbox });
    }
    Ok(out)
}

pub fn write_labels(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(LABEL_HEADER).map_err(|e| csv_err(path, e))?;
    for r in records {
        let row = match &r.bbox {
            Some(b) => [b.x_min, b.y_min, b.x_max, b.y_max].map(|v| (v as f32).to_string()),
            None => Default::default(),
        };
        w.write_record([r.image.as_str(), &row[0], &row[1], &row[2], &row[3], &r.objectness().to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn trace_rows(traces: &[EpisodeTrace]) -> Vec<[String; 11]> {
    let mut rows = Vec::new();
    for (e, t) in traces.iter().enumerate() {
        for s in &t.steps {
            rows.push([
                e.to_string(),
                s.step.to_string(),
                s.state.dx.to_string(),
                s.state.dy.to_string(),
                s.state.dz.to_string(),
                s.action.name().to_string(),
                s.reward.to_string(),
                s.next.dx.to_string(),
                s.next.dy.to_string(),
                s.next.dz.to_string(),
                s.terminal.name().to_string(),
            ]);
        }
    }
    rows
}

/// One row per environment step of every episode.
pub fn write_trace(path: &Path, traces: &[EpisodeTrace]) -> Result<()> {
    write_csv(path, &TRACE_HEADER, trace_rows(traces))
}

/// Per-episode return with its trailing moving average.
pub fn write_rewards(path: &Path, trace: &RewardTrace, window: usize) -> Result<()> {
    let avg = trace.moving_average(window);
    let rows = trace.episodes.iter().zip(avg).map(|(e, m)| {
        [
            e.episode.to_string(),
            e.total_return.to_string(),
            m.to_string(),
            e.epsilon.to_string(),
        ]
    });
    write_csv(path, &REWARD_HEADER, rows)
}

fn write_csv<const N: usize>(path: &Path, header: &[&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn metrics_json(m: &MetricsSummary) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialize")
}

/// Two-row table with right-aligned columns.
pub fn metrics_table(m: &MetricsSummary) -> String {
    let cells = [
        ("TPR", m.tpr),
        ("Recall", m.recall),
        ("F1", m.f1),
        ("AP50", m.ap50),
        ("AP50:95", m.ap50_95),
    ];
    let mut head = String::new();
    let mut vals = String::new();
    for (i, (name, v)) in cells.iter().enumerate() {
        let v = format!("{v:.4}");
        let w = name.len().max(v.len());
        let sep = if i == 0 { "" } else { "  " };
        head.push_str(&format!("{sep}{name:>w$}"));
        vals.push_str(&format!("{sep}{v:>w$}"));
    }
    format!("{head}\n{vals}\n")
}

/// Writes the JSON report to `path` and the text table next to it with a
/// `.txt` extension.
pub fn write_metrics(path: &Path, m: &MetricsSummary) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{}", metrics_json(m)).map_err(|e| Error::io(path, e))?;
    let table = path.with_extension("txt");
    fs::write(&table, metrics_table(m)).map_err(|e| Error::io(&table, e))
}
