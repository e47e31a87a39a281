//! Trace serialization: one CSV row per (iteration, owner), carrying the
//! realized actions, rewards, privacy budget, and round aggregates.
//! Values are written with nine significant digits so rows recompute
//! against the payoff model when parsed back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::engine::{DoRow, IterationRecord};
use crate::game_model::{ActionGrids, DoProfile};
use crate::privacy;

pub const TRACE_HEADER: &str = "t,do_id,price_index,price,noise_index,delta_sigma,sigma,alpha,\
do_reward,curator_reward_n,mean_delta_sigma,mean_price,curator_total";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot write trace {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("trace parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        // Nine significant digits.
        format!("{v:.8e}")
    }
}

/// Writes the full trace as CSV, rows ordered by `(t, do_id)`.
pub fn write_trace(
    records: &[IterationRecord],
    profiles: &[DoProfile],
    grids: &ActionGrids,
    path: impl AsRef<Path>,
) -> Result<(), TraceError> {
    let path = path.as_ref();
    let io_err = |source| TraceError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    (|| {
        writeln!(w, "{TRACE_HEADER}")?;
        for rec in records {
            for row in &rec.rows {
                let price = grids.price_of_index(row.price_index).expect("on-grid");
                let ds = grids
                    .noise_saving_of_index(row.noise_index)
                    .expect("on-grid");
                let report = privacy::privacy_report(row.noise_index, &profiles[row.do_id], grids)
                    .expect("on-grid");
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    rec.t,
                    row.do_id,
                    row.price_index,
                    fmt_value(price),
                    row.noise_index,
                    fmt_value(ds),
                    fmt_value(report.sigma),
                    fmt_value(report.alpha),
                    fmt_value(row.do_reward),
                    fmt_value(row.curator_reward),
                    fmt_value(rec.mean_delta_sigma),
                    fmt_value(rec.mean_price),
                    fmt_value(rec.curator_total),
                )?;
            }
        }
        w.flush()
    })()
    .map_err(io_err)
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub row: DoRow,
    pub price: f64,
    pub delta_sigma: f64,
    pub sigma: f64,
    pub mean_delta_sigma: f64,
    pub mean_price: f64,
    pub curator_total: f64,
}

/// Parses a trace CSV written by [`write_trace`].
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>, TraceError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if i == 0 {
            if line != TRACE_HEADER {
                return Err(TraceError::Parse {
                    line: 1,
                    reason: "unexpected header".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(TraceError::Parse {
                line: i + 1,
                reason: format!("expected 13 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str, line: usize| -> Result<f64, TraceError> {
            match s {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => s.parse().map_err(|_| TraceError::Parse {
                    line,
                    reason: format!("bad float '{s}'"),
                }),
            }
        };
        let parse_u = |s: &str, line: usize| -> Result<u64, TraceError> {
            s.parse().map_err(|_| TraceError::Parse {
                line,
                reason: format!("bad integer '{s}'"),
            })
        };
        rows.push(TraceRow {
            t: parse_u(fields[0], i + 1)?,
            row: DoRow {
                do_id: parse_u(fields[1], i + 1)? as usize,
                price_index: parse_u(fields[2], i + 1)? as usize,
                noise_index: parse_u(fields[4], i + 1)? as usize,
                do_reward: parse_f(fields[8], i + 1)?,
                curator_reward: parse_f(fields[9], i + 1)?,
                alpha: parse_f(fields[7], i + 1)?,
            },
            price: parse_f(fields[3], i + 1)?,
            delta_sigma: parse_f(fields[5], i + 1)?,
            sigma: parse_f(fields[6], i + 1)?,
            mean_delta_sigma: parse_f(fields[10], i + 1)?,
            mean_price: parse_f(fields[11], i + 1)?,
            curator_total: parse_f(fields[12], i + 1)?,
        });
    }
    Ok(rows)
}
