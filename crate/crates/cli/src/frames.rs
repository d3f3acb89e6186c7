//! Long-format frame streams: one `t,s1,s2,y` record per cell.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;
use sopchart_core::{CountGrid, Frame, RealGrid};

use crate::error::{CliError, CliResult};

/// Frames in time order, keyed by their inspection time.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub frames: Vec<(u64, Frame)>,
}

enum Value {
    Count(u64),
    Real(f64),
}

struct Cell {
    t: u64,
    s1: usize,
    s2: usize,
    y: Value,
}

#[derive(Deserialize)]
struct CsvRecord {
    t: u64,
    s1: usize,
    s2: usize,
    y: String,
}

#[derive(Deserialize)]
struct JsonRecord {
    t: u64,
    s1: usize,
    s2: usize,
    y: serde_json::Number,
}

fn parse_y(raw: &str) -> CliResult<Value> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(Value::Count(v));
    }
    raw.parse::<f64>().map(Value::Real).map_err(|_| CliError::invalid(format!("y value {raw:?} is not a number")))
}

fn is_ndjson(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("ndjson" | "jsonl"))
}

pub fn read_stream(path: &Path) -> CliResult<Stream> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cells = if is_ndjson(path) { parse_ndjson(&text)? } else { parse_csv(&text)? };
    assemble(cells)
}

fn parse_csv(text: &str) -> CliResult<Vec<Cell>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut cells = Vec::new();
    for (i, rec) in rdr.deserialize::<CsvRecord>().enumerate() {
        let r = rec.map_err(|e| CliError::invalid(format!("record {}: {e}", i + 1)))?;
        cells.push(Cell { t: r.t, s1: r.s1, s2: r.s2, y: parse_y(&r.y)? });
    }
    Ok(cells)
}

fn parse_ndjson(text: &str) -> CliResult<Vec<Cell>> {
    let mut cells = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: JsonRecord =
            serde_json::from_str(line).map_err(|e| CliError::invalid(format!("line {}: {e}", i + 1)))?;
        let y = match r.y.as_u64() {
            Some(v) => Value::Count(v),
            None => Value::Real(r.y.as_f64().ok_or_else(|| CliError::invalid(format!("line {}: bad y", i + 1)))?),
        };
        cells.push(Cell { t: r.t, s1: r.s1, s2: r.s2, y });
    }
    Ok(cells)
}

/// Groups cells by time and checks that every frame covers the same grid
/// exactly once. The stream is a count stream when every `y` is an integer.
fn assemble(cells: Vec<Cell>) -> CliResult<Stream> {
    if cells.is_empty() {
        return Err(CliError::invalid("the frame stream is empty"));
    }
    if cells.iter().any(|c| c.t == 0) {
        return Err(CliError::invalid("inspection times start at 1"));
    }
    let rows = cells.iter().map(|c| c.s1).max().unwrap_or(0) + 1;
    let cols = cells.iter().map(|c| c.s2).max().unwrap_or(0) + 1;
    let counts = cells.iter().all(|c| matches!(c.y, Value::Count(_)));
    let mut by_t: BTreeMap<u64, Vec<Option<f64>>> = BTreeMap::new();
    let mut count_vals: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for c in &cells {
        let slot = by_t.entry(c.t).or_insert_with(|| vec![None; rows * cols]);
        let k = c.s1 * cols + c.s2;
        if slot[k].is_some() {
            return Err(CliError::invalid(format!("cell ({}, {}) repeated at t={}", c.s1, c.s2, c.t)));
        }
        let v = match c.y {
            Value::Count(v) => {
                count_vals.entry(c.t).or_insert_with(|| vec![0; rows * cols])[k] = v;
                v as f64
            }
            Value::Real(v) => v,
        };
        slot[k] = Some(v);
    }
    let mut frames = Vec::with_capacity(by_t.len());
    for (t, slot) in by_t {
        if let Some(k) = slot.iter().position(|v| v.is_none()) {
            return Err(CliError::invalid(format!(
                "frame t={t} is incomplete: cell ({}, {}) of a {rows}x{cols} grid is missing",
                k / cols,
                k % cols
            )));
        }
        let frame = if counts {
            Frame::Count(CountGrid::new(rows, cols, count_vals.remove(&t).unwrap_or_default())?)
        } else {
            Frame::Real(RealGrid::new(rows, cols, slot.into_iter().flatten().collect())?)
        };
        frames.push((t, frame));
    }
    Ok(Stream { frames })
}

/// Writes frames as CSV, or NDJSON when `ndjson` is set. Real values use
/// the shortest representation that round-trips and always carry a
/// decimal point or exponent, so they are never mistaken for counts.
pub fn write_stream(out: &mut dyn Write, frames: &[(u64, Frame)], ndjson: bool) -> CliResult<()> {
    if !ndjson {
        writeln!(out, "t,s1,s2,y")?;
    }
    for (t, f) in frames {
        for s1 in 0..f.rows() {
            for s2 in 0..f.cols() {
                let y = match f {
                    Frame::Real(g) => format!("{:?}", g.get(s1, s2)),
                    Frame::Count(g) => g.get(s1, s2).to_string(),
                };
                if ndjson {
                    writeln!(out, "{{\"t\":{t},\"s1\":{s1},\"s2\":{s2},\"y\":{y}}}")?;
                } else {
                    writeln!(out, "{t},{s1},{s2},{y}")?;
                }
            }
        }
    }
    Ok(())
}

pub fn is_ndjson_path(path: Option<&Path>) -> bool {
    path.is_some_and(is_ndjson)
}

/// Reads a bootstrap pool: one value per line, blank lines and `#` comments skipped.
pub fn read_pool(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<f64>().map_err(|_| CliError::invalid(format!("pool value {l:?} is not a number"))))
        .collect()
}
