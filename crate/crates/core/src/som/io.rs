//! Plain-text map files.
//!
//! ```text
//! spellmap-som 1
//! rows 10
//! cols 10
//! dim 10
//! seed 42
//! schedule {"mode":"batch",...}        (JSON, or `none`)
//! trace 50
//! <epoch> <radius> <quantization error>  (one line per epoch)
//! codes
//! <v_1> ... <v_dim>                      (one line per unit, row-major unit order)
//! ```
//!
//! Every real is written with 17 significant digits so files round-trip bit for bit.

use super::{GridTopology, SomError, SomMap, TraceEntry, TrainingSchedule};
use crate::matrix::Matrix;
use std::io::{BufRead, Write};

pub const MAP_FORMAT: &str = "spellmap-som 1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_map<W: Write>(map: &SomMap, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAP_FORMAT}")?;
    writeln!(out, "rows {}", map.topology.rows)?;
    writeln!(out, "cols {}", map.topology.cols)?;
    writeln!(out, "dim {}", map.dim())?;
    writeln!(out, "seed {}", map.seed)?;
    match &map.schedule {
        Some(s) => writeln!(out, "schedule {}", serde_json::to_string(s).map_err(std::io::Error::other)?)?,
        None => writeln!(out, "schedule none")?,
    }
    writeln!(out, "trace {}", map.trace.len())?;
    for t in &map.trace {
        writeln!(out, "{} {} {}", t.epoch, real(t.radius), real(t.quantization_error))?;
    }
    writeln!(out, "codes")?;
    for row in map.codes.rows() {
        let line: Vec<String> = row.iter().map(|&v| real(v)).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()
}

pub fn read_map<R: BufRead>(input: R) -> Result<SomMap, SomError> {
    let bad = |m: String| SomError::Malformed(m);
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String, SomError> {
        lines
            .next()
            .ok_or_else(|| SomError::Malformed(format!("unexpected end of file, expected {what}")))?
            .map_err(|e| SomError::Malformed(e.to_string()))
    };
    let header = next("format line")?;
    if header.trim() != MAP_FORMAT {
        return Err(bad(format!("unsupported format line '{header}'")));
    }
    let mut field = |key: &str| -> Result<String, SomError> {
        let line = next(key)?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| SomError::Malformed(format!("expected '{key}', found '{line}'")))
    };
    let parse_usize = |s: String, key: &str| s.trim().parse::<usize>().map_err(|_| SomError::Malformed(format!("bad {key}")));
    let rows = parse_usize(field("rows")?, "rows")?;
    let cols = parse_usize(field("cols")?, "cols")?;
    let dim = parse_usize(field("dim")?, "dim")?;
    let seed: u64 = field("seed")?.trim().parse().map_err(|_| bad("bad seed".into()))?;
    let schedule_text = field("schedule")?;
    let schedule: Option<TrainingSchedule> = if schedule_text.trim() == "none" {
        None
    } else {
        Some(serde_json::from_str(&schedule_text).map_err(|e| bad(format!("bad schedule: {e}")))?)
    };
    let n_trace = parse_usize(field("trace")?, "trace")?;
    let parse_real = |s: &str| s.parse::<f64>().map_err(|_| SomError::Malformed(format!("bad number '{s}'")));
    let mut trace = Vec::with_capacity(n_trace);
    for _ in 0..n_trace {
        let line = next("trace entry")?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(format!("bad trace line '{line}'")));
        }
        trace.push(TraceEntry {
            epoch: parts[0].parse().map_err(|_| bad("bad epoch".into()))?,
            radius: parse_real(parts[1])?,
            quantization_error: parse_real(parts[2])?,
        });
    }
    if next("codes")?.trim() != "codes" {
        return Err(bad("missing codes section".into()));
    }
    let topology = GridTopology::new(rows, cols)?;
    let mut data = Vec::with_capacity(topology.units() * dim);
    for u in 0..topology.units() {
        let line = next("code vector")?;
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(parse_real(tok)?);
        }
        if data.len() - before != dim {
            return Err(bad(format!("code vector {u} has wrong length")));
        }
    }
    let mut map = SomMap::from_codes(topology, Matrix::from_row_major(topology.units(), dim, data))?;
    map.trace = trace;
    map.schedule = schedule;
    map.seed = seed;
    Ok(map)
}
