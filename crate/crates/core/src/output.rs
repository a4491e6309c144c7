//! Versioned output files.
//!
//! Every text output starts with `# format = <tag>` followed by the effective
//! configuration as `# key = value` lines. CSV bodies follow with a header row.
//!
//! Snapshot layout (`snapshot_<t>.bin`):
//!
//! ```text
//! PMHD-SNAPSHOT v1
//! # key = value          (config echo, any number of lines)
//! dim = 2
//! cells = <n>
//! half_len = <L>
//! t = <time>
//! fields = rho m_x m_y b_x b_y
//! end
//! <5 · n² little-endian f64, field by field, cell index i + n·j>
//! ```
//!
//! `m_a` and `b_a` live on the `+a` face of each cell.

use crate::diagnostics::{DiagnosticsRecord, SweepTable};
use crate::error::{Error, Result};
use crate::field::{CellField, FaceField};
use crate::solver::State;
use serde::Serialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const DIAGNOSTICS_FORMAT: &str = "pmhd-diagnostics v1";
pub const SWEEP_FORMAT: &str = "pmhd-sweep v1";
pub const REPORT_FORMAT: &str = "pmhd-report v1";
pub const SNAPSHOT_MAGIC: &str = "PMHD-SNAPSHOT v1";

pub const DIAGNOSTICS_COLUMNS: [&str; 19] = [
    "time",
    "kinetic",
    "internal",
    "magnetic",
    "energy",
    "diss_viscous",
    "diss_resistive",
    "diss_friction",
    "mass",
    "h_cross_n",
    "h_dot_n",
    "curl_h_cross_n",
    "curl_h_dot_n",
    "u_solid",
    "div_u_solid",
    "h_ext",
    "curl_h_ext",
    "div_mu_h",
    "gaffney",
];

fn header(w: &mut impl Write, format: &str, echo: &[String]) -> Result<()> {
    writeln!(w, "# format = {format}")?;
    for line in echo {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, format: &str, echo: &[String], columns: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = create(path)?;
    header(&mut out, format, echo)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> Vec<f64> {
    vec![
        r.time,
        r.energy.kinetic,
        r.energy.internal,
        r.energy.magnetic,
        r.energy.total,
        r.dissipation.viscous,
        r.dissipation.resistive,
        r.dissipation.friction,
        r.mass,
        r.trace.h_cross_n,
        r.trace.h_dot_n,
        r.trace.curl_h_cross_n,
        r.trace.curl_h_dot_n,
        r.region.u_solid,
        r.region.div_u_solid,
        r.region.h_ext,
        r.region.curl_h_ext,
        r.div_mu_h,
        r.gaffney.unwrap_or(f64::NAN),
    ]
}

/// Time series, one row per record.
pub fn write_diagnostics_csv(path: &Path, echo: &[String], records: &[DiagnosticsRecord]) -> Result<()> {
    let columns: Vec<String> = DIAGNOSTICS_COLUMNS.iter().map(|c| c.to_string()).collect();
    let rows: Vec<Vec<f64>> = records.iter().map(diagnostics_row).collect();
    write_csv(path, DIAGNOSTICS_FORMAT, echo, &columns, &rows)
}

/// Sweep columns: the fixed ones, then `weak_<equation>` per tracked identity.
pub fn sweep_columns(table: &SweepTable) -> Vec<String> {
    let mut cols: Vec<String> = [
        "epsilon",
        "u_solid_time",
        "h_ext",
        "curl_h_ext",
        "h_cross_n",
        "h_dot_n",
        "curl_h_cross_n",
        "curl_h_dot_n",
        "energy_residual",
        "max_div_mu_h",
        "mass_drift",
        "rho_solid_l1",
        "steps",
    ]
    .iter()
    .map(|c| c.to_string())
    .collect();
    if let Some(row) = table.rows.iter().find(|r| r.error.is_none()) {
        cols.extend(row.weak.iter().map(|(name, _)| format!("weak_{name}")));
    }
    cols
}

pub fn write_sweep_csv(path: &Path, echo: &[String], table: &SweepTable) -> Result<()> {
    let columns = sweep_columns(table);
    let n_weak = columns.len() - 13;
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.epsilon,
                r.u_solid_time,
                r.h_ext,
                r.curl_h_ext,
                r.trace.h_cross_n,
                r.trace.h_dot_n,
                r.trace.curl_h_cross_n,
                r.trace.curl_h_dot_n,
                r.energy_residual,
                r.max_div_mu_h,
                r.mass_drift,
                r.rho_solid_l1,
                r.steps as f64,
            ];
            v.extend((0..n_weak).map(|k| r.weak.get(k).map_or(f64::NAN, |w| w.1)));
            v
        })
        .collect();
    write_csv(path, SWEEP_FORMAT, echo, &columns, &rows)
}

#[derive(Serialize)]
struct SweepJson<'a> {
    format: &'a str,
    config: &'a [String],
    columns: Vec<String>,
    rows: &'a [crate::diagnostics::SweepRow],
    rates: &'a crate::diagnostics::SweepRates,
}

pub fn write_sweep_json(path: &Path, echo: &[String], table: &SweepTable) -> Result<()> {
    let doc = SweepJson {
        format: SWEEP_FORMAT,
        config: echo,
        columns: sweep_columns(table),
        rows: &table.rows,
        rates: &table.rates,
    };
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Plain-text report with the format tag and config echo on top.
pub fn write_report(path: &Path, echo: &[String], lines: &[String]) -> Result<()> {
    let mut out = create(path)?;
    header(&mut out, REPORT_FORMAT, echo)?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// File name for a snapshot at time `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_{t:.6}.bin")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub echo: Vec<String>,
    pub cells: usize,
    pub half_len: f64,
    pub state: State,
}

pub fn write_snapshot(path: &Path, echo: &[String], cells: usize, half_len: f64, state: &State) -> Result<()> {
    let n2 = cells * cells;
    if state.rho.len() != n2 || state.m.dim() != 2 || state.b.dim() != 2 {
        return Err(Error::InvalidArgument("snapshots hold two-dimensional states only".into()));
    }
    let mut out = create(path)?;
    writeln!(out, "{SNAPSHOT_MAGIC}")?;
    for line in echo {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "dim = 2")?;
    writeln!(out, "cells = {cells}")?;
    writeln!(out, "half_len = {half_len}")?;
    writeln!(out, "t = {}", state.t)?;
    writeln!(out, "fields = rho m_x m_y b_x b_y")?;
    writeln!(out, "end")?;
    let fields = [&state.rho.0[..], state.m.comp(0), state.m.comp(1), state.b.comp(0), state.b.comp(1)];
    for f in fields {
        for v in f {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bad = |msg: &str| Error::Io(format!("{}: {msg}", path.display()));
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != SNAPSHOT_MAGIC {
        return Err(bad("not a snapshot file"));
    }
    let (mut echo, mut cells, mut half_len, mut t) = (Vec::new(), None, None, None);
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("truncated header"));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        if let Some(c) = l.strip_prefix("# ") {
            echo.push(c.to_string());
            continue;
        }
        let (k, v) = l.split_once(" = ").ok_or_else(|| bad("malformed header line"))?;
        match k {
            "dim" if v != "2" => return Err(bad("only dim = 2 is supported")),
            "cells" => cells = v.parse::<usize>().ok(),
            "half_len" => half_len = v.parse::<f64>().ok(),
            "t" => t = v.parse::<f64>().ok(),
            "fields" if v != "rho m_x m_y b_x b_y" => return Err(bad("unexpected field list")),
            _ => {}
        }
    }
    let (cells, half_len, t) = match (cells, half_len, t) {
        (Some(c), Some(l), Some(t)) => (c, l, t),
        _ => return Err(bad("missing cells, half_len or t")),
    };
    let n2 = cells * cells;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 5 * n2 * 8 {
        return Err(bad("payload size does not match the header"));
    }
    let mut vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = || (&mut vals).take(n2).collect::<Vec<f64>>();
    let rho = CellField(take());
    let m = FaceField(vec![take(), take()]);
    let b = FaceField(vec![take(), take()]);
    Ok(Snapshot {
        echo,
        cells,
        half_len,
        state: State { t, rho, m, b },
    })
}
