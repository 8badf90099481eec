//! Tabular exports of schedules and trajectories.
//!
//! Both files are CSV with a header row and numbers written with 9
//! significant digits.
//!
//! `schedules.csv`: `cav_id,zone,R,D,T,P,mode`, one row per vehicle and
//! zone in path order. `D` is `inf` when the entry has no deadline.
//!
//! `trajectories.csv`: `cav_id,t,p,v,u,zone,mode`, one row per log sample.
//! `p` is the distance along the vehicle's path from its control-zone entry.

use std::io::{Read, Write};

use thiserror::Error;

use crate::scheduler::{CavId, Mode, Schedule};
use crate::sim::{TrajectoryLog, TrajectoryRow};
use crate::topology::ZoneId;

pub const SCHEDULE_HEADER: [&str; 7] = ["cav_id", "zone", "R", "D", "T", "P", "mode"];
pub const TRAJECTORY_HEADER: [&str; 7] = ["cav_id", "t", "p", "v", "u", "zone", "mode"];

const SIG_DIGITS: usize = 9;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: bad {column} value {value:?}")]
    Parse {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("unexpected header {found:?}")]
    Header { found: Vec<String> },
}

/// `x` rounded to 9 significant digits, in plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

fn parse_f64(row: usize, column: &'static str, s: &str) -> Result<f64, ExportError> {
    s.parse().map_err(|_| ExportError::Parse {
        row,
        column,
        value: s.to_string(),
    })
}

fn parse_u32(row: usize, column: &'static str, s: &str) -> Result<u32, ExportError> {
    s.parse().map_err(|_| ExportError::Parse {
        row,
        column,
        value: s.to_string(),
    })
}

fn parse_mode(row: usize, s: &str) -> Result<Mode, ExportError> {
    match s {
        "time_optimal" => Ok(Mode::TimeOptimal),
        "energy_optimal" => Ok(Mode::EnergyOptimal),
        _ => Err(ExportError::Parse {
            row,
            column: "mode",
            value: s.to_string(),
        }),
    }
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), ExportError> {
    let found = rdr.headers()?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(ExportError::Header {
            found: found.iter().map(String::from).collect(),
        });
    }
    Ok(())
}

/// One row of `schedules.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleRow {
    pub cav_id: CavId,
    pub zone: ZoneId,
    pub release: f64,
    /// `f64::INFINITY` when unbounded.
    pub deadline: f64,
    pub entry_time: f64,
    pub process_time: f64,
    pub mode: Mode,
}

/// Writes schedules in vehicle id order.
pub fn write_schedules<W: Write>(out: W, schedules: &[Schedule]) -> Result<(), ExportError> {
    let mut sorted: Vec<&Schedule> = schedules.iter().collect();
    sorted.sort_by_key(|s| s.cav_id);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCHEDULE_HEADER)?;
    for s in sorted {
        for e in &s.entries {
            w.write_record([
                s.cav_id.to_string(),
                e.zone.to_string(),
                fmt_sig(e.release),
                fmt_sig(e.deadline.unwrap_or(f64::INFINITY)),
                fmt_sig(e.entry_time),
                fmt_sig(e.process_time),
                e.mode.as_str().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_schedule_rows<W: Write>(out: W, rows: &[ScheduleRow]) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCHEDULE_HEADER)?;
    for r in rows {
        w.write_record([
            r.cav_id.to_string(),
            r.zone.to_string(),
            fmt_sig(r.release),
            fmt_sig(r.deadline),
            fmt_sig(r.entry_time),
            fmt_sig(r.process_time),
            r.mode.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_schedules<R: Read>(input: R) -> Result<Vec<ScheduleRow>, ExportError> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &SCHEDULE_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        out.push(ScheduleRow {
            cav_id: parse_u32(row, "cav_id", &rec[0])?,
            zone: parse_u32(row, "zone", &rec[1])?,
            release: parse_f64(row, "R", &rec[2])?,
            deadline: parse_f64(row, "D", &rec[3])?,
            entry_time: parse_f64(row, "T", &rec[4])?,
            process_time: parse_f64(row, "P", &rec[5])?,
            mode: parse_mode(row, &rec[6])?,
        });
    }
    Ok(out)
}

pub fn write_trajectories<W: Write>(out: W, log: &TrajectoryLog) -> Result<(), ExportError> {
    write_trajectory_rows(out, &log.rows)
}

pub fn write_trajectory_rows<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record([
            r.cav_id.to_string(),
            fmt_sig(r.t),
            fmt_sig(r.p),
            fmt_sig(r.v),
            fmt_sig(r.u),
            r.zone.to_string(),
            r.mode.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories<R: Read>(input: R) -> Result<Vec<TrajectoryRow>, ExportError> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &TRAJECTORY_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        out.push(TrajectoryRow {
            cav_id: parse_u32(row, "cav_id", &rec[0])?,
            t: parse_f64(row, "t", &rec[1])?,
            p: parse_f64(row, "p", &rec[2])?,
            v: parse_f64(row, "v", &rec[3])?,
            u: parse_f64(row, "u", &rec[4])?,
            zone: parse_u32(row, "zone", &rec[5])?,
            mode: parse_mode(row, &rec[6])?,
        });
    }
    Ok(out)
}
