//! Time series, event records and run reports on disk.
//!
//! Time-series rows carry one record per step attempt, rejected attempts
//! included, with numbers printed to 12 significant digits. Event records
//! are JSON lines, one per limiter transition, deadlock episode and
//! chattering interval, each tagged with the schema version.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{detect_chattering, detect_deadlock, transitions, ChatterInterval, DeadlockEpisode, Transition};
use crate::error::{Error, Result};
use crate::report::{RunReport, SCHEMA_VERSION};
use crate::scenario::ScenarioConfig;
use crate::sim::EventLog;
use crate::step::StepRecord;

pub const TIMESERIES_COLUMNS: [&str; 11] =
    ["t", "h_used", "u", "x", "y", "w", "z_i", "z_u", "z_l", "n_iterations", "converged"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Format {
    #[default]
    Csv,
    JsonLines,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}; expected csv or json-lines"))),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn row_values(r: &StepRecord) -> [String; 11] {
    let s = &r.state_after;
    let (zi, zu, zl) = s.limiter.flags();
    [
        num(r.t),
        num(r.h_used),
        num(s.u),
        num(s.x),
        num(s.y),
        num(s.w),
        zi.to_string(),
        zu.to_string(),
        zl.to_string(),
        r.n_iterations.to_string(),
        r.converged().to_string(),
    ]
}

/// Renders the time series of a log.
pub fn timeseries_string(log: &EventLog, format: Format) -> Result<String> {
    if log.records.is_empty() {
        return Err(Error::InvalidArgument("cannot write the time series of an empty log".into()));
    }
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&TIMESERIES_COLUMNS.join(","));
            out.push('\n');
            for r in &log.records {
                out.push_str(&row_values(r).join(","));
                out.push('\n');
            }
        }
        Format::JsonLines => {
            for r in &log.records {
                // the fixed-width exponent form is valid JSON number syntax
                let fields: Vec<String> =
                    TIMESERIES_COLUMNS.iter().zip(row_values(r)).map(|(k, v)| format!("\"{k}\":{v}")).collect();
                let _ = writeln!(out, "{{{}}}", fields.join(","));
            }
        }
    }
    Ok(out)
}

pub fn write_timeseries(log: &EventLog, path: impl AsRef<Path>, format: Format) -> Result<()> {
    write_file(path.as_ref(), &timeseries_string(log, format)?)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EventBody<'a> {
    Transition(&'a Transition),
    Deadlock(&'a DeadlockEpisode),
    Chattering(&'a ChatterInterval),
}

#[derive(Serialize)]
struct EventLine<'a> {
    schema_version: u32,
    #[serde(flatten)]
    body: EventBody<'a>,
}

/// Renders the event records of a log as JSON lines.
pub fn events_string(log: &EventLog, config: &ScenarioConfig) -> String {
    let trans = transitions(log);
    let deadlocks = detect_deadlock(log);
    let chatter = detect_chattering(log, config.analysis.chatter_window, config.analysis.chatter_min_toggles);
    let bodies = trans
        .iter()
        .map(EventBody::Transition)
        .chain(deadlocks.iter().map(EventBody::Deadlock))
        .chain(chatter.iter().map(EventBody::Chattering));
    let mut out = String::new();
    for body in bodies {
        let line = EventLine { schema_version: SCHEMA_VERSION, body };
        out.push_str(&serde_json::to_string(&line).expect("event records serialize"));
        out.push('\n');
    }
    out
}

/// Files written by [`write_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub timeseries: PathBuf,
    pub events: PathBuf,
    pub report: PathBuf,
}

/// Writes the time series, event records and report of a run into `dir`,
/// creating it if needed.
pub fn write_run(config: &ScenarioConfig, log: &EventLog, dir: impl AsRef<Path>, format: Format) -> Result<RunOutputs> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let outputs = RunOutputs {
        timeseries: dir.join(format!("timeseries.{}", format.extension())),
        events: dir.join("events.jsonl"),
        report: dir.join("report.json"),
    };
    let report = RunReport::build(config, log)?;
    write_timeseries(log, &outputs.timeseries, format)?;
    write_file(&outputs.events, &events_string(log, config))?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_file(&outputs.report, &text)?;
    Ok(outputs)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::bundled;
    use crate::sim::simulate;

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("json-lines".parse::<Format>().unwrap(), Format::JsonLines);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn number_formatting_has_twelve_significant_digits() {
        assert_eq!(num(3.709), "3.70900000000e0");
        assert_eq!(num(-1e-3), "-1.00000000000e-3");
    }

    #[test]
    fn empty_log_is_rejected() {
        let mut log = simulate(&bundled("unsaturated_ramp").unwrap()).unwrap();
        log.records.clear();
        assert!(timeseries_string(&log, Format::Csv).is_err());
    }

    #[test]
    fn json_lines_parse() {
        let mut cfg = bundled("unsaturated_ramp").unwrap();
        cfg.t_end = 0.005;
        let log = simulate(&cfg).unwrap();
        let text = timeseries_string(&log, Format::JsonLines).unwrap();
        assert_eq!(text.lines().count(), 5);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["converged"], serde_json::Value::Bool(true));
            assert_eq!(v["z_i"], 1);
            assert!(v["t"].as_f64().unwrap() > 0.0);
        }
    }

    #[test]
    fn events_carry_schema_version() {
        let cfg = bundled("ramp_epm").unwrap();
        let log = simulate(&cfg).unwrap();
        let text = events_string(&log, &cfg);
        assert!(text.lines().count() > 10);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["schema_version"], SCHEMA_VERSION);
            assert!(v["kind"].is_string());
        }
    }
}
