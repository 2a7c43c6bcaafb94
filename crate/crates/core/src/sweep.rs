//! One-dimensional parameter sweeps and their CSV / JSON-lines encodings.
//!
//! A CSV file starts with a `#`-prefixed metadata block (command, swept
//! parameter, library version, optional timestamp and the fully resolved
//! parameter set in config syntax), followed by one header line and one row
//! per sweep point. Points that fail the stability test keep their row with
//! empty outputs and `status = unstable`.

use crate::cavity_pa::cavity_variances;
use crate::config::{parse_config, render_config};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mech_spectra::{squeezing_db, variances};
use crate::params::{solve_steady_state, RwaFlags, SteadyState, SystemParams, SCALAR_KEYS};
use crate::stability::routh_hurwitz;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const MIRROR_COLUMNS: &[&str] = &["var_q", "var_p", "squeezing_db"];
pub const CAVITY_COLUMNS: &[&str] = &["var_x", "var_y"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json-lines" => Ok(Format::Jsonl),
            other => Err(Error::Output(format!("unknown format `{other}` (expected csv or jsonl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub command: String,
    pub parameter: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub base: SystemParams,
}

impl SweepSpec {
    pub fn new(command: &str, parameter: &str, lo: f64, hi: f64, points: usize, base: SystemParams) -> Result<Self> {
        if !SCALAR_KEYS.contains(&parameter) {
            return Err(Error::UnknownKey(parameter.to_string()));
        }
        if points < 2 {
            return Err(Error::Sweep(format!("need at least 2 points, got {points}")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Sweep(format!("range must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { command: command.to_string(), parameter: parameter.to_string(), lo, hi, points, base })
    }

    /// Evenly spaced values with both endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Unstable,
    Failed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Unstable => "unstable",
            Status::Failed => "failed",
        })
    }
}

impl FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Status::Ok),
            "unstable" => Ok(Status::Unstable),
            "failed" => Ok(Status::Failed),
            other => Err(Error::Output(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub outputs: Option<Vec<f64>>,
    pub status: Status,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepHeader {
    pub command: String,
    pub parameter: String,
    pub version: String,
    pub timestamp: Option<u64>,
    pub params: SystemParams,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub header: SweepHeader,
    pub rows: Vec<SweepRow>,
}

/// Evaluates `eval` at every sweep value. Rows come back in sweep order.
///
/// `UnstableSystem` and `AboveThreshold` errors become unstable rows; any
/// other error becomes a failed row carrying the message as a warning.
pub fn run_sweep<F>(spec: &SweepSpec, columns: &[&str], exec: Execution, eval: F) -> SweepResult
where
    F: Fn(&SystemParams, &SteadyState) -> Result<Vec<f64>> + Sync + Send,
{
    let values = spec.values();
    let rows = exec.map(&values, |&v| {
        let mut p = spec.base;
        let outcome = p.set(&spec.parameter, v).and_then(|_| p.validate()).and_then(|_| {
            let ss = solve_steady_state(&p)?;
            let warnings: Vec<String> = RwaFlags::evaluate(&p, &ss).warnings().iter().map(|w| w.to_string()).collect();
            Ok((eval(&p, &ss), warnings))
        });
        match outcome {
            Ok((Ok(outputs), warnings)) => SweepRow { value: v, outputs: Some(outputs), status: Status::Ok, warnings },
            Ok((Err(e), warnings)) => failed_row(v, e, warnings),
            Err(e) => failed_row(v, e, Vec::new()),
        }
    });
    SweepResult {
        header: SweepHeader {
            command: spec.command.clone(),
            parameter: spec.parameter.clone(),
            version: VERSION.to_string(),
            timestamp: None,
            params: spec.base,
            columns: columns.iter().map(|c| c.to_string()).collect(),
        },
        rows,
    }
}

fn failed_row(value: f64, e: Error, mut warnings: Vec<String>) -> SweepRow {
    let status = match e {
        Error::UnstableSystem { .. } | Error::AboveThreshold { .. } => Status::Unstable,
        _ => Status::Failed,
    };
    if status == Status::Failed {
        warnings.push(e.to_string());
    }
    SweepRow { value, outputs: None, status, warnings }
}

/// ⟨δQ²⟩, ⟨δP²⟩ and the P squeezing in dB, gated by Routh–Hurwitz.
pub fn mirror_point(p: &SystemParams, ss: &SteadyState) -> Result<Vec<f64>> {
    let rh = routh_hurwitz(p, ss);
    if !rh.stable {
        return Err(Error::UnstableSystem { margin: rh.margin() });
    }
    let (vq, vp) = variances(ss, p)?;
    Ok(vec![vq, vp, squeezing_db(vp)?])
}

/// Cavity quadrature variances of the bare parametric amplifier.
pub fn cavity_point(p: &SystemParams, _ss: &SteadyState) -> Result<Vec<f64>> {
    let (vx, vy) = cavity_variances(p)?;
    Ok(vec![vx, vy])
}

impl SweepResult {
    pub fn with_timestamp(mut self, unix_seconds: u64) -> Self {
        self.header.timestamp = Some(unix_seconds);
        self
    }

    /// Row with the smallest value in output column `col` among stable rows.
    pub fn argmin(&self, col: usize) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.outputs.is_some())
            .min_by(|a, b| a.outputs.as_ref().unwrap()[col].total_cmp(&b.outputs.as_ref().unwrap()[col]))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Jsonl => self.to_jsonl(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let h = &self.header;
        let mut out = String::new();
        out.push_str(&format!("# command = {}\n# parameter = {}\n# version = {}\n", h.command, h.parameter, h.version));
        if let Some(t) = h.timestamp {
            out.push_str(&format!("# timestamp = {t}\n"));
        }
        for line in render_config(&h.params).lines() {
            out.push_str(&format!("# {line}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head = vec![h.parameter.clone()];
        head.extend(h.columns.iter().cloned());
        head.push("status".into());
        head.push("warnings".into());
        w.write_record(&head).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![cell(row.value)];
            match &row.outputs {
                Some(o) => rec.extend(o.iter().copied().map(cell)),
                None => rec.extend(h.columns.iter().map(|_| String::new())),
            }
            rec.push(row.status.to_string());
            rec.push(row.warnings.join(";"));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| Error::Output(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| Error::Output(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut param_lines = String::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Output(format!("malformed metadata line `{line}`")))?;
            match k.trim() {
                key @ ("command" | "parameter" | "version" | "timestamp") => {
                    meta.insert(key.to_string(), v.trim().to_string());
                }
                _ => {
                    param_lines.push_str(body);
                    param_lines.push('\n');
                }
            }
        }
        let field = |k: &str| meta.get(k).cloned().ok_or_else(|| Error::Output(format!("missing metadata `{k}`")));
        let timestamp = match meta.get("timestamp") {
            Some(t) => Some(t.parse().map_err(|_| Error::Output(format!("bad timestamp `{t}`")))?),
            None => None,
        };

        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let head: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
        if head.len() < 3 || head[head.len() - 2] != "status" || head[head.len() - 1] != "warnings" {
            return Err(Error::Output("header must end with `status,warnings`".into()));
        }
        let columns = head[1..head.len() - 2].to_vec();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(csv_err)?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Output(format!("bad number `{s}`")));
            let value = num(&rec[0])?;
            let raw: Vec<&str> = (1..=columns.len()).map(|i| &rec[i]).collect();
            let outputs = if raw.iter().all(|s| s.is_empty()) {
                None
            } else {
                Some(raw.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?)
            };
            let status: Status = rec[columns.len() + 1].parse()?;
            let w = &rec[columns.len() + 2];
            let warnings = if w.is_empty() { Vec::new() } else { w.split(';').map(String::from).collect() };
            rows.push(SweepRow { value, outputs, status, warnings });
        }
        Ok(Self {
            header: SweepHeader {
                command: field("command")?,
                parameter: field("parameter")?,
                version: field("version")?,
                timestamp,
                params: parse_config(&param_lines)?,
                columns,
            },
            rows,
        })
    }

    /// First line is the header object, then one object per row.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.header).map_err(json_err)?;
        out.push('\n');
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).map_err(json_err)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: SweepHeader =
            serde_json::from_str(lines.next().ok_or_else(|| Error::Output("empty file".into()))?).map_err(json_err)?;
        let rows = lines.map(|l| serde_json::from_str(l).map_err(json_err)).collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }
}

/// A plain numeric table with a metadata block, for spectra and maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { metadata: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut out: String = self.metadata.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(csv_err)?;
                for row in &self.rows {
                    w.write_record(row.iter().copied().map(cell)).map_err(csv_err)?;
                }
                let body = w.into_inner().map_err(|e| Error::Output(e.to_string()))?;
                out.push_str(&String::from_utf8(body).map_err(|e| Error::Output(e.to_string()))?);
                Ok(out)
            }
            Format::Jsonl => {
                let meta: BTreeMap<_, _> = self.metadata.iter().cloned().collect();
                let mut out = serde_json::to_string(&meta).map_err(json_err)?;
                out.push('\n');
                for row in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> =
                        self.columns.iter().cloned().zip(row.iter().map(|x| serde_json::json!(x))).collect();
                    out.push_str(&serde_json::to_string(&obj).map_err(json_err)?);
                    out.push('\n');
                }
                Ok(out)
            }
        }
    }
}

/// Shortest round-trip form, switching to exponent notation for very
/// small or large magnitudes.
fn cell(x: f64) -> String {
    format!("{x:?}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Output(e.to_string())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Output(e.to_string())
}
