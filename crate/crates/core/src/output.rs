//! Plot-ready CSV outputs. Every file starts with a `#` comment line naming
//! the tool version, both seeds and the config checksum.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::bm::{write_decision_log, DecisionLogEntry};
use crate::error::{Error, Result};
use crate::sim::{percentile, KpiReport, TraceRow};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const KPI_FILE: &str = "kpi.csv";
pub const SAMPLES_FILE: &str = "rsrp_samples.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const DECISIONS_FILE: &str = "decisions.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputHeader {
    pub channel_seed: u64,
    pub traffic_seed: u64,
    pub config_sha256: String,
}

impl OutputHeader {
    pub fn line(&self) -> String {
        format!(
            "# gobrem {TOOL_VERSION} channel_seed={} traffic_seed={} config_sha256={}\n",
            self.channel_seed, self.traffic_seed, self.config_sha256
        )
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row of `kpi.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct KpiRow {
    pub controller: String,
    pub delta_ho_db: Option<f64>,
    pub beta: Option<f64>,
    pub reselections_per_user_s: f64,
    pub rlf_per_user_s: f64,
}

impl From<&KpiReport> for KpiRow {
    fn from(r: &KpiReport) -> Self {
        KpiRow {
            controller: r.controller.clone(),
            delta_ho_db: r.delta_ho_db,
            beta: r.beta,
            reselections_per_user_s: r.reselection_rate(),
            rlf_per_user_s: r.rlf_rate(),
        }
    }
}

const KPI_COLUMNS: &str = "controller,delta_ho,beta,reselections_per_user_s,rlf_per_user_s";

pub fn kpi_csv(header: &OutputHeader, rows: &[KpiRow]) -> String {
    let mut out = header.line();
    out.push_str(KPI_COLUMNS);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.controller,
            opt(r.delta_ho_db),
            opt(r.beta),
            r.reselections_per_user_s,
            r.rlf_per_user_s
        )
        .unwrap();
    }
    out
}

pub fn write_kpi_csv(path: &Path, header: &OutputHeader, rows: &[KpiRow]) -> Result<()> {
    write(path, &kpi_csv(header, rows))
}

/// Data lines of a CSV file after its comment and column header lines.
fn data_lines<'a>(text: &'a str, columns: &str, what: &'static str) -> Result<Vec<(usize, &'a str)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.starts_with('#') && !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == columns => Ok(lines.collect()),
        Some((n, _)) => Err(Error::parse(what, n, format!("expected columns `{columns}`"))),
        None => Err(Error::parse(what, 1, "missing column header")),
    }
}

fn parse_f64(s: &str, what: &'static str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::parse(what, line, format!("bad number `{s}`")))
}

fn parse_opt(s: &str, what: &'static str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what, line).map(Some)
    }
}

pub fn parse_kpi_csv(text: &str) -> Result<Vec<KpiRow>> {
    const WHAT: &str = "kpi.csv";
    data_lines(text, KPI_COLUMNS, WHAT)?
        .into_iter()
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse(WHAT, n, "row needs 5 fields"));
            }
            Ok(KpiRow {
                controller: f[0].to_string(),
                delta_ho_db: parse_opt(f[1], WHAT, n)?,
                beta: parse_opt(f[2], WHAT, n)?,
                reselections_per_user_s: parse_f64(f[3], WHAT, n)?,
                rlf_per_user_s: parse_f64(f[4], WHAT, n)?,
            })
        })
        .collect()
}

const SAMPLE_COLUMNS: &str = "controller,dbm";

pub fn write_samples_csv(path: &Path, header: &OutputHeader, reports: &[&KpiReport]) -> Result<()> {
    let mut out = header.line();
    out.push_str(SAMPLE_COLUMNS);
    out.push('\n');
    for r in reports {
        for s in &r.samples {
            writeln!(out, "{},{}", r.controller, s).unwrap();
        }
    }
    write(path, &out)
}

/// Samples grouped by controller label.
pub fn parse_samples_csv(text: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    const WHAT: &str = "rsrp_samples.csv";
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (n, l) in data_lines(text, SAMPLE_COLUMNS, WHAT)? {
        let (label, v) = l.split_once(',').ok_or_else(|| Error::parse(WHAT, n, "row needs 2 fields"))?;
        out.entry(label.to_string()).or_default().push(parse_f64(v, WHAT, n)?);
    }
    Ok(out)
}

pub fn write_trace_csv(path: &Path, header: &OutputHeader, rows: &[TraceRow]) -> Result<()> {
    let mut out = header.line();
    out.push_str("t_ms,ue,beam,rsrp_dbm\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t_ms, r.ue, r.beam, r.rsrp_dbm).unwrap();
    }
    write(path, &out)
}

pub fn write_decisions_csv(path: &Path, header: &OutputHeader, entries: &[DecisionLogEntry]) -> Result<()> {
    let mut buf = header.line().into_bytes();
    write_decision_log(&mut buf, entries).expect("writing to a Vec cannot fail");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// One line of the cross-controller comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub kpi: KpiRow,
    pub rsrp_percentile_dbm: Option<f64>,
    /// This controller's rate divided by BR-MIN's.
    pub reselection_ratio: Option<f64>,
    pub rlf_ratio: Option<f64>,
}

pub fn summarize(kpis: &[KpiRow], samples: &BTreeMap<String, Vec<f64>>, p: f64) -> Result<Vec<SummaryRow>> {
    let reference = kpis.iter().find(|k| k.controller == "BR-MIN");
    let ratio = |a: f64, b: f64| if b > 0.0 { Some(a / b) } else { None };
    kpis.iter()
        .map(|k| {
            let pct = match samples.get(&k.controller) {
                Some(s) => Some(percentile(s, p)?),
                None => None,
            };
            Ok(SummaryRow {
                kpi: k.clone(),
                rsrp_percentile_dbm: pct,
                reselection_ratio: reference
                    .and_then(|r| ratio(k.reselections_per_user_s, r.reselections_per_user_s)),
                rlf_ratio: reference.and_then(|r| ratio(k.rlf_per_user_s, r.rlf_per_user_s)),
            })
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow], p: f64) -> String {
    let mut out = format!(
        "controller,delta_ho,beta,reselections_per_user_s,rlf_per_user_s,rsrp_p{}_dbm,reselection_ratio_vs_brmin,rlf_ratio_vs_brmin\n",
        (p * 100.0).round()
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.kpi.controller,
            opt(r.kpi.delta_ho_db),
            opt(r.kpi.beta),
            r.kpi.reselections_per_user_s,
            r.kpi.rlf_per_user_s,
            opt(r.rsrp_percentile_dbm),
            opt(r.reselection_ratio),
            opt(r.rlf_ratio)
        )
        .unwrap();
    }
    out
}

pub fn summary_table(rows: &[SummaryRow], p: f64) -> String {
    let f = |v: Option<f64>, prec: usize| v.map(|x| format!("{x:.prec$}")).unwrap_or_else(|| "-".into());
    let mut out = format!(
        "{:<20} {:>10} {:>10} {:>12} {:>10} {:>10}\n",
        "controller",
        "resel/u/s",
        "rlf/u/s",
        format!("p{} dBm", (p * 100.0).round()),
        "resel x",
        "rlf x"
    );
    for r in rows {
        writeln!(
            out,
            "{:<20} {:>10.4} {:>10.4} {:>12} {:>10} {:>10}",
            r.kpi.controller,
            r.kpi.reselections_per_user_s,
            r.kpi.rlf_per_user_s,
            f(r.rsrp_percentile_dbm, 2),
            f(r.reselection_ratio, 2),
            f(r.rlf_ratio, 2)
        )
        .unwrap();
    }
    out
}
