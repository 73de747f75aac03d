//! Flow log ingestion: one record per (app, destination) network flow.
//!
//! Two interchangeable on-disk formats are supported, JSON Lines and CSV
//! with a header row. Malformed lines never abort a run; they are collected
//! into a rejects report with the line number, a reason, and the raw text,
//! so ingestion problems stay auditable.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One aggregated network flow from an app to a fully qualified domain name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    /// Package name of the app that generated the flow, e.g.
    /// "com.accuweather.android".
    pub app_id: String,
    /// Destination host as sent in SNI / Host headers, lowercased on parse.
    pub fqdn: String,
    pub bytes_tx: u64,
    pub bytes_rx: u64,
    pub is_tls: bool,
    /// Seconds since the Unix epoch, when the capture recorded one.
    #[serde(default)]
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowLogFormat {
    Jsonl,
    Csv,
}

/// A line that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectEntry {
    /// 1-based line number in the input (the CSV header is line 1).
    pub line_no: u64,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedFlowLog {
    pub records: Vec<FlowRecord>,
    pub rejects: Vec<RejectEntry>,
}

#[derive(Debug, Error)]
pub enum FlowLogError {
    #[error("failed to read flow log: {0}")]
    Io(#[from] io::Error),
    #[error("csv flow log has wrong header: expected {expected:?}, found {found:?}")]
    WrongHeader { expected: String, found: String },
}

const CSV_HEADER: [&str; 6] = ["app_id", "fqdn", "bytes_tx", "bytes_rx", "is_tls", "timestamp"];

/// Parse a flow log. Well-formed lines become records (with the FQDN
/// lowercased); everything else lands in `rejects`. Only I/O failures and,
/// for CSV, a wrong header row are fatal.
pub fn parse_flow_log<R: BufRead>(
    reader: R,
    format: FlowLogFormat,
) -> Result<ParsedFlowLog, FlowLogError> {
    match format {
        FlowLogFormat::Jsonl => parse_jsonl(reader),
        FlowLogFormat::Csv => parse_csv(reader),
    }
}

fn parse_jsonl<R: BufRead>(reader: R) -> Result<ParsedFlowLog, FlowLogError> {
    let mut out = ParsedFlowLog::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<FlowRecord>(&line) {
            Ok(mut record) => match normalize(&mut record) {
                Ok(()) => out.records.push(record),
                Err(reason) => out.rejects.push(RejectEntry {
                    line_no,
                    reason,
                    raw: line,
                }),
            },
            Err(err) => out.rejects.push(RejectEntry {
                line_no,
                reason: format!("invalid json: {err}"),
                raw: line,
            }),
        }
    }
    Ok(out)
}

fn parse_csv<R: BufRead>(mut reader: R) -> Result<ParsedFlowLog, FlowLogError> {
    // Keep the raw text around so rejects can quote the original line.
    let mut buf = String::new();
    reader.read_to_string(&mut buf)?;
    let raw_lines: Vec<&str> = buf.lines().collect();
    let raw_line = |line_no: u64| {
        raw_lines
            .get(line_no as usize - 1)
            .map_or_else(String::new, |l| l.to_string())
    };

    let mut csv_reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(buf.as_bytes());
    let headers = csv_reader.headers().map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => FlowLogError::Io(io::Error::other(e.to_string())),
        _ => FlowLogError::WrongHeader {
            expected: CSV_HEADER.join(","),
            found: String::new(),
        },
    })?;
    let found: Vec<&str> = headers.iter().collect();
    if found != CSV_HEADER {
        return Err(FlowLogError::WrongHeader {
            expected: CSV_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut out = ParsedFlowLog::default();
    let mut raw_record = csv::StringRecord::new();
    loop {
        match csv_reader.read_record(&mut raw_record) {
            Err(err) => {
                if matches!(err.kind(), csv::ErrorKind::Io(_)) {
                    return Err(FlowLogError::Io(io::Error::other(err.to_string())));
                }
                let line_no = err.position().map_or(0, |p| p.line());
                out.rejects.push(RejectEntry {
                    line_no,
                    reason: format!("invalid csv: {err}"),
                    raw: raw_line(line_no),
                });
                continue;
            }
            Ok(false) => break,
            Ok(true) => {}
        }
        let line_no = raw_record.position().map_or(0, |p| p.line());
        match record_from_csv(&raw_record) {
            Ok(mut record) => match normalize(&mut record) {
                Ok(()) => out.records.push(record),
                Err(reason) => out.rejects.push(RejectEntry {
                    line_no,
                    reason,
                    raw: raw_line(line_no),
                }),
            },
            Err(reason) => out.rejects.push(RejectEntry {
                line_no,
                reason,
                raw: raw_line(line_no),
            }),
        }
    }
    Ok(out)
}

fn record_from_csv(record: &csv::StringRecord) -> Result<FlowRecord, String> {
    if record.len() != CSV_HEADER.len() {
        return Err(format!(
            "wrong field count: expected {}, found {}",
            CSV_HEADER.len(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("");
    let bytes = |i: usize| -> Result<u64, String> {
        field(i)
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("invalid {}: {:?}", CSV_HEADER[i], field(i)))
    };
    let is_tls = match field(4).trim() {
        "true" => true,
        "false" => false,
        other => return Err(format!("invalid is_tls: {other:?}")),
    };
    let timestamp = match field(5).trim() {
        "" => None,
        s => Some(
            s.parse::<i64>()
                .map_err(|_| format!("invalid timestamp: {s:?}"))?,
        ),
    };
    Ok(FlowRecord {
        app_id: field(0).to_string(),
        fqdn: field(1).to_string(),
        bytes_tx: bytes(2)?,
        bytes_rx: bytes(3)?,
        is_tls,
        timestamp,
    })
}

/// Lowercase the FQDN and check structural validity. Returns a reject
/// reason on failure.
fn normalize(record: &mut FlowRecord) -> Result<(), String> {
    if record.app_id.is_empty() {
        return Err("empty app_id".to_string());
    }
    if record
        .app_id
        .chars()
        .any(|c| c.is_whitespace() || c == ',')
    {
        return Err(format!("invalid app_id: {:?}", record.app_id));
    }
    record.fqdn = record.fqdn.to_ascii_lowercase();
    let fqdn = &record.fqdn;
    if fqdn.is_empty() {
        return Err("empty fqdn".to_string());
    }
    if fqdn.starts_with('.') || fqdn.ends_with('.') || fqdn.contains("..") {
        return Err(format!("malformed fqdn: {fqdn:?}"));
    }
    if fqdn.parse::<IpAddr>().is_ok() || fqdn.strip_prefix('[').is_some_and(is_bracketed_ipv6) {
        return Err(format!("fqdn is a bare ip address: {fqdn:?}"));
    }
    if fqdn.chars().any(char::is_whitespace) {
        return Err(format!("malformed fqdn: {fqdn:?}"));
    }
    Ok(())
}

fn is_bracketed_ipv6(rest: &str) -> bool {
    rest.strip_suffix(']')
        .is_some_and(|inner| inner.parse::<std::net::Ipv6Addr>().is_ok())
}

/// Write records back out in the given format. Together with
/// [`parse_flow_log`] this round-trips: parse(serialize(r)) == r.
pub fn serialize_flow_log<W: Write>(
    records: &[FlowRecord],
    format: FlowLogFormat,
    writer: W,
) -> io::Result<()> {
    match format {
        FlowLogFormat::Jsonl => {
            let mut writer = writer;
            for record in records {
                serde_json::to_writer(&mut writer, record)?;
                writer.write_all(b"\n")?;
            }
            Ok(())
        }
        FlowLogFormat::Csv => {
            let mut csv_writer = csv::Writer::from_writer(writer);
            csv_writer
                .write_record(CSV_HEADER)
                .map_err(io::Error::other)?;
            for record in records {
                let timestamp = record.timestamp.map_or_else(String::new, |t| t.to_string());
                csv_writer
                    .write_record([
                        record.app_id.as_str(),
                        record.fqdn.as_str(),
                        &record.bytes_tx.to_string(),
                        &record.bytes_rx.to_string(),
                        if record.is_tls { "true" } else { "false" },
                        &timestamp,
                    ])
                    .map_err(io::Error::other)?;
            }
            csv_writer.flush()
        }
    }
}

/// Known mobile browser package names, one per line, `#` comments allowed.
/// Browsers are excluded from analysis because their traffic reflects sites
/// the user visited, not services the app itself chose to contact.
#[derive(Debug, Clone, Default)]
pub struct BrowserList {
    app_ids: BTreeSet<String>,
    pub invalid_lines: usize,
}

impl BrowserList {
    pub fn parse<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut list = Self::default();
        for line in reader.lines() {
            let line = line?;
            let entry = line.split('#').next().unwrap_or("").trim();
            if entry.is_empty() {
                continue;
            }
            if entry.contains(char::is_whitespace) || !entry.contains('.') {
                list.invalid_lines += 1;
                continue;
            }
            list.app_ids.insert(entry.to_string());
        }
        if list.invalid_lines > 0 {
            log::warn!("browser list: skipped {} invalid lines", list.invalid_lines);
        }
        Ok(list)
    }

    pub fn from_ids<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        Self {
            app_ids: ids.into_iter().map(Into::into).collect(),
            invalid_lines: 0,
        }
    }

    pub fn contains(&self, app_id: &str) -> bool {
        self.app_ids.contains(app_id)
    }

    pub fn len(&self) -> usize {
        self.app_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.app_ids.is_empty()
    }
}

/// Drop flows generated by known browser apps. Order of surviving records
/// is preserved.
pub fn filter_browsers(
    records: impl IntoIterator<Item = FlowRecord>,
    browsers: &BrowserList,
) -> (Vec<FlowRecord>, usize) {
    let mut kept = Vec::new();
    let mut dropped = 0;
    for record in records {
        if browsers.contains(&record.app_id) {
            dropped += 1;
        } else {
            kept.push(record);
        }
    }
    (kept, dropped)
}
