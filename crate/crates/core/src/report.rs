//! Prevalence, ranking, traffic-overhead and cross-platform reports.
//!
//! All report emission is deterministic: rows are fully ordered, floats are
//! written with fixed six-decimal precision in CSV and Markdown and rounded
//! to six decimals in JSON, and no timestamps or other run-specific noise
//! appear anywhere. Running the same inputs twice yields byte-identical
//! files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::classify::DomainClassification;
use crate::graph::AppDomainGraph;
use crate::graph::{PartyStatus, PartyVerdict};
use crate::psl::RegistrableDomain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcdfPoint {
    pub value: f64,
    pub cumulative_fraction: f64,
}

/// Empirical CDF: one point per distinct value, each carrying the fraction
/// of samples less than or equal to it.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EcdfSeries {
    points: Vec<EcdfPoint>,
}

impl EcdfSeries {
    pub fn from_values(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut points = Vec::new();
        let mut i = 0;
        while i < n {
            let value = sorted[i];
            let mut j = i;
            while j < n && sorted[j] == value {
                j += 1;
            }
            points.push(EcdfPoint {
                value,
                cumulative_fraction: j as f64 / n as f64,
            });
            i = j;
        }
        Self { points }
    }

    pub fn points(&self) -> &[EcdfPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Structural invariants: strictly increasing values, strictly
    /// increasing fractions in (0, 1], final fraction exactly 1 for
    /// non-empty series.
    pub fn check_invariants(&self) -> Result<(), String> {
        for pair in self.points.windows(2) {
            if pair[1].value <= pair[0].value {
                return Err(format!(
                    "values not strictly increasing: {} then {}",
                    pair[0].value, pair[1].value
                ));
            }
            if pair[1].cumulative_fraction <= pair[0].cumulative_fraction {
                return Err(format!(
                    "fractions not strictly increasing: {} then {}",
                    pair[0].cumulative_fraction, pair[1].cumulative_fraction
                ));
            }
        }
        for point in &self.points {
            if point.cumulative_fraction <= 0.0 || point.cumulative_fraction > 1.0 {
                return Err(format!("fraction out of range: {}", point.cumulative_fraction));
            }
        }
        if let Some(last) = self.points.last() {
            if last.cumulative_fraction != 1.0 {
                return Err(format!("final fraction is {}, not 1", last.cumulative_fraction));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("domain {0:?} is third-party but has no classification")]
    MissingClassification(String),
}

/// Distinct ATS domains contacted per app, with the population ECDF. Every
/// app in the graph appears, including apps that contact no ATS domain.
#[derive(Debug, Clone, Serialize)]
pub struct AtsPerApp {
    pub per_app: BTreeMap<String, usize>,
    pub ecdf: EcdfSeries,
}

fn ats_domains(classifications: &BTreeMap<String, DomainClassification>) -> BTreeSet<&str> {
    classifications
        .values()
        .filter(|c| c.is_ats)
        .map(|c| c.domain.as_str())
        .collect()
}

/// Count distinct ATS domains per app. Fails when a third-party domain has
/// no classification at all: silently treating it as non-ATS would
/// undercount, so an incomplete classification stage is surfaced here.
pub fn ats_per_app(
    graph: &AppDomainGraph,
    verdicts: &BTreeMap<RegistrableDomain, PartyVerdict>,
    classifications: &BTreeMap<String, DomainClassification>,
) -> Result<AtsPerApp, ReportError> {
    for (domain, verdict) in verdicts {
        if verdict.status == PartyStatus::ThirdParty
            && !classifications.contains_key(domain.as_str())
        {
            return Err(ReportError::MissingClassification(domain.as_str().to_string()));
        }
    }
    let ats = ats_domains(classifications);
    let per_app: BTreeMap<String, usize> = graph
        .apps()
        .iter()
        .map(|app| {
            let count = graph
                .domains_of(app)
                .iter()
                .filter(|d| ats.contains(d.as_str()))
                .count();
            (app.clone(), count)
        })
        .collect();
    let values: Vec<f64> = per_app.values().map(|&c| c as f64).collect();
    Ok(AtsPerApp {
        ecdf: EcdfSeries::from_values(&values),
        per_app,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedDomain {
    pub rank: usize,
    pub domain: String,
    pub app_count: usize,
    /// app_count over the total number of apps in the graph.
    pub app_fraction: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
#[serde(transparent)]
pub struct DomainRanking {
    rows: Vec<RankedDomain>,
}

impl DomainRanking {
    pub fn rows(&self) -> &[RankedDomain] {
        &self.rows
    }
}

/// Rank ATS domains by how many distinct apps contact them, descending,
/// ties broken lexicographically. Only edges with at least `min_flows`
/// flows count as "using" the domain.
pub fn rank_ats_domains(
    graph: &AppDomainGraph,
    classifications: &BTreeMap<String, DomainClassification>,
    top_n: usize,
    min_flows: u64,
) -> DomainRanking {
    let total_apps = graph.apps().len();
    let mut counted: Vec<(String, usize)> = ats_domains(classifications)
        .into_iter()
        .filter_map(|name| {
            let domain = graph.domains().get(name)?;
            let app_count = graph
                .apps_of(domain)
                .iter()
                .filter(|app| {
                    graph
                        .edge(app, domain)
                        .is_some_and(|e| e.flow_count >= min_flows.max(1))
                })
                .count();
            (app_count > 0).then(|| (name.to_string(), app_count))
        })
        .collect();
    counted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    counted.truncate(top_n);
    DomainRanking {
        rows: counted
            .into_iter()
            .enumerate()
            .map(|(i, (domain, app_count))| RankedDomain {
                rank: i + 1,
                domain,
                app_count,
                app_fraction: if total_apps == 0 {
                    0.0
                } else {
                    app_count as f64 / total_apps as f64
                },
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficRow {
    pub app_id: String,
    pub total_bytes: u64,
    pub ats_bytes: u64,
    pub ats_fraction: f64,
}

/// Share of traffic going to ATS domains among the most data-hungry apps.
#[derive(Debug, Clone, Serialize)]
pub struct TrafficOverhead {
    /// One row per analyzed app, ordered by total bytes descending, ties
    /// lexicographic.
    pub rows: Vec<TrafficRow>,
    /// ECDF over the per-app ATS fractions.
    pub ecdf: EcdfSeries,
    pub mean_fraction: f64,
    /// Apps excluded because they moved zero bytes.
    pub skipped_zero_total: usize,
}

/// Compute ATS traffic share for the `top_n_apps` apps by total traffic.
/// Apps with zero total bytes are excluded (no fraction is defined for
/// them) and counted in `skipped_zero_total`.
pub fn traffic_overhead(
    graph: &AppDomainGraph,
    classifications: &BTreeMap<String, DomainClassification>,
    top_n_apps: usize,
) -> TrafficOverhead {
    let ats = ats_domains(classifications);
    let mut totals: Vec<(String, u64, u64)> = Vec::with_capacity(graph.apps().len());
    let mut skipped_zero_total = 0;
    for app in graph.apps() {
        let mut total = 0u64;
        let mut to_ats = 0u64;
        for domain in graph.domains_of(app) {
            let Some(stats) = graph.edge(app, domain) else {
                continue;
            };
            total += stats.bytes_total();
            if ats.contains(domain.as_str()) {
                to_ats += stats.bytes_total();
            }
        }
        if total == 0 {
            skipped_zero_total += 1;
        } else {
            totals.push((app.clone(), total, to_ats));
        }
    }
    totals.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    totals.truncate(top_n_apps);
    let rows: Vec<TrafficRow> = totals
        .into_iter()
        .map(|(app_id, total_bytes, ats_bytes)| TrafficRow {
            app_id,
            total_bytes,
            ats_bytes,
            ats_fraction: ats_bytes as f64 / total_bytes as f64,
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r.ats_fraction).collect();
    let mean_fraction = if rows.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / rows.len() as f64
    };
    TrafficOverhead {
        ecdf: EcdfSeries::from_values(&values),
        mean_fraction,
        rows,
        skipped_zero_total,
    }
}

/// Which popular web sites embed each domain: `site,embedded_domains` CSV,
/// embedded domains `;`-separated.
#[derive(Debug, Clone, Default)]
pub struct WebPresence {
    sites: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Error)]
pub enum WebPresenceError {
    #[error("failed to read web presence file: {0}")]
    Io(#[from] io::Error),
    #[error("web presence file has wrong header: expected {expected:?}, found {found:?}")]
    WrongHeader { expected: String, found: String },
    #[error("web presence file: {0}")]
    Csv(String),
}

impl WebPresence {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse_csv<R: Read>(reader: R) -> Result<Self, WebPresenceError> {
        const HEADER: [&str; 2] = ["site", "embedded_domains"];
        let mut csv_reader = csv::Reader::from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| WebPresenceError::Csv(e.to_string()))?;
        let found: Vec<&str> = headers.iter().collect();
        if found != HEADER {
            return Err(WebPresenceError::WrongHeader {
                expected: HEADER.join(","),
                found: found.join(","),
            });
        }
        let mut sites: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for record in csv_reader.records() {
            let record = record.map_err(|e| WebPresenceError::Csv(e.to_string()))?;
            let site = record.get(0).unwrap_or("").trim().to_ascii_lowercase();
            if site.is_empty() {
                continue;
            }
            let embedded = sites.entry(site).or_default();
            for fqdn in record.get(1).unwrap_or("").split(';') {
                let fqdn = fqdn.trim().to_ascii_lowercase();
                if !fqdn.is_empty() {
                    embedded.insert(fqdn);
                }
            }
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossPlatformRow {
    pub domain: String,
    pub on_abp: bool,
    pub on_hphosts: bool,
    /// Apps contacting the domain in the mobile dataset.
    pub app_count: usize,
    /// Sites embedding the domain (or any FQDN under it) in the web
    /// presence data.
    pub site_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossPlatform {
    /// One row per ATS domain, ordered by app_count descending, ties
    /// lexicographic.
    pub rows: Vec<CrossPlatformRow>,
    /// Fraction of ATS domains embedded in at least one site.
    pub cross_platform_fraction: f64,
}

/// True when `fqdn` equals `domain` or sits under it on a label boundary.
fn fqdn_under(fqdn: &str, domain: &str) -> bool {
    fqdn == domain
        || (fqdn.len() > domain.len()
            && fqdn.ends_with(domain)
            && fqdn.as_bytes()[fqdn.len() - domain.len() - 1] == b'.')
}

/// Compare mobile ATS domains with their presence on popular web sites.
pub fn cross_platform(
    graph: &AppDomainGraph,
    classifications: &BTreeMap<String, DomainClassification>,
    web: &WebPresence,
) -> CrossPlatform {
    let mut rows: Vec<CrossPlatformRow> = classifications
        .values()
        .filter(|c| c.is_ats)
        .map(|c| {
            let app_count = graph
                .domains()
                .get(c.domain.as_str())
                .map_or(0, |d| graph.degree(d));
            let site_count = web
                .sites()
                .values()
                .filter(|embedded| embedded.iter().any(|e| fqdn_under(e, &c.domain)))
                .count();
            CrossPlatformRow {
                domain: c.domain.clone(),
                on_abp: c.on_abp,
                on_hphosts: c.on_hphosts,
                app_count,
                site_count,
            }
        })
        .collect();
    let with_presence = rows.iter().filter(|r| r.site_count > 0).count();
    let cross_platform_fraction = if rows.is_empty() {
        0.0
    } else {
        with_presence as f64 / rows.len() as f64
    };
    rows.sort_by(|a, b| b.app_count.cmp(&a.app_count).then_with(|| a.domain.cmp(&b.domain)));
    CrossPlatform {
        rows,
        cross_platform_fraction,
    }
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub ats_per_app: AtsPerApp,
    pub ranking: DomainRanking,
    pub traffic: TrafficOverhead,
    pub cross_platform: CrossPlatform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn ecdf_json(ecdf: &EcdfSeries) -> serde_json::Value {
    serde_json::Value::Array(
        ecdf.points()
            .iter()
            .map(|p| {
                serde_json::json!({
                    "value": round6(p.value),
                    "cumulative_fraction": round6(p.cumulative_fraction),
                })
            })
            .collect(),
    )
}

/// Write the four report files into `out_dir` and return their paths:
/// `ecdf_ats_per_app`, `ranking`, `traffic_overhead` and `cross_platform`,
/// with the extension of the chosen format.
pub fn emit_reports(
    bundle: &ReportBundle,
    format: ReportFormat,
    out_dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let ext = format.extension();
    let files = [
        ("ecdf_ats_per_app", render_ecdf(bundle, format)),
        ("ranking", render_ranking(bundle, format)),
        ("traffic_overhead", render_traffic(bundle, format)),
        ("cross_platform", render_cross_platform(bundle, format)),
    ];
    let mut paths = Vec::new();
    for (stem, content) in files {
        let path = out_dir.join(format!("{stem}.{ext}"));
        fs::write(&path, content)?;
        paths.push(path);
    }
    Ok(paths)
}

fn render_ecdf(bundle: &ReportBundle, format: ReportFormat) -> String {
    let ecdf = &bundle.ats_per_app.ecdf;
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("value,cumulative_fraction\n");
            for p in ecdf.points() {
                let _ = writeln!(out, "{:.6},{:.6}", p.value, p.cumulative_fraction);
            }
            out
        }
        ReportFormat::Json => {
            let value = serde_json::json!({ "points": ecdf_json(ecdf) });
            to_pretty(&value)
        }
        ReportFormat::Markdown => {
            let mut out = String::from(
                "# Distinct ATS domains per app (ECDF)\n\n| value | cumulative_fraction |\n|------:|--------------------:|\n",
            );
            for p in ecdf.points() {
                let _ = writeln!(out, "| {:.6} | {:.6} |", p.value, p.cumulative_fraction);
            }
            out
        }
    }
}

fn render_ranking(bundle: &ReportBundle, format: ReportFormat) -> String {
    let rows = bundle.ranking.rows();
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("rank,domain,app_count,app_fraction\n");
            for r in rows {
                let _ = writeln!(out, "{},{},{},{:.6}", r.rank, r.domain, r.app_count, r.app_fraction);
            }
            out
        }
        ReportFormat::Json => {
            let value = serde_json::json!({
                "rows": rows
                    .iter()
                    .map(|r| {
                        serde_json::json!({
                            "rank": r.rank,
                            "domain": r.domain,
                            "app_count": r.app_count,
                            "app_fraction": round6(r.app_fraction),
                        })
                    })
                    .collect::<Vec<_>>(),
            });
            to_pretty(&value)
        }
        ReportFormat::Markdown => {
            let mut out = String::from(
                "# ATS domains by app reach\n\n| rank | domain | app_count | app_fraction |\n|-----:|--------|----------:|-------------:|\n",
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.6} |",
                    r.rank, r.domain, r.app_count, r.app_fraction
                );
            }
            out
        }
    }
}

fn render_traffic(bundle: &ReportBundle, format: ReportFormat) -> String {
    let traffic = &bundle.traffic;
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("app_id,total_bytes,ats_bytes,ats_fraction\n");
            for r in &traffic.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.6}",
                    r.app_id, r.total_bytes, r.ats_bytes, r.ats_fraction
                );
            }
            out
        }
        ReportFormat::Json => {
            let value = serde_json::json!({
                "mean_fraction": round6(traffic.mean_fraction),
                "skipped_zero_total": traffic.skipped_zero_total,
                "ecdf": ecdf_json(&traffic.ecdf),
                "rows": traffic
                    .rows
                    .iter()
                    .map(|r| {
                        serde_json::json!({
                            "app_id": r.app_id,
                            "total_bytes": r.total_bytes,
                            "ats_bytes": r.ats_bytes,
                            "ats_fraction": round6(r.ats_fraction),
                        })
                    })
                    .collect::<Vec<_>>(),
            });
            to_pretty(&value)
        }
        ReportFormat::Markdown => {
            let mut out = String::from("# ATS traffic overhead\n\n");
            let _ = writeln!(out, "Mean ATS fraction: {:.6}\n", traffic.mean_fraction);
            out.push_str(
                "| app_id | total_bytes | ats_bytes | ats_fraction |\n|--------|------------:|----------:|-------------:|\n",
            );
            for r in &traffic.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.6} |",
                    r.app_id, r.total_bytes, r.ats_bytes, r.ats_fraction
                );
            }
            out
        }
    }
}

fn render_cross_platform(bundle: &ReportBundle, format: ReportFormat) -> String {
    let cross = &bundle.cross_platform;
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("domain,on_abp,on_hphosts,app_count,site_count\n");
            for r in &cross.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.domain, r.on_abp, r.on_hphosts, r.app_count, r.site_count
                );
            }
            out
        }
        ReportFormat::Json => {
            let value = serde_json::json!({
                "cross_platform_fraction": round6(cross.cross_platform_fraction),
                "rows": serde_json::to_value(&cross.rows).unwrap_or_default(),
            });
            to_pretty(&value)
        }
        ReportFormat::Markdown => {
            let mut out = String::from("# Cross-platform presence of mobile ATS domains\n\n");
            let _ = writeln!(
                out,
                "Fraction with web presence: {:.6}\n",
                cross.cross_platform_fraction
            );
            out.push_str(
                "| domain | on_abp | on_hphosts | app_count | site_count |\n|--------|:------:|:----------:|----------:|-----------:|\n",
            );
            for r in &cross.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    r.domain, r.on_abp, r.on_hphosts, r.app_count, r.site_count
                );
            }
            out
        }
    }
}

fn to_pretty(value: &serde_json::Value) -> String {
    let mut out = serde_json::to_string_pretty(value).unwrap_or_default();
    out.push('\n');
    out
}
