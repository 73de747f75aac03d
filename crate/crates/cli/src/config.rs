//! Run configuration for the CLI subcommands and its validation.
//!
//! Validation failures mean the pipeline never started; they map to exit
//! code 1, while failures inside a stage map to exit code 2.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use atscan::flow::FlowLogFormat;
use atscan::report::ReportFormat;

use crate::pipeline::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowFormatArg {
    Jsonl,
    Csv,
}

impl From<FlowFormatArg> for FlowLogFormat {
    fn from(value: FlowFormatArg) -> Self {
        match value {
            FlowFormatArg::Jsonl => FlowLogFormat::Jsonl,
            FlowFormatArg::Csv => FlowLogFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceMode {
    /// Read page evidence from a fixture directory.
    Fixture,
    /// Fetch landing pages over HTTP (needs a build with the `live`
    /// feature; not reproducible).
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormatArg {
    Csv,
    Json,
    Markdown,
}

impl From<OutputFormatArg> for ReportFormat {
    fn from(value: OutputFormatArg) -> Self {
        match value {
            OutputFormatArg::Csv => ReportFormat::Csv,
            OutputFormatArg::Json => ReportFormat::Json,
            OutputFormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

/// Everything the `analyze` pipeline needs. Serialized into the run
/// manifest, except for the output directory, so two runs over the same
/// inputs into different directories produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub flow_log: PathBuf,
    pub flow_format: FlowFormatArg,
    pub psl: PathBuf,
    pub psl_icann_only: bool,
    pub browsers: PathBuf,
    pub stoplist: PathBuf,
    pub keywords: PathBuf,
    pub abp: PathBuf,
    pub hphosts: PathBuf,
    pub categories: Option<PathBuf>,
    pub web_presence: Option<PathBuf>,
    pub negative_keywords: Option<PathBuf>,
    pub evidence_mode: EvidenceMode,
    pub evidence_dir: Option<PathBuf>,
    pub snippet_count: usize,
    pub max_in_flight: usize,
    pub min_phrase_hits: usize,
    pub min_flows: u64,
    pub top_n_domains: usize,
    pub top_n_apps: usize,
    #[serde(skip)]
    pub out: PathBuf,
    pub output_format: OutputFormatArg,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        require_file("flow log", &self.flow_log)?;
        require_file("public suffix list", &self.psl)?;
        require_file("browser list", &self.browsers)?;
        require_file("token stoplist", &self.stoplist)?;
        require_file("keyword reference", &self.keywords)?;
        require_file("abp blocklist", &self.abp)?;
        require_file("hosts blocklist", &self.hphosts)?;
        require_opt_file("category snapshot", self.categories.as_deref())?;
        require_opt_file("web presence file", self.web_presence.as_deref())?;
        require_opt_file("negative keyword file", self.negative_keywords.as_deref())?;
        validate_evidence(self.evidence_mode, self.evidence_dir.as_deref())
    }
}

/// Configuration for `classify`: skip the graph stages and classify an
/// explicit domain list.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyConfig {
    pub domains: PathBuf,
    pub keywords: PathBuf,
    pub abp: PathBuf,
    pub hphosts: PathBuf,
    pub categories: Option<PathBuf>,
    pub negative_keywords: Option<PathBuf>,
    pub evidence_mode: EvidenceMode,
    pub evidence_dir: Option<PathBuf>,
    pub snippet_count: usize,
    pub max_in_flight: usize,
    pub min_phrase_hits: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        require_file("domain list", &self.domains)?;
        require_file("keyword reference", &self.keywords)?;
        require_file("abp blocklist", &self.abp)?;
        require_file("hosts blocklist", &self.hphosts)?;
        require_opt_file("category snapshot", self.categories.as_deref())?;
        require_opt_file("negative keyword file", self.negative_keywords.as_deref())?;
        validate_evidence(self.evidence_mode, self.evidence_dir.as_deref())
    }
}

/// Configuration for `graph`: stop after party resolution.
#[derive(Debug, Clone, Serialize)]
pub struct GraphConfig {
    pub flow_log: PathBuf,
    pub flow_format: FlowFormatArg,
    pub psl: PathBuf,
    pub psl_icann_only: bool,
    pub browsers: PathBuf,
    pub stoplist: PathBuf,
    #[serde(skip)]
    pub out: PathBuf,
}

impl GraphConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        require_file("flow log", &self.flow_log)?;
        require_file("public suffix list", &self.psl)?;
        require_file("browser list", &self.browsers)?;
        require_file("token stoplist", &self.stoplist)
    }
}

fn require_file(role: &str, path: &Path) -> Result<(), PipelineError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::Validation(format!(
            "{role} not found: {}",
            path.display()
        )))
    }
}

fn require_opt_file(role: &str, path: Option<&Path>) -> Result<(), PipelineError> {
    match path {
        Some(path) => require_file(role, path),
        None => Ok(()),
    }
}

fn validate_evidence(mode: EvidenceMode, dir: Option<&Path>) -> Result<(), PipelineError> {
    match mode {
        EvidenceMode::Fixture => match dir {
            Some(dir) if dir.is_dir() => Ok(()),
            Some(dir) => Err(PipelineError::Validation(format!(
                "evidence dir is not a directory: {}",
                dir.display()
            ))),
            None => Err(PipelineError::Validation(
                "fixture evidence mode needs --evidence-dir".into(),
            )),
        },
        EvidenceMode::Live => {
            if cfg!(feature = "live") {
                Ok(())
            } else {
                Err(PipelineError::Validation(
                    "live evidence mode requires a build with the live feature".into(),
                ))
            }
        }
    }
}
