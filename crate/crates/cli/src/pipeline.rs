//! The pipeline stages behind the CLI subcommands.
//!
//! `analyze` runs the full chain: ingest, browser filter, graph build,
//! party resolution, prefilter, evidence gathering, classification and
//! report emission. `graph` stops after party resolution; `classify`
//! skips the graph and classifies an explicit domain list. Every output
//! file is deterministic for a given set of inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use thiserror::Error;

use atscan::blocklist::BlocklistIndex;
use atscan::classify::{
    self, CategoryKeywords, ClassifierOptions, ClassifyInput, ExternalCategorySnapshot,
};
use atscan::evidence::{self, EvidenceFetcher, EvidenceOptions, FixtureFetcher};
use atscan::flow::{self, BrowserList, ParsedFlowLog, RejectEntry};
use atscan::graph::{self, AppDomainGraph, TokenStoplist};
use atscan::psl::PublicSuffixList;
use atscan::report::{self, ReportBundle, WebPresence};
use atscan::{
    Category, DomainClassification, FetchStatus, PartyStatus, PartyVerdict, RegistrableDomain,
};

use crate::config::{ClassifyConfig, EvidenceMode, GraphConfig, PipelineConfig};
use crate::manifest::{self, InputDigest, RunManifest, ToolInfo};

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad or missing configuration; the pipeline never started.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// A stage failed after validation passed.
    #[error("{stage} stage failed: {source:#}")]
    Stage {
        stage: &'static str,
        source: anyhow::Error,
    },
}

impl PipelineError {
    /// 1 for configuration problems, 2 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Stage { .. } => 2,
        }
    }
}

fn stage<E: Into<anyhow::Error>>(name: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |err| PipelineError::Stage {
        stage: name,
        source: err.into(),
    }
}

/// What a subcommand reports back: the files it wrote and the lines to
/// print on stdout.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct IngestCounts {
    pub records: usize,
    pub rejects: usize,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct BrowserFilterCounts {
    pub kept: usize,
    pub dropped: usize,
    pub browser_list_size: usize,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct GraphCounts {
    pub apps: usize,
    pub domains: usize,
    pub edges: usize,
    pub dropped_unreducible: usize,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct PartyCounts {
    pub candidates: usize,
    pub first_party: usize,
    pub third_party: usize,
    pub single_app: usize,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct PrefilterCounts {
    pub removed: usize,
    pub remaining: usize,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct EvidenceCounts {
    pub ok: usize,
    pub unreachable: usize,
    pub no_content: usize,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct ClassificationCounts {
    pub total: usize,
    pub ats: usize,
    pub non_ats: usize,
    pub on_abp: usize,
    pub on_hphosts: usize,
    pub ad_network: usize,
    pub analytics: usize,
    pub user_engagement: usize,
    pub multi_label: usize,
    pub keyword_match: usize,
    pub curated_list: usize,
    pub no_evidence: usize,
    pub prefiltered_non_ats: usize,
}

impl ClassificationCounts {
    fn tally<'a>(items: impl IntoIterator<Item = &'a DomainClassification>) -> Self {
        use atscan::DecisionPath;
        let mut counts = Self::default();
        for item in items {
            counts.total += 1;
            if item.is_ats {
                counts.ats += 1;
            } else {
                counts.non_ats += 1;
            }
            if item.on_abp {
                counts.on_abp += 1;
            }
            if item.on_hphosts {
                counts.on_hphosts += 1;
            }
            for category in &item.categories {
                match category {
                    Category::AdNetwork => counts.ad_network += 1,
                    Category::Analytics => counts.analytics += 1,
                    Category::UserEngagement => counts.user_engagement += 1,
                }
            }
            if item.categories.len() > 1 {
                counts.multi_label += 1;
            }
            match item.decision_path {
                DecisionPath::KeywordMatch => counts.keyword_match += 1,
                DecisionPath::CuratedList => counts.curated_list += 1,
                DecisionPath::NoEvidence => counts.no_evidence += 1,
                DecisionPath::PrefilteredNonAts => counts.prefiltered_non_ats += 1,
            }
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalyzeStages {
    pub ingest: IngestCounts,
    pub browser_filter: BrowserFilterCounts,
    pub graph: GraphCounts,
    pub party: PartyCounts,
    pub prefilter: PrefilterCounts,
    pub evidence: EvidenceCounts,
    pub classification: ClassificationCounts,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifyStages {
    pub domains: usize,
    pub prefilter: PrefilterCounts,
    pub evidence: EvidenceCounts,
    pub classification: ClassificationCounts,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GraphStages {
    pub ingest: IngestCounts,
    pub browser_filter: BrowserFilterCounts,
    pub graph: GraphCounts,
    pub party: PartyCounts,
}

pub fn cmd_analyze(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    fs::create_dir_all(&config.out).map_err(stage("write"))?;
    let mut files = Vec::new();

    let psl = load_psl(&config.psl, config.psl_icann_only).map_err(stage("load"))?;
    let browsers = load_browsers(&config.browsers).map_err(stage("load"))?;
    let stoplist = load_stoplist(&config.stoplist).map_err(stage("load"))?;
    let keywords = load_keywords(&config.keywords).map_err(stage("load"))?;
    let abp = load_abp(&config.abp).map_err(stage("load"))?;
    let hphosts = load_hosts(&config.hphosts).map_err(stage("load"))?;
    let snapshot = load_snapshot(config.categories.as_deref()).map_err(stage("load"))?;
    let negatives =
        load_negative_phrases(config.negative_keywords.as_deref()).map_err(stage("load"))?;
    let web = load_web_presence(config.web_presence.as_deref()).map_err(stage("load"))?;

    let parsed = ingest(&config.flow_log, config.flow_format.into())?;
    let ingest_counts = IngestCounts {
        records: parsed.records.len(),
        rejects: parsed.rejects.len(),
    };
    let rejects_path = config.out.join("rejects.jsonl");
    write_rejects(&rejects_path, &parsed.rejects).map_err(stage("write"))?;
    files.push(rejects_path);

    let (kept, dropped) = flow::filter_browsers(parsed.records, &browsers);
    let browser_counts = BrowserFilterCounts {
        kept: kept.len(),
        dropped,
        browser_list_size: browsers.len(),
    };

    let graph = graph::build_graph(kept, &psl);
    let graph_counts = GraphCounts {
        apps: graph.apps().len(),
        domains: graph.domains().len(),
        edges: graph.edge_count(),
        dropped_unreducible: graph.dropped_unreducible,
    };

    let candidates = graph::third_party_candidates(&graph);
    let verdicts = graph::resolve_party(&graph, &candidates, &stoplist);
    let (party_counts, third_party) = tally_party(&candidates, &verdicts);
    let verdicts_path = config.out.join("party_verdicts.csv");
    write_party_verdicts(&verdicts_path, &verdicts).map_err(stage("write"))?;
    files.push(verdicts_path);

    let pre = classify::prefilter(
        &third_party,
        &snapshot,
        &abp,
        &hphosts,
        &classify::default_non_ats_labels(),
        &classify::default_ambiguous_labels(),
    );
    let prefilter_counts = PrefilterCounts {
        removed: pre.removed.len(),
        remaining: pre.remaining.len(),
    };

    let fetcher = make_fetcher(config.evidence_mode, config.evidence_dir.as_deref())
        .map_err(stage("load"))?;
    let evidence_options = EvidenceOptions {
        snippet_count: config.snippet_count,
        max_in_flight: config.max_in_flight,
    };
    let evidence_map = evidence::gather_all(
        pre.remaining.iter().map(String::as_str),
        fetcher.as_ref(),
        &evidence_options,
    );
    let evidence_counts = tally_evidence(evidence_map.values());

    let inputs: BTreeMap<String, ClassifyInput> = evidence_map
        .into_iter()
        .map(|(name, evidence)| {
            let observed_fqdns = graph
                .domains()
                .get(name.as_str())
                .map(|d| graph.fqdns_of(d))
                .unwrap_or_default();
            (
                name,
                ClassifyInput {
                    evidence,
                    observed_fqdns,
                },
            )
        })
        .collect();
    let options = ClassifierOptions {
        min_phrase_hits: config.min_phrase_hits,
        negative_phrases: negatives,
    };
    let mut classifications =
        classify::classify_domains(&inputs, &keywords, &abp, &hphosts, &options);
    for domain in &pre.removed {
        classifications.insert(domain.clone(), DomainClassification::prefiltered(domain));
    }
    let class_counts = ClassificationCounts::tally(classifications.values());
    debug_assert_eq!(class_counts.total, party_counts.third_party);
    debug_assert_eq!(class_counts.ats + class_counts.non_ats, class_counts.total);
    let class_path = config.out.join("classifications.jsonl");
    write_classifications(&class_path, &classifications).map_err(stage("write"))?;
    files.push(class_path);

    let bundle = ReportBundle {
        ats_per_app: report::ats_per_app(&graph, &verdicts, &classifications)
            .map_err(stage("report"))?,
        ranking: report::rank_ats_domains(
            &graph,
            &classifications,
            config.top_n_domains,
            config.min_flows,
        ),
        traffic: report::traffic_overhead(&graph, &classifications, config.top_n_apps),
        cross_platform: report::cross_platform(&graph, &classifications, &web),
    };
    let report_paths = report::emit_reports(&bundle, config.output_format.into(), &config.out)
        .map_err(stage("write"))?;
    files.extend(report_paths);

    let stages = AnalyzeStages {
        ingest: ingest_counts,
        browser_filter: browser_counts,
        graph: graph_counts,
        party: party_counts,
        prefilter: prefilter_counts,
        evidence: evidence_counts,
        classification: class_counts,
    };
    let mut input_digests = BTreeMap::new();
    digest_into(&mut input_digests, "flow_log", Some(&config.flow_log))?;
    digest_into(&mut input_digests, "psl", Some(&config.psl))?;
    digest_into(&mut input_digests, "browsers", Some(&config.browsers))?;
    digest_into(&mut input_digests, "stoplist", Some(&config.stoplist))?;
    digest_into(&mut input_digests, "keywords", Some(&config.keywords))?;
    digest_into(&mut input_digests, "abp", Some(&config.abp))?;
    digest_into(&mut input_digests, "hphosts", Some(&config.hphosts))?;
    digest_into(&mut input_digests, "categories", config.categories.as_deref())?;
    digest_into(
        &mut input_digests,
        "web_presence",
        config.web_presence.as_deref(),
    )?;
    digest_into(
        &mut input_digests,
        "negative_keywords",
        config.negative_keywords.as_deref(),
    )?;
    if config.evidence_mode == EvidenceMode::Fixture {
        if let Some(dir) = config.evidence_dir.as_deref() {
            let digest = manifest::dir_digest(dir).map_err(stage("manifest"))?;
            input_digests.insert("evidence_dir", digest);
        }
    }
    let summary = serde_json::json!({
        "ats_domains": class_counts.ats,
        "mean_ats_traffic_fraction": round6(bundle.traffic.mean_fraction),
        "cross_platform_fraction": round6(bundle.cross_platform.cross_platform_fraction),
        "top_ats_domain": bundle.ranking.rows().first().map(|r| r.domain.clone()),
    });
    let manifest_path = write_manifest(
        "analyze",
        input_digests,
        config,
        serde_json::to_value(stages).map_err(anyhow::Error::from).map_err(stage("manifest"))?,
        &files,
        summary,
        &config.out,
    )?;
    files.push(manifest_path);

    let lines = vec![
        format!(
            "flows: {} parsed, {} rejected, {} from browsers",
            stages.ingest.records, stages.ingest.rejects, stages.browser_filter.dropped
        ),
        format!(
            "graph: {} apps, {} domains, {} edges",
            stages.graph.apps, stages.graph.domains, stages.graph.edges
        ),
        format!(
            "party: {} candidates, {} first-party, {} third-party",
            stages.party.candidates, stages.party.first_party, stages.party.third_party
        ),
        format!(
            "ats: {} of {} third-party domains",
            stages.classification.ats, stages.classification.total
        ),
        format!("wrote {} files to {}", files.len(), config.out.display()),
    ];
    Ok(RunSummary {
        out_dir: config.out.clone(),
        files,
        lines,
    })
}

pub fn cmd_classify(config: &ClassifyConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    fs::create_dir_all(&config.out).map_err(stage("write"))?;
    let mut files = Vec::new();

    let domains = load_domain_list(&config.domains).map_err(stage("load"))?;
    let keywords = load_keywords(&config.keywords).map_err(stage("load"))?;
    let abp = load_abp(&config.abp).map_err(stage("load"))?;
    let hphosts = load_hosts(&config.hphosts).map_err(stage("load"))?;
    let snapshot = load_snapshot(config.categories.as_deref()).map_err(stage("load"))?;
    let negatives =
        load_negative_phrases(config.negative_keywords.as_deref()).map_err(stage("load"))?;

    let pre = classify::prefilter(
        &domains,
        &snapshot,
        &abp,
        &hphosts,
        &classify::default_non_ats_labels(),
        &classify::default_ambiguous_labels(),
    );
    let prefilter_counts = PrefilterCounts {
        removed: pre.removed.len(),
        remaining: pre.remaining.len(),
    };

    let fetcher = make_fetcher(config.evidence_mode, config.evidence_dir.as_deref())
        .map_err(stage("load"))?;
    let evidence_options = EvidenceOptions {
        snippet_count: config.snippet_count,
        max_in_flight: config.max_in_flight,
    };
    let evidence_map = evidence::gather_all(
        pre.remaining.iter().map(String::as_str),
        fetcher.as_ref(),
        &evidence_options,
    );
    let evidence_counts = tally_evidence(evidence_map.values());

    let inputs: BTreeMap<String, ClassifyInput> = evidence_map
        .into_iter()
        .map(|(name, evidence)| {
            (
                name,
                ClassifyInput {
                    evidence,
                    observed_fqdns: BTreeSet::new(),
                },
            )
        })
        .collect();
    let options = ClassifierOptions {
        min_phrase_hits: config.min_phrase_hits,
        negative_phrases: negatives,
    };
    let mut classifications =
        classify::classify_domains(&inputs, &keywords, &abp, &hphosts, &options);
    for domain in &pre.removed {
        classifications.insert(domain.clone(), DomainClassification::prefiltered(domain));
    }
    let class_counts = ClassificationCounts::tally(classifications.values());
    let class_path = config.out.join("classifications.jsonl");
    write_classifications(&class_path, &classifications).map_err(stage("write"))?;
    files.push(class_path);

    let stages = ClassifyStages {
        domains: domains.len(),
        prefilter: prefilter_counts,
        evidence: evidence_counts,
        classification: class_counts,
    };
    let mut input_digests = BTreeMap::new();
    digest_into(&mut input_digests, "domains", Some(&config.domains))?;
    digest_into(&mut input_digests, "keywords", Some(&config.keywords))?;
    digest_into(&mut input_digests, "abp", Some(&config.abp))?;
    digest_into(&mut input_digests, "hphosts", Some(&config.hphosts))?;
    digest_into(&mut input_digests, "categories", config.categories.as_deref())?;
    digest_into(
        &mut input_digests,
        "negative_keywords",
        config.negative_keywords.as_deref(),
    )?;
    if config.evidence_mode == EvidenceMode::Fixture {
        if let Some(dir) = config.evidence_dir.as_deref() {
            let digest = manifest::dir_digest(dir).map_err(stage("manifest"))?;
            input_digests.insert("evidence_dir", digest);
        }
    }
    let summary = serde_json::json!({
        "ats_domains": class_counts.ats,
        "classified": class_counts.total,
    });
    let manifest_path = write_manifest(
        "classify",
        input_digests,
        config,
        serde_json::to_value(stages).map_err(anyhow::Error::from).map_err(stage("manifest"))?,
        &files,
        summary,
        &config.out,
    )?;
    files.push(manifest_path);

    let lines = vec![
        format!(
            "classified {} domains: {} ats, {} non-ats ({} prefiltered)",
            class_counts.total, class_counts.ats, class_counts.non_ats, prefilter_counts.removed
        ),
        format!("wrote {} files to {}", files.len(), config.out.display()),
    ];
    Ok(RunSummary {
        out_dir: config.out.clone(),
        files,
        lines,
    })
}

pub fn cmd_graph(config: &GraphConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    fs::create_dir_all(&config.out).map_err(stage("write"))?;
    let mut files = Vec::new();

    let psl = load_psl(&config.psl, config.psl_icann_only).map_err(stage("load"))?;
    let browsers = load_browsers(&config.browsers).map_err(stage("load"))?;
    let stoplist = load_stoplist(&config.stoplist).map_err(stage("load"))?;

    let parsed = ingest(&config.flow_log, config.flow_format.into())?;
    let ingest_counts = IngestCounts {
        records: parsed.records.len(),
        rejects: parsed.rejects.len(),
    };
    let rejects_path = config.out.join("rejects.jsonl");
    write_rejects(&rejects_path, &parsed.rejects).map_err(stage("write"))?;
    files.push(rejects_path);

    let (kept, dropped) = flow::filter_browsers(parsed.records, &browsers);
    let browser_counts = BrowserFilterCounts {
        kept: kept.len(),
        dropped,
        browser_list_size: browsers.len(),
    };

    let graph = graph::build_graph(kept, &psl);
    let graph_counts = GraphCounts {
        apps: graph.apps().len(),
        domains: graph.domains().len(),
        edges: graph.edge_count(),
        dropped_unreducible: graph.dropped_unreducible,
    };
    let graph_path = config.out.join("graph.json");
    write_graph(&graph_path, &graph).map_err(stage("write"))?;
    files.push(graph_path);

    let candidates = graph::third_party_candidates(&graph);
    let verdicts = graph::resolve_party(&graph, &candidates, &stoplist);
    let (party_counts, _) = tally_party(&candidates, &verdicts);
    let verdicts_path = config.out.join("party_verdicts.csv");
    write_party_verdicts(&verdicts_path, &verdicts).map_err(stage("write"))?;
    files.push(verdicts_path);

    let stages = GraphStages {
        ingest: ingest_counts,
        browser_filter: browser_counts,
        graph: graph_counts,
        party: party_counts,
    };
    let mut input_digests = BTreeMap::new();
    digest_into(&mut input_digests, "flow_log", Some(&config.flow_log))?;
    digest_into(&mut input_digests, "psl", Some(&config.psl))?;
    digest_into(&mut input_digests, "browsers", Some(&config.browsers))?;
    digest_into(&mut input_digests, "stoplist", Some(&config.stoplist))?;
    let summary = serde_json::json!({
        "candidates": party_counts.candidates,
        "third_party": party_counts.third_party,
    });
    let manifest_path = write_manifest(
        "graph",
        input_digests,
        config,
        serde_json::to_value(stages).map_err(anyhow::Error::from).map_err(stage("manifest"))?,
        &files,
        summary,
        &config.out,
    )?;
    files.push(manifest_path);

    let lines = vec![
        format!(
            "flows: {} parsed, {} rejected, {} from browsers",
            stages.ingest.records, stages.ingest.rejects, stages.browser_filter.dropped
        ),
        format!(
            "graph: {} apps, {} domains, {} edges",
            stages.graph.apps, stages.graph.domains, stages.graph.edges
        ),
        format!(
            "party: {} candidates, {} first-party, {} third-party",
            stages.party.candidates, stages.party.first_party, stages.party.third_party
        ),
        format!("wrote {} files to {}", files.len(), config.out.display()),
    ];
    Ok(RunSummary {
        out_dir: config.out.clone(),
        files,
        lines,
    })
}

fn reader(path: &Path) -> anyhow::Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn load_psl(path: &Path, icann_only: bool) -> anyhow::Result<PublicSuffixList> {
    let list = PublicSuffixList::parse_sections(reader(path)?, !icann_only)
        .with_context(|| format!("parse {}", path.display()))?;
    anyhow::ensure!(!list.is_empty(), "no suffix rules in {}", path.display());
    if list.unparseable_lines > 0 {
        log::warn!(
            "{}: {} unparseable suffix list lines",
            path.display(),
            list.unparseable_lines
        );
    }
    Ok(list)
}

fn load_browsers(path: &Path) -> anyhow::Result<BrowserList> {
    let list = BrowserList::parse(reader(path)?).with_context(|| format!("parse {}", path.display()))?;
    if list.invalid_lines > 0 {
        log::warn!(
            "{}: {} invalid browser list lines",
            path.display(),
            list.invalid_lines
        );
    }
    Ok(list)
}

fn load_stoplist(path: &Path) -> anyhow::Result<TokenStoplist> {
    TokenStoplist::parse(reader(path)?).with_context(|| format!("parse {}", path.display()))
}

fn load_keywords(path: &Path) -> anyhow::Result<Vec<CategoryKeywords>> {
    let load = classify::load_keyword_reference(reader(path)?)
        .with_context(|| format!("parse {}", path.display()))?;
    if load.duplicate_count > 0 {
        log::warn!(
            "{}: {} duplicate keyword phrases",
            path.display(),
            load.duplicate_count
        );
    }
    anyhow::ensure!(
        !load.reference.is_empty(),
        "keyword reference {} is empty",
        path.display()
    );
    Ok(load.reference)
}

fn load_abp(path: &Path) -> anyhow::Result<BlocklistIndex> {
    let index = BlocklistIndex::parse_abp_filters(reader(path)?)
        .with_context(|| format!("parse {}", path.display()))?;
    log::info!(
        "{}: {} rules, {} domains, {} skipped",
        path.display(),
        index.rule_count,
        index.len(),
        index.skipped_count
    );
    Ok(index)
}

fn load_hosts(path: &Path) -> anyhow::Result<BlocklistIndex> {
    let index = BlocklistIndex::parse_hosts_file(reader(path)?)
        .with_context(|| format!("parse {}", path.display()))?;
    log::info!(
        "{}: {} rules, {} domains, {} skipped",
        path.display(),
        index.rule_count,
        index.len(),
        index.skipped_count
    );
    Ok(index)
}

fn load_snapshot(path: Option<&Path>) -> anyhow::Result<ExternalCategorySnapshot> {
    match path {
        Some(path) => ExternalCategorySnapshot::parse_csv(reader(path)?)
            .with_context(|| format!("parse {}", path.display())),
        None => Ok(ExternalCategorySnapshot::empty()),
    }
}

fn load_web_presence(path: Option<&Path>) -> anyhow::Result<WebPresence> {
    match path {
        Some(path) => WebPresence::parse_csv(reader(path)?)
            .with_context(|| format!("parse {}", path.display())),
        None => Ok(WebPresence::empty()),
    }
}

fn load_negative_phrases(path: Option<&Path>) -> anyhow::Result<Vec<String>> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn load_domain_list(path: &Path) -> anyhow::Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_ascii_lowercase)
        .collect())
}

fn ingest(path: &Path, format: flow::FlowLogFormat) -> Result<ParsedFlowLog, PipelineError> {
    let input = reader(path).map_err(stage("ingest"))?;
    flow::parse_flow_log(input, format).map_err(stage("ingest"))
}

fn make_fetcher(
    mode: EvidenceMode,
    evidence_dir: Option<&Path>,
) -> anyhow::Result<Box<dyn EvidenceFetcher>> {
    match mode {
        EvidenceMode::Fixture => {
            let dir = evidence_dir.expect("fixture mode validated to have a dir");
            Ok(Box::new(FixtureFetcher::new(dir)))
        }
        EvidenceMode::Live => {
            #[cfg(feature = "live")]
            {
                use std::time::Duration;
                let fetcher = evidence::live::LiveFetcher::new(
                    Duration::from_secs(10),
                    Duration::from_millis(500),
                )
                .context("build live fetcher")?;
                Ok(Box::new(fetcher))
            }
            #[cfg(not(feature = "live"))]
            {
                unreachable!("live mode is rejected by validation in builds without the feature")
            }
        }
    }
}

fn tally_party(
    candidates: &BTreeSet<RegistrableDomain>,
    verdicts: &BTreeMap<RegistrableDomain, PartyVerdict>,
) -> (PartyCounts, BTreeSet<String>) {
    let mut counts = PartyCounts {
        candidates: candidates.len(),
        ..PartyCounts::default()
    };
    let mut third_party = BTreeSet::new();
    for verdict in verdicts.values() {
        match verdict.status {
            PartyStatus::FirstParty => counts.first_party += 1,
            PartyStatus::ThirdParty => {
                counts.third_party += 1;
                third_party.insert(verdict.domain.as_str().to_string());
            }
            PartyStatus::SingleApp => counts.single_app += 1,
        }
    }
    debug_assert_eq!(
        counts.candidates,
        counts.first_party + counts.third_party + counts.single_app
    );
    (counts, third_party)
}

fn tally_evidence<'a>(
    items: impl IntoIterator<Item = &'a atscan::PageEvidence>,
) -> EvidenceCounts {
    let mut counts = EvidenceCounts::default();
    for evidence in items {
        match evidence.fetch_status {
            FetchStatus::Ok => counts.ok += 1,
            FetchStatus::Unreachable => counts.unreachable += 1,
            FetchStatus::NoContent => counts.no_content += 1,
        }
    }
    counts
}

fn write_rejects(path: &Path, rejects: &[RejectEntry]) -> anyhow::Result<()> {
    let mut out = String::new();
    for reject in rejects {
        out.push_str(&serde_json::to_string(reject)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}

fn write_classifications(
    path: &Path,
    classifications: &BTreeMap<String, DomainClassification>,
) -> anyhow::Result<()> {
    let mut out = String::new();
    for classification in classifications.values() {
        out.push_str(&serde_json::to_string(classification)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}

fn write_party_verdicts(
    path: &Path,
    verdicts: &BTreeMap<RegistrableDomain, PartyVerdict>,
) -> anyhow::Result<()> {
    let mut out = String::from("domain,status,matched_apps\n");
    for verdict in verdicts.values() {
        let matched: Vec<&str> = verdict.matched_apps.iter().map(String::as_str).collect();
        out.push_str(&format!(
            "{},{},{}\n",
            verdict.domain,
            party_status_str(verdict.status),
            matched.join(";")
        ));
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}

fn write_graph(path: &Path, graph: &AppDomainGraph) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(&graph.export_json())?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("write {}", path.display()))
}

fn party_status_str(status: PartyStatus) -> &'static str {
    match status {
        PartyStatus::FirstParty => "first_party",
        PartyStatus::ThirdParty => "third_party",
        PartyStatus::SingleApp => "single_app",
    }
}

fn digest_into(
    digests: &mut BTreeMap<&'static str, InputDigest>,
    key: &'static str,
    path: Option<&Path>,
) -> Result<(), PipelineError> {
    if let Some(path) = path {
        let digest = manifest::file_digest(path).map_err(stage("manifest"))?;
        digests.insert(key, digest);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_manifest<C: Serialize>(
    command: &'static str,
    inputs: BTreeMap<&'static str, InputDigest>,
    config: &C,
    stages: serde_json::Value,
    files: &[PathBuf],
    summary: serde_json::Value,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let mut outputs: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    outputs.sort();
    let manifest = RunManifest {
        tool: ToolInfo::current(),
        command,
        inputs,
        config: serde_json::to_value(config)
            .map_err(anyhow::Error::from)
            .map_err(stage("manifest"))?,
        stages,
        outputs,
        summary,
    };
    manifest.write(out_dir).map_err(stage("manifest"))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
