//! `atscan`: identify advertising and tracking services in per-app mobile
//! network flow logs.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use atscan_cli::config::{
    ClassifyConfig, EvidenceMode, FlowFormatArg, GraphConfig, OutputFormatArg, PipelineConfig,
};
use atscan_cli::pipeline::{cmd_analyze, cmd_classify, cmd_graph, RunSummary};

#[derive(Parser)]
#[command(
    name = "atscan",
    version,
    about = "Identify advertising and tracking services in per-app mobile flow logs"
)]
struct Cli {
    /// More log output; repeat for debug detail.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: graph, party resolution, classification, reports.
    Analyze(AnalyzeArgs),
    /// Classify an explicit list of registrable domains.
    Classify(ClassifyArgs),
    /// Build the app-domain graph and party verdicts, skipping classification.
    Graph(GraphArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Flow log to analyze.
    #[arg(long, value_name = "FILE")]
    flow_log: PathBuf,
    /// Flow log encoding.
    #[arg(long, value_enum, default_value_t = FlowFormatArg::Jsonl)]
    flow_format: FlowFormatArg,
    /// Public suffix list snapshot.
    #[arg(long, value_name = "FILE")]
    psl: PathBuf,
    /// Ignore the private-domains section of the suffix list.
    #[arg(long)]
    psl_icann_only: bool,
    /// Browser package names to exclude, one per line.
    #[arg(long, value_name = "FILE")]
    browsers: PathBuf,
    /// Ownership tokens too generic to match on, one per line.
    #[arg(long, value_name = "FILE")]
    stoplist: PathBuf,
    /// Category keyword reference (TSV: category, phrase).
    #[arg(long, value_name = "FILE")]
    keywords: PathBuf,
    /// AdBlock Plus filter list.
    #[arg(long, value_name = "FILE")]
    abp: PathBuf,
    /// Hosts-format blocklist.
    #[arg(long, value_name = "FILE")]
    hphosts: PathBuf,
    /// URL categorization snapshot (CSV: domain, provider, labels).
    #[arg(long, value_name = "FILE")]
    categories: Option<PathBuf>,
    /// Which sites embed which domains (CSV: site, embedded_domains).
    #[arg(long, value_name = "FILE")]
    web_presence: Option<PathBuf>,
    /// Phrases that veto keyword matches, one per line.
    #[arg(long, value_name = "FILE")]
    negative_keywords: Option<PathBuf>,
    /// Where page evidence comes from.
    #[arg(long, value_enum, default_value_t = EvidenceMode::Fixture)]
    evidence_mode: EvidenceMode,
    /// Directory of <domain>.landing.txt / <domain>.snippets.txt fixtures.
    #[arg(long, value_name = "DIR")]
    evidence_dir: Option<PathBuf>,
    /// Search snippets kept per domain.
    #[arg(long, default_value_t = 5)]
    snippet_count: usize,
    /// Concurrent evidence fetches.
    #[arg(long, default_value_t = 8)]
    max_in_flight: usize,
    /// Distinct phrases a category needs before it is assigned.
    #[arg(long, default_value_t = 1)]
    min_phrase_hits: usize,
    /// Flows an app-domain edge needs to count toward the ranking.
    #[arg(long, default_value_t = 1)]
    min_flows: u64,
    /// Rows in the domain ranking report.
    #[arg(long, default_value_t = 25)]
    top_n_domains: usize,
    /// Most data-hungry apps considered in the traffic report.
    #[arg(long, default_value_t = 200)]
    top_n_apps: usize,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Report file format.
    #[arg(long, value_enum, default_value_t = OutputFormatArg::Csv)]
    output_format: OutputFormatArg,
}

impl From<AnalyzeArgs> for PipelineConfig {
    fn from(args: AnalyzeArgs) -> Self {
        Self {
            flow_log: args.flow_log,
            flow_format: args.flow_format,
            psl: args.psl,
            psl_icann_only: args.psl_icann_only,
            browsers: args.browsers,
            stoplist: args.stoplist,
            keywords: args.keywords,
            abp: args.abp,
            hphosts: args.hphosts,
            categories: args.categories,
            web_presence: args.web_presence,
            negative_keywords: args.negative_keywords,
            evidence_mode: args.evidence_mode,
            evidence_dir: args.evidence_dir,
            snippet_count: args.snippet_count,
            max_in_flight: args.max_in_flight,
            min_phrase_hits: args.min_phrase_hits,
            min_flows: args.min_flows,
            top_n_domains: args.top_n_domains,
            top_n_apps: args.top_n_apps,
            out: args.out,
            output_format: args.output_format,
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    /// Registrable domains to classify, one per line.
    #[arg(long, value_name = "FILE")]
    domains: PathBuf,
    /// Category keyword reference (TSV: category, phrase).
    #[arg(long, value_name = "FILE")]
    keywords: PathBuf,
    /// AdBlock Plus filter list.
    #[arg(long, value_name = "FILE")]
    abp: PathBuf,
    /// Hosts-format blocklist.
    #[arg(long, value_name = "FILE")]
    hphosts: PathBuf,
    /// URL categorization snapshot (CSV: domain, provider, labels).
    #[arg(long, value_name = "FILE")]
    categories: Option<PathBuf>,
    /// Phrases that veto keyword matches, one per line.
    #[arg(long, value_name = "FILE")]
    negative_keywords: Option<PathBuf>,
    /// Where page evidence comes from.
    #[arg(long, value_enum, default_value_t = EvidenceMode::Fixture)]
    evidence_mode: EvidenceMode,
    /// Directory of <domain>.landing.txt / <domain>.snippets.txt fixtures.
    #[arg(long, value_name = "DIR")]
    evidence_dir: Option<PathBuf>,
    /// Search snippets kept per domain.
    #[arg(long, default_value_t = 5)]
    snippet_count: usize,
    /// Concurrent evidence fetches.
    #[arg(long, default_value_t = 8)]
    max_in_flight: usize,
    /// Distinct phrases a category needs before it is assigned.
    #[arg(long, default_value_t = 1)]
    min_phrase_hits: usize,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

impl From<ClassifyArgs> for ClassifyConfig {
    fn from(args: ClassifyArgs) -> Self {
        Self {
            domains: args.domains,
            keywords: args.keywords,
            abp: args.abp,
            hphosts: args.hphosts,
            categories: args.categories,
            negative_keywords: args.negative_keywords,
            evidence_mode: args.evidence_mode,
            evidence_dir: args.evidence_dir,
            snippet_count: args.snippet_count,
            max_in_flight: args.max_in_flight,
            min_phrase_hits: args.min_phrase_hits,
            out: args.out,
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    /// Flow log to analyze.
    #[arg(long, value_name = "FILE")]
    flow_log: PathBuf,
    /// Flow log encoding.
    #[arg(long, value_enum, default_value_t = FlowFormatArg::Jsonl)]
    flow_format: FlowFormatArg,
    /// Public suffix list snapshot.
    #[arg(long, value_name = "FILE")]
    psl: PathBuf,
    /// Ignore the private-domains section of the suffix list.
    #[arg(long)]
    psl_icann_only: bool,
    /// Browser package names to exclude, one per line.
    #[arg(long, value_name = "FILE")]
    browsers: PathBuf,
    /// Ownership tokens too generic to match on, one per line.
    #[arg(long, value_name = "FILE")]
    stoplist: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

impl From<GraphArgs> for GraphConfig {
    fn from(args: GraphArgs) -> Self {
        Self {
            flow_log: args.flow_log,
            flow_format: args.flow_format,
            psl: args.psl,
            psl_icann_only: args.psl_icann_only,
            browsers: args.browsers,
            stoplist: args.stoplist,
            out: args.out,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(&args.into()),
        Command::Classify(args) => cmd_classify(&args.into()),
        Command::Graph(args) => cmd_graph(&args.into()),
    };
    match result {
        Ok(summary) => print_summary(&summary),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level);
    builder.parse_default_env();
    let _ = builder.try_init();
}

fn print_summary(summary: &RunSummary) {
    for line in &summary.lines {
        println!("{line}");
    }
}
