//! Two-stage ATS classification of third-party domains.
//!
//! Stage one is a prefilter: domains whose labels in an external
//! vendor-category snapshot are all clearly unrelated to advertising or
//! tracking (news, weather, sports, ...) and which appear on neither
//! blocklist are set aside as non-ATS without fetching any evidence.
//! Ambiguous labels like "software" or "internet" never qualify, since ATS
//! providers routinely hide behind them.
//!
//! Stage two combines two signals over the remaining domains: membership in
//! curated blocklists, and keyword phrases matched against landing-page and
//! snippet text. A domain is ATS when either signal fires; keyword matches
//! additionally assign one or more service categories.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocklist::BlocklistIndex;
use crate::evidence::PageEvidence;
use crate::text::{contains_phrase, normalize_tokens};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    AdNetwork,
    Analytics,
    UserEngagement,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::AdNetwork,
        Category::Analytics,
        Category::UserEngagement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::AdNetwork => "ad_network",
            Category::Analytics => "analytics",
            Category::UserEngagement => "user_engagement",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ad_network" => Ok(Category::AdNetwork),
            "analytics" => Ok(Category::Analytics),
            "user_engagement" => Ok(Category::UserEngagement),
            other => Err(format!("unknown category {other:?}")),
        }
    }
}

/// Keyword phrases for one category. Phrases are stored normalized
/// (lowercase tokens joined by single spaces) and matched as whole-word
/// sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryKeywords {
    pub category: Category,
    pub phrases: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct KeywordLoad {
    /// One entry per category, in `Category` order.
    pub reference: Vec<CategoryKeywords>,
    /// Phrases that appeared more than once for the same category.
    pub duplicate_count: usize,
}

#[derive(Debug, Error)]
pub enum KeywordError {
    #[error("failed to read keyword reference: {0}")]
    Io(#[from] io::Error),
    #[error("keyword reference line {line_no}: expected 'category<TAB>phrase', got {raw:?}")]
    Malformed { line_no: usize, raw: String },
    #[error("keyword reference line {line_no}: {message}")]
    Invalid { line_no: usize, message: String },
}

/// Load a keyword reference file: `category<TAB>phrase` per line, `#`
/// comments. Phrases are normalized on load; duplicates within a category
/// are collapsed and counted.
pub fn load_keyword_reference<R: BufRead>(reader: R) -> Result<KeywordLoad, KeywordError> {
    let mut by_category: BTreeMap<Category, BTreeSet<String>> = BTreeMap::new();
    let mut duplicate_count = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        let Some((category_raw, phrase_raw)) = entry.split_once('\t') else {
            return Err(KeywordError::Malformed {
                line_no,
                raw: line.clone(),
            });
        };
        let category =
            Category::from_str(category_raw.trim()).map_err(|message| KeywordError::Invalid {
                line_no,
                message,
            })?;
        let phrase = normalize_tokens(phrase_raw).join(" ");
        if phrase.is_empty() {
            return Err(KeywordError::Invalid {
                line_no,
                message: format!("phrase {phrase_raw:?} is empty after normalization"),
            });
        }
        if !by_category.entry(category).or_default().insert(phrase) {
            duplicate_count += 1;
        }
    }
    if duplicate_count > 0 {
        log::warn!("keyword reference: {duplicate_count} duplicate phrases collapsed");
    }
    Ok(KeywordLoad {
        reference: by_category
            .into_iter()
            .map(|(category, phrases)| CategoryKeywords { category, phrases })
            .collect(),
        duplicate_count,
    })
}

/// A point-in-time export of a commercial URL categorization service:
/// `domain,provider,labels` CSV with `;`-separated labels.
#[derive(Debug, Clone, Default)]
pub struct ExternalCategorySnapshot {
    /// Distinct providers seen in the snapshot, sorted, comma-joined.
    pub provider: String,
    pub retrieved_at: Option<String>,
    entries: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("failed to read category snapshot: {0}")]
    Io(#[from] io::Error),
    #[error("category snapshot has wrong header: expected {expected:?}, found {found:?}")]
    WrongHeader { expected: String, found: String },
    #[error("category snapshot: {0}")]
    Csv(String),
    #[error("category snapshot line {line_no}: empty domain")]
    EmptyDomain { line_no: u64 },
}

impl ExternalCategorySnapshot {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse_csv<R: Read>(reader: R) -> Result<Self, SnapshotError> {
        const HEADER: [&str; 3] = ["domain", "provider", "labels"];
        let mut csv_reader = csv::Reader::from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| SnapshotError::Csv(e.to_string()))?;
        let found: Vec<&str> = headers.iter().collect();
        if found != HEADER {
            return Err(SnapshotError::WrongHeader {
                expected: HEADER.join(","),
                found: found.join(","),
            });
        }
        let mut providers = BTreeSet::new();
        let mut entries: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for record in csv_reader.records() {
            let record = record.map_err(|e| SnapshotError::Csv(e.to_string()))?;
            let line_no = record.position().map_or(0, |p| p.line());
            let domain = record.get(0).unwrap_or("").trim().to_ascii_lowercase();
            if domain.is_empty() {
                return Err(SnapshotError::EmptyDomain { line_no });
            }
            let provider = record.get(1).unwrap_or("").trim();
            if !provider.is_empty() {
                providers.insert(provider.to_string());
            }
            let labels = entries.entry(domain).or_default();
            for label in record.get(2).unwrap_or("").split(';') {
                let label = label.trim().to_ascii_lowercase();
                if !label.is_empty() {
                    labels.insert(label);
                }
            }
        }
        Ok(Self {
            provider: providers.into_iter().collect::<Vec<_>>().join(","),
            retrieved_at: None,
            entries,
        })
    }

    pub fn labels(&self, domain: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(domain)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Labels that mark a domain as clearly outside the ATS business when they
/// are the only labels present.
pub fn default_non_ats_labels() -> BTreeSet<String> {
    [
        "news",
        "weather",
        "sports",
        "education",
        "entertainment",
        "finance",
        "banking",
        "travel",
        "health",
        "shopping",
        "games",
        "government",
        "reference",
        "search engine",
        "social networking",
        "streaming media",
        "email",
        "maps",
        "dating",
        "job search",
        "real estate",
        "religion",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

/// Labels too vague to clear a domain: ATS providers commonly carry them.
pub fn default_ambiguous_labels() -> BTreeSet<String> {
    [
        "software",
        "internet",
        "technology",
        "business services",
        "internet services",
        "web hosting",
        "content server",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prefiltered {
    /// Domains set aside as non-ATS without evidence gathering.
    pub removed: BTreeSet<String>,
    /// Domains that continue to the evidence stage.
    pub remaining: BTreeSet<String>,
}

/// Stage-one prefilter. A domain is removed only when the snapshot knows
/// it, every label is in `non_ats_labels`, no label is in
/// `ambiguous_labels`, and it appears on neither blocklist.
pub fn prefilter(
    candidates: &BTreeSet<String>,
    snapshot: &ExternalCategorySnapshot,
    abp: &BlocklistIndex,
    hphosts: &BlocklistIndex,
    non_ats_labels: &BTreeSet<String>,
    ambiguous_labels: &BTreeSet<String>,
) -> Prefiltered {
    let mut removed = BTreeSet::new();
    let mut remaining = BTreeSet::new();
    for domain in candidates {
        let clear = snapshot.labels(domain).is_some_and(|labels| {
            !labels.is_empty()
                && labels.iter().all(|l| non_ats_labels.contains(l))
                && !labels.iter().any(|l| ambiguous_labels.contains(l))
        });
        if clear && !abp.contains(domain) && !hphosts.contains(domain) {
            removed.insert(domain.clone());
        } else {
            remaining.insert(domain.clone());
        }
    }
    Prefiltered { removed, remaining }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionPath {
    /// Removed by the stage-one prefilter.
    PrefilteredNonAts,
    /// On a curated blocklist, no keyword category matched.
    CuratedList,
    /// At least one keyword category matched.
    KeywordMatch,
    /// No signal either way.
    NoEvidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainClassification {
    pub domain: String,
    pub is_ats: bool,
    pub categories: BTreeSet<Category>,
    pub on_abp: bool,
    pub on_hphosts: bool,
    /// Phrases that fired, per category; evidence for auditing decisions.
    pub matched_phrases: BTreeMap<Category, BTreeSet<String>>,
    pub decision_path: DecisionPath,
}

impl DomainClassification {
    /// Classification for a domain removed by the prefilter.
    pub fn prefiltered(domain: &str) -> Self {
        Self {
            domain: domain.to_string(),
            is_ats: false,
            categories: BTreeSet::new(),
            on_abp: false,
            on_hphosts: false,
            matched_phrases: BTreeMap::new(),
            decision_path: DecisionPath::PrefilteredNonAts,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierOptions {
    /// Distinct phrases a category needs before it is assigned.
    pub min_phrase_hits: usize,
    /// Phrases that veto all keyword matches for a domain when present in
    /// its evidence (e.g. a domain quoting "ad blocking" in a privacy
    /// pitch).
    pub negative_phrases: Vec<String>,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self {
            min_phrase_hits: 1,
            negative_phrases: Vec::new(),
        }
    }
}

/// Classify one domain from its evidence and blocklist membership, with
/// default options and no extra observed FQDNs.
pub fn classify_domain(
    evidence: &PageEvidence,
    reference: &[CategoryKeywords],
    abp: &BlocklistIndex,
    hphosts: &BlocklistIndex,
) -> DomainClassification {
    static EMPTY: BTreeSet<String> = BTreeSet::new();
    classify_domain_with(
        evidence,
        &EMPTY,
        reference,
        abp,
        hphosts,
        &ClassifierOptions::default(),
    )
}

/// Full classification: keyword matching over the evidence text segments
/// plus blocklist membership of the domain itself and every observed FQDN
/// under it.
pub fn classify_domain_with(
    evidence: &PageEvidence,
    observed_fqdns: &BTreeSet<String>,
    reference: &[CategoryKeywords],
    abp: &BlocklistIndex,
    hphosts: &BlocklistIndex,
    options: &ClassifierOptions,
) -> DomainClassification {
    let segments: Vec<Vec<String>> = evidence.text_segments().map(normalize_tokens).collect();
    let matches_anywhere = |phrase: &str| {
        let needle = normalize_tokens(phrase);
        segments.iter().any(|s| contains_phrase(s, &needle))
    };

    let vetoed = options.negative_phrases.iter().any(|p| matches_anywhere(p));
    let mut categories = BTreeSet::new();
    let mut matched_phrases: BTreeMap<Category, BTreeSet<String>> = BTreeMap::new();
    if !vetoed {
        for keywords in reference {
            let hits: BTreeSet<String> = keywords
                .phrases
                .iter()
                .filter(|p| matches_anywhere(p))
                .cloned()
                .collect();
            if !hits.is_empty() && hits.len() >= options.min_phrase_hits.max(1) {
                categories.insert(keywords.category);
                matched_phrases.insert(keywords.category, hits);
            }
        }
    }

    let on_list = |index: &BlocklistIndex| {
        index.contains(&evidence.domain) || observed_fqdns.iter().any(|f| index.contains(f))
    };
    let on_abp = on_list(abp);
    let on_hphosts = on_list(hphosts);
    let is_ats = !categories.is_empty() || on_abp || on_hphosts;
    let decision_path = if !categories.is_empty() {
        DecisionPath::KeywordMatch
    } else if on_abp || on_hphosts {
        DecisionPath::CuratedList
    } else {
        DecisionPath::NoEvidence
    };
    DomainClassification {
        domain: evidence.domain.clone(),
        is_ats,
        categories,
        on_abp,
        on_hphosts,
        matched_phrases,
        decision_path,
    }
}

/// One domain's inputs to batch classification.
#[derive(Debug, Clone)]
pub struct ClassifyInput {
    pub evidence: PageEvidence,
    /// FQDNs observed in traffic under this domain; blocklists often list
    /// subdomains ("ads.example.com") rather than registrable domains.
    pub observed_fqdns: BTreeSet<String>,
}

/// Classify a batch of domains. Runs data-parallel when the `parallel`
/// feature is enabled; output is identical either way.
pub fn classify_domains(
    inputs: &BTreeMap<String, ClassifyInput>,
    reference: &[CategoryKeywords],
    abp: &BlocklistIndex,
    hphosts: &BlocklistIndex,
    options: &ClassifierOptions,
) -> BTreeMap<String, DomainClassification> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let jobs: Vec<(&String, &ClassifyInput)> = inputs.iter().collect();
        return jobs
            .par_iter()
            .map(|(domain, input)| {
                (
                    (*domain).clone(),
                    classify_domain_with(
                        &input.evidence,
                        &input.observed_fqdns,
                        reference,
                        abp,
                        hphosts,
                        options,
                    ),
                )
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
    }
    #[cfg(not(feature = "parallel"))]
    classify_domains_seq(inputs, reference, abp, hphosts, options)
}

/// Sequential twin of [`classify_domains`]; always available.
pub fn classify_domains_seq(
    inputs: &BTreeMap<String, ClassifyInput>,
    reference: &[CategoryKeywords],
    abp: &BlocklistIndex,
    hphosts: &BlocklistIndex,
    options: &ClassifierOptions,
) -> BTreeMap<String, DomainClassification> {
    inputs
        .iter()
        .map(|(domain, input)| {
            (
                domain.clone(),
                classify_domain_with(
                    &input.evidence,
                    &input.observed_fqdns,
                    reference,
                    abp,
                    hphosts,
                    options,
                ),
            )
        })
        .collect()
}
