//! Page evidence for the keyword classifier.
//!
//! For every third-party domain we try to obtain its landing page text and
//! a handful of search result snippets. The default source is a fixture
//! directory of previously captured pages (`<domain>.landing.txt`,
//! `<domain>.snippets.txt`), which keeps runs reproducible; a live HTTP
//! fetcher is available behind the `live` feature.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FetchStatus {
    /// At least one non-empty text segment was obtained.
    Ok,
    /// Neither the landing page nor snippets could be fetched.
    Unreachable,
    /// Something was fetched but no visible text survived extraction.
    NoContent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageEvidence {
    pub domain: String,
    /// Visible text of the landing page, absent when the fetch failed or
    /// yielded nothing visible.
    pub landing_text: Option<String>,
    /// Up to `snippet_count` search snippets, whitespace-collapsed.
    pub snippet_texts: Vec<String>,
    pub fetched_at: Option<String>,
    pub fetch_status: FetchStatus,
}

impl PageEvidence {
    pub fn unreachable(domain: &str) -> Self {
        Self {
            domain: domain.to_string(),
            landing_text: None,
            snippet_texts: Vec::new(),
            fetched_at: None,
            fetch_status: FetchStatus::Unreachable,
        }
    }

    /// All text segments, landing page first. Segments are matched
    /// independently so a phrase cannot straddle two sources.
    pub fn text_segments(&self) -> impl Iterator<Item = &str> {
        self.landing_text
            .as_deref()
            .into_iter()
            .chain(self.snippet_texts.iter().map(String::as_str))
    }
}

/// Where raw page material comes from. Implementations return raw bytes of
/// content (HTML for landing pages, one snippet per line); text extraction
/// happens in [`gather_evidence`].
pub trait EvidenceFetcher: Sync {
    /// Raw landing page HTML, or None when the fetch failed outright.
    fn fetch_landing(&self, domain: &str) -> Option<String>;
    /// Raw snippet lines, or None when the snippet source failed outright.
    fn fetch_snippets(&self, domain: &str, k: usize) -> Option<Vec<String>>;
    /// Capture date recorded into the evidence, when known.
    fn fetched_at(&self) -> Option<String> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct EvidenceOptions {
    /// Snippets kept per domain.
    pub snippet_count: usize,
    /// Concurrent fetches in batch gathering (only relevant with the
    /// `parallel` feature).
    pub max_in_flight: usize,
}

impl Default for EvidenceOptions {
    fn default() -> Self {
        Self {
            snippet_count: 5,
            max_in_flight: 8,
        }
    }
}

/// Reads evidence from a directory of capture files: `<domain>.landing.txt`
/// holds the landing page HTML, `<domain>.snippets.txt` one snippet per
/// line. A missing file means that source was unreachable at capture time.
#[derive(Debug, Clone)]
pub struct FixtureFetcher {
    dir: PathBuf,
}

impl FixtureFetcher {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl EvidenceFetcher for FixtureFetcher {
    fn fetch_landing(&self, domain: &str) -> Option<String> {
        fs::read_to_string(self.dir.join(format!("{domain}.landing.txt"))).ok()
    }

    fn fetch_snippets(&self, domain: &str, _k: usize) -> Option<Vec<String>> {
        let raw = fs::read_to_string(self.dir.join(format!("{domain}.snippets.txt"))).ok()?;
        Some(raw.lines().map(str::to_string).collect())
    }
}

/// Fetch and extract evidence for one domain.
pub fn gather_evidence(
    domain: &str,
    fetcher: &dyn EvidenceFetcher,
    options: &EvidenceOptions,
) -> PageEvidence {
    let landing_raw = fetcher.fetch_landing(domain);
    let snippets_raw = fetcher.fetch_snippets(domain, options.snippet_count);
    if landing_raw.is_none() && snippets_raw.is_none() {
        let mut evidence = PageEvidence::unreachable(domain);
        evidence.fetched_at = fetcher.fetched_at();
        return evidence;
    }
    let landing_text = landing_raw
        .map(|html| text::html_to_text(&html))
        .filter(|t| !t.is_empty());
    let snippet_texts: Vec<String> = snippets_raw
        .unwrap_or_default()
        .iter()
        .map(|s| text::collapse_whitespace(s))
        .filter(|s| !s.is_empty())
        .take(options.snippet_count)
        .collect();
    let fetch_status = if landing_text.is_none() && snippet_texts.is_empty() {
        FetchStatus::NoContent
    } else {
        FetchStatus::Ok
    };
    PageEvidence {
        domain: domain.to_string(),
        landing_text,
        snippet_texts,
        fetched_at: fetcher.fetched_at(),
        fetch_status,
    }
}

/// Gather evidence for many domains, fetching up to
/// `options.max_in_flight` domains concurrently when the `parallel` feature
/// is enabled. Results are keyed by domain, so output order never depends
/// on fetch timing.
pub fn gather_all<'a>(
    domains: impl IntoIterator<Item = &'a str>,
    fetcher: &dyn EvidenceFetcher,
    options: &EvidenceOptions,
) -> BTreeMap<String, PageEvidence> {
    let list: Vec<&str> = domains.into_iter().collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.max_in_flight.max(1))
            .build();
        if let Ok(pool) = pool {
            return pool.install(|| {
                list.par_iter()
                    .map(|d| (d.to_string(), gather_evidence(d, fetcher, options)))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .collect()
            });
        }
    }
    gather_all_seq(list, fetcher, options)
}

/// Sequential twin of [`gather_all`]; always available.
pub fn gather_all_seq<'a>(
    domains: impl IntoIterator<Item = &'a str>,
    fetcher: &dyn EvidenceFetcher,
    options: &EvidenceOptions,
) -> BTreeMap<String, PageEvidence> {
    domains
        .into_iter()
        .map(|d| (d.to_string(), gather_evidence(d, fetcher, options)))
        .collect()
}

#[cfg(feature = "live")]
pub mod live {
    //! Live HTTP evidence fetching. Non-deterministic by nature; intended
    //! for building new fixture sets, not for reproducible analysis runs.

    use std::time::{Duration, SystemTime, UNIX_EPOCH};

    use super::EvidenceFetcher;

    pub struct LiveFetcher {
        client: reqwest::blocking::Client,
        politeness_delay: Duration,
    }

    impl LiveFetcher {
        pub fn new(timeout: Duration, politeness_delay: Duration) -> reqwest::Result<Self> {
            let client = reqwest::blocking::Client::builder()
                .timeout(timeout)
                .user_agent(concat!("atscan/", env!("CARGO_PKG_VERSION")))
                .build()?;
            Ok(Self {
                client,
                politeness_delay,
            })
        }

        fn get(&self, url: &str) -> Option<String> {
            std::thread::sleep(self.politeness_delay);
            let response = self.client.get(url).send().ok()?;
            if !response.status().is_success() {
                return None;
            }
            response.text().ok()
        }
    }

    impl EvidenceFetcher for LiveFetcher {
        fn fetch_landing(&self, domain: &str) -> Option<String> {
            self.get(&format!("https://{domain}/"))
                .or_else(|| self.get(&format!("http://{domain}/")))
        }

        fn fetch_snippets(&self, _domain: &str, _k: usize) -> Option<Vec<String>> {
            // No snippet backend is wired in; live runs rely on landing
            // pages only.
            None
        }

        fn fetched_at(&self) -> Option<String> {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs().to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn fixture_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("mathtag.com.landing.txt"),
            "<html><title>Media Math</title><body>Programmatic ads &amp; marketing</body></html>",
        )
        .unwrap();
        fs::write(
            dir.path().join("mathtag.com.snippets.txt"),
            "MediaMath: programmatic advertising\n\n  The  ad  platform \nthird\nfourth\nfifth\nsixth\nseventh\n",
        )
        .unwrap();
        fs::write(dir.path().join("empty.example.snippets.txt"), "\n\n").unwrap();
        dir
    }

    #[test]
    fn fixture_evidence_is_extracted_and_truncated() {
        let dir = fixture_dir();
        let fetcher = FixtureFetcher::new(dir.path());
        let options = EvidenceOptions::default();
        let evidence = gather_evidence("mathtag.com", &fetcher, &options);
        assert_eq!(evidence.fetch_status, FetchStatus::Ok);
        assert_eq!(
            evidence.landing_text.as_deref(),
            Some("Media Math Programmatic ads & marketing")
        );
        assert_eq!(evidence.snippet_texts.len(), 5);
        assert_eq!(evidence.snippet_texts[0], "MediaMath: programmatic advertising");
        assert_eq!(evidence.snippet_texts[1], "The ad platform");
        assert_eq!(evidence.text_segments().count(), 6);
    }

    #[test]
    fn missing_files_mean_unreachable() {
        let dir = fixture_dir();
        let fetcher = FixtureFetcher::new(dir.path());
        let evidence = gather_evidence("nowhere.example", &fetcher, &EvidenceOptions::default());
        assert_eq!(evidence.fetch_status, FetchStatus::Unreachable);
        assert!(evidence.landing_text.is_none());
        assert!(evidence.snippet_texts.is_empty());
    }

    #[test]
    fn blank_content_means_no_content() {
        let dir = fixture_dir();
        let fetcher = FixtureFetcher::new(dir.path());
        let evidence = gather_evidence("empty.example", &fetcher, &EvidenceOptions::default());
        assert_eq!(evidence.fetch_status, FetchStatus::NoContent);
        assert!(evidence.landing_text.is_none());
        assert!(evidence.snippet_texts.is_empty());
    }

    #[test]
    fn batch_gathering_matches_sequential() {
        let dir = fixture_dir();
        let fetcher = FixtureFetcher::new(dir.path());
        let options = EvidenceOptions {
            snippet_count: 3,
            max_in_flight: 2,
        };
        let domains = ["mathtag.com", "nowhere.example", "empty.example"];
        let parallel = gather_all(domains, &fetcher, &options);
        let sequential = gather_all_seq(domains, &fetcher, &options);
        assert_eq!(parallel, sequential);
        assert_eq!(parallel.len(), 3);
        assert_eq!(parallel["mathtag.com"].snippet_texts.len(), 3);
    }
}
