//! Batch analysis of per-app mobile network flow logs.
//!
//! The library identifies the third-party services an app population talks
//! to and decides which of them are advertising and tracking services (ATS).
//! The pipeline stages map onto the modules below:
//!
//! 1. [`flow`]: parse flow logs (JSONL or CSV) and drop known browser apps,
//!    whose traffic mixes in web content fetched on behalf of the user.
//! 2. [`psl`]: reduce contacted FQDNs to registrable domains (eTLD+1) with a
//!    vendored public suffix list snapshot.
//! 3. [`graph`]: build the bipartite app-domain graph, keep domains contacted
//!    by at least two distinct apps as third-party candidates, and separate
//!    first-party domains by matching package-name tokens against the domain
//!    owner label.
//! 4. [`blocklist`] + [`classify`] + [`evidence`]: decide which third parties
//!    are ATS using curated blocklists (AdBlock Plus filters, hosts files)
//!    and keyword matching over landing-page and search-snippet text.
//! 5. [`report`]: prevalence ECDFs, domain rankings, traffic overhead, and
//!    cross-platform presence tables.
//!
//! All public entry points are deterministic: identical inputs produce
//! byte-identical outputs, regardless of the `parallel` feature.

pub mod blocklist;
pub mod classify;
pub mod evidence;
pub mod flow;
pub mod graph;
pub mod psl;
pub mod report;
pub mod text;

pub use blocklist::{BlocklistIndex, ListSource};
pub use classify::{Category, DecisionPath, DomainClassification};
pub use evidence::{FetchStatus, PageEvidence};
pub use flow::{FlowLogFormat, FlowRecord};
pub use graph::{AppDomainGraph, PartyStatus, PartyVerdict};
pub use psl::{PublicSuffixList, RegistrableDomain};
