//! Bipartite app-domain graph and first/third-party separation.
//!
//! Nodes are app package names on one side and registrable domains on the
//! other; an edge carries the aggregated traffic between them. A domain
//! contacted by at least two distinct apps is a third-party candidate (a
//! backend used by a single app tells us nothing about sharing). Candidates
//! whose owner label shares a token with a contacting app's package name
//! are first-party: "api.accuweather.com" contacted by
//! "com.accuweather.android" is AccuWeather's own backend, not a third
//! party.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};

use crate::flow::FlowRecord;
use crate::psl::{PublicSuffixList, RegistrableDomain};

/// Tokens shorter than this carry no ownership signal ("de", "tv").
pub const MIN_TOKEN_LEN: usize = 3;

/// Aggregated traffic between one app and one registrable domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EdgeStats {
    pub flow_count: u64,
    pub bytes_tx: u64,
    pub bytes_rx: u64,
    /// Distinct FQDNs observed under the domain on this edge.
    pub fqdns: BTreeSet<String>,
}

impl EdgeStats {
    pub fn bytes_total(&self) -> u64 {
        self.bytes_tx + self.bytes_rx
    }

    fn add(&mut self, record: &FlowRecord) {
        self.flow_count += 1;
        self.bytes_tx += record.bytes_tx;
        self.bytes_rx += record.bytes_rx;
        self.fqdns.insert(record.fqdn.clone());
    }
}

#[derive(Debug, Clone, Default)]
pub struct AppDomainGraph {
    apps: BTreeSet<String>,
    domains: BTreeSet<RegistrableDomain>,
    edges: BTreeMap<(String, RegistrableDomain), EdgeStats>,
    domain_apps: BTreeMap<RegistrableDomain, BTreeSet<String>>,
    app_domains: BTreeMap<String, BTreeSet<RegistrableDomain>>,
    /// Flows dropped because their FQDN has no registrable domain (the FQDN
    /// is itself a public suffix).
    pub dropped_unreducible: usize,
}

static NO_APPS: BTreeSet<String> = BTreeSet::new();
static NO_DOMAINS: BTreeSet<RegistrableDomain> = BTreeSet::new();

impl AppDomainGraph {
    pub fn apps(&self) -> &BTreeSet<String> {
        &self.apps
    }

    pub fn domains(&self) -> &BTreeSet<RegistrableDomain> {
        &self.domains
    }

    pub fn edges(&self) -> &BTreeMap<(String, RegistrableDomain), EdgeStats> {
        &self.edges
    }

    pub fn edge(&self, app: &str, domain: &RegistrableDomain) -> Option<&EdgeStats> {
        self.edges.get(&(app.to_string(), domain.clone()))
    }

    pub fn apps_of(&self, domain: &RegistrableDomain) -> &BTreeSet<String> {
        self.domain_apps.get(domain).unwrap_or(&NO_APPS)
    }

    pub fn domains_of(&self, app: &str) -> &BTreeSet<RegistrableDomain> {
        self.app_domains.get(app).unwrap_or(&NO_DOMAINS)
    }

    /// Number of distinct apps contacting the domain.
    pub fn degree(&self, domain: &RegistrableDomain) -> usize {
        self.apps_of(domain).len()
    }

    /// Union of FQDNs observed under the domain across all apps.
    pub fn fqdns_of(&self, domain: &RegistrableDomain) -> BTreeSet<String> {
        let mut fqdns = BTreeSet::new();
        for app in self.apps_of(domain) {
            if let Some(stats) = self.edges.get(&(app.clone(), domain.clone())) {
                fqdns.extend(stats.fqdns.iter().cloned());
            }
        }
        fqdns
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// JSON view of the whole graph, deterministically ordered.
    pub fn export_json(&self) -> serde_json::Value {
        serde_json::json!({
            "apps": self.apps,
            "domains": self.domains,
            "dropped_unreducible": self.dropped_unreducible,
            "edges": self
                .edges
                .iter()
                .map(|((app, domain), stats)| {
                    serde_json::json!({
                        "app_id": app,
                        "domain": domain,
                        "flow_count": stats.flow_count,
                        "bytes_tx": stats.bytes_tx,
                        "bytes_rx": stats.bytes_rx,
                        "bytes_total": stats.bytes_total(),
                        "fqdns": stats.fqdns,
                    })
                })
                .collect::<Vec<_>>(),
        })
    }
}

/// Fold flow records into the bipartite graph, reducing each FQDN to its
/// registrable domain. Flows whose FQDN cannot be reduced are counted in
/// `dropped_unreducible` instead of aborting the build.
pub fn build_graph(
    records: impl IntoIterator<Item = FlowRecord>,
    psl: &PublicSuffixList,
) -> AppDomainGraph {
    let mut graph = AppDomainGraph::default();
    for record in records {
        let Ok(domain) = psl.registrable_domain(&record.fqdn) else {
            graph.dropped_unreducible += 1;
            continue;
        };
        graph.apps.insert(record.app_id.clone());
        graph.domains.insert(domain.clone());
        graph
            .domain_apps
            .entry(domain.clone())
            .or_default()
            .insert(record.app_id.clone());
        graph
            .app_domains
            .entry(record.app_id.clone())
            .or_default()
            .insert(domain.clone());
        graph
            .edges
            .entry((record.app_id.clone(), domain))
            .or_default()
            .add(&record);
    }
    graph
}

/// Domains contacted by at least two distinct apps.
pub fn third_party_candidates(graph: &AppDomainGraph) -> BTreeSet<RegistrableDomain> {
    graph
        .domains
        .iter()
        .filter(|d| graph.degree(d) >= 2)
        .cloned()
        .collect()
}

/// Tokens that appear in package names and domains without carrying any
/// ownership signal.
#[derive(Debug, Clone)]
pub struct TokenStoplist {
    tokens: BTreeSet<String>,
}

impl TokenStoplist {
    /// The compiled-in default stoplist.
    pub fn builtin() -> Self {
        Self::from_tokens(["com", "android", "free", "paid", "app", "mobile", "org", "net"])
    }

    /// One token per line, `#` comments.
    pub fn parse<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut tokens = BTreeSet::new();
        for line in reader.lines() {
            let line = line?;
            let token = line.split('#').next().unwrap_or("").trim().to_ascii_lowercase();
            if !token.is_empty() {
                tokens.insert(token);
            }
        }
        Ok(Self { tokens })
    }

    pub fn from_tokens<I: IntoIterator<Item = S>, S: Into<String>>(tokens: I) -> Self {
        Self {
            tokens: tokens
                .into_iter()
                .map(|t| t.into().to_ascii_lowercase())
                .collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl Default for TokenStoplist {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Ownership tokens of an app id: its dot-separated labels, lowercased,
/// minus stoplist entries and tokens shorter than [`MIN_TOKEN_LEN`].
pub fn tokenize_app_id(app_id: &str, stoplist: &TokenStoplist) -> BTreeSet<String> {
    app_id
        .split('.')
        .map(str::to_ascii_lowercase)
        .filter(|t| t.len() >= MIN_TOKEN_LEN && !stoplist.contains(t))
        .collect()
}

/// Ownership tokens of a domain: its owner label plus, when hyphenated, the
/// hyphen-separated parts ("avg-hrd" yields "avg-hrd", "avg" and "hrd"),
/// with the same length and stoplist filters as app tokens.
pub fn tokenize_domain(domain: &RegistrableDomain, stoplist: &TokenStoplist) -> BTreeSet<String> {
    let owner = domain.owner_label().to_ascii_lowercase();
    let mut tokens: BTreeSet<String> = owner.split('-').map(str::to_string).collect();
    tokens.insert(owner);
    tokens
        .into_iter()
        .filter(|t| t.len() >= MIN_TOKEN_LEN && !stoplist.contains(t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyStatus {
    FirstParty,
    ThirdParty,
    /// Fewer than two distinct apps contact the domain, so the third-party
    /// test does not apply.
    SingleApp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartyVerdict {
    pub domain: RegistrableDomain,
    pub status: PartyStatus,
    /// Apps whose package tokens intersect the domain's owner tokens.
    pub matched_apps: BTreeSet<String>,
}

fn verdict_for(
    graph: &AppDomainGraph,
    domain: &RegistrableDomain,
    domain_tokens: &BTreeSet<String>,
    app_tokens: &BTreeMap<&str, BTreeSet<String>>,
) -> PartyVerdict {
    let apps = graph.apps_of(domain);
    let matched_apps: BTreeSet<String> = apps
        .iter()
        .filter(|app| {
            app_tokens
                .get(app.as_str())
                .is_some_and(|tokens| !tokens.is_disjoint(domain_tokens))
        })
        .cloned()
        .collect();
    let status = if apps.len() < 2 {
        PartyStatus::SingleApp
    } else if matched_apps.is_empty() {
        PartyStatus::ThirdParty
    } else {
        PartyStatus::FirstParty
    };
    PartyVerdict {
        domain: domain.clone(),
        status,
        matched_apps,
    }
}

fn contacting_app_tokens<'g>(
    graph: &'g AppDomainGraph,
    candidates: &BTreeSet<RegistrableDomain>,
    stoplist: &TokenStoplist,
) -> BTreeMap<&'g str, BTreeSet<String>> {
    let mut needed: BTreeSet<&str> = BTreeSet::new();
    for domain in candidates {
        needed.extend(graph.apps_of(domain).iter().map(String::as_str));
    }
    needed
        .into_iter()
        .map(|app| (app, tokenize_app_id(app, stoplist)))
        .collect()
}

/// Decide first-party vs third-party for each candidate domain. Runs
/// data-parallel when the `parallel` feature is enabled; output is
/// identical either way.
pub fn resolve_party(
    graph: &AppDomainGraph,
    candidates: &BTreeSet<RegistrableDomain>,
    stoplist: &TokenStoplist,
) -> BTreeMap<RegistrableDomain, PartyVerdict> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let app_tokens = contacting_app_tokens(graph, candidates, stoplist);
        let list: Vec<&RegistrableDomain> = candidates.iter().collect();
        return list
            .par_iter()
            .map(|domain| {
                let domain_tokens = tokenize_domain(domain, stoplist);
                (
                    (*domain).clone(),
                    verdict_for(graph, domain, &domain_tokens, &app_tokens),
                )
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
    }
    #[cfg(not(feature = "parallel"))]
    resolve_party_seq(graph, candidates, stoplist)
}

/// Sequential twin of [`resolve_party`]; always available.
pub fn resolve_party_seq(
    graph: &AppDomainGraph,
    candidates: &BTreeSet<RegistrableDomain>,
    stoplist: &TokenStoplist,
) -> BTreeMap<RegistrableDomain, PartyVerdict> {
    let app_tokens = contacting_app_tokens(graph, candidates, stoplist);
    candidates
        .iter()
        .map(|domain| {
            let domain_tokens = tokenize_domain(domain, stoplist);
            (
                domain.clone(),
                verdict_for(graph, domain, &domain_tokens, &app_tokens),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowRecord;

    fn psl() -> PublicSuffixList {
        let mut list = PublicSuffixList::empty();
        for rule in ["com", "net", "org", "co.uk", "appspot.com", "io"] {
            list.add_rule(rule);
        }
        list
    }

    fn flow(app_id: &str, fqdn: &str, bytes_tx: u64, bytes_rx: u64) -> FlowRecord {
        FlowRecord {
            app_id: app_id.to_string(),
            fqdn: fqdn.to_string(),
            bytes_tx,
            bytes_rx,
            is_tls: true,
            timestamp: None,
        }
    }

    /// The weather-apps scenario: one shared push service, one first-party
    /// backend reached by both AccuWeather variants.
    fn weather_flows() -> Vec<FlowRecord> {
        vec![
            flow("com.accuweather.android", "api.accuweather.com", 100, 2000),
            flow("com.accuweather.android", "cdn.accuweather.com", 50, 9000),
            flow("com.accuweather.android", "device-api.urbanairship.com", 10, 20),
            flow("com.accuweather.paid.android", "api.accuweather.com", 80, 1500),
            flow("com.accuweather.paid.android", "combine.urbanairship.com", 12, 24),
            flow("com.skymet.weather", "device-api.urbanairship.com", 9, 18),
            flow("com.weatherzone.android", "combine.urbanairship.com", 7, 14),
            flow("net.windguru.forecast", "device-api.urbanairship.com", 5, 10),
            flow("org.cirrus.clouds", "device-api.urbanairship.com", 3, 6),
        ]
    }

    fn domain(s: &str) -> RegistrableDomain {
        psl().registrable_domain(s).unwrap()
    }

    #[test]
    fn builds_weather_graph() {
        let graph = build_graph(weather_flows(), &psl());
        assert_eq!(graph.apps().len(), 6);
        assert_eq!(graph.domains().len(), 2);
        assert_eq!(graph.edge_count(), 8);
        assert_eq!(graph.dropped_unreducible, 0);

        let accu = domain("accuweather.com");
        let urban = domain("urbanairship.com");
        assert_eq!(graph.degree(&accu), 2);
        assert_eq!(graph.degree(&urban), 6);

        let edge = graph.edge("com.accuweather.android", &accu).unwrap();
        assert_eq!(edge.flow_count, 2);
        assert_eq!(edge.bytes_tx, 150);
        assert_eq!(edge.bytes_rx, 11000);
        assert_eq!(edge.bytes_total(), 11150);
        assert_eq!(edge.fqdns.len(), 2);

        assert_eq!(
            graph.fqdns_of(&urban),
            BTreeSet::from([
                "combine.urbanairship.com".to_string(),
                "device-api.urbanairship.com".to_string(),
            ])
        );
    }

    #[test]
    fn unreducible_fqdns_are_counted_not_fatal() {
        let records = vec![
            flow("com.a.b", "x.example.com", 1, 1),
            flow("com.a.b", "com", 1, 1),
            flow("com.c.d", "appspot.com", 1, 1),
            flow("com.c.d", "x.example.com", 1, 1),
        ];
        let graph = build_graph(records, &psl());
        assert_eq!(graph.dropped_unreducible, 2);
        assert_eq!(graph.domains().len(), 1);
        assert_eq!(graph.apps().len(), 2);
    }

    #[test]
    fn candidates_need_two_distinct_apps() {
        let graph = build_graph(weather_flows(), &psl());
        let candidates = third_party_candidates(&graph);
        assert_eq!(
            candidates,
            BTreeSet::from([domain("accuweather.com"), domain("urbanairship.com")])
        );

        let single = build_graph(
            vec![
                flow("com.a.b", "only.example.com", 1, 1),
                flow("com.a.b", "shared.example.net", 1, 1),
                flow("com.c.d", "shared.example.net", 1, 1),
            ],
            &psl(),
        );
        let candidates = third_party_candidates(&single);
        assert_eq!(candidates, BTreeSet::from([domain("example.net")]));
    }

    #[test]
    fn app_tokens_drop_stopwords_and_short_labels() {
        let stoplist = TokenStoplist::builtin();
        let tokens = |s: &str| tokenize_app_id(s, &stoplist);
        assert_eq!(tokens("com.accuweather.android"), BTreeSet::from(["accuweather".to_string()]));
        assert_eq!(tokens("com.foo-bar.app.paid"), BTreeSet::from(["foo-bar".to_string()]));
        assert_eq!(
            tokens("net.windguru.forecast"),
            BTreeSet::from(["windguru".to_string(), "forecast".to_string()])
        );
        assert_eq!(tokens("com.UCMobile.intl"), BTreeSet::from(["ucmobile".to_string(), "intl".to_string()]));
        // "a" and "io" are too short to carry signal.
        assert_eq!(tokens("io.a.com"), BTreeSet::<String>::new());
    }

    #[test]
    fn domain_tokens_split_hyphenated_owner_labels() {
        let stoplist = TokenStoplist::builtin();
        let tokens = |s: &str| tokenize_domain(&domain(s), &stoplist);
        assert_eq!(tokens("accuweather.com"), BTreeSet::from(["accuweather".to_string()]));
        assert_eq!(
            tokens("avg-hrd.appspot.com"),
            BTreeSet::from(["avg-hrd".to_string(), "avg".to_string(), "hrd".to_string()])
        );
        // Short or stoplisted parts drop out, the full label survives.
        assert_eq!(
            tokens("ab-tracker.com"),
            BTreeSet::from(["ab-tracker".to_string(), "tracker".to_string()])
        );
        assert_eq!(
            tokens("app-measurement.com"),
            BTreeSet::from(["app-measurement".to_string(), "measurement".to_string()])
        );
    }

    #[test]
    fn resolves_first_and_third_parties() {
        let graph = build_graph(weather_flows(), &psl());
        let candidates = third_party_candidates(&graph);
        let stoplist = TokenStoplist::builtin();
        let verdicts = resolve_party(&graph, &candidates, &stoplist);

        let accu = &verdicts[&domain("accuweather.com")];
        assert_eq!(accu.status, PartyStatus::FirstParty);
        assert_eq!(
            accu.matched_apps,
            BTreeSet::from([
                "com.accuweather.android".to_string(),
                "com.accuweather.paid.android".to_string(),
            ])
        );

        let urban = &verdicts[&domain("urbanairship.com")];
        assert_eq!(urban.status, PartyStatus::ThirdParty);
        assert!(urban.matched_apps.is_empty());
    }

    #[test]
    fn single_app_domains_are_flagged() {
        let graph = build_graph(
            vec![
                flow("com.a.b", "lonely.example.com", 1, 1),
                flow("com.x.y", "shared.example.net", 1, 1),
                flow("com.z.w", "shared.example.net", 1, 1),
            ],
            &psl(),
        );
        let stoplist = TokenStoplist::builtin();
        let all: BTreeSet<RegistrableDomain> = graph.domains().clone();
        let verdicts = resolve_party(&graph, &all, &stoplist);
        assert_eq!(verdicts[&domain("example.com")].status, PartyStatus::SingleApp);
        assert_eq!(verdicts[&domain("example.net")].status, PartyStatus::ThirdParty);
    }

    #[test]
    fn exact_token_match_only_no_substrings() {
        let stoplist = TokenStoplist::builtin();
        let graph = build_graph(
            vec![
                flow("com.facebook.katana", "graph.facebook.com", 1, 1),
                flow("com.facebooklite.fake", "graph.facebook.com", 1, 1),
                flow("com.notfb.app", "cdn.facebook.com", 1, 1),
            ],
            &psl(),
        );
        let candidates = third_party_candidates(&graph);
        let verdicts = resolve_party(&graph, &candidates, &stoplist);
        let fb = &verdicts[&domain("facebook.com")];
        // Only the exact token "facebook" matches; "facebooklite" does not.
        assert_eq!(fb.status, PartyStatus::FirstParty);
        assert_eq!(fb.matched_apps, BTreeSet::from(["com.facebook.katana".to_string()]));
    }

    #[test]
    fn custom_stoplist_changes_matching() {
        let graph = build_graph(
            vec![
                flow("com.mobile.game", "cdn.mobile.com", 1, 1),
                flow("com.other.game", "cdn.mobile.com", 1, 1),
            ],
            &psl(),
        );
        let candidates = third_party_candidates(&graph);

        let with_stop = resolve_party(&graph, &candidates, &TokenStoplist::builtin());
        assert_eq!(with_stop[&domain("mobile.com")].status, PartyStatus::ThirdParty);

        let without_stop = resolve_party(&graph, &candidates, &TokenStoplist::from_tokens(["com"]));
        assert_eq!(without_stop[&domain("mobile.com")].status, PartyStatus::FirstParty);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn app_ids() -> impl Strategy<Value = String> {
            proptest::collection::vec(
                prop_oneof![
                    "[a-z]{2,8}",
                    Just("com".to_string()),
                    Just("android".to_string()),
                    Just("weather".to_string()),
                    Just("accuweather".to_string()),
                ],
                2..4,
            )
            .prop_map(|ls| ls.join("."))
        }

        fn fqdns() -> impl Strategy<Value = String> {
            (
                proptest::collection::vec("[a-z]{1,6}", 0..2),
                prop_oneof![
                    "[a-z]{3,10}",
                    Just("accuweather".to_string()),
                    Just("weather".to_string()),
                    Just("avg-hrd".to_string()),
                ],
                prop_oneof![
                    Just("com".to_string()),
                    Just("net".to_string()),
                    Just("co.uk".to_string()),
                    Just("appspot.com".to_string()),
                ],
            )
                .prop_map(|(subs, owner, suffix)| {
                    let mut parts = subs;
                    parts.push(owner);
                    parts.push(suffix);
                    parts.join(".")
                })
        }

        fn random_flows() -> impl Strategy<Value = Vec<FlowRecord>> {
            proptest::collection::vec(
                (app_ids(), fqdns(), 0u64..10_000, 0u64..10_000).prop_map(
                    |(app_id, fqdn, tx, rx)| FlowRecord {
                        app_id,
                        fqdn,
                        bytes_tx: tx,
                        bytes_rx: rx,
                        is_tls: true,
                        timestamp: None,
                    },
                ),
                0..60,
            )
        }

        fn psl_with_uk() -> PublicSuffixList {
            let mut list = PublicSuffixList::empty();
            for rule in ["com", "net", "org", "uk", "co.uk", "appspot.com"] {
                list.add_rule(rule);
            }
            list
        }

        proptest! {
            #[test]
            fn graph_invariants_hold(flows in random_flows()) {
                let psl = psl_with_uk();
                let reducible = flows
                    .iter()
                    .filter(|f| psl.registrable_domain(&f.fqdn).is_ok())
                    .count();
                let graph = build_graph(flows.clone(), &psl);
                prop_assert_eq!(graph.dropped_unreducible, flows.len() - reducible);

                let total_flows: u64 = graph.edges().values().map(|e| e.flow_count).sum();
                prop_assert_eq!(total_flows, reducible as u64);

                for ((app, dom), stats) in graph.edges() {
                    prop_assert!(graph.apps().contains(app));
                    prop_assert!(graph.domains().contains(dom));
                    prop_assert!(stats.flow_count >= 1);
                    prop_assert!(!stats.fqdns.is_empty());
                    prop_assert_eq!(stats.bytes_total(), stats.bytes_tx + stats.bytes_rx);
                    prop_assert!(graph.apps_of(dom).contains(app));
                    prop_assert!(graph.domains_of(app).contains(dom));
                }
                for dom in graph.domains() {
                    prop_assert!(graph.degree(dom) >= 1);
                }
            }

            #[test]
            fn parallel_and_sequential_party_resolution_agree(flows in random_flows()) {
                let psl = psl_with_uk();
                let graph = build_graph(flows, &psl);
                let candidates = third_party_candidates(&graph);
                let stoplist = TokenStoplist::builtin();
                let par = resolve_party(&graph, &candidates, &stoplist);
                let seq = resolve_party_seq(&graph, &candidates, &stoplist);
                prop_assert_eq!(par, seq);
            }

            #[test]
            fn verdicts_partition_candidates(flows in random_flows()) {
                let psl = psl_with_uk();
                let graph = build_graph(flows, &psl);
                let candidates = third_party_candidates(&graph);
                let stoplist = TokenStoplist::builtin();
                let verdicts = resolve_party(&graph, &candidates, &stoplist);
                prop_assert_eq!(verdicts.len(), candidates.len());
                for (dom, verdict) in &verdicts {
                    prop_assert!(candidates.contains(dom));
                    // Candidates have degree >= 2, so single_app never
                    // appears here.
                    match verdict.status {
                        PartyStatus::FirstParty => prop_assert!(!verdict.matched_apps.is_empty()),
                        PartyStatus::ThirdParty => prop_assert!(verdict.matched_apps.is_empty()),
                        PartyStatus::SingleApp => prop_assert!(false, "candidate marked single_app"),
                    }
                    for app in &verdict.matched_apps {
                        prop_assert!(graph.apps_of(dom).contains(app));
                    }
                }
            }
        }
    }
}
