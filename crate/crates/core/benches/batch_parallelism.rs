//! Parallel vs sequential throughput of the two data-parallel pipeline
//! stages: party resolution and batch classification. With the `parallel`
//! feature (default), `resolve_party` and `classify_domains` fan out over
//! rayon; the `_seq` twins are the always-available fallback.

use std::collections::{BTreeMap, BTreeSet};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use atscan::blocklist::{BlocklistIndex, ListSource};
use atscan::classify::{
    classify_domains, classify_domains_seq, load_keyword_reference, CategoryKeywords,
    ClassifierOptions, ClassifyInput,
};
use atscan::evidence::{FetchStatus, PageEvidence};
use atscan::flow::FlowRecord;
use atscan::graph::{
    build_graph, resolve_party, resolve_party_seq, third_party_candidates, AppDomainGraph,
    TokenStoplist,
};
use atscan::psl::PublicSuffixList;

const KEYWORDS: &str = "\
ad_network\tads
ad_network\tinterstitial
ad_network\tadvertising
ad_network\tppi
analytics\tanalytics
analytics\tintelligence
analytics\tbug report
user_engagement\tpush notification
user_engagement\tcrm
user_engagement\ta/b test
";

fn synth_graph(apps: usize, domains: usize, flows: usize, seed: u64) -> AppDomainGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psl = PublicSuffixList::empty();
    psl.add_rule("com");
    psl.add_rule("net");
    let records: Vec<FlowRecord> = (0..flows)
        .map(|_| {
            let a = rng.random_range(0..apps);
            let d = rng.random_range(0..domains);
            FlowRecord {
                app_id: format!("com.vendor{a}.app{}", a % 7),
                fqdn: format!("api{}.service{d}.com", rng.random_range(0..3)),
                bytes_tx: rng.random_range(0..10_000),
                bytes_rx: rng.random_range(0..100_000),
                is_tls: true,
                timestamp: None,
            }
        })
        .collect();
    build_graph(records, &psl)
}

fn bench_resolve_party(c: &mut Criterion) {
    let stoplist = TokenStoplist::builtin();
    let mut group = c.benchmark_group("resolve_party");
    for (apps, domains, flows) in [(200, 400, 5_000), (1_000, 2_000, 40_000)] {
        let graph = synth_graph(apps, domains, flows, 7);
        let candidates = third_party_candidates(&graph);
        group.throughput(Throughput::Elements(candidates.len() as u64));
        group.bench_with_input(
            BenchmarkId::new("parallel", candidates.len()),
            &candidates,
            |b, candidates| b.iter(|| black_box(resolve_party(&graph, candidates, &stoplist))),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", candidates.len()),
            &candidates,
            |b, candidates| b.iter(|| black_box(resolve_party_seq(&graph, candidates, &stoplist))),
        );
    }
    group.finish();
}

fn synth_classify_inputs(domains: usize, seed: u64) -> BTreeMap<String, ClassifyInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = [
        "platform", "developers", "build", "reach", "customers", "product", "team", "global",
        "solutions", "data", "realtime", "dashboard", "integrate", "sdk", "growth", "audience",
    ];
    let signal = [
        "ads", "advertising", "interstitial", "analytics", "intelligence", "crm",
        "push notification", "a/b test", "roadside", "advertise",
    ];
    (0..domains)
        .map(|i| {
            let domain = format!("service{i}.com");
            let mut words = Vec::with_capacity(90);
            for _ in 0..80 {
                words.push(filler[rng.random_range(0..filler.len())]);
            }
            for _ in 0..rng.random_range(0..4usize) {
                words.push(signal[rng.random_range(0..signal.len())]);
            }
            let evidence = PageEvidence {
                domain: domain.clone(),
                landing_text: Some(words.join(" ")),
                snippet_texts: vec![
                    format!("{domain} mobile sdk and services"),
                    format!("reviews of {domain}"),
                ],
                fetched_at: None,
                fetch_status: FetchStatus::Ok,
            };
            let observed_fqdns =
                BTreeSet::from([format!("api.{domain}"), format!("cdn.{domain}")]);
            (
                domain,
                ClassifyInput {
                    evidence,
                    observed_fqdns,
                },
            )
        })
        .collect()
}

fn bench_classify(c: &mut Criterion) {
    let reference: Vec<CategoryKeywords> =
        load_keyword_reference(KEYWORDS.as_bytes()).unwrap().reference;
    let mut abp = BlocklistIndex::empty(ListSource::Abp);
    let mut hphosts = BlocklistIndex::empty(ListSource::Hosts);
    for i in (0..500).step_by(3) {
        abp.insert(&format!("service{i}.com"));
    }
    for i in (0..500).step_by(5) {
        hphosts.insert(&format!("api.service{i}.com"));
    }
    let options = ClassifierOptions::default();

    let mut group = c.benchmark_group("classify_domains");
    for size in [200usize, 2_000] {
        let inputs = synth_classify_inputs(size, 11);
        group.throughput(Throughput::Elements(size as u64));
        group.bench_with_input(BenchmarkId::new("parallel", size), &inputs, |b, inputs| {
            b.iter(|| black_box(classify_domains(inputs, &reference, &abp, &hphosts, &options)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", size), &inputs, |b, inputs| {
            b.iter(|| {
                black_box(classify_domains_seq(inputs, &reference, &abp, &hphosts, &options))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_resolve_party, bench_classify);
criterion_main!(benches);
