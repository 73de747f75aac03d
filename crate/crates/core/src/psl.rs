//! Public suffix list handling: reduce an FQDN to its registrable domain.
//!
//! The list format follows publicsuffix.org: one rule per line, `//`
//! comments, exact rules (`co.uk`), wildcard rules (`*.ck`) and exception
//! rules (`!www.ck`). The ICANN and private sections are both loaded by
//! default; the private section (e.g. `appspot.com`, `github.io`) can be
//! excluded so sites hosted on shared infrastructure collapse into their
//! hosting provider instead of counting as separate registrants.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest unit of ownership in the public DNS: one label below the public
/// suffix, also known as eTLD+1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegistrableDomain(String);

impl RegistrableDomain {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// Leftmost label, the part chosen by the registrant ("accuweather" in
    /// "accuweather.com", "avg-hrd" in "avg-hrd.appspot.com").
    pub fn owner_label(&self) -> &str {
        self.0.split('.').next().unwrap_or(&self.0)
    }
}

impl fmt::Display for RegistrableDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for RegistrableDomain {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for RegistrableDomain {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PslError {
    /// The FQDN is itself a public suffix (or malformed), so it carries no
    /// owner label and no registrable domain exists.
    #[error("no registrable domain for {0:?}")]
    NoRegistrableDomain(String),
}

/// Parsed suffix rules, split by kind for O(log n) lookup per candidate
/// suffix.
#[derive(Debug, Clone, Default)]
pub struct PublicSuffixList {
    exact: BTreeSet<String>,
    /// Wildcard rules stored without the `*.` prefix: rule `*.ck` is kept as
    /// `ck` and matches exactly one extra label.
    wildcard: BTreeSet<String>,
    /// Exception rules stored without the `!` prefix.
    exception: BTreeSet<String>,
    /// Non-comment lines that did not parse as a rule.
    pub unparseable_lines: usize,
}

impl PublicSuffixList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parse a suffix list file, ICANN and private sections included.
    pub fn parse<R: BufRead>(reader: R) -> io::Result<Self> {
        Self::parse_sections(reader, true)
    }

    /// Parse a suffix list file. With `include_private = false`, rules
    /// between the `===BEGIN PRIVATE DOMAINS===` and
    /// `===END PRIVATE DOMAINS===` markers are dropped.
    pub fn parse_sections<R: BufRead>(reader: R, include_private: bool) -> io::Result<Self> {
        let mut list = Self::empty();
        let mut in_private = false;
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.contains("===BEGIN PRIVATE DOMAINS===") {
                in_private = true;
                continue;
            }
            if line.contains("===END PRIVATE DOMAINS===") {
                in_private = false;
                continue;
            }
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if in_private && !include_private {
                continue;
            }
            // Per the list format, everything after the first whitespace is
            // ignored.
            let rule = line.split_whitespace().next().unwrap_or("");
            if !list.add_rule(rule) {
                list.unparseable_lines += 1;
            }
        }
        Ok(list)
    }

    /// Add one rule in list syntax. Returns false if the rule is malformed.
    pub fn add_rule(&mut self, rule: &str) -> bool {
        let rule = rule.to_ascii_lowercase();
        if let Some(base) = rule.strip_prefix("*.") {
            if valid_rule_body(base) {
                self.wildcard.insert(base.to_string());
                return true;
            }
        } else if let Some(body) = rule.strip_prefix('!') {
            if valid_rule_body(body) {
                self.exception.insert(body.to_string());
                return true;
            }
        } else if valid_rule_body(&rule) {
            self.exact.insert(rule);
            return true;
        }
        false
    }

    pub fn exact_rules(&self) -> &BTreeSet<String> {
        &self.exact
    }

    pub fn wildcard_rules(&self) -> &BTreeSet<String> {
        &self.wildcard
    }

    pub fn exception_rules(&self) -> &BTreeSet<String> {
        &self.exception
    }

    pub fn rule_count(&self) -> usize {
        self.exact.len() + self.wildcard.len() + self.exception.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule_count() == 0
    }

    /// Longest public suffix of `fqdn` under the loaded rules.
    ///
    /// The prevailing rule is chosen per the publicsuffix.org algorithm: an
    /// exception rule beats everything and designates the rule minus its
    /// leftmost label as the suffix; otherwise the rule matching the most
    /// labels wins; if nothing matches, the rightmost label is the suffix.
    /// The input is expected to be lowercase with no empty labels.
    pub fn public_suffix<'a>(&self, fqdn: &'a str) -> &'a str {
        let starts = label_starts(fqdn);
        let n = starts.len();
        for (idx, &s) in starts.iter().enumerate() {
            if idx + 1 < n && self.exception.contains(&fqdn[s..]) {
                return &fqdn[starts[idx + 1]..];
            }
        }
        for (idx, &s) in starts.iter().enumerate() {
            let suffix = &fqdn[s..];
            if self.exact.contains(suffix) {
                return suffix;
            }
            if idx + 1 < n && self.wildcard.contains(&fqdn[starts[idx + 1]..]) {
                return suffix;
            }
        }
        &fqdn[starts[n - 1]..]
    }

    /// Reduce an FQDN to its registrable domain: the public suffix plus one
    /// label. Lowercases the input; fails when the FQDN is itself a public
    /// suffix or is malformed.
    pub fn registrable_domain(&self, fqdn: &str) -> Result<RegistrableDomain, PslError> {
        let norm = fqdn.to_ascii_lowercase();
        if norm.is_empty() || norm.starts_with('.') || norm.ends_with('.') || norm.contains("..") {
            return Err(PslError::NoRegistrableDomain(norm));
        }
        let suffix_len = self.public_suffix(&norm).len();
        if suffix_len == norm.len() {
            return Err(PslError::NoRegistrableDomain(norm));
        }
        let cut = norm.len() - suffix_len - 1;
        let start = norm[..cut].rfind('.').map_or(0, |i| i + 1);
        Ok(RegistrableDomain(norm[start..].to_string()))
    }
}

/// Byte offset of each label start, in left-to-right order.
fn label_starts(fqdn: &str) -> Vec<usize> {
    let mut starts = vec![0];
    for (i, b) in fqdn.bytes().enumerate() {
        if b == b'.' {
            starts.push(i + 1);
        }
    }
    starts
}

fn valid_rule_body(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('.')
        && !s.ends_with('.')
        && !s.contains("..")
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'.' || b == b'-')
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "\
// ===BEGIN ICANN DOMAINS===
com
net
org
uk
co.uk
org.uk
jp
co.jp
*.ck
!www.ck
// ===END ICANN DOMAINS===
// ===BEGIN PRIVATE DOMAINS===
appspot.com
github.io
// ===END PRIVATE DOMAINS===
";

    fn fixture_list() -> PublicSuffixList {
        PublicSuffixList::parse(FIXTURE.as_bytes()).unwrap()
    }

    #[test]
    fn parses_rule_kinds_and_sections() {
        let list = fixture_list();
        assert_eq!(list.exact_rules().len(), 10);
        assert!(list.exact_rules().contains("appspot.com"));
        assert_eq!(list.wildcard_rules().len(), 1);
        assert!(list.wildcard_rules().contains("ck"));
        assert_eq!(list.exception_rules().len(), 1);
        assert!(list.exception_rules().contains("www.ck"));
        assert_eq!(list.unparseable_lines, 0);
    }

    #[test]
    fn icann_only_drops_private_rules() {
        let list = PublicSuffixList::parse_sections(FIXTURE.as_bytes(), false).unwrap();
        assert!(!list.exact_rules().contains("appspot.com"));
        assert!(!list.exact_rules().contains("github.io"));
        assert!(list.exact_rules().contains("com"));
        assert_eq!(
            list.registrable_domain("avg-hrd.appspot.com").unwrap().as_str(),
            "appspot.com"
        );
    }

    #[test]
    fn counts_unparseable_lines() {
        let src = "com\nbad..rule\n.leading\nexa mple\n*.ok\n";
        let list = PublicSuffixList::parse(src.as_bytes()).unwrap();
        // "exa mple" parses as rule "exa" (text after whitespace is ignored).
        assert_eq!(list.unparseable_lines, 2);
        assert_eq!(list.rule_count(), 3);
    }

    #[test]
    fn public_suffix_cases() {
        let list = fixture_list();
        assert_eq!(list.public_suffix("www.example.com"), "com");
        assert_eq!(list.public_suffix("example.co.uk"), "co.uk");
        assert_eq!(list.public_suffix("deep.sub.example.org.uk"), "org.uk");
        // Wildcard: any single label under ck is a suffix.
        assert_eq!(list.public_suffix("foo.bar.ck"), "bar.ck");
        assert_eq!(list.public_suffix("bar.ck"), "bar.ck");
        // Exception: www.ck is registrable, so the suffix is plain ck.
        assert_eq!(list.public_suffix("www.ck"), "ck");
        assert_eq!(list.public_suffix("sub.www.ck"), "ck");
        // Private section rules participate like any other rule.
        assert_eq!(list.public_suffix("avg-hrd.appspot.com"), "appspot.com");
        // Unknown TLD falls back to the rightmost label.
        assert_eq!(list.public_suffix("example.zz"), "zz");
        assert_eq!(list.public_suffix("a.b.example.zz"), "zz");
    }

    #[test]
    fn registrable_domain_cases() {
        let list = fixture_list();
        let rd = |f: &str| list.registrable_domain(f).unwrap().into_string();
        assert_eq!(rd("www.example.com"), "example.com");
        assert_eq!(rd("example.com"), "example.com");
        assert_eq!(rd("a.b.c.example.co.uk"), "example.co.uk");
        assert_eq!(rd("foo.bar.ck"), "foo.bar.ck");
        assert_eq!(rd("www.ck"), "www.ck");
        assert_eq!(rd("sub.www.ck"), "www.ck");
        assert_eq!(rd("avg-hrd.appspot.com"), "avg-hrd.appspot.com");
        assert_eq!(rd("MiXeD.ExAmPlE.CoM"), "example.com");
        assert_eq!(rd("example.zz"), "example.zz");
    }

    #[test]
    fn fqdn_that_is_a_suffix_has_no_registrable_domain() {
        let list = fixture_list();
        for fqdn in ["com", "co.uk", "bar.ck", "appspot.com", "zz"] {
            assert_eq!(
                list.registrable_domain(fqdn),
                Err(PslError::NoRegistrableDomain(fqdn.to_string())),
                "{fqdn} should have no registrable domain"
            );
        }
    }

    #[test]
    fn malformed_fqdns_are_rejected() {
        let list = fixture_list();
        for fqdn in ["", ".", "example..com", ".example.com", "example.com."] {
            assert!(list.registrable_domain(fqdn).is_err(), "{fqdn:?}");
        }
    }

    #[test]
    fn owner_label_is_leftmost() {
        let list = fixture_list();
        let d = list.registrable_domain("www.avg-hrd.appspot.com").unwrap();
        assert_eq!(d.owner_label(), "avg-hrd");
        let d = list.registrable_domain("cdn.accuweather.com").unwrap();
        assert_eq!(d.owner_label(), "accuweather");
    }

    #[test]
    fn registrable_domain_is_idempotent() {
        let list = fixture_list();
        for fqdn in ["www.example.com", "a.b.example.co.uk", "x.y.foo.bar.ck", "s.www.ck"] {
            let once = list.registrable_domain(fqdn).unwrap();
            let twice = list.registrable_domain(once.as_str()).unwrap();
            assert_eq!(once, twice);
        }
    }

    /// Literal restatement of the publicsuffix.org algorithm: scan every
    /// rule, collect all that match, then apply the precedence rules. Slow
    /// but obviously faithful; used to cross-check the indexed matcher.
    pub(crate) fn reference_public_suffix(list: &PublicSuffixList, fqdn: &str) -> String {
        let labels: Vec<&str> = fqdn.split('.').collect();
        let rule_matches = |rule: &str, wild: bool| -> bool {
            let rl: Vec<&str> = rule.split('.').collect();
            let need = rl.len() + usize::from(wild);
            if labels.len() < need {
                return false;
            }
            rl.iter()
                .rev()
                .zip(labels.iter().rev())
                .all(|(r, l)| r == l)
        };
        for rule in list.exception_rules() {
            if rule_matches(rule, false) {
                return rule.splitn(2, '.').nth(1).unwrap_or("").to_string();
            }
        }
        let mut best: Option<(usize, String)> = None;
        for rule in list.exact_rules() {
            if rule_matches(rule, false) {
                let n = rule.split('.').count();
                if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                    best = Some((n, rule.clone()));
                }
            }
        }
        for rule in list.wildcard_rules() {
            if rule_matches(rule, true) {
                let n = rule.split('.').count() + 1;
                if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                    let start = labels.len() - n;
                    best = Some((n, labels[start..].join(".")));
                }
            }
        }
        match best {
            Some((_, suffix)) => suffix,
            None => labels.last().unwrap().to_string(),
        }
    }

    #[test]
    fn matches_reference_on_fixture_cases() {
        let list = fixture_list();
        for fqdn in [
            "www.example.com",
            "example.co.uk",
            "x.org.uk",
            "foo.bar.ck",
            "bar.ck",
            "www.ck",
            "sub.www.ck",
            "avg-hrd.appspot.com",
            "deep.avg-hrd.appspot.com",
            "example.zz",
            "com",
            "co.uk",
            "pages.github.io",
        ] {
            assert_eq!(
                list.public_suffix(fqdn),
                reference_public_suffix(&list, fqdn),
                "mismatch for {fqdn}"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn label() -> impl Strategy<Value = String> {
            prop_oneof![
                Just("www".to_string()),
                Just("foo".to_string()),
                Just("bar".to_string()),
                Just("example".to_string()),
                Just("avg-hrd".to_string()),
                Just("ck".to_string()),
                Just("com".to_string()),
                Just("uk".to_string()),
                Just("co".to_string()),
                Just("org".to_string()),
                Just("jp".to_string()),
                Just("appspot".to_string()),
                Just("zz".to_string()),
                "[a-z][a-z0-9]{0,6}",
            ]
        }

        fn fqdn() -> impl Strategy<Value = String> {
            proptest::collection::vec(label(), 1..6).prop_map(|ls| ls.join("."))
        }

        proptest! {
            #[test]
            fn agrees_with_reference(fqdn in fqdn()) {
                let list = fixture_list();
                let expected = reference_public_suffix(&list, &fqdn);
                prop_assert_eq!(list.public_suffix(&fqdn), expected.as_str());
            }

            #[test]
            fn suffix_is_label_aligned_suffix(fqdn in fqdn()) {
                let list = fixture_list();
                let suffix = list.public_suffix(&fqdn);
                prop_assert!(fqdn.ends_with(suffix));
                if suffix.len() < fqdn.len() {
                    prop_assert_eq!(fqdn.as_bytes()[fqdn.len() - suffix.len() - 1], b'.');
                }
            }

            #[test]
            fn registrable_has_exactly_one_owner_label(fqdn in fqdn()) {
                let list = fixture_list();
                if let Ok(domain) = list.registrable_domain(&fqdn) {
                    let suffix = list.public_suffix(domain.as_str());
                    let labels_above = domain
                        .as_str()
                        .strip_suffix(suffix)
                        .unwrap()
                        .trim_end_matches('.')
                        .split('.')
                        .count();
                    prop_assert_eq!(labels_above, 1);
                    prop_assert!(fqdn.to_ascii_lowercase().ends_with(domain.as_str()));
                    let again = list.registrable_domain(domain.as_str()).unwrap();
                    prop_assert_eq!(again, domain);
                }
            }
        }
    }
}
