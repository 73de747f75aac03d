//! Curated blocklist parsing and membership.
//!
//! Two list families are supported: hosts files that sink hostnames to
//! 127.0.0.1 or 0.0.0.0 (the hpHosts lineage), and the domain-anchor subset
//! of AdBlock Plus filter syntax (`||domain^` plus plain hostname lines, the
//! EasyList lineage). Everything else in an ABP list (element hiding,
//! exceptions, path and regex filters) is deliberately out of scope and
//! counted as skipped, so a parse can be audited against the source list:
//! `rule_count == |accepted| + skipped_count` always holds, where accepted
//! rules may still collapse into fewer distinct domains.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListSource {
    Abp,
    Hosts,
}

impl fmt::Display for ListSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ListSource::Abp => "abp",
            ListSource::Hosts => "hosts",
        })
    }
}

/// A parsed blocklist: the set of blocked domains plus bookkeeping about
/// what the parser accepted and skipped.
#[derive(Debug, Clone)]
pub struct BlocklistIndex {
    pub source: ListSource,
    domains: BTreeSet<String>,
    /// Non-blank lines seen (after comment-only and blank lines in hosts
    /// files are stripped).
    pub rule_count: usize,
    /// Lines that were syntactically present but not usable as a domain
    /// rule.
    pub skipped_count: usize,
}

impl BlocklistIndex {
    pub fn empty(source: ListSource) -> Self {
        Self {
            source,
            domains: BTreeSet::new(),
            rule_count: 0,
            skipped_count: 0,
        }
    }

    /// Parse a hosts-format blocklist: `<sink-ip> <hostname>` per line, `#`
    /// comments. Only the sink addresses 127.0.0.1 and 0.0.0.0 are treated
    /// as blocking entries; anything else (real redirects, multi-host lines,
    /// bare names like `localhost`) is skipped.
    pub fn parse_hosts_file<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut index = Self::empty(ListSource::Hosts);
        for line in reader.lines() {
            let line = line?;
            let entry = line.split('#').next().unwrap_or("").trim();
            if entry.is_empty() {
                continue;
            }
            index.rule_count += 1;
            let fields: Vec<&str> = entry.split_whitespace().collect();
            let accepted = match fields.as_slice() {
                [ip, host] if is_sink_address(ip) && valid_hostname(host) => {
                    index.domains.insert(host.to_ascii_lowercase());
                    true
                }
                _ => false,
            };
            if !accepted {
                index.skipped_count += 1;
            }
        }
        Ok(index)
    }

    /// Parse the domain-anchor subset of an AdBlock Plus filter list:
    /// `||domain^` (options after `^` are ignored) and plain hostname lines.
    /// Exception rules (`@@`), element hiding (`##`, `#@#`, ...), path,
    /// wildcard and regex filters, headers and comments all count as
    /// skipped.
    pub fn parse_abp_filters<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut index = Self::empty(ListSource::Abp);
        for line in reader.lines() {
            let line = line?;
            let entry = line.trim();
            if entry.is_empty() {
                continue;
            }
            index.rule_count += 1;
            match parse_abp_domain(entry) {
                Some(domain) => {
                    index.domains.insert(domain);
                }
                None => index.skipped_count += 1,
            }
        }
        Ok(index)
    }

    /// Subdomain-aware membership: true when the FQDN equals a blocked
    /// domain or sits below one on a label boundary. "ads.facebook.com"
    /// matches an entry "facebook.com"; "notfacebook.com" does not.
    pub fn contains(&self, fqdn: &str) -> bool {
        let fqdn = fqdn.to_ascii_lowercase();
        let mut start = 0;
        loop {
            if self.domains.contains(&fqdn[start..]) {
                return true;
            }
            match fqdn[start..].find('.') {
                Some(i) => start += i + 1,
                None => return false,
            }
        }
    }

    pub fn domains(&self) -> &BTreeSet<String> {
        &self.domains
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// Insert a domain directly; used by tests and ad-hoc list building.
    pub fn insert(&mut self, domain: &str) {
        if self.domains.insert(domain.to_ascii_lowercase()) {
            self.rule_count += 1;
        }
    }
}

fn is_sink_address(s: &str) -> bool {
    s == "127.0.0.1" || s == "0.0.0.0"
}

fn valid_hostname(s: &str) -> bool {
    !s.is_empty()
        && s.contains('.')
        && !s.starts_with(['.', '-'])
        && !s.ends_with(['.', '-'])
        && !s.contains("..")
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'-' | b'_'))
}

/// Extract the blocked domain from one ABP filter line, or None when the
/// line is outside the supported subset.
fn parse_abp_domain(entry: &str) -> Option<String> {
    if entry.starts_with('!') || entry.starts_with('[') || entry.starts_with("@@") {
        return None;
    }
    if entry.contains('#') {
        // Element hiding and its variants: ##, #@#, #?#, #$#.
        return None;
    }
    if let Some(rest) = entry.strip_prefix("||") {
        let (domain, after) = match rest.find('^') {
            Some(pos) => (&rest[..pos], &rest[pos + 1..]),
            None => (rest, ""),
        };
        let after_ok = after.is_empty() || after.starts_with('$') || after == "|";
        if after_ok && valid_hostname(domain) {
            return Some(domain.to_ascii_lowercase());
        }
        return None;
    }
    if valid_hostname(entry) {
        return Some(entry.to_ascii_lowercase());
    }
    None
}
