//! Text normalization and phrase matching for keyword classification.
//!
//! Keyword phrases must match whole words only: "ads" must not fire inside
//! "roadside". Tokenization lowercases, splits on whitespace and
//! punctuation, and keeps `-` and `/` only between alphanumerics so that
//! "in-app" and "a/b" survive as single tokens.

/// Lowercased word tokens of `text`. Hyphens and slashes glue tokens
/// together only when both neighbours are alphanumeric; all other
/// punctuation separates.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if (c == '-' || c == '/')
            && current.chars().last().is_some_and(char::is_alphanumeric)
            && chars.get(i + 1).copied().is_some_and(char::is_alphanumeric)
        {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// True when `phrase` occurs in `tokens` as a contiguous run of whole
/// tokens.
pub fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty()
        && tokens
            .windows(phrase.len())
            .any(|w| w.iter().zip(phrase).all(|(a, b)| a == b))
}

/// Collapse all whitespace runs to single spaces and trim the ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Extract the visible text of an HTML page: tag contents minus script,
/// style and noscript bodies, plus the description meta tags, with common
/// entities decoded and whitespace collapsed. Deliberately small and
/// forgiving; landing pages only need to surrender their marketing copy,
/// not parse correctly.
pub fn html_to_text(html: &str) -> String {
    let mut out = String::new();
    let mut rest = html;
    loop {
        let Some(lt) = rest.find('<') else {
            push_decoded(&mut out, rest);
            break;
        };
        push_decoded(&mut out, &rest[..lt]);
        out.push(' ');
        rest = &rest[lt..];
        if let Some(after) = rest.strip_prefix("<!--") {
            match after.find("-->") {
                Some(end) => {
                    rest = &after[end + 3..];
                    continue;
                }
                None => break,
            }
        }
        let Some(gt) = find_tag_end(rest) else {
            break;
        };
        let tag = &rest[1..gt];
        rest = &rest[gt + 1..];
        let name = tag_name(tag);
        match name.as_str() {
            "script" | "style" | "noscript" => {
                let close = format!("</{name}");
                let lower = rest.to_ascii_lowercase();
                match lower.find(&close) {
                    Some(at) => {
                        let after = &rest[at..];
                        match after.find('>') {
                            Some(gt) => rest = &after[gt + 1..],
                            None => break,
                        }
                    }
                    None => break,
                }
            }
            "meta" => {
                if let Some(content) = meta_description(tag) {
                    push_decoded(&mut out, &content);
                    out.push(' ');
                }
            }
            _ => {}
        }
    }
    collapse_whitespace(&out)
}

/// Byte offset of the `>` closing the tag that starts at `s[0] == '<'`,
/// ignoring `>` inside quoted attribute values.
fn find_tag_end(s: &str) -> Option<usize> {
    let mut quote: Option<u8> = None;
    for (i, b) in s.bytes().enumerate().skip(1) {
        match quote {
            Some(q) => {
                if b == q {
                    quote = None;
                }
            }
            None => match b {
                b'"' | b'\'' => quote = Some(b),
                b'>' => return Some(i),
                _ => {}
            },
        }
    }
    None
}

fn tag_name(tag: &str) -> String {
    tag.trim_start()
        .trim_start_matches('/')
        .split(|c: char| c.is_whitespace() || c == '/' || c == '>')
        .next()
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Content of a `<meta>` tag when it is one of the description variants.
fn meta_description(tag: &str) -> Option<String> {
    let key = attr_value(tag, "name").or_else(|| attr_value(tag, "property"))?;
    match key.to_ascii_lowercase().as_str() {
        "description" | "og:description" | "twitter:description" => attr_value(tag, "content"),
        _ => None,
    }
}

fn attr_value(tag: &str, attr: &str) -> Option<String> {
    let lower = tag.to_ascii_lowercase();
    let bytes = lower.as_bytes();
    let mut search = 0;
    while let Some(found) = lower[search..].find(attr) {
        let at = search + found;
        search = at + attr.len();
        if at > 0 && !bytes[at - 1].is_ascii_whitespace() {
            continue;
        }
        let mut j = at + attr.len();
        while j < bytes.len() && bytes[j].is_ascii_whitespace() {
            j += 1;
        }
        if j >= bytes.len() || bytes[j] != b'=' {
            continue;
        }
        j += 1;
        while j < bytes.len() && bytes[j].is_ascii_whitespace() {
            j += 1;
        }
        if j >= bytes.len() {
            return None;
        }
        let value = match bytes[j] {
            q @ (b'"' | b'\'') => {
                let start = j + 1;
                match tag[start..].find(q as char) {
                    Some(end) => &tag[start..start + end],
                    None => &tag[start..],
                }
            }
            _ => tag[j..].split_whitespace().next().unwrap_or(""),
        };
        return Some(value.to_string());
    }
    None
}

fn push_decoded(out: &mut String, text: &str) {
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest
            .find(';')
            .filter(|&semi| semi <= 8)
            .and_then(|semi| decode_entity(&rest[..=semi]).map(|d| (d, semi)));
        match decoded {
            Some((d, semi)) => {
                out.push_str(d);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
}

fn decode_entity(entity: &str) -> Option<&'static str> {
    Some(match entity {
        "&amp;" => "&",
        "&lt;" => "<",
        "&gt;" => ">",
        "&quot;" => "\"",
        "&#39;" | "&apos;" => "'",
        "&nbsp;" => " ",
        _ => return None,
    })
}
