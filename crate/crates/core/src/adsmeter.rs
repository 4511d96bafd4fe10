//! Ad-iframe counting on stored HTML and per-source advertising
//! aggressiveness.
//!
//! The scanner is a tolerant tokenizer, not a tree parser: it finds iframe
//! start tags and reads their attributes, shrugging off unclosed tags,
//! stray brackets, and truncated markup. Malformed input degrades to fewer
//! matches; it never aborts.

use serde::{Deserialize, Serialize};

/// The src/id attributes of one iframe start tag.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IframeTag {
    pub src: Option<String>,
    pub id: Option<String>,
}

/// A matcher against an iframe's attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdPattern {
    /// Case-insensitive substring of the src or id attribute.
    Substring(String),
    /// Case-insensitive prefix of the id attribute.
    IdPrefix(String),
}

impl AdPattern {
    fn matches(&self, tag: &IframeTag) -> bool {
        let lower = |s: &Option<String>| s.as_deref().map(str::to_lowercase);
        match self {
            AdPattern::Substring(p) => {
                let p = p.to_lowercase();
                lower(&tag.src).is_some_and(|s| s.contains(&p))
                    || lower(&tag.id).is_some_and(|s| s.contains(&p))
            }
            AdPattern::IdPrefix(p) => {
                let p = p.to_lowercase();
                lower(&tag.id).is_some_and(|s| s.starts_with(&p))
            }
        }
    }
}

/// Matchers for the big ad-serving platforms' rendered iframes.
pub fn default_ad_patterns() -> Vec<AdPattern> {
    vec![
        AdPattern::Substring("googlesyndication".to_string()),
        AdPattern::Substring("doubleclick".to_string()),
        AdPattern::Substring("googleads".to_string()),
        AdPattern::IdPrefix("google_ads_iframe".to_string()),
    ]
}

/// All iframe start tags in a page, in document order. Tolerates any
/// malformed markup; a tag truncated at end-of-input still counts, with
/// whatever attributes were read.
pub fn scan_iframes(html: &str) -> Vec<IframeTag> {
    let bytes = html.as_bytes();
    let mut tags = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &bytes[i + 1..];
        if rest.len() >= 6 && rest[..6].eq_ignore_ascii_case(b"iframe") {
            let after = rest.get(6).copied();
            // Require a tag-name delimiter so <iframexyz> does not match.
            if after.is_none() || matches!(after, Some(b' ' | b'\t' | b'\n' | b'\r' | b'/' | b'>')) {
                let (tag, consumed) = parse_attributes(&bytes[i + 7..]);
                tags.push(tag);
                i += 7 + consumed;
                continue;
            }
        }
        i += 1;
    }
    tags
}

/// Read `name="value"` pairs until `>` or end of input. Returns the parsed
/// src/id pair and how many bytes were consumed.
fn parse_attributes(bytes: &[u8]) -> (IframeTag, usize) {
    let mut tag = IframeTag::default();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'>' => {
                i += 1;
                break;
            }
            b'<' => break, // Unclosed tag; let the next tag start fresh.
            c if c.is_ascii_whitespace() || c == b'/' => i += 1,
            _ => {
                let name_start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'=' | b'>' | b'/' | b'<')
                {
                    i += 1;
                }
                let name = String::from_utf8_lossy(&bytes[name_start..i]).to_lowercase();
                while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                let mut value = None;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                        let quote = bytes[i];
                        i += 1;
                        let start = i;
                        while i < bytes.len() && bytes[i] != quote {
                            i += 1;
                        }
                        value = Some(String::from_utf8_lossy(&bytes[start..i]).into_owned());
                        if i < bytes.len() {
                            i += 1; // closing quote
                        }
                    } else {
                        let start = i;
                        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>'
                        {
                            i += 1;
                        }
                        value = Some(String::from_utf8_lossy(&bytes[start..i]).into_owned());
                    }
                }
                match name.as_str() {
                    "src" if tag.src.is_none() => tag.src = value,
                    "id" if tag.id.is_none() => tag.id = value,
                    _ => {}
                }
            }
        }
    }
    (tag, i)
}

/// Count iframes whose src or id matches any pattern.
pub fn count_ad_iframes(html: &str, patterns: &[AdPattern]) -> usize {
    scan_iframes(html)
        .iter()
        .filter(|tag| patterns.iter().any(|p| p.matches(tag)))
        .count()
}

/// Ad count of one scanned page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdScanResult {
    pub url: String,
    pub domain: String,
    pub ad_iframe_count: u64,
}

/// Mean ad load of one source over its scanned pages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdsAggressiveness {
    pub domain: String,
    pub mean_ads_per_page: f64,
    pub pages_scanned: u64,
}

/// Arithmetic mean of per-page ad counts. Zero scans leave the source
/// unscored.
pub fn source_ads_score(domain: impl Into<String>, counts: &[u64]) -> Option<AdsAggressiveness> {
    if counts.is_empty() {
        return None;
    }
    let total: u64 = counts.iter().sum();
    Some(AdsAggressiveness {
        domain: domain.into(),
        mean_ads_per_page: total as f64 / counts.len() as f64,
        pages_scanned: counts.len() as u64,
    })
}
