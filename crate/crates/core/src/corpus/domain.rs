use std::collections::HashSet;
use std::sync::OnceLock;

use url::Url;

use crate::{Error, Result};

/// Multi-label public suffixes recognized by default. Single-label TLDs are
/// covered by the fallback rule (registrable = last two labels), so only
/// suffixes with two or more labels need enumeration here. The set covers
/// the country registries that show up in practice in news corpora;
/// `DomainRules::with_extra_suffixes` extends it.
const DEFAULT_MULTI_SUFFIXES: &[&str] = &[
    // United Kingdom
    "ac.uk", "co.uk", "gov.uk", "ltd.uk", "me.uk", "net.uk", "org.uk", "plc.uk", "sch.uk",
    // Australia / New Zealand
    "asn.au", "com.au", "edu.au", "gov.au", "id.au", "net.au", "org.au", "ac.nz", "co.nz",
    "govt.nz", "net.nz", "org.nz",
    // Japan / Korea / China / Taiwan / Hong Kong / Singapore
    "ac.jp", "ad.jp", "co.jp", "ed.jp", "go.jp", "gr.jp", "lg.jp", "ne.jp", "or.jp", "ac.kr",
    "co.kr", "go.kr", "ne.kr", "or.kr", "re.kr", "ac.cn", "com.cn", "edu.cn", "gov.cn", "net.cn",
    "org.cn", "com.tw", "idv.tw", "org.tw", "com.hk", "edu.hk", "gov.hk", "net.hk", "org.hk",
    "com.sg", "edu.sg", "gov.sg", "net.sg", "org.sg",
    // India / South-East Asia
    "ac.in", "co.in", "edu.in", "firm.in", "gen.in", "gov.in", "ind.in", "net.in", "nic.in",
    "org.in", "res.in", "ac.th", "co.th", "go.th", "in.th", "or.th", "com.my", "edu.my",
    "gov.my", "net.my", "org.my", "com.ph", "edu.ph", "gov.ph", "net.ph", "org.ph", "ac.id",
    "co.id", "go.id", "net.id", "or.id", "sch.id", "web.id", "com.vn", "edu.vn", "gov.vn",
    "net.vn", "org.vn", "com.pk", "edu.pk", "gov.pk", "net.pk", "org.pk", "com.bd",
    // Americas
    "com.br", "edu.br", "gov.br", "net.br", "org.br", "com.mx", "edu.mx", "gob.mx", "net.mx",
    "org.mx", "com.ar", "edu.ar", "gob.ar", "net.ar", "org.ar", "com.co", "edu.co", "gov.co",
    "net.co", "org.co", "com.pe", "edu.pe", "gob.pe", "net.pe", "org.pe", "com.ve", "co.ve",
    "com.ec", "com.uy", "com.py", "com.bo", "com.do", "com.gt", "com.sv", "com.hn", "com.ni",
    "com.pa", "com.cu", "ac.cr", "co.cr",
    // Europe / Middle East / Africa
    "ac.at", "co.at", "gv.at", "or.at", "com.es", "edu.es", "gob.es", "nom.es", "org.es",
    "com.pt", "edu.pt", "gov.pt", "net.pt", "org.pt", "com.pl", "edu.pl", "gov.pl", "net.pl",
    "org.pl", "waw.pl", "com.gr", "edu.gr", "net.gr", "org.gr", "com.tr", "edu.tr", "gen.tr",
    "gov.tr", "net.tr", "org.tr", "ac.il", "co.il", "gov.il", "net.il", "org.il", "com.ua",
    "edu.ua", "gov.ua", "net.ua", "org.ua", "com.ru", "net.ru", "org.ru", "com.eg", "com.sa",
    "org.sa", "ac.za", "co.za", "gov.za", "net.za", "org.za", "web.za", "com.ng", "ac.ke",
    "co.ke", "go.ke", "ne.ke", "or.ke",
];

fn default_suffix_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| DEFAULT_MULTI_SUFFIXES.iter().copied().collect())
}

/// Rules for collapsing a host to its canonical source identity.
#[derive(Debug, Clone, Default)]
pub struct DomainRules {
    /// Hosts (after the `www.` strip) that keep their subdomain instead of
    /// collapsing to the registrable domain.
    keep_subdomains: HashSet<String>,
    extra_suffixes: HashSet<String>,
}

impl DomainRules {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_keep_subdomains<I, S>(mut self, hosts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.keep_subdomains
            .extend(hosts.into_iter().map(|h| h.into().to_lowercase()));
        self
    }

    pub fn with_extra_suffixes<I, S>(mut self, suffixes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.extra_suffixes
            .extend(suffixes.into_iter().map(|s| s.into().to_lowercase()));
        self
    }

    fn is_public_suffix(&self, candidate: &str) -> bool {
        default_suffix_set().contains(candidate) || self.extra_suffixes.contains(candidate)
    }

    /// Registrable domain of `host`: one label beyond the longest matching
    /// public suffix, falling back to the last two labels when no listed
    /// suffix matches.
    fn registrable(&self, host: &str) -> Result<String> {
        let labels: Vec<&str> = host.split('.').collect();
        if labels.len() <= 2 {
            return Ok(host.to_string());
        }
        for start in 1..labels.len() {
            let candidate = labels[start..].join(".");
            if self.is_public_suffix(&candidate) {
                return Ok(labels[start - 1..].join("."));
            }
        }
        // Fallback rule: the public suffix is the bare TLD.
        Ok(labels[labels.len() - 2..].join("."))
    }
}

/// Canonical source identity of a URL: lowercase registrable domain with
/// the `www.` prefix stripped, unless the host is on the keep-subdomain
/// exception list. IP-address hosts pass through unchanged.
pub fn canonical_domain(url: &str, rules: &DomainRules) -> Result<String> {
    let trimmed = url.trim();
    if trimmed.is_empty() {
        return Err(Error::UrlParse {
            url: url.to_string(),
            reason: "empty url".to_string(),
        });
    }
    let parsed = match Url::parse(trimmed) {
        Ok(u) => u,
        // Feeds frequently carry schemeless links; retry as http.
        Err(url::ParseError::RelativeUrlWithoutBase) => Url::parse(&format!("http://{trimmed}"))
            .map_err(|e| Error::UrlParse {
                url: url.to_string(),
                reason: e.to_string(),
            })?,
        Err(e) => {
            return Err(Error::UrlParse {
                url: url.to_string(),
                reason: e.to_string(),
            })
        }
    };
    let host = match parsed.host() {
        Some(url::Host::Domain(d)) => d.to_lowercase(),
        Some(url::Host::Ipv4(ip)) => return Ok(ip.to_string()),
        Some(url::Host::Ipv6(ip)) => return Ok(ip.to_string()),
        None => {
            return Err(Error::UrlParse {
                url: url.to_string(),
                reason: "url has no host".to_string(),
            })
        }
    };
    let host = host.strip_prefix("www.").unwrap_or(&host).to_string();
    if host.is_empty() {
        return Err(Error::UrlParse {
            url: url.to_string(),
            reason: "url has an empty host".to_string(),
        });
    }
    if rules.keep_subdomains.contains(&host) {
        return Ok(host);
    }
    rules.registrable(&host)
}
