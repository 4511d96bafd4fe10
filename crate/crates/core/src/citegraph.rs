//! News citation graph: construction from article streams, weighted
//! PageRank reputation, and per-tier citation statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{canonical_domain, ArticleRecord, DomainRules};
use crate::{Error, Result};

/// Which page links feed the graph: reporting citations from the article
/// body, or every URL on the page. The latter is noisier because sponsored
/// and navigation links dominate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkScope {
    ArticleCitations,
    AllPageLinks,
}

impl fmt::Display for LinkScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkScope::ArticleCitations => f.write_str("article_citations"),
            LinkScope::AllPageLinks => f.write_str("all_page_links"),
        }
    }
}

impl FromStr for LinkScope {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "article_citations" => Ok(LinkScope::ArticleCitations),
            "all_page_links" => Ok(LinkScope::AllPageLinks),
            other => Err(format!("unknown link scope: {other}")),
        }
    }
}

/// Directed weighted citation graph between canonical source domains.
/// Self-loops are removed at construction and tallied separately.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    pub scope: LinkScope,
    nodes: BTreeMap<String, ()>,
    edges: BTreeMap<(String, String), u64>,
    self_citations: BTreeMap<String, u64>,
    /// Links whose URL could not be canonicalized.
    pub skipped_urls: u64,
}

impl CitationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn contains_node(&self, domain: &str) -> bool {
        self.nodes.contains_key(domain)
    }

    /// Edges as `(src, dst, weight)` in deterministic order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges
            .iter()
            .map(|((s, d), w)| (s.as_str(), d.as_str(), *w))
    }

    pub fn edge_weight(&self, src: &str, dst: &str) -> Option<u64> {
        self.edges.get(&(src.to_string(), dst.to_string())).copied()
    }

    pub fn self_citation_count(&self, domain: &str) -> u64 {
        self.self_citations.get(domain).copied().unwrap_or(0)
    }

    pub fn self_citations(&self) -> &BTreeMap<String, u64> {
        &self.self_citations
    }

    pub fn total_self_citations(&self) -> u64 {
        self.self_citations.values().sum()
    }

    pub fn total_external_citations(&self) -> u64 {
        self.edges.values().sum()
    }
}

/// Incremental builder with associative merge, so article shards can be
/// processed independently.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    scope: LinkScope,
    rules: DomainRules,
    nodes: BTreeMap<String, ()>,
    edges: BTreeMap<(String, String), u64>,
    self_citations: BTreeMap<String, u64>,
    skipped_urls: u64,
}

impl GraphBuilder {
    pub fn new(scope: LinkScope, rules: DomainRules) -> Self {
        Self {
            scope,
            rules,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            self_citations: BTreeMap::new(),
            skipped_urls: 0,
        }
    }

    pub fn add_article(&mut self, article: &ArticleRecord) {
        let src = article.source_domain.clone();
        self.nodes.entry(src.clone()).or_default();
        let links = match self.scope {
            LinkScope::ArticleCitations => &article.citation_urls,
            LinkScope::AllPageLinks => &article.all_link_urls,
        };
        for url in links {
            match canonical_domain(url, &self.rules) {
                Ok(dst) if dst == src => {
                    *self.self_citations.entry(src.clone()).or_insert(0) += 1;
                }
                Ok(dst) => {
                    self.nodes.entry(dst.clone()).or_default();
                    *self.edges.entry((src.clone(), dst)).or_insert(0) += 1;
                }
                Err(_) => self.skipped_urls += 1,
            }
        }
    }

    /// Fold another shard in; edge weights and self-citation counts add.
    pub fn merge(&mut self, other: GraphBuilder) {
        self.nodes.extend(other.nodes);
        for (k, w) in other.edges {
            *self.edges.entry(k).or_insert(0) += w;
        }
        for (k, c) in other.self_citations {
            *self.self_citations.entry(k).or_insert(0) += c;
        }
        self.skipped_urls += other.skipped_urls;
    }

    pub fn finish(self) -> CitationGraph {
        CitationGraph {
            scope: self.scope,
            nodes: self.nodes,
            edges: self.edges,
            self_citations: self.self_citations,
            skipped_urls: self.skipped_urls,
        }
    }
}

/// Build the citation graph from an article stream. An empty stream yields
/// an empty graph.
pub fn build_graph<'a>(
    articles: impl IntoIterator<Item = &'a ArticleRecord>,
    scope: LinkScope,
    rules: &DomainRules,
) -> CitationGraph {
    let mut builder = GraphBuilder::new(scope, rules.clone());
    for article in articles {
        builder.add_article(article);
    }
    builder.finish()
}

/// PageRank iteration parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PageRankConfig {
    pub damping: f64,
    /// L-infinity convergence threshold on the score vector.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

/// Raw PageRank probabilities plus their min–max normalization to [0, 1].
#[derive(Debug, Clone, Default)]
pub struct ReputationScores {
    pub raw: BTreeMap<String, f64>,
    pub normalized: BTreeMap<String, f64>,
}

/// One full PageRank computation, with the probability-mass total recorded
/// after every iteration.
#[derive(Debug, Clone)]
pub struct PageRankRun {
    pub scores: ReputationScores,
    pub iterations: usize,
    pub mass_per_iteration: Vec<f64>,
}

/// Weighted PageRank over the citation graph. Transition probability from
/// `i` to `j` is `w_ij / Σ_k w_ik`; dangling nodes redistribute uniformly
/// over all nodes.
pub fn page_rank(graph: &CitationGraph, cfg: &PageRankConfig) -> Result<ReputationScores> {
    Ok(page_rank_run(graph, cfg)?.scores)
}

/// As [`page_rank`], returning iteration diagnostics.
pub fn page_rank_run(graph: &CitationGraph, cfg: &PageRankConfig) -> Result<PageRankRun> {
    if !(cfg.damping > 0.0 && cfg.damping < 1.0) {
        return Err(Error::Config(format!(
            "pagerank damping must be in (0, 1), got {}",
            cfg.damping
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::Config(format!(
            "pagerank tolerance must be positive, got {}",
            cfg.tol
        )));
    }

    let n = graph.node_count();
    if n == 0 {
        return Ok(PageRankRun {
            scores: ReputationScores::default(),
            iterations: 0,
            mass_per_iteration: Vec::new(),
        });
    }

    let index: BTreeMap<&str, usize> = graph.nodes().enumerate().map(|(i, d)| (d, i)).collect();
    let edges: Vec<(usize, usize, f64)> = graph
        .edges()
        .map(|(s, d, w)| (index[s], index[d], w as f64))
        .collect();
    let mut out_weight = vec![0.0; n];
    for &(src, _, w) in &edges {
        out_weight[src] += w;
    }

    let d = cfg.damping;
    let uniform = 1.0 / n as f64;
    let mut current = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut mass_per_iteration = Vec::new();
    let mut iterations = 0;

    for _ in 0..cfg.max_iter {
        iterations += 1;
        next.fill(0.0);
        for &(src, dst, w) in &edges {
            next[dst] += current[src] * w / out_weight[src];
        }
        let dangling: f64 = out_weight
            .iter()
            .zip(&current)
            .filter(|(ow, _)| **ow == 0.0)
            .map(|(_, p)| *p)
            .sum();
        let teleport = (1.0 - d) * uniform;
        for v in next.iter_mut() {
            *v = teleport + d * (*v + dangling * uniform);
        }
        let mut delta: f64 = 0.0;
        for (a, b) in current.iter().zip(&next) {
            delta = delta.max((a - b).abs());
        }
        std::mem::swap(&mut current, &mut next);
        mass_per_iteration.push(current.iter().sum());
        if delta < cfg.tol {
            break;
        }
    }

    let raw: BTreeMap<String, f64> = index
        .iter()
        .map(|(domain, &i)| (domain.to_string(), current[i]))
        .collect();
    let normalized = min_max_normalize(&raw);
    Ok(PageRankRun {
        scores: ReputationScores { raw, normalized },
        iterations,
        mass_per_iteration,
    })
}

/// Min–max map onto [0, 1]. A single node or a uniform score vector maps
/// everything to 1.0.
fn min_max_normalize(raw: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let min = raw.values().copied().fold(f64::INFINITY, f64::min);
    let max = raw.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    raw.iter()
        .map(|(k, &v)| {
            let norm = if span <= 0.0 { 1.0 } else { (v - min) / span };
            (k.clone(), norm)
        })
        .collect()
}

/// Article volume and time span of a corpus, used by tier statistics.
#[derive(Debug, Clone, Default)]
pub struct ArticleStats {
    pub per_source: BTreeMap<String, u64>,
    pub first_published: Option<DateTime<Utc>>,
    pub last_published: Option<DateTime<Utc>>,
}

impl ArticleStats {
    pub fn collect<'a>(articles: impl IntoIterator<Item = &'a ArticleRecord>) -> Self {
        let mut stats = Self::default();
        for a in articles {
            stats.add(a);
        }
        stats
    }

    pub fn add(&mut self, article: &ArticleRecord) {
        *self
            .per_source
            .entry(article.source_domain.clone())
            .or_insert(0) += 1;
        let ts = article.published_at;
        self.first_published = Some(match self.first_published {
            Some(t) => t.min(ts),
            None => ts,
        });
        self.last_published = Some(match self.last_published {
            Some(t) => t.max(ts),
            None => ts,
        });
    }

    /// Number of calendar days the corpus covers: whole days between the
    /// first and last timestamp, inclusive of both endpoints.
    pub fn span_days(&self) -> f64 {
        match (self.first_published, self.last_published) {
            (Some(a), Some(b)) => ((b - a).num_seconds() as f64 / 86_400.0).floor() + 1.0,
            _ => 0.0,
        }
    }
}

/// One rank band of the tier table.
#[derive(Debug, Clone, PartialEq)]
pub struct TierRow {
    /// Rank band `[lo, hi)`, 1-based.
    pub lo: usize,
    pub hi: usize,
    pub sources: usize,
    pub docs_per_day: f64,
    pub self_citations_per_doc: f64,
    pub external_out_per_doc: f64,
    pub in_citations_per_doc: f64,
}

impl TierRow {
    pub fn label(&self) -> String {
        format!("[{},{})", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TierStats {
    pub rows: Vec<TierRow>,
    /// True when the ranking was shorter than the requested boundaries and
    /// trailing tiers were truncated.
    pub truncated: bool,
}

pub const DEFAULT_TIER_BOUNDARIES: [usize; 6] = [500, 2_000, 5_000, 10_000, 20_000, 50_000];

/// Per-tier citation behavior over rank bands of `ranking`. Band `k` holds
/// ranks `[boundary_{k-1}, boundary_k)` with an implicit leading boundary
/// of 1. Per-source ratios use each source's own article count; sources
/// with no articles contribute zeros.
pub fn tier_stats(
    graph: &CitationGraph,
    stats: &ArticleStats,
    ranking: &[String],
    boundaries: &[usize],
) -> Result<TierStats> {
    if boundaries.is_empty() || boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "tier boundaries must be non-empty and strictly increasing".to_string(),
        ));
    }
    let span_days = stats.span_days();

    let mut in_weight: BTreeMap<&str, u64> = BTreeMap::new();
    let mut out_weight: BTreeMap<&str, u64> = BTreeMap::new();
    for (src, dst, w) in graph.edges() {
        *out_weight.entry(src).or_insert(0) += w;
        *in_weight.entry(dst).or_insert(0) += w;
    }

    let mut rows = Vec::new();
    let mut truncated = false;
    let mut lo = 1usize;
    for &hi in boundaries {
        if lo > ranking.len() {
            truncated = true;
            break;
        }
        let band = &ranking[lo - 1..(hi - 1).min(ranking.len())];
        if band.len() < hi - lo {
            truncated = true;
        }
        let mut docs_day = 0.0;
        let mut self_doc = 0.0;
        let mut out_doc = 0.0;
        let mut in_doc = 0.0;
        for domain in band {
            let docs = stats.per_source.get(domain).copied().unwrap_or(0) as f64;
            if span_days > 0.0 {
                docs_day += docs / span_days;
            }
            if docs > 0.0 {
                self_doc += graph.self_citation_count(domain) as f64 / docs;
                out_doc += out_weight.get(domain.as_str()).copied().unwrap_or(0) as f64 / docs;
                in_doc += in_weight.get(domain.as_str()).copied().unwrap_or(0) as f64 / docs;
            }
        }
        let n = band.len().max(1) as f64;
        rows.push(TierRow {
            lo,
            hi,
            sources: band.len(),
            docs_per_day: docs_day / n,
            self_citations_per_doc: self_doc / n,
            external_out_per_doc: out_doc / n,
            in_citations_per_doc: in_doc / n,
        });
        lo = hi;
    }
    Ok(TierStats { rows, truncated })
}
