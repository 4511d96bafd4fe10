//! Per-source signal assembly: breadth and popularity computation,
//! [0,1] normalization, 95th-percentile penalty flags, and the join of
//! all signal tables into one vector per source.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::ArticleRecord;
use crate::{Error, Result};

/// The six quality signals of one source, plus the raw values behind them
/// for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalVector {
    pub domain: String,
    /// Reputation: normalized citation PageRank, higher is better.
    pub f_r: f64,
    /// Popularity: mean reader rank scaled to [0,1]; 0 is most popular.
    pub f_p: f64,
    /// Breadth: normalized log unique-entity count, higher is better.
    pub f_e: f64,
    /// Bias magnitude in [0,1]; zero for non-political sources.
    pub f_b: f64,
    /// Bot-pressure penalty flag.
    pub f_s: bool,
    /// Ad-pressure penalty flag.
    pub f_a: bool,
    pub raw_pagerank: f64,
    pub raw_popularity: Option<f64>,
    pub raw_entities: u64,
    pub raw_gap: f64,
    pub raw_bot: Option<f64>,
    pub raw_ads: Option<f64>,
}

impl SignalVector {
    /// Range invariants of the continuous fields.
    pub fn is_valid(&self) -> bool {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        unit(self.f_r) && unit(self.f_p) && unit(self.f_e) && unit(self.f_b)
    }
}

/// Distinct normalized entity names mentioned across each source's
/// articles, in one streaming pass.
#[derive(Debug, Clone, Default)]
pub struct BreadthCounter {
    seen: BTreeMap<String, BTreeSet<String>>,
}

impl BreadthCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_article(&mut self, article: &ArticleRecord) {
        let entry = self.seen.entry(article.source_domain.clone()).or_default();
        for sentence in &article.sentences {
            for mention in &sentence.entity_mentions {
                entry.insert(crate::corpus::normalize_entity(mention));
            }
        }
    }

    pub fn counts(&self) -> BTreeMap<String, u64> {
        self.seen
            .iter()
            .map(|(d, set)| (d.clone(), set.len() as u64))
            .collect()
    }
}

/// Unique-entity count per source for an article collection.
pub fn breadth_counts<'a>(
    articles: impl IntoIterator<Item = &'a ArticleRecord>,
) -> BTreeMap<String, u64> {
    let mut counter = BreadthCounter::new();
    for a in articles {
        counter.add_article(a);
    }
    counter.counts()
}

/// Normalize breadth counts to [0,1]: min–max over `log(1 + count)`.
/// Entity counts are heavy-tailed, so the log keeps mid-size sources off
/// the floor. A population with no spread maps to all zeros.
pub fn normalize_breadth(counts: &BTreeMap<String, u64>) -> BTreeMap<String, f64> {
    let logs: BTreeMap<&str, f64> = counts
        .iter()
        .map(|(d, &c)| (d.as_str(), (1.0 + c as f64).ln()))
        .collect();
    let min = logs.values().copied().fold(f64::INFINITY, f64::min);
    let max = logs.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    logs.iter()
        .map(|(d, &v)| {
            let norm = if span <= 0.0 { 0.0 } else { (v - min) / span };
            (d.to_string(), norm)
        })
        .collect()
}

/// Reader-popularity rank range and tier layout.
pub const MAX_POPULARITY_RANK: f64 = 1_000_000.0;
pub const POPULARITY_TIER_COUNT: u32 = 20;
const TIER_WIDTH: f64 = MAX_POPULARITY_RANK / POPULARITY_TIER_COUNT as f64;

/// Popularity of one source inside the feed window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopularityScore {
    pub mean_rank: f64,
    /// Equal-range tier in [1, 20]; tier 1 holds ranks 1..=50_000.
    pub tier: u32,
    /// `mean_rank / 1_000_000`, clamped to [0,1]. Lower is more popular.
    pub f_p: f64,
}

/// Mean of the daily rank entries inside the trailing window ending at
/// `as_of` (defaults to the newest entry). `None` when no entry falls in
/// the window: missing popularity is distinct from a bad rank.
pub fn popularity(
    entries: &[(NaiveDate, u32)],
    window_days: u32,
    as_of: Option<NaiveDate>,
) -> Option<PopularityScore> {
    let as_of = as_of.or_else(|| entries.iter().map(|(d, _)| *d).max())?;
    let cutoff = as_of.checked_sub_days(Days::new(window_days as u64))?;
    let in_window: Vec<f64> = entries
        .iter()
        .filter(|(d, _)| *d > cutoff && *d <= as_of)
        .map(|(_, r)| *r as f64)
        .collect();
    if in_window.is_empty() {
        return None;
    }
    let mean_rank = in_window.iter().sum::<f64>() / in_window.len() as f64;
    let tier = ((mean_rank / TIER_WIDTH).ceil() as u32).clamp(1, POPULARITY_TIER_COUNT);
    let f_p = (mean_rank / MAX_POPULARITY_RANK).clamp(0.0, 1.0);
    Some(PopularityScore {
        mean_rank,
        tier,
        f_p,
    })
}

/// Nearest-rank percentile: the smallest value such that at least `p`
/// percent of the population is ≤ it.
pub fn nearest_rank_percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((p / 100.0 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[idx - 1])
}

/// Binary flags produced by a percentile threshold.
#[derive(Debug, Clone, Default)]
pub struct FlagResult {
    pub flags: BTreeMap<String, bool>,
    pub threshold: Option<f64>,
    /// True when fewer than the minimum population was scored, in which
    /// case every flag is 0.
    pub below_min_population: bool,
}

/// Flag the scores strictly above the `p`-th nearest-rank percentile of
/// the scored population. With fewer than `min_population` scored domains
/// all flags stay 0, as the percentile would be noise.
pub fn threshold_flags(
    scores: &BTreeMap<String, f64>,
    p: f64,
    min_population: usize,
) -> FlagResult {
    if scores.len() < min_population {
        return FlagResult {
            flags: scores.keys().map(|d| (d.clone(), false)).collect(),
            threshold: None,
            below_min_population: true,
        };
    }
    let values: Vec<f64> = scores.values().copied().collect();
    let threshold = nearest_rank_percentile(&values, p);
    let flags = match threshold {
        Some(t) => scores.iter().map(|(d, &v)| (d.clone(), v > t)).collect(),
        None => scores.keys().map(|d| (d.clone(), false)).collect(),
    };
    FlagResult {
        flags,
        threshold,
        below_min_population: false,
    }
}

/// Default floor for percentile flagging populations.
pub const DEFAULT_MIN_FLAG_POPULATION: usize = 20;

/// Everything the join step needs, keyed by domain. Reputation is the one
/// mandatory table; every other signal falls back to its documented
/// default when missing.
#[derive(Debug, Clone, Default)]
pub struct SignalTables {
    /// domain → (raw pagerank, normalized f_r).
    pub reputation: BTreeMap<String, (f64, f64)>,
    pub popularity: BTreeMap<String, PopularityScore>,
    pub breadth_raw: BTreeMap<String, u64>,
    pub breadth_norm: BTreeMap<String, f64>,
    /// domain → (f_b, signed gap).
    pub bias: BTreeMap<String, (f64, f64)>,
    /// domain → is_political; domains absent default to political.
    pub political: BTreeMap<String, bool>,
    /// domain → (flag, raw bot score).
    pub bot: BTreeMap<String, (bool, f64)>,
    /// domain → (flag, raw mean ads per page).
    pub ads: BTreeMap<String, (bool, f64)>,
}

/// The assembled signal table plus the residue: domains that appeared in
/// some signal table but not in the reputation table, and were therefore
/// excluded from ranking.
#[derive(Debug, Clone, Default)]
pub struct AssembledSignals {
    pub vectors: BTreeMap<String, SignalVector>,
    pub residue: Vec<String>,
}

/// Join all tables by domain. Missing-signal policy: bias zero for
/// non-political or unscored sources, breadth zero, popularity worst
/// (1.0) with the raw value marked missing, flags unset.
pub fn assemble(tables: &SignalTables) -> AssembledSignals {
    let mut vectors = BTreeMap::new();
    for (domain, &(raw_pagerank, f_r)) in &tables.reputation {
        let pop = tables.popularity.get(domain);
        let political = tables.political.get(domain).copied().unwrap_or(true);
        let (f_b, raw_gap) = match tables.bias.get(domain) {
            Some(&(f_b, gap)) if political => (f_b, gap),
            Some(&(_, gap)) => (0.0, gap),
            None => (0.0, 0.0),
        };
        let (f_s, raw_bot) = match tables.bot.get(domain) {
            Some(&(flag, raw)) => (flag, Some(raw)),
            None => (false, None),
        };
        let (f_a, raw_ads) = match tables.ads.get(domain) {
            Some(&(flag, raw)) => (flag, Some(raw)),
            None => (false, None),
        };
        vectors.insert(
            domain.clone(),
            SignalVector {
                domain: domain.clone(),
                f_r,
                f_p: pop.map(|p| p.f_p).unwrap_or(1.0),
                f_e: tables.breadth_norm.get(domain).copied().unwrap_or(0.0),
                f_b,
                f_s,
                f_a,
                raw_pagerank,
                raw_popularity: pop.map(|p| p.mean_rank),
                raw_entities: tables.breadth_raw.get(domain).copied().unwrap_or(0),
                raw_gap,
                raw_bot,
                raw_ads,
            },
        );
    }

    let mut residue = BTreeSet::new();
    let known = &tables.reputation;
    for d in tables
        .popularity
        .keys()
        .chain(tables.breadth_norm.keys())
        .chain(tables.bias.keys())
        .chain(tables.bot.keys())
        .chain(tables.ads.keys())
    {
        if !known.contains_key(d) {
            residue.insert(d.clone());
        }
    }
    AssembledSignals {
        vectors,
        residue: residue.into_iter().collect(),
    }
}

const SNAPSHOT_HEADER: &str =
    "domain,f_r,f_p,f_e,f_b,f_s,f_a,raw_pagerank,raw_popularity,raw_entities,raw_gap,raw_bot,raw_ads";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Persist the signal table as CSV, sorted by domain. Floats are written
/// in shortest round-trip form, so the snapshot is lossless and
/// byte-stable for identical input.
pub fn write_snapshot(
    path: impl AsRef<Path>,
    vectors: &BTreeMap<String, SignalVector>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{SNAPSHOT_HEADER}").map_err(|e| Error::io(path, e))?;
    for v in vectors.values() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            v.domain,
            v.f_r,
            v.f_p,
            v.f_e,
            v.f_b,
            v.f_s as u8,
            v.f_a as u8,
            v.raw_pagerank,
            fmt_opt(v.raw_popularity),
            v.raw_entities,
            v.raw_gap,
            fmt_opt(v.raw_bot),
            fmt_opt(v.raw_ads),
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read a signal snapshot back, bit-exact.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<BTreeMap<String, SignalVector>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SNAPSHOT_HEADER => {}
        _ => {
            return Err(Error::Record {
                path: path.to_path_buf(),
                line: 1,
                reason: "bad or missing signal snapshot header".to_string(),
            })
        }
    }
    let mut vectors = BTreeMap::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let record_err = |reason: String| Error::Record {
            path: path.to_path_buf(),
            line: no + 1,
            reason,
        };
        if fields.len() != 13 {
            return Err(record_err(format!("expected 13 fields, got {}", fields.len())));
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| record_err(format!("field {i}: {e}")))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let flag = |i: usize| -> Result<bool> {
            match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(record_err(format!("field {i}: bad flag {other:?}"))),
            }
        };
        let v = SignalVector {
            domain: fields[0].to_string(),
            f_r: f(1)?,
            f_p: f(2)?,
            f_e: f(3)?,
            f_b: f(4)?,
            f_s: flag(5)?,
            f_a: flag(6)?,
            raw_pagerank: f(7)?,
            raw_popularity: opt(8)?,
            raw_entities: fields[9]
                .parse::<u64>()
                .map_err(|e| record_err(format!("field 9: {e}")))?,
            raw_gap: f(10)?,
            raw_bot: opt(11)?,
            raw_ads: opt(12)?,
        };
        vectors.insert(v.domain.clone(), v);
    }
    Ok(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SentenceAnnotation, SentimentDistribution};
    use chrono::{TimeZone, Utc};

    fn article(src: &str, id: &str, mentions: &[&str]) -> ArticleRecord {
        ArticleRecord {
            article_id: id.to_string(),
            source_domain: src.to_string(),
            url: format!("https://{src}/{id}"),
            published_at: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
            sentences: vec![SentenceAnnotation {
                text: None,
                sentiment: SentimentDistribution::neutral(),
                entity_mentions: mentions.iter().map(|s| s.to_string()).collect(),
            }],
            citation_urls: vec![],
            all_link_urls: vec![],
        }
    }

    #[test]
    fn breadth_counts_distinct_normalized_names() {
        let arts = [
            article("a.com", "1", &["Ada", "Bea", "ada"]),
            article("a.com", "2", &[" Ada "]),
            article("b.com", "3", &[]),
        ];
        let counts = breadth_counts(arts.iter());
        assert_eq!(counts["a.com"], 2);
        assert_eq!(counts["b.com"], 0);
    }

    #[test]
    fn breadth_normalization_is_log_min_max() {
        let mut counts = BTreeMap::new();
        counts.insert("a.com".to_string(), 0u64);
        counts.insert("b.com".to_string(), 9);
        counts.insert("c.com".to_string(), 99);
        let norm = normalize_breadth(&counts);
        assert_eq!(norm["a.com"], 0.0);
        assert!((norm["b.com"] - 0.5).abs() < 1e-12);
        assert_eq!(norm["c.com"], 1.0);
    }

    #[test]
    fn degenerate_breadth_population_maps_to_zero() {
        let mut counts = BTreeMap::new();
        counts.insert("a.com".to_string(), 7u64);
        counts.insert("b.com".to_string(), 7);
        let norm = normalize_breadth(&counts);
        assert!(norm.values().all(|v| *v == 0.0));
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 6, d).unwrap()
    }

    #[test]
    fn popularity_tiers_and_scaling() {
        let entries: Vec<(NaiveDate, u32)> = (1..=30).map(|d| (day(d), 30_000)).collect();
        let p = popularity(&entries, 30, None).unwrap();
        assert_eq!(p.tier, 1);
        assert_eq!(p.mean_rank, 30_000.0);

        let entries = vec![(day(1), 1_000_000)];
        let p = popularity(&entries, 30, None).unwrap();
        assert_eq!(p.tier, 20);
        assert_eq!(p.f_p, 1.0);

        let entries = vec![(day(1), 100), (day(2), 300)];
        let p = popularity(&entries, 30, None).unwrap();
        assert_eq!(p.mean_rank, 200.0);
        assert!((p.f_p - 0.0002).abs() < 1e-15);
    }

    #[test]
    fn popularity_window_excludes_stale_entries() {
        let entries = vec![(day(1), 500_000), (day(29), 100)];
        // Window of 10 days ending at the newest entry excludes day 1.
        let p = popularity(&entries, 10, None).unwrap();
        assert_eq!(p.mean_rank, 100.0);
        // Explicit as_of past all entries leaves nothing in window.
        assert!(popularity(&entries, 10, Some(day(1) + Days::new(300))).is_none());
        assert!(popularity(&[], 30, None).is_none());
    }

    #[test]
    fn tier_boundary_is_exact_multiple() {
        let p = popularity(&[(day(1), 50_000)], 30, None).unwrap();
        assert_eq!(p.tier, 1);
        let p = popularity(&[(day(1), 50_001)], 30, None).unwrap();
        assert_eq!(p.tier, 2);
    }

    #[test]
    fn nearest_rank_on_1_to_100() {
        let values: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(nearest_rank_percentile(&values, 95.0), Some(95.0));
        assert_eq!(nearest_rank_percentile(&values, 100.0), Some(100.0));
        assert_eq!(nearest_rank_percentile(&values, 1.0), Some(1.0));
    }

    fn scores_1_to(n: usize) -> BTreeMap<String, f64> {
        (1..=n).map(|i| (format!("d{i:04}"), i as f64)).collect()
    }

    #[test]
    fn flags_mark_strictly_above_p95() {
        let result = threshold_flags(&scores_1_to(100), 95.0, 20);
        let flagged: Vec<&String> = result
            .flags
            .iter()
            .filter(|(_, f)| **f)
            .map(|(d, _)| d)
            .collect();
        assert_eq!(flagged.len(), 5);
        for d in 96..=100 {
            assert!(result.flags[&format!("d{d:04}")]);
        }
        assert!(!result.flags["d0095"]);
    }

    #[test]
    fn equal_scores_flag_nothing() {
        let scores: BTreeMap<String, f64> =
            (0..50).map(|i| (format!("d{i}"), 3.0)).collect();
        let result = threshold_flags(&scores, 95.0, 20);
        assert!(result.flags.values().all(|f| !f));
    }

    #[test]
    fn small_population_flags_nothing_with_warning() {
        let result = threshold_flags(&scores_1_to(10), 95.0, 20);
        assert!(result.below_min_population);
        assert!(result.flags.values().all(|f| !f));
    }

    #[test]
    fn flag_count_is_bounded() {
        let result = threshold_flags(&scores_1_to(333), 95.0, 20);
        let flagged = result.flags.values().filter(|f| **f).count();
        assert!(flagged <= (0.05f64 * 333.0).ceil() as usize);
    }

    fn reputation_only_tables() -> SignalTables {
        let mut t = SignalTables::default();
        t.reputation.insert("a.com".to_string(), (0.5, 1.0));
        t.reputation.insert("b.com".to_string(), (0.3, 0.2));
        t
    }

    #[test]
    fn assemble_applies_missing_signal_defaults() {
        let assembled = assemble(&reputation_only_tables());
        let v = &assembled.vectors["a.com"];
        assert_eq!(v.f_p, 1.0);
        assert_eq!(v.f_e, 0.0);
        assert_eq!(v.f_b, 0.0);
        assert!(!v.f_s && !v.f_a);
        assert_eq!(v.raw_popularity, None);
        assert!(v.is_valid());
        assert!(assembled.residue.is_empty());
    }

    #[test]
    fn assemble_joins_all_tables_and_reports_residue() {
        let mut t = reputation_only_tables();
        t.popularity.insert(
            "a.com".to_string(),
            PopularityScore {
                mean_rank: 1000.0,
                tier: 1,
                f_p: 0.001,
            },
        );
        t.breadth_raw.insert("a.com".to_string(), 42);
        t.breadth_norm.insert("a.com".to_string(), 0.7);
        t.bias.insert("a.com".to_string(), (0.04, 0.08));
        t.bot.insert("a.com".to_string(), (true, 0.9));
        t.ads.insert("a.com".to_string(), (false, 1.5));
        // c.com has signals but no reputation: excluded, reported.
        t.bias.insert("c.com".to_string(), (0.2, -0.4));
        let assembled = assemble(&t);
        let v = &assembled.vectors["a.com"];
        assert_eq!(v.f_p, 0.001);
        assert_eq!(v.f_e, 0.7);
        assert_eq!(v.f_b, 0.04);
        assert!(v.f_s);
        assert!(!v.f_a);
        assert_eq!(v.raw_entities, 42);
        assert_eq!(v.raw_bot, Some(0.9));
        assert!(!assembled.vectors.contains_key("c.com"));
        assert_eq!(assembled.residue, vec!["c.com".to_string()]);
    }

    #[test]
    fn non_political_sources_get_zero_bias() {
        let mut t = reputation_only_tables();
        t.bias.insert("a.com".to_string(), (0.3, 0.6));
        t.political.insert("a.com".to_string(), false);
        let assembled = assemble(&t);
        let v = &assembled.vectors["a.com"];
        assert_eq!(v.f_b, 0.0);
        // The raw gap is still reported.
        assert_eq!(v.raw_gap, 0.6);
    }

    #[test]
    fn empty_input_is_empty_output() {
        let assembled = assemble(&SignalTables::default());
        assert!(assembled.vectors.is_empty());
        assert!(assembled.residue.is_empty());
    }

    #[test]
    fn snapshot_roundtrips_bit_exactly() {
        let mut t = reputation_only_tables();
        t.bias.insert("a.com".to_string(), (0.1 + 0.2 - 0.2, 1.0 / 3.0));
        t.bot.insert("b.com".to_string(), (true, 0.123456789012345678));
        let assembled = assemble(&t);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("signals.csv");
        write_snapshot(&path, &assembled.vectors).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back, assembled.vectors);

        // Byte-stable across rewrites of the same table.
        let first = std::fs::read(&path).unwrap();
        write_snapshot(&path, &back).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn snapshot_write_to_unwritable_path_errors() {
        let vectors = assemble(&reputation_only_tables()).vectors;
        assert!(matches!(
            write_snapshot("/nonexistent-dir/signals.csv", &vectors),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn large_snapshot_is_deterministic() {
        let mut t = SignalTables::default();
        for i in 0..600 {
            let d = format!("s{i:04}.example");
            t.reputation
                .insert(d.clone(), (1.0 / (i + 1) as f64, i as f64 / 599.0));
            if i % 3 == 0 {
                t.bot.insert(d.clone(), (i % 30 == 0, i as f64 / 600.0));
            }
            if i % 7 == 0 {
                t.ads.insert(d, (false, (i % 13) as f64 / 2.0));
            }
        }
        let vectors = assemble(&t).vectors;
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("one.csv");
        let p2 = dir.path().join("two.csv");
        write_snapshot(&p1, &vectors).unwrap();
        write_snapshot(&p2, &vectors).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(read_snapshot(&p1).unwrap().len(), 600);
    }
}
