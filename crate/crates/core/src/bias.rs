//! Party-level sentiment aggregation and political-bias scoring.
//!
//! Three aggregation schemes turn sentence-level sentiment triples into a
//! per-party distribution for a source: article-level vote (AV), article-
//! level distribution (AD), and sentence-level distribution (SD, which
//! weights by entity mentions across the whole source). The per-party
//! bias score is `(pos - neg) / (pos + neg)`, and the absolute gap between
//! the left- and right-wing scores quantifies source bias.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use crate::corpus::{Lean, SentimentDistribution, Wing};
use crate::corpus::{ArticleRecord, EntityPartyDictionary};

/// Tolerance for the positive-vs-negative comparison in [`article_vote`];
/// equality on reals needs a cushion.
pub const VOTE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMethod {
    /// Article-level vote: each article casts a one-hot vote per party.
    Av,
    /// Article-level distribution: average of per-article distributions.
    Ad,
    /// Sentence-level distribution: every sentence weighted by its party
    /// mentions across the whole source.
    Sd,
}

impl AggregationMethod {
    pub const ALL: [AggregationMethod; 3] =
        [AggregationMethod::Av, AggregationMethod::Ad, AggregationMethod::Sd];
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationMethod::Av => f.write_str("av"),
            AggregationMethod::Ad => f.write_str("ad"),
            AggregationMethod::Sd => f.write_str("sd"),
        }
    }
}

impl FromStr for AggregationMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "av" => Ok(AggregationMethod::Av),
            "ad" => Ok(AggregationMethod::Ad),
            "sd" => Ok(AggregationMethod::Sd),
            other => Err(format!("unknown aggregation method: {other}")),
        }
    }
}

fn add_scaled(acc: &mut [f64; 3], d: SentimentDistribution, w: f64) {
    acc[0] += d.pos * w;
    acc[1] += d.neu * w;
    acc[2] += d.neg * w;
}

/// Mention-weighted mean sentiment toward each party within one article.
/// Parties with zero mentions are absent from the map.
pub fn article_party_distribution(
    article: &ArticleRecord,
    dict: &EntityPartyDictionary,
) -> BTreeMap<String, SentimentDistribution> {
    let (sums, counts) = article_party_sums(article, dict);
    sums.into_iter()
        .map(|(party, sum)| {
            let n = counts[&party] as f64;
            (
                party,
                SentimentDistribution::new(sum[0] / n, sum[1] / n, sum[2] / n),
            )
        })
        .collect()
}

/// Per-party weighted sentiment sums and mention counts for one article.
fn article_party_sums(
    article: &ArticleRecord,
    dict: &EntityPartyDictionary,
) -> (BTreeMap<String, [f64; 3]>, BTreeMap<String, u64>) {
    let mut sums: BTreeMap<String, [f64; 3]> = BTreeMap::new();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for sentence in &article.sentences {
        for mention in &sentence.entity_mentions {
            if let Some(party) = dict.party_of(mention) {
                add_scaled(sums.entry(party.to_string()).or_insert([0.0; 3]), sentence.sentiment, 1.0);
                *counts.entry(party.to_string()).or_insert(0) += 1;
            }
        }
    }
    (sums, counts)
}

/// One-hot vote of a sentiment distribution: positive beats negative by
/// more than [`VOTE_EPS`] → `[1,0,0]`, the reverse → `[0,0,1]`, otherwise
/// the neutral vote `[0,1,0]`.
pub fn article_vote(dist: SentimentDistribution) -> SentimentDistribution {
    if dist.pos > dist.neg + VOTE_EPS {
        SentimentDistribution::new(1.0, 0.0, 0.0)
    } else if dist.neg > dist.pos + VOTE_EPS {
        SentimentDistribution::new(0.0, 0.0, 1.0)
    } else {
        SentimentDistribution::new(0.0, 1.0, 0.0)
    }
}

/// Mergeable per-party sentiment accumulator for one aggregation method.
/// Per-article contributions commute, so shards can be folded in any
/// order and merged.
#[derive(Debug, Clone)]
pub struct PartySentimentAccumulator {
    method: AggregationMethod,
    sums: BTreeMap<String, [f64; 3]>,
    norms: BTreeMap<String, f64>,
    mentions: BTreeMap<String, u64>,
}

impl PartySentimentAccumulator {
    pub fn new(method: AggregationMethod) -> Self {
        Self {
            method,
            sums: BTreeMap::new(),
            norms: BTreeMap::new(),
            mentions: BTreeMap::new(),
        }
    }

    pub fn method(&self) -> AggregationMethod {
        self.method
    }

    pub fn add_article(&mut self, article: &ArticleRecord, dict: &EntityPartyDictionary) {
        let (sums, counts) = article_party_sums(article, dict);
        for (party, sum) in sums {
            let n = counts[&party];
            *self.mentions.entry(party.clone()).or_insert(0) += n;
            let slot = self.sums.entry(party.clone()).or_insert([0.0; 3]);
            let norm = self.norms.entry(party).or_insert(0.0);
            match self.method {
                AggregationMethod::Sd => {
                    slot[0] += sum[0];
                    slot[1] += sum[1];
                    slot[2] += sum[2];
                    *norm += n as f64;
                }
                AggregationMethod::Ad => {
                    let nf = n as f64;
                    slot[0] += sum[0] / nf;
                    slot[1] += sum[1] / nf;
                    slot[2] += sum[2] / nf;
                    *norm += 1.0;
                }
                AggregationMethod::Av => {
                    let nf = n as f64;
                    let vote = article_vote(SentimentDistribution::new(
                        sum[0] / nf,
                        sum[1] / nf,
                        sum[2] / nf,
                    ));
                    add_scaled(slot, vote, 1.0);
                    *norm += 1.0;
                }
            }
        }
    }

    /// Fold another shard in. Both sides must use the same method.
    pub fn merge(&mut self, other: PartySentimentAccumulator) {
        assert_eq!(self.method, other.method, "merging mismatched accumulators");
        for (party, sum) in other.sums {
            let slot = self.sums.entry(party).or_insert([0.0; 3]);
            slot[0] += sum[0];
            slot[1] += sum[1];
            slot[2] += sum[2];
        }
        for (party, n) in other.norms {
            *self.norms.entry(party).or_insert(0.0) += n;
        }
        for (party, m) in other.mentions {
            *self.mentions.entry(party).or_insert(0) += m;
        }
    }

    /// Normalized per-party distributions. Parties whose normalizer is
    /// zero are absent — never a division by zero.
    pub fn distributions(&self) -> BTreeMap<String, SentimentDistribution> {
        self.sums
            .iter()
            .filter_map(|(party, sum)| {
                let n = self.norms.get(party).copied().unwrap_or(0.0);
                if n > 0.0 {
                    Some((
                        party.clone(),
                        SentimentDistribution::new(sum[0] / n, sum[1] / n, sum[2] / n),
                    ))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Total entity mentions per party across all folded articles.
    pub fn mention_counts(&self) -> &BTreeMap<String, u64> {
        &self.mentions
    }
}

/// Aggregate per-party sentiment over a source's articles.
pub fn aggregate<'a>(
    articles: impl IntoIterator<Item = &'a ArticleRecord>,
    dict: &EntityPartyDictionary,
    method: AggregationMethod,
) -> BTreeMap<String, SentimentDistribution> {
    let mut acc = PartySentimentAccumulator::new(method);
    for article in articles {
        acc.add_article(article, dict);
    }
    acc.distributions()
}

/// Bias score `(pos - neg) / (pos + neg)` in [-1, 1]. `None` when the
/// distribution carries no positive or negative mass; the party is then
/// unscored.
pub fn bias_score(dist: &SentimentDistribution) -> Option<f64> {
    let denom = dist.pos + dist.neg;
    if denom > 0.0 {
        Some((dist.pos - dist.neg) / denom)
    } else {
        None
    }
}

/// Bias score and mention count for one party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartyBias {
    pub bias: f64,
    pub mentions: u64,
}

/// Wing-level scores derived from per-party biases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WingScores {
    pub left: Option<f64>,
    pub right: Option<f64>,
    /// `left - right`; zero when either wing is unscored.
    pub gap: f64,
    /// `|gap| / 2`, the bias-magnitude signal in [0, 1].
    pub f_b: f64,
    pub lean: Lean,
}

/// Threshold above which a gap counts as a "significant" lean in report
/// tables. Plain classification uses a zero threshold.
pub const SIGNIFICANT_GAP: f64 = 0.05;

/// Mention-weighted wing scores and the lean call at threshold `theta`.
/// A wing with no scored party leaves the source lean-less with `f_b = 0`.
pub fn lean_and_gap(
    party_bias: &BTreeMap<String, PartyBias>,
    wings: &BTreeMap<String, Wing>,
    theta: f64,
) -> WingScores {
    let wing_score = |wing: Wing| -> Option<f64> {
        let mut weighted = 0.0;
        let mut total = 0u64;
        for (party, pb) in party_bias {
            if wings.get(party).copied() == Some(wing) {
                weighted += pb.bias * pb.mentions as f64;
                total += pb.mentions;
            }
        }
        (total > 0).then(|| weighted / total as f64)
    };
    let left = wing_score(Wing::Left);
    let right = wing_score(Wing::Right);
    let (gap, f_b, lean) = match (left, right) {
        (Some(l), Some(r)) => {
            let gap = l - r;
            let lean = if gap > theta {
                Lean::Left
            } else if gap < -theta {
                Lean::Right
            } else {
                Lean::None
            };
            (gap, gap.abs() / 2.0, lean)
        }
        _ => (0.0, 0.0, Lean::None),
    };
    WingScores {
        left,
        right,
        gap,
        f_b,
        lean,
    }
}

/// Full per-source bias computation under one aggregation method.
#[derive(Debug, Clone)]
pub struct BiasResult {
    pub domain: String,
    pub party_bias: BTreeMap<String, PartyBias>,
    pub wing: WingScores,
}

/// Score one source's articles: per-party bias plus wing scores.
pub fn source_bias<'a>(
    domain: impl Into<String>,
    articles: impl IntoIterator<Item = &'a ArticleRecord>,
    dict: &EntityPartyDictionary,
    method: AggregationMethod,
    theta: f64,
) -> BiasResult {
    let mut acc = PartySentimentAccumulator::new(method);
    for article in articles {
        acc.add_article(article, dict);
    }
    bias_result_from_accumulator(domain, &acc, dict, theta)
}

/// As [`source_bias`] but from an already-folded accumulator.
pub fn bias_result_from_accumulator(
    domain: impl Into<String>,
    acc: &PartySentimentAccumulator,
    dict: &EntityPartyDictionary,
    theta: f64,
) -> BiasResult {
    let mentions = acc.mention_counts();
    let party_bias: BTreeMap<String, PartyBias> = acc
        .distributions()
        .iter()
        .filter_map(|(party, dist)| {
            bias_score(dist).map(|bias| {
                (
                    party.clone(),
                    PartyBias {
                        bias,
                        mentions: mentions.get(party).copied().unwrap_or(0),
                    },
                )
            })
        })
        .collect();
    let wing = lean_and_gap(&party_bias, dict.party_wings(), theta);
    BiasResult {
        domain: domain.into(),
        party_bias,
        wing,
    }
}

/// Token lists for the bundled naive sentence-sentiment baseline.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

impl SentimentLexicon {
    pub fn from_words<'a>(
        positive: impl IntoIterator<Item = &'a str>,
        negative: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        Self {
            positive: positive.into_iter().map(|w| w.to_lowercase()).collect(),
            negative: negative.into_iter().map(|w| w.to_lowercase()).collect(),
        }
    }

    /// Small built-in English word list, enough for self-contained tests
    /// and demos without an external sentiment model.
    pub fn default_english() -> Self {
        Self::from_words(
            [
                "good", "great", "excellent", "praise", "praised", "win", "wins", "won",
                "success", "successful", "strong", "support", "supported", "popular", "hero",
                "celebrated", "acclaimed", "benefit", "gain", "improve", "improved", "positive",
                "triumph", "honest", "respected",
            ],
            [
                "bad", "poor", "terrible", "scandal", "lose", "loses", "lost", "failure",
                "failed", "weak", "attack", "attacked", "corrupt", "corruption", "fraud",
                "criticize", "criticized", "crisis", "decline", "negative", "disgrace",
                "accused", "guilty", "dishonest", "controversial",
            ],
        )
    }

    fn polarity(&self, token: &str) -> (bool, bool) {
        (self.positive.contains(token), self.negative.contains(token))
    }
}

/// Naive lexicon-hit sentiment for a sentence: with `p` positive and `n`
/// negative hits, `pos = p/(p+n+1)`, `neg = n/(p+n+1)`, remainder neutral.
/// Tokenization splits on whitespace, strips punctuation, and case-folds.
pub fn naive_sentence_sentiment(text: &str, lexicon: &SentimentLexicon) -> SentimentDistribution {
    let mut p = 0u64;
    let mut n = 0u64;
    for raw in text.split_whitespace() {
        let token: String = raw
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        if token.is_empty() {
            continue;
        }
        let (is_pos, is_neg) = lexicon.polarity(&token);
        if is_pos {
            p += 1;
        }
        if is_neg {
            n += 1;
        }
    }
    let denom = (p + n + 1) as f64;
    let pos = p as f64 / denom;
    let neg = n as f64 / denom;
    SentimentDistribution::new(pos, 1.0 - pos - neg, neg)
}
