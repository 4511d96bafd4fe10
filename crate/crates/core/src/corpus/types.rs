use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

/// Tolerance used when checking that a sentiment triple is a probability
/// distribution.
pub const TRIPLE_EPS: f64 = 1e-9;

/// Validation hook for corpus records. Loaders skip records whose
/// `validate` fails and report a diagnostic instead of aborting.
pub trait ValidateRecord {
    fn validate(&self) -> std::result::Result<(), String>;
}

/// Closed topic vocabulary for news sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topic {
    General,
    World,
    Nation,
    Sport,
    Entertainment,
    Business,
    Health,
    Technology,
    Unknown,
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Topic::General => "general",
            Topic::World => "world",
            Topic::Nation => "nation",
            Topic::Sport => "sport",
            Topic::Entertainment => "entertainment",
            Topic::Business => "business",
            Topic::Health => "health",
            Topic::Technology => "technology",
            Topic::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

impl FromStr for Topic {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "general" => Ok(Topic::General),
            "world" => Ok(Topic::World),
            "nation" => Ok(Topic::Nation),
            "sport" => Ok(Topic::Sport),
            "entertainment" => Ok(Topic::Entertainment),
            "business" => Ok(Topic::Business),
            "health" => Ok(Topic::Health),
            "technology" => Ok(Topic::Technology),
            "unknown" => Ok(Topic::Unknown),
            other => Err(format!("unknown topic: {other}")),
        }
    }
}

/// Political wing a party belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wing {
    Left,
    Right,
    Other,
}

impl fmt::Display for Wing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wing::Left => f.write_str("left"),
            Wing::Right => f.write_str("right"),
            Wing::Other => f.write_str("other"),
        }
    }
}

impl FromStr for Wing {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Wing::Left),
            "right" => Ok(Wing::Right),
            "other" => Ok(Wing::Other),
            other => Err(format!("unknown wing: {other}")),
        }
    }
}

/// Predicted or labeled political lean of a news source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lean {
    Left,
    Right,
    None,
}

impl fmt::Display for Lean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lean::Left => f.write_str("left"),
            Lean::Right => f.write_str("right"),
            Lean::None => f.write_str("none"),
        }
    }
}

impl FromStr for Lean {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Lean::Left),
            "right" => Ok(Lean::Right),
            "none" => Ok(Lean::None),
            other => Err(format!("unknown lean: {other}")),
        }
    }
}

/// A (positive, neutral, negative) sentiment probability triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", from = "[f64; 3]")]
pub struct SentimentDistribution {
    pub pos: f64,
    pub neu: f64,
    pub neg: f64,
}

impl SentimentDistribution {
    pub fn new(pos: f64, neu: f64, neg: f64) -> Self {
        Self { pos, neu, neg }
    }

    pub fn neutral() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    /// True when all entries are finite, non-negative, and sum to 1 within
    /// `TRIPLE_EPS`.
    pub fn is_valid(&self) -> bool {
        let fin = self.pos.is_finite() && self.neu.is_finite() && self.neg.is_finite();
        let nonneg = self.pos >= 0.0 && self.neu >= 0.0 && self.neg >= 0.0;
        fin && nonneg && (self.pos + self.neu + self.neg - 1.0).abs() <= TRIPLE_EPS
    }
}

impl From<[f64; 3]> for SentimentDistribution {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<SentimentDistribution> for [f64; 3] {
    fn from(d: SentimentDistribution) -> [f64; 3] {
        [d.pos, d.neu, d.neg]
    }
}

/// A tracked news source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub domain: String,
    #[serde(default = "unknown_string")]
    pub country: String,
    #[serde(default = "unknown_string")]
    pub language: String,
    #[serde(default = "default_topic")]
    pub topic: Topic,
    #[serde(default = "default_true")]
    pub is_political: bool,
}

fn unknown_string() -> String {
    "unknown".to_string()
}

fn default_topic() -> Topic {
    Topic::Unknown
}

fn default_true() -> bool {
    true
}

impl SourceRecord {
    pub fn new(domain: impl Into<String>) -> Self {
        Self {
            domain: domain.into(),
            country: unknown_string(),
            language: unknown_string(),
            topic: Topic::Unknown,
            is_political: true,
        }
    }
}

fn validate_domain_field(domain: &str) -> std::result::Result<(), String> {
    if domain.is_empty() {
        return Err("domain is empty".into());
    }
    if domain.chars().any(|c| c.is_ascii_uppercase()) {
        return Err(format!("domain {domain:?} is not lowercase"));
    }
    if domain.contains("://") || domain.contains('/') || domain.contains(' ') {
        return Err(format!("domain {domain:?} contains a scheme, path, or space"));
    }
    Ok(())
}

impl ValidateRecord for SourceRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        validate_domain_field(&self.domain)
    }
}

/// One sentence of an article, pre-annotated with a sentiment triple and
/// the entity names it mentions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub sentiment: SentimentDistribution,
    #[serde(default)]
    pub entity_mentions: Vec<String>,
}

/// One published article of a news source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub article_id: String,
    pub source_domain: String,
    pub url: String,
    pub published_at: DateTime<Utc>,
    #[serde(default)]
    pub sentences: Vec<SentenceAnnotation>,
    /// URLs cited inside the article body (reporting citations).
    #[serde(default)]
    pub citation_urls: Vec<String>,
    /// Every URL found anywhere on the page, ads and navigation included.
    #[serde(default)]
    pub all_link_urls: Vec<String>,
}

impl ValidateRecord for ArticleRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.article_id.is_empty() {
            return Err("article_id is empty".into());
        }
        validate_domain_field(&self.source_domain)?;
        for (i, s) in self.sentences.iter().enumerate() {
            if !s.sentiment.is_valid() {
                return Err(format!(
                    "sentence {i} sentiment {:?} is not a probability triple",
                    [s.sentiment.pos, s.sentiment.neu, s.sentiment.neg]
                ));
            }
        }
        Ok(())
    }
}

/// A tweet that linked to at least one tracked news domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: String,
    pub posted_at: DateTime<Utc>,
    pub target_domains: Vec<String>,
}

impl ValidateRecord for TweetRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.tweet_id.is_empty() {
            return Err("tweet_id is empty".into());
        }
        if self.user_id.is_empty() {
            return Err("user_id is empty".into());
        }
        if self.target_domains.is_empty() {
            return Err("tweet has no target domains".into());
        }
        for d in &self.target_domains {
            validate_domain_field(d)?;
        }
        Ok(())
    }
}

/// Twitter-style user profile; raw inputs for bot-feature extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub follower_count: u64,
    pub followee_count: u64,
    pub verified: bool,
    pub favourites_count: u64,
    pub listed_count: u64,
    pub description_length: u64,
    pub geo_enabled: bool,
    pub has_location: bool,
    pub has_time_zone: bool,
    pub default_profile: bool,
    pub default_profile_image: bool,
}

impl ValidateRecord for UserProfile {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.user_id.is_empty() {
            return Err("user_id is empty".into());
        }
        Ok(())
    }
}

/// A stored HTML page for ad scanning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRecord {
    pub domain: String,
    pub url: String,
    pub html: String,
}

impl ValidateRecord for PageRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        validate_domain_field(&self.domain)
    }
}

/// Exact-match dictionary from entity names to party identifiers, plus the
/// party → wing table. Lookups normalize by trimming and case-folding.
#[derive(Debug, Clone, Default)]
pub struct EntityPartyDictionary {
    entity_to_party: HashMap<String, String>,
    party_wing: BTreeMap<String, Wing>,
}

pub(crate) fn normalize_entity(name: &str) -> String {
    name.trim().to_lowercase()
}

impl EntityPartyDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entity: &str, party: impl Into<String>, wing: Wing) {
        let party = party.into();
        self.entity_to_party
            .insert(normalize_entity(entity), party.clone());
        self.party_wing.insert(party, wing);
    }

    /// Party of an entity name, or `None` if the name is not in the
    /// dictionary.
    pub fn party_of(&self, entity: &str) -> Option<&str> {
        self.entity_to_party
            .get(&normalize_entity(entity))
            .map(String::as_str)
    }

    pub fn wing_of(&self, party: &str) -> Option<Wing> {
        self.party_wing.get(party).copied()
    }

    pub fn party_wings(&self) -> &BTreeMap<String, Wing> {
        &self.party_wing
    }

    pub fn entity_count(&self) -> usize {
        self.entity_to_party.len()
    }
}

/// One external expert ranking: an ordered list of domains, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertRanking {
    pub name: String,
    pub topic: String,
    pub group: String,
    pub domains: Vec<String>,
}

/// Bot/human label vocabulary for classifier training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BotLabel {
    Bot,
    Human,
}

impl fmt::Display for BotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BotLabel::Bot => f.write_str("bot"),
            BotLabel::Human => f.write_str("human"),
        }
    }
}

impl FromStr for BotLabel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bot" => Ok(BotLabel::Bot),
            "human" => Ok(BotLabel::Human),
            other => Err(format!("unknown bot label: {other}")),
        }
    }
}

/// External ground-truth material used by the evaluation stage.
#[derive(Debug, Clone, Default)]
pub struct ExternalLabels {
    pub bias_labels: BTreeMap<String, Lean>,
    pub bot_labels: BTreeMap<String, BotLabel>,
    pub expert_rankings: Vec<ExpertRanking>,
    pub popularity_feed: BTreeMap<String, Vec<(NaiveDate, u32)>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_triple_validity() {
        assert!(SentimentDistribution::new(0.1, 0.9, 0.0).is_valid());
        assert!(SentimentDistribution::neutral().is_valid());
        assert!(!SentimentDistribution::new(0.5, 0.6, 0.0).is_valid());
        assert!(!SentimentDistribution::new(-0.1, 1.1, 0.0).is_valid());
        assert!(!SentimentDistribution::new(f64::NAN, 0.5, 0.5).is_valid());
    }

    #[test]
    fn sentiment_serializes_as_triple() {
        let d = SentimentDistribution::new(0.1, 0.9, 0.0);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "[0.1,0.9,0.0]");
        let back: SentimentDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn dictionary_lookup_is_exact_match_on_normalized_names() {
        let mut dict = EntityPartyDictionary::new();
        dict.insert("Jane Doe", "party_a", Wing::Left);
        assert_eq!(dict.party_of("  jane doe "), Some("party_a"));
        assert_eq!(dict.party_of("JANE DOE"), Some("party_a"));
        assert_eq!(dict.party_of("jane"), None);
        assert_eq!(dict.wing_of("party_a"), Some(Wing::Left));
        assert_eq!(dict.wing_of("party_b"), None);
    }

    #[test]
    fn tweet_without_targets_fails_validation() {
        let t = TweetRecord {
            tweet_id: "t1".into(),
            user_id: "u1".into(),
            posted_at: Utc::now(),
            target_domains: vec![],
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn source_domain_must_be_canonical_shape() {
        let mut s = SourceRecord::new("example.com");
        assert!(s.validate().is_ok());
        s.domain = "HTTP://example.com".into();
        assert!(s.validate().is_err());
        s.domain = "example.com/path".into();
        assert!(s.validate().is_err());
        s.domain = String::new();
        assert!(s.validate().is_err());
    }
}
