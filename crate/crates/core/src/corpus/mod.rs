//! Input records, domain canonicalization, corpus streaming, and snapshots.
//!
//! Every corpus file is line-delimited: one JSON record per line for
//! articles/tweets/profiles/sources/pages, tab-separated rows for the
//! entity–party dictionary, and headered CSV for labels, expert rankings,
//! and the popularity feed. Records are immutable after construction and
//! malformed lines are skipped with a diagnostic instead of aborting the
//! run.

mod domain;
mod io;
mod types;

pub use domain::{canonical_domain, DomainRules};
pub use io::{
    load_bias_labels, load_bot_labels, load_entity_parties, load_expert_ranking,
    load_popularity_feed, read_all, write_jsonl, IngestReport, JsonlReader, SkipDiagnostic,
};
pub use types::{
    ArticleRecord, BotLabel, EntityPartyDictionary, ExpertRanking, ExternalLabels, Lean,
    PageRecord, SentenceAnnotation, SentimentDistribution, SourceRecord, Topic, TweetRecord,
    UserProfile, ValidateRecord, Wing,
};
pub(crate) use types::normalize_entity;
