//! Synthetic news ecosystem with planted ground truth.
//!
//! The generator plants a quality score per source and derives everything
//! else from it: article volume, citation preference, breadth vocabulary,
//! and reader popularity. Bias, bot, and ad behavior are planted
//! independently so recovery of each signal is testable. A fixed seed
//! yields a byte-identical corpus.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Days, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::corpus::{
    write_jsonl, ArticleRecord, BotLabel, EntityPartyDictionary, ExpertRanking, Lean, PageRecord,
    SentenceAnnotation, SentimentDistribution, SourceRecord, TweetRecord, UserProfile, Wing,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub source_count: usize,
    pub days: u32,
    pub seed: u64,
    /// Planted quality is `u^shape` for uniform `u`; larger shapes make
    /// high quality rarer.
    pub quality_shape: f64,
    /// External citations target sources with probability proportional to
    /// `quality^exponent`. Zero means uniform targets.
    pub citation_preference_exponent: f64,
    /// Articles per day: `base + scale * quality`.
    pub articles_per_day_base: f64,
    pub articles_per_day_scale: f64,
    /// Poisson means for per-article link counts.
    pub self_citations_per_article: f64,
    pub external_citations_per_article: f64,
    /// Extra non-reporting links per article (uniform random targets);
    /// they appear only in `all_link_urls`.
    pub noise_links_per_article: f64,
    pub sentences_per_article: u32,
    /// Sentiment offset toward a source's planted wing, in [0, 0.2].
    pub bias_skew: f64,
    /// Fraction of sources that cover politics and receive a planted lean.
    pub political_fraction: f64,
    /// Fraction of a normal source's tweets posted by bot accounts.
    pub bot_fraction_background: f64,
    /// Bot tweet fraction for the flagged twin of each quality-twin pair.
    pub bot_fraction_heavy: f64,
    /// Pairs of sources planted with identical quality, popularity, and
    /// ads, one of which is bot-heavy. Placed in the upper quality band.
    pub quality_twin_pairs: usize,
    pub tweets_per_source: u32,
    pub pages_per_source: u32,
    /// Per-source mean ad iframes per page is uniform in [0, this].
    pub ads_intensity_max: f64,
    pub entity_pool_size: usize,
    /// Breadth vocabulary per source: `base + scale * quality` entities.
    pub breadth_vocab_base: usize,
    pub breadth_vocab_scale: usize,
    pub parties_per_wing: usize,
    pub entities_per_party: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            source_count: 100,
            days: 30,
            seed: 42,
            quality_shape: 3.0,
            citation_preference_exponent: 2.0,
            articles_per_day_base: 0.5,
            articles_per_day_scale: 4.0,
            self_citations_per_article: 2.0,
            external_citations_per_article: 1.0,
            noise_links_per_article: 1.0,
            sentences_per_article: 4,
            bias_skew: 0.1,
            political_fraction: 1.0,
            bot_fraction_background: 0.02,
            bot_fraction_heavy: 0.9,
            quality_twin_pairs: 0,
            tweets_per_source: 40,
            pages_per_source: 6,
            ads_intensity_max: 4.0,
            entity_pool_size: 1_500,
            breadth_vocab_base: 20,
            breadth_vocab_scale: 180,
            parties_per_wing: 2,
            entities_per_party: 25,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("synth config: {msg}")))
            }
        };
        check(self.source_count >= 2, "source_count must be at least 2")?;
        check(self.days >= 1, "days must be at least 1")?;
        check(
            (0.0..=0.2).contains(&self.bias_skew),
            "bias_skew must be in [0, 0.2] to keep sentiment triples valid",
        )?;
        check(
            (0.0..=1.0).contains(&self.political_fraction),
            "political_fraction must be in [0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.bot_fraction_background),
            "bot_fraction_background must be in [0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.bot_fraction_heavy),
            "bot_fraction_heavy must be in [0, 1]",
        )?;
        check(
            self.quality_twin_pairs * 2 <= self.source_count,
            "quality_twin_pairs exceed the source count",
        )?;
        check(self.quality_shape > 0.0, "quality_shape must be positive")?;
        check(
            self.citation_preference_exponent >= 0.0,
            "citation_preference_exponent must be non-negative",
        )?;
        check(
            self.breadth_vocab_base + self.breadth_vocab_scale <= self.entity_pool_size,
            "breadth vocabulary cannot exceed the entity pool",
        )?;
        check(self.sentences_per_article >= 2, "need at least 2 sentences per article")?;
        check(self.parties_per_wing >= 1, "need at least one party per wing")?;
        check(self.entities_per_party >= 1, "need at least one entity per party")?;
        Ok(())
    }
}

/// Planted ground truth for one source.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSource {
    pub domain: String,
    pub quality: f64,
    pub lean: Lean,
    pub bot_fraction: f64,
    pub ads_mean: f64,
}

/// A fully generated corpus, in memory.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub sources: Vec<SourceRecord>,
    pub articles: Vec<ArticleRecord>,
    pub tweets: Vec<TweetRecord>,
    pub profiles: Vec<UserProfile>,
    pub pages: Vec<PageRecord>,
    pub dictionary: EntityPartyDictionary,
    pub dictionary_rows: Vec<(String, String, Wing)>,
    pub popularity: Vec<(String, NaiveDate, u32)>,
    pub bot_labels: Vec<(String, BotLabel)>,
    pub expert: ExpertRanking,
    pub truth: Vec<PlantedSource>,
}

struct SourceParams {
    domain: String,
    quality: f64,
    lean: Lean,
    bot_fraction: f64,
    ads_intensity: f64,
    popularity_rank: u32,
    article_count: u64,
    vocab: Vec<usize>,
    /// Index of the twin this source copies popularity/ads from.
    twin_of: Option<usize>,
}

const CORPUS_START: (i32, u32, u32) = (2021, 1, 1);

fn corpus_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(CORPUS_START.0, CORPUS_START.1, CORPUS_START.2).unwrap()
}

fn timestamp(day: u32, secs: u32) -> DateTime<Utc> {
    let date = corpus_start_date() + Days::new(day as u64);
    Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap()) + chrono::Duration::seconds(secs as i64)
}

fn poisson_count(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
}

fn human_profile(rng: &mut ChaCha8Rng, user_id: String) -> UserProfile {
    let followers = rng.random_range(100..=5_000u64);
    let followees = followers / rng.random_range(2..=10u64);
    UserProfile {
        user_id,
        follower_count: followers,
        followee_count: followees,
        verified: rng.random_bool(0.05),
        favourites_count: rng.random_range(10..=2_000),
        listed_count: rng.random_range(0..=50),
        description_length: rng.random_range(30..=200),
        geo_enabled: rng.random_bool(0.7),
        has_location: rng.random_bool(0.8),
        has_time_zone: rng.random_bool(0.6),
        default_profile: rng.random_bool(0.2),
        default_profile_image: rng.random_bool(0.05),
    }
}

fn bot_profile(rng: &mut ChaCha8Rng, user_id: String) -> UserProfile {
    let followers = rng.random_range(1..=50u64);
    let followees = followers * rng.random_range(10..=40u64);
    UserProfile {
        user_id,
        follower_count: followers,
        followee_count: followees,
        verified: false,
        favourites_count: rng.random_range(0..=20),
        listed_count: rng.random_range(0..=2),
        description_length: rng.random_range(0..=20),
        geo_enabled: rng.random_bool(0.05),
        has_location: rng.random_bool(0.1),
        has_time_zone: rng.random_bool(0.1),
        default_profile: rng.random_bool(0.85),
        default_profile_image: rng.random_bool(0.7),
    }
}

/// Profiles from the two planted feature regimes, labeled, interleaved.
/// Bots run followee/follower ratios of 10 and up, humans 0.5 and down,
/// so a linear separator exists.
pub fn separable_bot_profiles(n_per_class: usize, seed: u64) -> Vec<(UserProfile, BotLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_per_class);
    for k in 0..n_per_class {
        out.push((bot_profile(&mut rng, format!("bot_{k:05}")), BotLabel::Bot));
        out.push((
            human_profile(&mut rng, format!("human_{k:05}")),
            BotLabel::Human,
        ));
    }
    out
}

/// Generate the full synthetic ecosystem for `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.source_count;

    // Party dictionary.
    let mut dictionary = EntityPartyDictionary::new();
    let mut dictionary_rows = Vec::new();
    let mut parties: Vec<(String, Wing)> = Vec::new();
    for wing in [Wing::Left, Wing::Right] {
        let tag = match wing {
            Wing::Left => "left",
            _ => "right",
        };
        for j in 0..cfg.parties_per_wing {
            let party = format!("party_{tag}_{j}");
            for k in 0..cfg.entities_per_party {
                let entity = format!("{tag}{j}_member_{k:03}");
                dictionary.insert(&entity, party.clone(), wing);
                dictionary_rows.push((entity, party.clone(), wing));
            }
            parties.push((party, wing));
        }
    }
    let entity_pool: Vec<String> = (0..cfg.entity_pool_size)
        .map(|k| format!("topic_entity_{k:04}"))
        .collect();

    // Per-source planted parameters.
    let twin_start = n - 2 * cfg.quality_twin_pairs;
    let mut params: Vec<SourceParams> = Vec::with_capacity(n);
    for i in 0..n {
        let domain = format!("s{i:04}.example");
        let twin_of = if i >= twin_start && (i - twin_start) % 2 == 1 {
            Some(i - 1)
        } else {
            None
        };
        let (quality, lean, bot_fraction) = if let Some(a) = twin_of {
            // The flagged twin copies everything but its bot behavior.
            (params[a].quality, params[a].lean, cfg.bot_fraction_heavy)
        } else if i >= twin_start {
            // The clean twin of a pair sits in the upper quality band so
            // its consensus score stays positive.
            let q = 0.70 + 0.25 * rng.random::<f64>();
            let lean = planted_lean(&mut rng, cfg.political_fraction);
            (q, lean, 0.0)
        } else {
            let q = rng.random::<f64>().powf(cfg.quality_shape);
            let lean = planted_lean(&mut rng, cfg.political_fraction);
            (q, lean, cfg.bot_fraction_background)
        };
        let ads_intensity = match twin_of {
            Some(a) => params[a].ads_intensity,
            None => rng.random::<f64>() * cfg.ads_intensity_max,
        };
        let apd = cfg.articles_per_day_base + cfg.articles_per_day_scale * quality;
        let article_count = ((apd * cfg.days as f64).round() as u64).max(1);
        let vocab_size = cfg.breadth_vocab_base
            + (cfg.breadth_vocab_scale as f64 * quality).round() as usize;
        let vocab = rand::seq::index::sample(&mut rng, cfg.entity_pool_size, vocab_size).into_vec();
        params.push(SourceParams {
            domain,
            quality,
            lean,
            bot_fraction,
            ads_intensity,
            popularity_rank: 0,
            article_count,
            vocab,
            twin_of,
        });
    }

    // Reader popularity tracks quality with noise; twins share ranks.
    let mut by_quality: Vec<usize> = (0..n).collect();
    by_quality.sort_by(|&a, &b| {
        params[b]
            .quality
            .partial_cmp(&params[a].quality)
            .unwrap()
            .then(params[a].domain.cmp(&params[b].domain))
    });
    for (pos, &i) in by_quality.iter().enumerate() {
        let base = (pos as f64 + 0.5) / n as f64 * crate::signals::MAX_POPULARITY_RANK;
        let noise = 0.85 + 0.3 * rng.random::<f64>();
        params[i].popularity_rank =
            (base * noise).round().clamp(1.0, crate::signals::MAX_POPULARITY_RANK) as u32;
    }
    for i in 0..n {
        if let Some(a) = params[i].twin_of {
            params[i].popularity_rank = params[a].popularity_rank;
        }
    }

    // Citation preference weights.
    let pref_weights: Vec<f64> = params
        .iter()
        .map(|p| {
            if cfg.citation_preference_exponent == 0.0 {
                1.0
            } else {
                p.quality.powf(cfg.citation_preference_exponent)
            }
        })
        .collect();
    let cumulative: Vec<f64> = pref_weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let total_weight = *cumulative.last().unwrap();
    let mut pick_target = |rng: &mut ChaCha8Rng, exclude: usize| -> usize {
        for _ in 0..32 {
            let x = rng.random::<f64>() * total_weight;
            let idx = cumulative.partition_point(|&c| c <= x).min(n - 1);
            if idx != exclude {
                return idx;
            }
        }
        (exclude + 1) % n
    };

    // Articles.
    let mut articles = Vec::new();
    for i in 0..n {
        let domain = params[i].domain.clone();
        for k in 0..params[i].article_count {
            let day = rng.random_range(0..cfg.days);
            let secs = rng.random_range(0..86_400u32);
            let mut citation_urls = Vec::new();
            for _ in 0..poisson_count(&mut rng, cfg.self_citations_per_article) {
                citation_urls.push(format!(
                    "https://{domain}/archive/{}",
                    rng.random_range(0..1_000_000u32)
                ));
            }
            for _ in 0..poisson_count(&mut rng, cfg.external_citations_per_article) {
                let target = &params[pick_target(&mut rng, i)].domain;
                citation_urls.push(format!(
                    "https://{target}/story/{}",
                    rng.random_range(0..1_000_000u32)
                ));
            }
            let mut all_link_urls = citation_urls.clone();
            for _ in 0..poisson_count(&mut rng, cfg.noise_links_per_article) {
                let target = &params[rng.random_range(0..n)].domain;
                all_link_urls.push(format!(
                    "https://{target}/promo/{}",
                    rng.random_range(0..1_000_000u32)
                ));
            }

            let political = params[i].lean != Lean::None;
            let party_sentences = if political { 2 } else { 0 };
            let mut sentences = Vec::with_capacity(cfg.sentences_per_article as usize);
            for s in 0..cfg.sentences_per_article {
                if (s as usize) < party_sentences {
                    let (party_idx, wing) = {
                        let idx = rng.random_range(0..parties.len());
                        (idx, parties[idx].1)
                    };
                    let skew = match (params[i].lean, wing) {
                        (Lean::Left, Wing::Left) | (Lean::Right, Wing::Right) => cfg.bias_skew,
                        (Lean::Left, Wing::Right) | (Lean::Right, Wing::Left) => -cfg.bias_skew,
                        _ => 0.0,
                    };
                    let mentions = {
                        let count = rng.random_range(1..=2usize);
                        let (party, _) = &parties[party_idx];
                        let tag_j = party.trim_start_matches("party_").replace('_', "");
                        (0..count)
                            .map(|_| {
                                format!(
                                    "{tag_j}_member_{:03}",
                                    rng.random_range(0..cfg.entities_per_party)
                                )
                            })
                            .collect::<Vec<_>>()
                    };
                    sentences.push(SentenceAnnotation {
                        text: None,
                        sentiment: skewed_sentiment(&mut rng, skew),
                        entity_mentions: mentions,
                    });
                } else {
                    let count = rng.random_range(1..=2usize);
                    let mentions = (0..count)
                        .map(|_| {
                            let vi = params[i].vocab[rng.random_range(0..params[i].vocab.len())];
                            entity_pool[vi].clone()
                        })
                        .collect();
                    sentences.push(SentenceAnnotation {
                        text: None,
                        sentiment: skewed_sentiment(&mut rng, 0.0),
                        entity_mentions: mentions,
                    });
                }
            }

            articles.push(ArticleRecord {
                article_id: format!("{domain}-a{k:05}"),
                source_domain: domain.clone(),
                url: format!("https://{domain}/{k:05}"),
                published_at: timestamp(day, secs),
                sentences,
                citation_urls,
                all_link_urls,
            });
        }
    }

    // User pools and profiles.
    let human_count = 2 * n + 100;
    let bot_count = n + 50;
    let mut profiles = Vec::with_capacity(human_count + bot_count);
    let mut bot_labels = Vec::with_capacity(human_count + bot_count);
    for k in 0..human_count {
        let id = format!("human_{k:05}");
        profiles.push(human_profile(&mut rng, id.clone()));
        bot_labels.push((id, BotLabel::Human));
    }
    for k in 0..bot_count {
        let id = format!("bot_{k:05}");
        profiles.push(bot_profile(&mut rng, id.clone()));
        bot_labels.push((id, BotLabel::Bot));
    }

    // Tweets; author pool mixed by the source's planted bot fraction.
    let mut tweets = Vec::new();
    let mut tweet_no = 0u64;
    for p in &params {
        for _ in 0..cfg.tweets_per_source {
            let user_id = if rng.random_bool(p.bot_fraction) {
                format!("bot_{:05}", rng.random_range(0..bot_count))
            } else {
                format!("human_{:05}", rng.random_range(0..human_count))
            };
            tweets.push(TweetRecord {
                tweet_id: format!("t{tweet_no:08}"),
                user_id,
                posted_at: timestamp(rng.random_range(0..cfg.days), rng.random_range(0..86_400)),
                target_domains: vec![p.domain.clone()],
            });
            tweet_no += 1;
        }
    }

    // Stored HTML pages with planted ad iframes.
    let mut pages = Vec::new();
    for p in &params {
        for k in 0..cfg.pages_per_source {
            let ad_count = poisson_count(&mut rng, p.ads_intensity);
            pages.push(PageRecord {
                domain: p.domain.clone(),
                url: format!("https://{}/page/{k}", p.domain),
                html: render_page(&mut rng, &p.domain, ad_count),
            });
        }
    }

    // Popularity feed: one entry per day over the trailing 30-day window.
    let mut popularity = Vec::new();
    let window = cfg.days.min(30);
    for p in &params {
        for d in (cfg.days - window)..cfg.days {
            popularity.push((
                p.domain.clone(),
                corpus_start_date() + Days::new(d as u64),
                p.popularity_rank,
            ));
        }
    }

    let sources: Vec<SourceRecord> = params
        .iter()
        .map(|p| SourceRecord {
            domain: p.domain.clone(),
            country: "zz".to_string(),
            language: "en".to_string(),
            topic: if p.lean == Lean::None {
                crate::corpus::Topic::Entertainment
            } else {
                crate::corpus::Topic::General
            },
            is_political: p.lean != Lean::None,
        })
        .collect();

    let expert = ExpertRanking {
        name: "planted_quality".to_string(),
        topic: "general".to_string(),
        group: "all".to_string(),
        domains: by_quality
            .iter()
            .map(|&i| params[i].domain.clone())
            .collect(),
    };

    let truth: Vec<PlantedSource> = params
        .iter()
        .map(|p| PlantedSource {
            domain: p.domain.clone(),
            quality: p.quality,
            lean: p.lean,
            bot_fraction: p.bot_fraction,
            ads_mean: p.ads_intensity,
        })
        .collect();

    Ok(SynthCorpus {
        sources,
        articles,
        tweets,
        profiles,
        pages,
        dictionary,
        dictionary_rows,
        popularity,
        bot_labels,
        expert,
        truth,
    })
}

fn planted_lean(rng: &mut ChaCha8Rng, political_fraction: f64) -> Lean {
    if rng.random_bool(political_fraction) {
        if rng.random_bool(0.5) {
            Lean::Left
        } else {
            Lean::Right
        }
    } else {
        Lean::None
    }
}

/// Sentiment triple with positive and negative mass near 0.25 each, the
/// positive side shifted by `skew` and the negative by `-skew`.
fn skewed_sentiment(rng: &mut ChaCha8Rng, skew: f64) -> SentimentDistribution {
    let pos = 0.2 + 0.1 * rng.random::<f64>() + skew;
    let neg = 0.2 + 0.1 * rng.random::<f64>() - skew;
    SentimentDistribution::new(pos, 1.0 - pos - neg, neg)
}

fn render_page(rng: &mut ChaCha8Rng, domain: &str, ad_count: u64) -> String {
    let mut html = format!(
        "<html><head><title>{domain}</title></head><body><h1>headline</h1><p>body text</p>"
    );
    for k in 0..ad_count {
        html.push_str(&format!(
            r#"<iframe id="google_ads_iframe_{k}" src="https://securepubads.doubleclick.net/gampad/{}" width="300" height="250"></iframe>"#,
            rng.random_range(0..1_000_000u32)
        ));
    }
    // A couple of ordinary embeds that must not count as ads.
    html.push_str(r#"<iframe src="https://video-host.example/embed/1"></iframe>"#);
    html.push_str("</body></html>");
    html
}

/// File layout of a written corpus.
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub dir: PathBuf,
    pub sources: PathBuf,
    pub articles: PathBuf,
    pub tweets: PathBuf,
    pub profiles: PathBuf,
    pub pages: PathBuf,
    pub entity_parties: PathBuf,
    pub popularity: PathBuf,
    pub bot_labels: PathBuf,
    pub experts_dir: PathBuf,
    pub truth: PathBuf,
}

impl SynthPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref().to_path_buf();
        Self {
            sources: dir.join("sources.jsonl"),
            articles: dir.join("articles.jsonl"),
            tweets: dir.join("tweets.jsonl"),
            profiles: dir.join("profiles.jsonl"),
            pages: dir.join("pages.jsonl"),
            entity_parties: dir.join("entity_parties.tsv"),
            popularity: dir.join("popularity.csv"),
            bot_labels: dir.join("bot_labels.csv"),
            experts_dir: dir.join("experts"),
            truth: dir.join("truth.csv"),
            dir,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Write the corpus in the standard input formats, plus the planted-truth
/// table. Output bytes are a pure function of the corpus.
pub fn write_corpus(corpus: &SynthCorpus, dir: impl AsRef<Path>) -> Result<SynthPaths> {
    let paths = SynthPaths::in_dir(dir);
    std::fs::create_dir_all(&paths.dir).map_err(|e| Error::io(&paths.dir, e))?;
    std::fs::create_dir_all(&paths.experts_dir).map_err(|e| Error::io(&paths.experts_dir, e))?;

    write_jsonl(&paths.sources, corpus.sources.iter())?;
    write_jsonl(&paths.articles, corpus.articles.iter())?;
    write_jsonl(&paths.tweets, corpus.tweets.iter())?;
    write_jsonl(&paths.profiles, corpus.profiles.iter())?;
    write_jsonl(&paths.pages, corpus.pages.iter())?;

    let mut out = create(&paths.entity_parties)?;
    writeln!(out, "entity\tparty\twing").map_err(|e| Error::io(&paths.entity_parties, e))?;
    for (entity, party, wing) in &corpus.dictionary_rows {
        writeln!(out, "{entity}\t{party}\t{wing}").map_err(|e| Error::io(&paths.entity_parties, e))?;
    }
    out.flush().map_err(|e| Error::io(&paths.entity_parties, e))?;

    let mut out = create(&paths.popularity)?;
    writeln!(out, "domain,date,rank").map_err(|e| Error::io(&paths.popularity, e))?;
    for (domain, date, rank) in &corpus.popularity {
        writeln!(out, "{domain},{date},{rank}").map_err(|e| Error::io(&paths.popularity, e))?;
    }
    out.flush().map_err(|e| Error::io(&paths.popularity, e))?;

    let mut out = create(&paths.bot_labels)?;
    writeln!(out, "user_id,label").map_err(|e| Error::io(&paths.bot_labels, e))?;
    for (user, label) in &corpus.bot_labels {
        writeln!(out, "{user},{label}").map_err(|e| Error::io(&paths.bot_labels, e))?;
    }
    out.flush().map_err(|e| Error::io(&paths.bot_labels, e))?;

    let expert_path = paths.experts_dir.join(format!("{}.csv", corpus.expert.name));
    let mut out = create(&expert_path)?;
    writeln!(out, "rank,domain").map_err(|e| Error::io(&expert_path, e))?;
    for (i, domain) in corpus.expert.domains.iter().enumerate() {
        writeln!(out, "{},{domain}", i + 1).map_err(|e| Error::io(&expert_path, e))?;
    }
    out.flush().map_err(|e| Error::io(&expert_path, e))?;

    let mut out = create(&paths.truth)?;
    writeln!(out, "domain,quality,lean,bot_fraction,ads_mean")
        .map_err(|e| Error::io(&paths.truth, e))?;
    for t in &corpus.truth {
        writeln!(
            out,
            "{},{},{},{},{}",
            t.domain, t.quality, t.lean, t.bot_fraction, t.ads_mean
        )
        .map_err(|e| Error::io(&paths.truth, e))?;
    }
    out.flush().map_err(|e| Error::io(&paths.truth, e))?;

    Ok(paths)
}

/// Load the planted-truth table back from `truth.csv`.
pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<PlantedSource>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (no, line) in content.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let record_err = |reason: String| Error::Record {
            path: path.to_path_buf(),
            line: no + 1,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(record_err(format!("expected 5 fields, got {}", fields.len())));
        }
        rows.push(PlantedSource {
            domain: fields[0].to_string(),
            quality: fields[1].parse().map_err(|e| record_err(format!("quality: {e}")))?,
            lean: fields[2].parse().map_err(record_err)?,
            bot_fraction: fields[3]
                .parse()
                .map_err(|e| record_err(format!("bot_fraction: {e}")))?,
            ads_mean: fields[4]
                .parse()
                .map_err(|e| record_err(format!("ads_mean: {e}")))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ValidateRecord;

    fn small_cfg() -> SynthConfig {
        SynthConfig {
            source_count: 20,
            days: 5,
            seed: 42,
            tweets_per_source: 10,
            pages_per_source: 2,
            entity_pool_size: 120,
            breadth_vocab_base: 5,
            breadth_vocab_scale: 40,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let a = generate(&small_cfg()).unwrap();
        let b = generate(&small_cfg()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let pa = write_corpus(&a, dir.path().join("a")).unwrap();
        let pb = write_corpus(&b, dir.path().join("b")).unwrap();
        for (x, y) in [
            (&pa.sources, &pb.sources),
            (&pa.articles, &pb.articles),
            (&pa.tweets, &pb.tweets),
            (&pa.profiles, &pb.profiles),
            (&pa.pages, &pb.pages),
            (&pa.entity_parties, &pb.entity_parties),
            (&pa.popularity, &pb.popularity),
            (&pa.bot_labels, &pb.bot_labels),
            (&pa.truth, &pb.truth),
        ] {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate(&small_cfg()).unwrap();
        let mut cfg = small_cfg();
        cfg.seed = 43;
        let b = generate(&cfg).unwrap();
        assert_ne!(
            a.articles.first().map(|x| &x.article_id),
            b.articles.first().map(|x| &x.article_id),
        );
        // Same ids but different content is also a difference; check one.
        assert_ne!(a.truth[0].quality, b.truth[0].quality);
    }

    #[test]
    fn every_generated_record_validates() {
        let corpus = generate(&small_cfg()).unwrap();
        for a in &corpus.articles {
            a.validate().unwrap();
        }
        for t in &corpus.tweets {
            t.validate().unwrap();
        }
        for p in &corpus.profiles {
            p.validate().unwrap();
        }
        for s in &corpus.sources {
            s.validate().unwrap();
        }
        for p in &corpus.pages {
            p.validate().unwrap();
        }
    }

    #[test]
    fn invalid_fractions_are_config_errors() {
        let mut cfg = small_cfg();
        cfg.bot_fraction_background = 1.5;
        assert!(generate(&cfg).is_err());
        let mut cfg = small_cfg();
        cfg.bias_skew = 0.5;
        assert!(generate(&cfg).is_err());
        let mut cfg = small_cfg();
        cfg.source_count = 1;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn twins_share_everything_but_bots() {
        let mut cfg = small_cfg();
        cfg.quality_twin_pairs = 3;
        let corpus = generate(&cfg).unwrap();
        let truth: BTreeMap<&str, &PlantedSource> = corpus
            .truth
            .iter()
            .map(|t| (t.domain.as_str(), t))
            .collect();
        for pair in 0..3 {
            let a = format!("s{:04}.example", 14 + 2 * pair);
            let b = format!("s{:04}.example", 15 + 2 * pair);
            let (ta, tb) = (truth[a.as_str()], truth[b.as_str()]);
            assert_eq!(ta.quality, tb.quality);
            assert_eq!(ta.lean, tb.lean);
            assert_eq!(ta.ads_mean, tb.ads_mean);
            assert_eq!(ta.bot_fraction, 0.0);
            assert_eq!(tb.bot_fraction, cfg.bot_fraction_heavy);
            assert!(ta.quality >= 0.70);
        }
    }

    #[test]
    fn party_mentions_resolve_in_the_dictionary() {
        let corpus = generate(&small_cfg()).unwrap();
        let mut party_mentions = 0u64;
        for a in &corpus.articles {
            for s in &a.sentences {
                for m in &s.entity_mentions {
                    if corpus.dictionary.party_of(m).is_some() {
                        party_mentions += 1;
                    }
                }
            }
        }
        assert!(party_mentions > 0, "no party mentions generated");
    }

    #[test]
    fn citation_preference_favors_quality() {
        let mut cfg = small_cfg();
        cfg.source_count = 100;
        cfg.days = 10;
        let corpus = generate(&cfg).unwrap();
        let rules = crate::corpus::DomainRules::new();
        let graph = crate::citegraph::build_graph(
            corpus.articles.iter(),
            crate::citegraph::LinkScope::ArticleCitations,
            &rules,
        );
        let mut in_weight: BTreeMap<String, u64> = BTreeMap::new();
        for (_, dst, w) in graph.edges() {
            *in_weight.entry(dst.to_string()).or_insert(0) += w;
        }
        let qualities: Vec<f64> = corpus.truth.iter().map(|t| t.quality).collect();
        let indegrees: Vec<f64> = corpus
            .truth
            .iter()
            .map(|t| in_weight.get(&t.domain).copied().unwrap_or(0) as f64)
            .collect();
        let s = crate::evalkit::spearman(&qualities, &indegrees)
            .unwrap()
            .unwrap();
        assert!(s.rho > 0.5, "in-degree does not track quality: {}", s.rho);
    }

    #[test]
    fn zero_exponent_spreads_citations_uniformly() {
        let mut cfg = small_cfg();
        cfg.source_count = 50;
        cfg.days = 20;
        cfg.citation_preference_exponent = 0.0;
        let corpus = generate(&cfg).unwrap();
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for t in &corpus.truth {
            counts.insert(&t.domain, 0);
        }
        let rules = crate::corpus::DomainRules::new();
        for a in &corpus.articles {
            for url in &a.citation_urls {
                let d = crate::corpus::canonical_domain(url, &rules).unwrap();
                if d != a.source_domain {
                    *counts.get_mut(d.as_str()).unwrap() += 1;
                }
            }
        }
        let total: u64 = counts.values().sum();
        let expected = total as f64 / counts.len() as f64;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // Chi-square test against the uniform distribution.
        let dist =
            statrs::distribution::ChiSquared::new((counts.len() - 1) as f64).unwrap();
        use statrs::distribution::ContinuousCDF;
        let p = 1.0 - dist.cdf(chi2);
        assert!(p > 0.01, "chi2 = {chi2}, p = {p}");
    }

    #[test]
    fn truth_roundtrips_through_csv() {
        let corpus = generate(&small_cfg()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(&corpus, dir.path()).unwrap();
        let truth = read_truth(&paths.truth).unwrap();
        assert_eq!(truth, corpus.truth);
    }

    #[test]
    fn popularity_feed_covers_the_window() {
        let corpus = generate(&small_cfg()).unwrap();
        // 5 corpus days -> 5 feed entries per source.
        let per_source = corpus.popularity.len() / 20;
        assert_eq!(per_source, 5);
    }
}
