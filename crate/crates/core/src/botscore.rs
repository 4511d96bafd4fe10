//! Social-bot scoring: profile feature extraction, a logistic-regression
//! classifier trained by gradient descent, per-user scores, and tweet-
//! weighted per-source aggregation.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use crate::corpus::BotLabel;
use crate::corpus::UserProfile;
use crate::{Error, Result};

pub const FEATURE_COUNT: usize = 14;

/// Feature names in vector order, for reports and the model file.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "follower_count",
    "followee_count",
    "followee_follower_ratio",
    "log_max_count",
    "ratio_times_log",
    "verified",
    "favourites_count",
    "listed_count",
    "description_length",
    "geo_enabled",
    "has_location",
    "has_time_zone",
    "default_profile",
    "default_profile_image",
];

/// The per-user profile feature vector. Ratios and logs are guarded so
/// every entry is finite for any valid profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BotFeatureVector(pub [f64; FEATURE_COUNT]);

/// Deterministic feature extraction from a profile. Guards:
/// `ratio = c_ee / max(c_er, 1)` and `log_max = ln(max(c_er, c_ee, 1))`.
pub fn extract_features(p: &UserProfile) -> BotFeatureVector {
    let c_er = p.follower_count as f64;
    let c_ee = p.followee_count as f64;
    let ratio = c_ee / c_er.max(1.0);
    let log_max = c_er.max(c_ee).max(1.0).ln();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    BotFeatureVector([
        c_er,
        c_ee,
        ratio,
        log_max,
        ratio * log_max,
        flag(p.verified),
        p.favourites_count as f64,
        p.listed_count as f64,
        p.description_length as f64,
        flag(p.geo_enabled),
        flag(p.has_location),
        flag(p.has_time_zone),
        flag(p.default_profile),
        flag(p.default_profile_image),
    ])
}

/// Gradient-descent training parameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the epoch-over-epoch loss change drops below this.
    pub loss_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_epochs: 2_000,
            loss_tol: 1e-8,
        }
    }
}

/// Logistic-regression bot classifier: z-score standardization statistics
/// from the training set plus one weight per feature and an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct BotModel {
    pub means: [f64; FEATURE_COUNT],
    pub stds: [f64; FEATURE_COUNT],
    pub weights: [f64; FEATURE_COUNT],
    pub intercept: f64,
}

impl BotModel {
    /// Bot probability for a feature vector, in [0, 1].
    pub fn score(&self, v: &BotFeatureVector) -> f64 {
        let mut z = self.intercept;
        for i in 0..FEATURE_COUNT {
            z += self.weights[i] * (v.0[i] - self.means[i]) / self.stds[i];
        }
        sigmoid(z)
    }

    pub fn score_profile(&self, p: &UserProfile) -> f64 {
        self.score(&extract_features(p))
    }

    /// Flat text format: one `name value...` line per section. Floats are
    /// written in shortest round-trip form, so save/load is lossless.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = File::create(path).map_err(|e| Error::io(path, e))?;
        let join = |xs: &[f64]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(out, "features {}", FEATURE_COUNT)
            .and_then(|_| writeln!(out, "mean {}", join(&self.means)))
            .and_then(|_| writeln!(out, "std {}", join(&self.stds)))
            .and_then(|_| writeln!(out, "weight {}", join(&self.weights)))
            .and_then(|_| writeln!(out, "intercept {}", self.intercept))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut means = None;
        let mut stds = None;
        let mut weights = None;
        let mut intercept = None;
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let parse_row = |parts: std::str::SplitWhitespace| -> std::result::Result<[f64; FEATURE_COUNT], String> {
                let vals: Vec<f64> = parts
                    .map(|t| t.parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?;
                vals.try_into()
                    .map_err(|v: Vec<f64>| format!("expected {FEATURE_COUNT} values, got {}", v.len()))
            };
            let record_err = |reason: String| Error::Record {
                path: path.to_path_buf(),
                line: no + 1,
                reason,
            };
            match key {
                "features" | "" => {}
                "mean" => means = Some(parse_row(parts).map_err(record_err)?),
                "std" => stds = Some(parse_row(parts).map_err(record_err)?),
                "weight" => weights = Some(parse_row(parts).map_err(record_err)?),
                "intercept" => {
                    let v = parts
                        .next()
                        .ok_or_else(|| record_err("missing intercept value".into()))?;
                    intercept = Some(v.parse::<f64>().map_err(|e| record_err(e.to_string()))?);
                }
                other => return Err(record_err(format!("unknown model line {other:?}"))),
            }
        }
        match (means, stds, weights, intercept) {
            (Some(means), Some(stds), Some(weights), Some(intercept)) => Ok(Self {
                means,
                stds,
                weights,
                intercept,
            }),
            _ => Err(Error::Record {
                path: path.to_path_buf(),
                line: 0,
                reason: "incomplete model file".to_string(),
            }),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A finished training run: the model plus the per-epoch loss trace.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: BotModel,
    pub epochs: usize,
    pub losses: Vec<f64>,
}

fn standardize_stats(data: &[(BotFeatureVector, BotLabel)]) -> ([f64; FEATURE_COUNT], [f64; FEATURE_COUNT]) {
    let n = data.len() as f64;
    let mut means = [0.0; FEATURE_COUNT];
    for (v, _) in data {
        for i in 0..FEATURE_COUNT {
            means[i] += v.0[i];
        }
    }
    for m in means.iter_mut() {
        *m /= n;
    }
    let mut stds = [0.0; FEATURE_COUNT];
    for (v, _) in data {
        for i in 0..FEATURE_COUNT {
            stds[i] += (v.0[i] - means[i]).powi(2);
        }
    }
    for s in stds.iter_mut() {
        *s = (*s / n).sqrt();
        // Constant features carry no signal; a unit divisor keeps them
        // finite and their weight at zero.
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    (means, stds)
}

fn mean_log_loss(xs: &[Vec<f64>], ys: &[f64], weights: &[f64], intercept: f64) -> f64 {
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z: f64 = intercept + x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        // Numerically stable: log(1 + e^z) - y*z.
        let log1pexp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        loss += log1pexp - y * z;
    }
    loss / xs.len() as f64
}

/// Fit the logistic-regression baseline by full-batch gradient descent.
/// The step is backtracked (halved) whenever it would increase the loss,
/// so the recorded loss trace is non-increasing. Training fails unless
/// both classes are present.
pub fn train(data: &[(BotFeatureVector, BotLabel)], cfg: &TrainConfig) -> Result<TrainRun> {
    if data.is_empty() {
        return Err(Error::Training("empty training set".to_string()));
    }
    let bots = data.iter().filter(|(_, l)| *l == BotLabel::Bot).count();
    if bots == 0 || bots == data.len() {
        return Err(Error::Training(
            "training set must contain both classes".to_string(),
        ));
    }

    let (means, stds) = standardize_stats(data);
    let xs: Vec<Vec<f64>> = data
        .iter()
        .map(|(v, _)| {
            (0..FEATURE_COUNT)
                .map(|i| (v.0[i] - means[i]) / stds[i])
                .collect()
        })
        .collect();
    let ys: Vec<f64> = data
        .iter()
        .map(|(_, l)| if *l == BotLabel::Bot { 1.0 } else { 0.0 })
        .collect();

    let n = xs.len() as f64;
    let mut weights = vec![0.0; FEATURE_COUNT];
    let mut intercept = 0.0;
    let mut lr = cfg.learning_rate;
    let mut loss = mean_log_loss(&xs, &ys, &weights, intercept);
    let mut losses = vec![loss];
    let mut epochs = 0;

    for _ in 0..cfg.max_epochs {
        epochs += 1;
        let mut grad_w = vec![0.0; FEATURE_COUNT];
        let mut grad_b = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let z: f64 = intercept + x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>();
            let err = sigmoid(z) - y;
            for (g, xi) in grad_w.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad_b += err;
        }
        for g in grad_w.iter_mut() {
            *g /= n;
        }
        grad_b /= n;

        // Backtracking line search on the fixed descent direction.
        let mut stepped = false;
        for _ in 0..30 {
            let cand_w: Vec<f64> = weights
                .iter()
                .zip(&grad_w)
                .map(|(w, g)| w - lr * g)
                .collect();
            let cand_b = intercept - lr * grad_b;
            let cand_loss = mean_log_loss(&xs, &ys, &cand_w, cand_b);
            if cand_loss <= loss {
                weights = cand_w;
                intercept = cand_b;
                loss = cand_loss;
                stepped = true;
                break;
            }
            lr *= 0.5;
        }
        losses.push(loss);
        if !stepped {
            break;
        }
        let prev = losses[losses.len() - 2];
        if (prev - loss).abs() < cfg.loss_tol {
            break;
        }
    }

    let model = BotModel {
        means,
        stds,
        weights: weights.try_into().expect("feature count fixed"),
        intercept,
    };
    Ok(TrainRun {
        model,
        epochs,
        losses,
    })
}

/// Combine the scores of two models for the same user: the larger wins.
pub fn combine_scores(a: f64, b: f64) -> f64 {
    a.max(b)
}

/// Deterministic shuffled split into train/tune/test fractions
/// (0.7 / 0.1 / 0.2 of the input, in that order).
pub fn split_train_tune_test<T: Clone>(
    data: &[T],
    seed: u64,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut shuffled: Vec<T> = data.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let n = shuffled.len();
    let train_end = (n as f64 * 0.7).round() as usize;
    let tune_end = (n as f64 * 0.8).round() as usize;
    let test = shuffled.split_off(tune_end.min(n));
    let tune = shuffled.split_off(train_end.min(tune_end));
    (shuffled, tune, test)
}

/// Downsample the majority class so both classes have equal counts.
pub fn balance_classes(
    data: &[(BotFeatureVector, BotLabel)],
    seed: u64,
) -> Vec<(BotFeatureVector, BotLabel)> {
    let mut bots: Vec<_> = data.iter().filter(|(_, l)| *l == BotLabel::Bot).cloned().collect();
    let mut humans: Vec<_> = data
        .iter()
        .filter(|(_, l)| *l == BotLabel::Human)
        .cloned()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bots.shuffle(&mut rng);
    humans.shuffle(&mut rng);
    let k = bots.len().min(humans.len());
    bots.truncate(k);
    humans.truncate(k);
    let mut out = bots;
    out.extend(humans);
    out.shuffle(&mut rng);
    out
}

/// Precision/recall/F1 with `Bot` as the positive class, at a 0.5
/// decision threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

pub fn evaluate(model: &BotModel, data: &[(BotFeatureVector, BotLabel)]) -> ClassMetrics {
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut tn = 0u64;
    let mut fne = 0u64;
    for (v, label) in data {
        let predicted_bot = model.score(v) >= 0.5;
        match (predicted_bot, label) {
            (true, BotLabel::Bot) => tp += 1,
            (true, BotLabel::Human) => fp += 1,
            (false, BotLabel::Human) => tn += 1,
            (false, BotLabel::Bot) => fne += 1,
        }
    }
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fne > 0 { tp as f64 / (tp + fne) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let accuracy = (tp + tn) as f64 / data.len().max(1) as f64;
    ClassMetrics {
        precision,
        recall,
        f1,
        accuracy,
    }
}

/// Tweet-weighted bot score of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBotScore {
    pub domain: String,
    pub score: f64,
    pub tweet_count: u64,
    pub distinct_user_count: u64,
}

/// Mean user bot score over a source's tweets. Every tweet counts once,
/// so prolific users weigh more than one-off posters. A source with no
/// scored tweets stays unscored (`None` is not a zero score).
pub fn source_bot_score<'a>(
    domain: impl Into<String>,
    tweet_users: impl IntoIterator<Item = &'a str>,
    user_scores: &std::collections::BTreeMap<String, f64>,
) -> Option<SourceBotScore> {
    let mut sum = 0.0;
    let mut tweets = 0u64;
    let mut users = std::collections::BTreeSet::new();
    for user in tweet_users {
        if let Some(score) = user_scores.get(user) {
            sum += score;
            tweets += 1;
            users.insert(user);
        }
    }
    (tweets > 0).then(|| SourceBotScore {
        domain: domain.into(),
        score: sum / tweets as f64,
        tweet_count: tweets,
        distinct_user_count: users.len() as u64,
    })
}
