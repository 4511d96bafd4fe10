//! Consensus scoring and the final ordered ranking with per-signal rank
//! percentiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::signals::SignalVector;
use crate::{Error, Result};

/// Weights for the four continuous signals plus the penalty factor applied
/// once per set flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingConfig {
    /// `[w_r, w_p, w_e, w_b]`. Signs encode each signal's direction:
    /// reputation and breadth help, popularity rank and bias hurt.
    pub weights: [f64; 4],
    /// Multiplicative penalty per set flag, in (0, 1].
    pub penalty: f64,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            weights: [1.65, -0.35, 0.05, -0.10],
            penalty: 0.95,
        }
    }
}

impl RankingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0 && self.penalty <= 1.0) {
            return Err(Error::Config(format!(
                "ranking penalty must be in (0, 1], got {}",
                self.penalty
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("ranking weights must be finite".to_string()));
        }
        Ok(())
    }
}

/// Consensus score: the weighted sum of the four continuous signals,
/// multiplied by the penalty factor once per set flag.
pub fn consensus_score(v: &SignalVector, cfg: &RankingConfig) -> f64 {
    let [w_r, w_p, w_e, w_b] = cfg.weights;
    let base = w_r * v.f_r + w_p * v.f_p + w_e * v.f_e + w_b * v.f_b;
    let flags = v.f_s as u32 + v.f_a as u32;
    base * cfg.penalty.powi(flags as i32)
}

/// Rank percentiles of the six signals, each in (0, 1]; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalPercentiles {
    pub f_r: f64,
    pub f_p: f64,
    pub f_e: f64,
    pub f_b: f64,
    pub f_s: f64,
    pub f_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSource {
    /// 1-based, consecutive.
    pub rank: usize,
    pub domain: String,
    pub score: f64,
    pub percentiles: SignalPercentiles,
}

#[derive(Debug, Clone, Default)]
pub struct RankingResult {
    pub entries: Vec<RankedSource>,
}

impl RankingResult {
    pub fn domains(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.domain.clone()).collect()
    }

    pub fn rank_of(&self, domain: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.domain == domain)
            .map(|e| e.rank)
    }
}

/// Fraction of the population scoring at least as well on a signal,
/// including the source itself; ties share a percentile. `better` says
/// whether larger values are better for this signal.
fn percentile_of(values: &[f64], v: f64, better_is_larger: bool) -> f64 {
    let at_least_as_good = values
        .iter()
        .filter(|&&x| if better_is_larger { x >= v } else { x <= v })
        .count();
    at_least_as_good as f64 / values.len() as f64
}

/// Order all sources by consensus score, descending, ties broken by
/// ascending domain. Unscored bot/ads raw values count as zero signal for
/// the percentile strips.
pub fn rank_all(
    vectors: &BTreeMap<String, SignalVector>,
    cfg: &RankingConfig,
) -> Result<RankingResult> {
    cfg.validate()?;
    if vectors.is_empty() {
        return Ok(RankingResult::default());
    }

    let col = |f: fn(&SignalVector) -> f64| -> Vec<f64> { vectors.values().map(f).collect() };
    let f_r: Vec<f64> = col(|v| v.f_r);
    let f_p: Vec<f64> = col(|v| v.f_p);
    let f_e: Vec<f64> = col(|v| v.f_e);
    let f_b: Vec<f64> = col(|v| v.f_b);
    let bot: Vec<f64> = col(|v| v.raw_bot.unwrap_or(0.0));
    let ads: Vec<f64> = col(|v| v.raw_ads.unwrap_or(0.0));

    let mut scored: Vec<(String, f64, SignalPercentiles)> = vectors
        .values()
        .map(|v| {
            let pct = SignalPercentiles {
                f_r: percentile_of(&f_r, v.f_r, true),
                f_p: percentile_of(&f_p, v.f_p, false),
                f_e: percentile_of(&f_e, v.f_e, true),
                f_b: percentile_of(&f_b, v.f_b, false),
                f_s: percentile_of(&bot, v.raw_bot.unwrap_or(0.0), false),
                f_a: percentile_of(&ads, v.raw_ads.unwrap_or(0.0), false),
            };
            (v.domain.clone(), consensus_score(v, cfg), pct)
        })
        .collect();

    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });

    Ok(RankingResult {
        entries: scored
            .into_iter()
            .enumerate()
            .map(|(i, (domain, score, percentiles))| RankedSource {
                rank: i + 1,
                domain,
                score,
                percentiles,
            })
            .collect(),
    })
}
