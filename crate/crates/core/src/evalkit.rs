//! Ranking evaluation: Spearman correlation with significance, stratified
//! sampling over rank tiers, reciprocal-rank quality scores, bias-label
//! accuracy, and comparison against external expert rankings.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{ExpertRanking, Lean};
use crate::{Error, Result};

/// Sample sizes where the p-value switches from the exact permutation
/// distribution to the t approximation. At tiny n the t curve is off by
/// more than a percentage point, which matters for significance calls.
const EXACT_PERMUTATION_MAX_N: usize = 8;

/// A Spearman rank correlation with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    pub p_value: f64,
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn t_approx_p_value(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Exact two-sided permutation p-value: the fraction of rank assignments
/// whose |rho| reaches the observed one. Feasible for n ≤ 8 (8! = 40320).
fn exact_permutation_p_value(rx: &[f64], ry: &[f64], observed: f64) -> f64 {
    let n = rx.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut hits = 0u64;
    let mut total = 0u64;
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; n];
    let mut count_perm = |perm: &[usize]| {
        let permuted: Vec<f64> = perm.iter().map(|&i| ry[i]).collect();
        if let Some(r) = pearson(rx, &permuted) {
            if r.abs() >= observed.abs() - 1e-12 {
                hits += 1;
            }
        }
        total += 1;
    };
    count_perm(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            count_perm(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

/// Spearman rank correlation with a two-sided p-value. Ties get average
/// ranks. `Ok(None)` means a zero-rank-variance input, where the
/// coefficient is undefined. Perfect correlations pin the p-value to 0;
/// otherwise n ≤ 8 uses the exact permutation distribution and larger n
/// the t approximation with n−2 degrees of freedom.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Option<Spearman>> {
    if xs.len() != ys.len() {
        return Err(Error::Evaluation(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Evaluation(format!(
            "need at least 3 observations, got {}",
            xs.len()
        )));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let Some(rho) = pearson(&rx, &ry) else {
        return Ok(None);
    };
    let p_value = if rho.abs() >= 1.0 - 1e-12 {
        0.0
    } else if xs.len() <= EXACT_PERMUTATION_MAX_N {
        exact_permutation_p_value(&rx, &ry, rho)
    } else {
        t_approx_p_value(rho, xs.len())
    };
    Ok(Some(Spearman { rho, p_value }))
}

pub const DEFAULT_SAMPLE_BOUNDARIES: [usize; 5] = [100, 400, 1_600, 6_400, 25_600];
pub const DEFAULT_SAMPLE_PER_TIER: usize = 100;

/// One band of a stratified sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBand {
    /// Rank range `[lo, hi]`, 1-based inclusive.
    pub lo: usize,
    pub hi: usize,
    pub available: usize,
    pub taken: usize,
}

#[derive(Debug, Clone, Default)]
pub struct StratifiedSample {
    /// Sampled domains in rank order.
    pub domains: Vec<String>,
    pub bands: Vec<SampleBand>,
    /// True when some band held fewer than the requested sample size and
    /// was taken whole.
    pub truncated: bool,
}

/// Uniform sample without replacement of `per_tier` domains from each rank
/// band. Bands are `[1, b1], (b1, b2], …, (b_last, m]`. Deterministic for
/// a fixed seed.
pub fn stratified_sample(
    ranking: &[String],
    boundaries: &[usize],
    per_tier: usize,
    seed: u64,
) -> Result<StratifiedSample> {
    if boundaries.is_empty() || boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "sample boundaries must be non-empty and strictly increasing".to_string(),
        ));
    }
    if per_tier == 0 {
        return Err(Error::Config("per_tier must be positive".to_string()));
    }
    let m = ranking.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = StratifiedSample::default();
    let mut lo = 1usize;
    for hi in boundaries.iter().copied().chain([m]) {
        let hi = hi.min(m);
        if lo > hi {
            break;
        }
        let band = &ranking[lo - 1..hi];
        let take = per_tier.min(band.len());
        if take < per_tier {
            out.truncated = true;
        }
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, band.len(), take).into_vec();
        picked.sort_unstable();
        out.domains.extend(picked.iter().map(|&i| band[i].clone()));
        out.bands.push(SampleBand {
            lo,
            hi,
            available: band.len(),
            taken: take,
        });
        lo = hi + 1;
    }
    Ok(out)
}

/// Reciprocal-rank quality of a source set against a reference ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityResult {
    /// Raw score: sum of reciprocal ranks of the members.
    pub q: f64,
    /// Normalized to [0, 1]: 1 when the members fill the top ranks, 0 when
    /// they fill the bottom.
    pub q_n: f64,
    pub used: usize,
    /// Members not present in the ranking, excluded from the score.
    pub excluded: Vec<String>,
}

fn harmonic_range(lo: usize, hi: usize) -> f64 {
    (lo..=hi).map(|r| 1.0 / r as f64).sum()
}

/// Quality of `members` against `ranking`. Members missing from the
/// ranking are excluded and reported; an empty or fully-excluded set is
/// an error.
pub fn quality(members: &[String], ranking: &[String]) -> Result<QualityResult> {
    if members.is_empty() {
        return Err(Error::Evaluation("empty member set".to_string()));
    }
    let rank_of: BTreeMap<&str, usize> = ranking
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i + 1))
        .collect();
    let mut q = 0.0;
    let mut used = 0usize;
    let mut excluded = Vec::new();
    for member in members {
        match rank_of.get(member.as_str()) {
            Some(&rank) => {
                q += 1.0 / rank as f64;
                used += 1;
            }
            None => excluded.push(member.clone()),
        }
    }
    if used == 0 {
        return Err(Error::Evaluation(
            "no member of the set appears in the ranking".to_string(),
        ));
    }
    let m = ranking.len();
    let q_max = harmonic_range(1, used);
    let q_min = harmonic_range(m - used + 1, m);
    let denom = q_max - q_min;
    // used == m makes top and bottom coincide; the set is trivially both.
    let q_n = if denom > 0.0 { (q - q_min) / denom } else { 1.0 };
    Ok(QualityResult {
        q,
        q_n,
        used,
        excluded,
    })
}

/// Fraction of labeled sources whose predicted lean matches. A `None`
/// prediction counts as wrong; labeled sources with no prediction entry
/// at all are outside the denominator.
pub fn bias_accuracy(
    predicted: &BTreeMap<String, Lean>,
    labels: &BTreeMap<String, Lean>,
) -> Result<f64> {
    let mut total = 0u64;
    let mut correct = 0u64;
    for (domain, label) in labels {
        if let Some(p) = predicted.get(domain) {
            total += 1;
            if p == label {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Evaluation(
            "no overlap between predictions and labels".to_string(),
        ));
    }
    Ok(correct as f64 / total as f64)
}

/// Comparison of the internal ranking against one expert list.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub name: String,
    pub topic: String,
    pub group: String,
    /// Expert domains also present in the internal ranking.
    pub common: usize,
    pub total: usize,
    /// Undefined below 3 common domains or at zero rank variance.
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    /// Normalized quality of the common expert set; `None` when nothing
    /// overlaps.
    pub quality: Option<f64>,
}

/// Restrict to the common domains, correlate expert position against
/// internal rank, and score the expert set's quality against the full
/// internal ranking.
pub fn compare_external(internal: &[String], expert: &ExpertRanking) -> ComparisonReport {
    let rank_of: BTreeMap<&str, usize> = internal
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i + 1))
        .collect();
    let mut expert_pos = Vec::new();
    let mut internal_rank = Vec::new();
    let mut common_domains = Vec::new();
    for (pos, domain) in expert.domains.iter().enumerate() {
        if let Some(&rank) = rank_of.get(domain.as_str()) {
            expert_pos.push((pos + 1) as f64);
            internal_rank.push(rank as f64);
            common_domains.push(domain.clone());
        }
    }
    let correlation = if expert_pos.len() >= 3 {
        spearman(&expert_pos, &internal_rank).ok().flatten()
    } else {
        None
    };
    let quality_score = quality(&common_domains, internal).ok().map(|q| q.q_n);
    ComparisonReport {
        name: expert.name.clone(),
        topic: expert.topic.clone(),
        group: expert.group.clone(),
        common: common_domains.len(),
        total: expert.domains.len(),
        rho: correlation.map(|s| s.rho),
        p_value: correlation.map(|s| s.p_value),
        quality: quality_score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_and_reversed_orderings() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let s = spearman(&xs, &xs).unwrap().unwrap();
        assert_eq!(s.rho, 1.0);
        assert_eq!(s.p_value, 0.0);

        let ys: Vec<f64> = xs.iter().rev().copied().collect();
        let s = spearman(&xs, &ys).unwrap().unwrap();
        assert_eq!(s.rho, -1.0);
        assert_eq!(s.p_value, 0.0);
    }

    #[test]
    fn monotone_transform_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let xs: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
            let ys: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
            let base = spearman(&xs, &ys).unwrap().unwrap();
            let xs2: Vec<f64> = xs.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            let ys2: Vec<f64> = ys.iter().map(|y| y.powi(3)).collect();
            let trans = spearman(&xs2, &ys2).unwrap().unwrap();
            assert!((base.rho - trans.rho).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_share_average_ranks() {
        let ranks = average_ranks(&[10.0, 20.0, 20.0, 30.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn degenerate_variance_is_undefined() {
        let xs = vec![1.0, 1.0, 1.0, 1.0];
        let ys = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&xs, &ys).unwrap(), None);
    }

    #[test]
    fn bad_shapes_error() {
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn small_n_p_values_match_the_permutation_distribution() {
        // Independent check of the small-n path: direct enumeration via
        // recursive permutations rather than Heap's algorithm.
        fn brute_p(rx: &[f64], ry: &[f64], observed: f64) -> f64 {
            fn permutations(v: &mut Vec<f64>, k: usize, out: &mut Vec<Vec<f64>>) {
                if k == v.len() {
                    out.push(v.clone());
                    return;
                }
                for i in k..v.len() {
                    v.swap(k, i);
                    permutations(v, k + 1, out);
                    v.swap(k, i);
                }
            }
            let mut perms = Vec::new();
            permutations(&mut ry.to_vec(), 0, &mut perms);
            let hits = perms
                .iter()
                .filter(|p| {
                    pearson(rx, p).is_some_and(|r| r.abs() >= observed.abs() - 1e-12)
                })
                .count();
            hits as f64 / perms.len() as f64
        }

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 4..=7usize {
            for _ in 0..8 {
                let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let ys: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let s = spearman(&xs, &ys).unwrap().unwrap();
                if s.rho.abs() >= 1.0 - 1e-12 {
                    continue; // pinned to p = 0 by contract
                }
                let expect = brute_p(&average_ranks(&xs), &average_ranks(&ys), s.rho);
                assert!(
                    (s.p_value - expect).abs() < 1e-12,
                    "n={n}: {} vs {}",
                    s.p_value,
                    expect
                );
            }
        }
    }

    #[test]
    fn large_n_uses_t_approximation() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x + ((x * 7.3).sin() * 8.0)).collect();
        let s = spearman(&xs, &ys).unwrap().unwrap();
        assert!(s.rho > 0.8);
        assert!(s.p_value < 0.001);
        assert!((s.p_value - t_approx_p_value(s.rho, 30)).abs() < 1e-15);
    }

    #[test]
    fn stratified_sample_covers_all_bands() {
        let ranking: Vec<String> = (0..30_000).map(|i| format!("s{i:05}")).collect();
        let sample =
            stratified_sample(&ranking, &DEFAULT_SAMPLE_BOUNDARIES, 100, 42).unwrap();
        assert_eq!(sample.domains.len(), 600);
        assert_eq!(sample.bands.len(), 6);
        assert!(!sample.truncated);
        // No duplicates and band membership respected.
        let mut seen = std::collections::HashSet::new();
        for d in &sample.domains {
            assert!(seen.insert(d.clone()), "duplicate {d}");
        }
        let index: BTreeMap<&str, usize> = ranking
            .iter()
            .enumerate()
            .map(|(i, d)| (d.as_str(), i + 1))
            .collect();
        let mut cursor = 0;
        for band in &sample.bands {
            for d in &sample.domains[cursor..cursor + band.taken] {
                let rank = index[d.as_str()];
                assert!(rank >= band.lo && rank <= band.hi);
            }
            cursor += band.taken;
        }
    }

    #[test]
    fn stratified_sample_is_deterministic_per_seed() {
        let ranking: Vec<String> = (0..2_000).map(|i| format!("s{i:05}")).collect();
        let a = stratified_sample(&ranking, &[100, 400, 1_600], 50, 7).unwrap();
        let b = stratified_sample(&ranking, &[100, 400, 1_600], 50, 7).unwrap();
        assert_eq!(a.domains, b.domains);
        let c = stratified_sample(&ranking, &[100, 400, 1_600], 50, 8).unwrap();
        assert_ne!(a.domains, c.domains);
    }

    #[test]
    fn short_band_is_taken_whole_with_warning() {
        let ranking: Vec<String> = (0..150).map(|i| format!("s{i:03}")).collect();
        let sample = stratified_sample(&ranking, &[100], 100, 1).unwrap();
        // Band 2 is ranks 101..=150: only 50 available.
        assert!(sample.truncated);
        assert_eq!(sample.bands[1].taken, 50);
        assert_eq!(sample.domains.len(), 150);
    }

    fn ranking_of(m: usize) -> Vec<String> {
        (1..=m).map(|i| format!("r{i:04}")).collect()
    }

    #[test]
    fn quality_extremes() {
        let ranking = ranking_of(100);
        let top: Vec<String> = ranking[..10].to_vec();
        let q = quality(&top, &ranking).unwrap();
        assert!((q.q_n - 1.0).abs() < 1e-12);
        let bottom: Vec<String> = ranking[90..].to_vec();
        let q = quality(&bottom, &ranking).unwrap();
        assert!(q.q_n.abs() < 1e-12);
    }

    #[test]
    fn quality_hand_case() {
        let ranking = ranking_of(4);
        let members = vec![ranking[0].clone(), ranking[3].clone()];
        let q = quality(&members, &ranking).unwrap();
        assert!((q.q - 1.25).abs() < 1e-12);
        assert!((q.q_n - 8.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn quality_excludes_unranked_members() {
        let ranking = ranking_of(10);
        let members = vec![
            ranking[0].clone(),
            "untracked.example".to_string(),
            ranking[5].clone(),
        ];
        let q = quality(&members, &ranking).unwrap();
        assert_eq!(q.used, 2);
        assert_eq!(q.excluded, vec!["untracked.example".to_string()]);

        assert!(quality(&[], &ranking).is_err());
        assert!(quality(&["nope.example".to_string()], &ranking).is_err());
    }

    #[test]
    fn quality_swap_toward_the_top_increases_q_n() {
        let ranking = ranking_of(50);
        let members = vec![ranking[20].clone(), ranking[30].clone()];
        let better = vec![ranking[5].clone(), ranking[30].clone()];
        let q0 = quality(&members, &ranking).unwrap();
        let q1 = quality(&better, &ranking).unwrap();
        assert!(q1.q > q0.q);
        assert!(q1.q_n > q0.q_n);
    }

    #[test]
    fn accuracy_counts_none_as_wrong() {
        let mut predicted = BTreeMap::new();
        predicted.insert("a.com".to_string(), Lean::Left);
        predicted.insert("b.com".to_string(), Lean::None);
        predicted.insert("c.com".to_string(), Lean::Right);
        predicted.insert("d.com".to_string(), Lean::Right);
        let mut labels = BTreeMap::new();
        labels.insert("a.com".to_string(), Lean::Left);
        labels.insert("b.com".to_string(), Lean::Left);
        labels.insert("c.com".to_string(), Lean::Right);
        labels.insert("d.com".to_string(), Lean::Left);
        // 2 of 4 correct; the None prediction is wrong.
        assert_eq!(bias_accuracy(&predicted, &labels).unwrap(), 0.5);

        let empty = BTreeMap::new();
        assert!(bias_accuracy(&empty, &labels).is_err());
    }

    #[test]
    fn perfect_predictions_are_perfect() {
        let mut maps = (BTreeMap::new(), BTreeMap::new());
        for (i, lean) in [Lean::Left, Lean::Right, Lean::Left, Lean::Right]
            .iter()
            .enumerate()
        {
            maps.0.insert(format!("d{i}.com"), *lean);
            maps.1.insert(format!("d{i}.com"), *lean);
        }
        assert_eq!(bias_accuracy(&maps.0, &maps.1).unwrap(), 1.0);
    }

    #[test]
    fn expert_matching_top_list_scores_perfectly() {
        let internal = ranking_of(50);
        let expert = ExpertRanking {
            name: "panel".to_string(),
            topic: "general".to_string(),
            group: "all".to_string(),
            domains: internal[..10].to_vec(),
        };
        let report = compare_external(&internal, &expert);
        assert_eq!(report.common, 10);
        assert_eq!(report.total, 10);
        assert_eq!(report.rho, Some(1.0));
        assert_eq!(report.p_value, Some(0.0));
        assert!((report.quality.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn untracked_expert_entries_shrink_the_overlap() {
        let internal = ranking_of(10);
        let mut domains = internal[..7].to_vec();
        domains.extend((0..3).map(|i| format!("gone{i}.example")));
        let expert = ExpertRanking {
            name: "panel".to_string(),
            topic: String::new(),
            group: String::new(),
            domains,
        };
        let report = compare_external(&internal, &expert);
        assert_eq!(report.common, 7);
        assert_eq!(report.total, 10);
        assert!(report.rho.is_some());
    }

    #[test]
    fn tiny_overlap_reports_quality_without_correlation() {
        let internal = ranking_of(10);
        let expert = ExpertRanking {
            name: "panel".to_string(),
            topic: String::new(),
            group: String::new(),
            domains: vec![internal[2].clone(), internal[4].clone()],
        };
        let report = compare_external(&internal, &expert);
        assert_eq!(report.common, 2);
        assert_eq!(report.rho, None);
        assert!(report.quality.is_some());
    }
}
