//! Effect sizes and significance tests for comparing two configurations.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::bbc::MeanSd;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// Thresholds apply to the distance from 0.5 in either direction, so
    /// 0.30 is as large an effect as 0.70.
    pub fn of(a12: f64) -> Magnitude {
        // fold onto [0.5, 1]; the slack keeps 0.71 itself from rounding down
        let a = a12.max(1.0 - a12) + 1e-12;
        if a >= 0.71 {
            Magnitude::Large
        } else if a >= 0.64 {
            Magnitude::Medium
        } else if a >= 0.56 {
            Magnitude::Small
        } else {
            Magnitude::Negligible
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

/// Probability that a draw from `a` exceeds one from `b`, ties counting half.
pub fn vargha_delaney(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    // for each x: #{y < x} + 0.5 #{y == x}
    let mut wins = 0.0;
    for &x in a {
        let below = sorted.partition_point(|&y| y < x);
        let upto = sorted.partition_point(|&y| y <= x);
        wins += below as f64 + 0.5 * (upto - below) as f64;
    }
    Ok(wins / (a.len() * b.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    /// Two-sided.
    pub p_value: f64,
    /// Whether `p_value` comes from the exact permutation distribution
    /// rather than the normal approximation.
    pub exact: bool,
}

/// Largest per-sample size for which the exact distribution is enumerated.
pub const EXACT_LIMIT: usize = 8;

/// Wilcoxon rank-sum test. Both samples at or under [`EXACT_LIMIT`] get the
/// exact permutation distribution of the mid-rank sum; larger ones use the
/// normal approximation with tie and continuity corrections.
pub fn rank_sum_p(a: &[f64], b: &[f64]) -> Result<RankSum, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let doubled = doubled_midranks(a, b);
    let w2: u64 = doubled[..a.len()].iter().sum();
    if a.len() <= EXACT_LIMIT && b.len() <= EXACT_LIMIT {
        return Ok(RankSum {
            p_value: exact_p(&doubled, a.len(), w2),
            exact: true,
        });
    }
    Ok(RankSum {
        p_value: normal_p(a, b, w2 as f64 / 2.0),
        exact: false,
    })
}

/// Mid-ranks of the pooled sample times two (so they stay integral), with
/// `a`'s observations first.
fn doubled_midranks(a: &[f64], b: &[f64]) -> Vec<u64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share (start + 1 + end) / 2
        for &k in &order[start..end] {
            ranks[k] = (start + 1 + end) as u64;
        }
        start = end;
    }
    ranks
}

fn tie_groups(a: &[f64], b: &[f64]) -> Vec<usize> {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end] == pooled[start] {
            end += 1;
        }
        groups.push(end - start);
        start = end;
    }
    groups
}

/// P(|W - E[W]| >= |w - E[W]|) over all equally likely ways of choosing which
/// `na` of the ranks belong to the first sample.
fn exact_p(doubled: &[u64], na: usize, w2: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; total as usize + 1]; na + 1];
    ways[0][0] = 1.0;
    for &r in doubled {
        for k in (1..=na).rev() {
            for s in (r as usize..=total as usize).rev() {
                let add = ways[k - 1][s - r as usize];
                if add != 0.0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    let n = doubled.len() as f64;
    let center = na as f64 * (n + 1.0); // doubled expectation
    let observed = (w2 as f64 - center).abs();
    let (mut hit, mut all) = (0.0, 0.0);
    for (s, &count) in ways[na].iter().enumerate() {
        all += count;
        if (s as f64 - center).abs() >= observed - 1e-9 {
            hit += count;
        }
    }
    (hit / all).min(1.0)
}

fn normal_p(a: &[f64], b: &[f64], w: f64) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let u = w - na * (na + 1.0) / 2.0;
    let mu = na * nb / 2.0;
    let ties: f64 = tie_groups(a, b)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Odds of success under `a` over odds under `b`. When any of the four cells
/// is zero, every cell gets +0.5 first.
pub fn odds_ratio(success_a: u64, total_a: u64, success_b: u64, total_b: u64) -> f64 {
    assert!(total_a >= 1 && total_b >= 1, "odds ratio needs at least one run per side");
    assert!(success_a <= total_a && success_b <= total_b, "more successes than runs");
    let cells = [success_a, total_a - success_a, success_b, total_b - success_b];
    let shift = if cells.contains(&0) { 0.5 } else { 0.0 };
    let [sa, fa, sb, fb] = cells.map(|c| c as f64 + shift);
    (sa * fb) / (fa * sb)
}

/// Sample mean and standard deviation (0 for fewer than two values).
pub fn mean_sd(xs: &[f64]) -> MeanSd {
    if xs.is_empty() {
        return MeanSd::default();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanSd { mean, sd }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn a12_basics() {
        assert_eq!(vargha_delaney(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert_eq!(vargha_delaney(&[5.0, 6.0], &[1.0, 2.0]).unwrap(), 1.0);
        // pairs: 1 vs {2,2,3}: 0; 2: 0.5+0.5; 3: 1+1+0.5; 4: 3 -> 6.5 / 12
        let v = vargha_delaney(&[1.0, 2.0, 3.0, 4.0], &[2.0, 2.0, 3.0]).unwrap();
        assert!((v - 6.5 / 12.0).abs() < 1e-15);
        assert_eq!(vargha_delaney(&[], &[1.0]), Err(StatsError::EmptySample));
    }

    #[test]
    fn magnitude_thresholds() {
        assert_eq!(Magnitude::of(0.55), Magnitude::Negligible);
        assert_eq!(Magnitude::of(0.56), Magnitude::Small);
        assert_eq!(Magnitude::of(0.64), Magnitude::Medium);
        assert_eq!(Magnitude::of(0.71), Magnitude::Large);
        assert_eq!(Magnitude::of(0.29), Magnitude::Large);
    }

    #[test]
    fn odds_ratio_examples() {
        assert_eq!(odds_ratio(15, 30, 15, 30), 1.0);
        assert!((odds_ratio(30, 30, 0, 30) - 3721.0).abs() < 1e-9);
        assert_eq!(odds_ratio(20, 30, 10, 30), 4.0);
    }

    #[test]
    fn rank_sum_extremes() {
        let same = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        assert!(rank_sum_p(&same, &same).unwrap().p_value > 0.99);
        let ones = [1.0; 30];
        let zeros = [0.0; 30];
        let r = rank_sum_p(&ones, &zeros).unwrap();
        assert!(!r.exact && r.p_value < 1e-9);
        let all_tied = rank_sum_p(&[1.0; 10], &[1.0; 10]).unwrap();
        assert_eq!(all_tied.p_value, 1.0);
    }

    #[test]
    fn exact_small_table_value() {
        // n = m = 4 with complete separation: 2 of 70 arrangements are as extreme
        let r = rank_sum_p(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap();
        assert!(r.exact);
        assert!((r.p_value - 2.0 / 70.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn a12_duality(a in proptest::collection::vec(0i32..6, 1..20), b in proptest::collection::vec(0i32..6, 1..20)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let s = vargha_delaney(&a, &b).unwrap() + vargha_delaney(&b, &a).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn odds_ratio_duality(ta in 1u64..40, tb in 1u64..40, fa in 0.0f64..1.0, fb in 0.0f64..1.0) {
            let a = ((ta as f64 * fa) as u64).clamp(1, ta.saturating_sub(1).max(1));
            let b = ((tb as f64 * fb) as u64).clamp(1, tb.saturating_sub(1).max(1));
            prop_assume!(a < ta && b < tb);
            let p = odds_ratio(a, ta, b, tb) * odds_ratio(b, tb, a, ta);
            prop_assert!((p - 1.0).abs() < 1e-12);
        }

        #[test]
        fn p_values_are_probabilities(a in proptest::collection::vec(0i32..5, 1..14), b in proptest::collection::vec(0i32..5, 1..14)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let r = rank_sum_p(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            let swapped = rank_sum_p(&b, &a).unwrap();
            prop_assert!((r.p_value - swapped.p_value).abs() < 1e-12);
        }
    }
}
