//! Slow, literal versions of the comparison statistics.

use rand::Rng;

/// Every (x, y) pair scored 1, 0.5, or 0, averaged.
pub fn a12(a: &[f64], b: &[f64]) -> f64 {
    let mut score = 0.0;
    for &x in a {
        for &y in b {
            score += if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            };
        }
    }
    score / (a.len() * b.len()) as f64
}

/// Pooled mid-ranks, by counting rather than sorting.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|&x| {
            let below = pooled.iter().filter(|&&y| y < x).count() as f64;
            let equal = pooled.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact rank-sum p by walking every subset of the pooled
/// positions as a bitmask.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let n = pooled.len();
    let na = a.len();
    let center = na as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (ranks[..na].iter().sum::<f64>() - center).abs();
    let (mut hit, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        all += 1;
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (w - center).abs() >= observed - 1e-9 {
            hit += 1;
        }
    }
    hit as f64 / all as f64
}

/// Standard normal upper tail by Simpson's rule on the density.
fn upper_tail(z: f64) -> f64 {
    let steps = 20_000;
    let h = z / steps as f64;
    let f = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(0.0) + f(z);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 - s * h / 3.0
}

/// Normal approximation with the variance taken from the ranks themselves,
/// which folds in the tie correction, and a half-unit continuity correction.
pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (na, nb, n) = (a.len() as f64, b.len() as f64, pooled.len() as f64);
    let mean_rank = (n + 1.0) / 2.0;
    let spread: f64 = ranks.iter().map(|r| (r - mean_rank).powi(2)).sum();
    let var = na * nb / (n * (n - 1.0)) * spread;
    if var <= 0.0 {
        return 1.0;
    }
    let w: f64 = ranks[..a.len()].iter().sum();
    let z = ((w - na * mean_rank).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * upper_tail(z)).min(1.0)
}

/// Cross-product ratio of the 2x2 table, +0.5 on every cell when one is
/// empty.
pub fn odds_ratio(sa: u64, ta: u64, sb: u64, tb: u64) -> f64 {
    let (a, b, c, d) = (sa as f64, (ta - sa) as f64, sb as f64, (tb - sb) as f64);
    if a * b * c * d == 0.0 {
        ((a + 0.5) * (d + 0.5)) / ((b + 0.5) * (c + 0.5))
    } else {
        a * d / (b * c)
    }
}

/// A random sample with a length drawn from `sizes`, tie-heavy half the
/// time.
pub fn sample(rng: &mut impl Rng, sizes: std::ops::RangeInclusive<usize>) -> Vec<f64> {
    let len = rng.gen_range(sizes);
    let ties = rng.gen_bool(0.5);
    (0..len)
        .map(|_| {
            if ties {
                rng.gen_range(0..4) as f64 / 4.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect()
}
