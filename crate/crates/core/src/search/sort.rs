//! Ordering helpers shared by the engines.

use std::cmp::Ordering;

/// Stable top-down merge sort. Unlike the standard library sorts it accepts
/// a stateful comparator and tolerates one that is not a total order (a
/// secondary objective may be intransitive); the result is then some
/// deterministic permutation.
pub fn merge_sort_by<T: Clone>(items: &mut [T], cmp: &mut impl FnMut(&T, &T) -> Ordering) {
    if items.len() < 2 {
        return;
    }
    let mid = items.len() / 2;
    merge_sort_by(&mut items[..mid], cmp);
    merge_sort_by(&mut items[mid..], cmp);
    let mut merged = Vec::with_capacity(items.len());
    let (mut i, mut j) = (0, mid);
    while i < mid && j < items.len() {
        if cmp(&items[j], &items[i]) == Ordering::Less {
            merged.push(items[j].clone());
            j += 1;
        } else {
            merged.push(items[i].clone());
            i += 1;
        }
    }
    merged.extend_from_slice(&items[i..mid]);
    merged.extend_from_slice(&items[j..]);
    items.clone_from_slice(&merged);
}

/// `a` dominates `b`: no worse anywhere and better somewhere (minimizing).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            better = true;
        }
    }
    better
}

/// Fast non-dominated sorting; returns fronts of indices into `points`.
pub fn non_dominated_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&points[i], &points[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of a front (boundary points get
/// infinity).
pub fn crowding_distances(points: &[&[f64]]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    let m = points[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| points[a][k].total_cmp(&points[b][k]).then(a.cmp(&b)));
        let (lo, hi) = (points[order[0]][k], points[order[n - 1]][k]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..n.saturating_sub(1) {
                let gap = points[order[w + 1]][k] - points[order[w - 1]][k];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn merge_sort_agrees_with_std_on_total_orders(mut v in proptest::collection::vec((0u8..5, any::<u16>()), 0..60)) {
            let mut expected = v.clone();
            expected.sort_by_key(|x| x.0);
            merge_sort_by(&mut v, &mut |a, b| a.0.cmp(&b.0));
            prop_assert_eq!(v, expected);
        }

        #[test]
        fn fronts_partition_and_respect_dominance(points in proptest::collection::vec(proptest::collection::vec(0u8..4, 3), 1..25)) {
            let pts: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|&x| x as f64).collect()).collect();
            let fronts = non_dominated_fronts(&pts);
            let mut rank = vec![usize::MAX; pts.len()];
            for (r, f) in fronts.iter().enumerate() {
                for &i in f {
                    prop_assert_eq!(rank[i], usize::MAX);
                    rank[i] = r;
                }
            }
            for i in 0..pts.len() {
                prop_assert!(rank[i] != usize::MAX);
                for j in 0..pts.len() {
                    if dominates(&pts[i], &pts[j]) {
                        prop_assert!(rank[i] < rank[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn intransitive_comparator_does_not_panic() {
        let mut v: Vec<u32> = (0..50).collect();
        // rock-paper-scissors on residues mod 3
        merge_sort_by(&mut v, &mut |a, b| match (a % 3 + 3 - b % 3) % 3 {
            0 => Ordering::Equal,
            1 => Ordering::Less,
            _ => Ordering::Greater,
        });
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn crowding_marks_boundaries() {
        let pts = [[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let d = crowding_distances(&refs);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert!((d[1] - 4.0 / 3.0).abs() < 1e-12);
    }
}
