use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How often BBC was asked, got past the gate into a scenario, and decided.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BbcCounters {
    pub calls: u64,
    pub active: u64,
    pub useful: u64,
}

impl BbcCounters {
    pub fn is_consistent(&self) -> bool {
        self.useful <= self.active && self.active <= self.calls
    }

    pub fn add(&mut self, other: &BbcCounters) {
        self.calls += other.calls;
        self.active += other.active;
        self.useful += other.useful;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CountersSummary {
    pub count: usize,
    pub calls: MeanSd,
    pub active: MeanSd,
    pub useful: MeanSd,
}

/// Welford accumulator; `sd` is the sample standard deviation (0 below two
/// observations).
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn finish(self) -> MeanSd {
        let sd = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanSd { mean: self.mean, sd }
    }
}

/// Mean and standard deviation of each counter across `counters`.
pub fn counters_report<'a, I>(counters: I) -> CountersSummary
where
    I: IntoIterator<Item = &'a BbcCounters>,
{
    let (mut calls, mut active, mut useful) = (Running::default(), Running::default(), Running::default());
    let mut count = 0;
    for c in counters {
        count += 1;
        calls.push(c.calls as f64);
        active.push(c.active as f64);
        useful.push(c.useful as f64);
    }
    CountersSummary {
        count,
        calls: calls.finish(),
        active: active.finish(),
        useful: useful.finish(),
    }
}

/// Per-objective counters of one run, keyed by the objective's display name.
pub type CounterTable = BTreeMap<String, BbcCounters>;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(counters_report(&[]), CountersSummary::default());
        let one = BbcCounters { calls: 10, active: 4, useful: 1 };
        let r = counters_report(&[one]);
        assert_eq!(r.count, 1);
        assert_eq!((r.calls.mean, r.active.mean, r.useful.mean), (10.0, 4.0, 1.0));
        assert_eq!(r.calls.sd, 0.0);
    }

    proptest! {
        #[test]
        fn matches_two_pass(raw in proptest::collection::vec((0u64..5000, 0u64..5000, 0u64..5000), 1..40)) {
            let cs: Vec<BbcCounters> = raw.iter().map(|&(a, b, c)| BbcCounters { calls: a, active: b, useful: c }).collect();
            let r = counters_report(&cs);
            let col = |f: fn(&BbcCounters) -> u64| cs.iter().map(|c| f(c) as f64).collect::<Vec<_>>();
            for (got, xs) in [(r.calls, col(|c| c.calls)), (r.active, col(|c| c.active)), (r.useful, col(|c| c.useful))] {
                let (m, s) = two_pass(&xs);
                prop_assert!((got.mean - m).abs() <= 1e-9 * m.abs().max(1.0));
                prop_assert!((got.sd - s).abs() <= 1e-9 * s.abs().max(1.0));
            }
        }
    }
}
