//! Statistics over run records and the files derived from them.
//!
//! Each pair of configurations within a case is compared, the earlier one
//! (in record order) acting as the baseline. Unit cases compare branch
//! coverage; crash cases compare the reproduced indicator and also get an
//! odds ratio.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::Mode;
use super::record::RunRecord;
use super::stats::{mean_sd, odds_ratio, rank_sum_p, vargha_delaney, Magnitude};
use super::HarnessError;
use crate::bbc::{counters_report, BbcCounters, CountersSummary, MeanSd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub cases: Vec<CaseReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub mode: Mode,
    pub configs: Vec<ConfigSummary>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub config: String,
    pub runs: usize,
    pub errors: usize,
    pub branch_coverage: Option<MeanSd>,
    pub line_coverage: Option<MeanSd>,
    pub reproduced: Option<usize>,
    /// Reproduced runs over all runs of the cell, failed ones included.
    pub reproduction_ratio: Option<f64>,
    pub evaluations: MeanSd,
    /// Per-run totals over all objectives.
    pub counters: CountersSummary,
    pub runs_with_useful: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub treatment: String,
    pub metric: String,
    /// Â₁₂ of the treatment over the baseline; `None` when a side has no
    /// successful run.
    pub a12: Option<f64>,
    pub magnitude: Option<Magnitude>,
    pub p_value: Option<f64>,
    pub p_exact: Option<bool>,
    pub odds_ratio: Option<f64>,
}

/// Totals of a run's per-objective counters.
pub fn run_totals(record: &RunRecord) -> BbcCounters {
    let mut total = BbcCounters::default();
    for c in record.counters.values() {
        total.add(c);
    }
    total
}

fn metric(record: &RunRecord) -> Option<f64> {
    match record.mode {
        Mode::Unit => record.outcome.branch_coverage,
        Mode::Crash => record.outcome.reproduced.map(|r| if r { 1.0 } else { 0.0 }),
    }
}

/// A case's records split by config.
type CaseGroup<'a> = (String, Mode, Vec<(String, Vec<&'a RunRecord>)>);

/// Groups preserve the order in which cases and configs first appear.
fn group(records: &[RunRecord]) -> Vec<CaseGroup<'_>> {
    let mut out: Vec<CaseGroup> = Vec::new();
    for r in records {
        let case = match out.iter_mut().position(|c| c.0 == r.case) {
            Some(i) => &mut out[i],
            None => {
                out.push((r.case.clone(), r.mode, Vec::new()));
                out.last_mut().unwrap()
            }
        };
        match case.2.iter_mut().find(|c| c.0 == r.config) {
            Some(c) => c.1.push(r),
            None => case.2.push((r.config.clone(), vec![r])),
        }
    }
    out
}

fn summarize(config: &str, runs: &[&RunRecord], mode: Mode) -> ConfigSummary {
    let ok: Vec<&&RunRecord> = runs.iter().filter(|r| r.outcome.error.is_none()).collect();
    let collect = |f: fn(&RunRecord) -> Option<f64>| -> Option<MeanSd> {
        let xs: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
        (!xs.is_empty()).then(|| mean_sd(&xs))
    };
    let totals: Vec<BbcCounters> = runs.iter().map(|r| run_totals(r)).collect();
    let reproduced = (mode == Mode::Crash).then(|| ok.iter().filter(|r| r.outcome.reproduced == Some(true)).count());
    let evaluations: Vec<f64> = ok.iter().map(|r| r.outcome.evaluations as f64).collect();
    ConfigSummary {
        config: config.to_string(),
        runs: runs.len(),
        errors: runs.len() - ok.len(),
        branch_coverage: collect(|r| r.outcome.branch_coverage),
        line_coverage: collect(|r| r.outcome.line_coverage),
        reproduced,
        reproduction_ratio: reproduced.map(|k| k as f64 / runs.len() as f64),
        evaluations: mean_sd(&evaluations),
        counters: counters_report(&totals),
        runs_with_useful: totals.iter().filter(|t| t.useful > 0).count(),
    }
}

fn compare(mode: Mode, base: (&str, &[&RunRecord]), treat: (&str, &[&RunRecord])) -> Comparison {
    let values = |rs: &[&RunRecord]| -> Vec<f64> {
        rs.iter().filter(|r| r.outcome.error.is_none()).filter_map(|r| metric(r)).collect()
    };
    let (b, t) = (values(base.1), values(treat.1));
    let a12 = vargha_delaney(&t, &b).ok();
    let rank = rank_sum_p(&t, &b).ok();
    let odds = (mode == Mode::Crash && !b.is_empty() && !t.is_empty()).then(|| {
        let wins = |xs: &[f64]| xs.iter().filter(|&&x| x == 1.0).count() as u64;
        odds_ratio(wins(&t), t.len() as u64, wins(&b), b.len() as u64)
    });
    Comparison {
        baseline: base.0.to_string(),
        treatment: treat.0.to_string(),
        metric: match mode {
            Mode::Unit => "branch_coverage",
            Mode::Crash => "reproduced",
        }
        .to_string(),
        a12,
        magnitude: a12.map(Magnitude::of),
        p_value: rank.map(|r| r.p_value),
        p_exact: rank.map(|r| r.exact),
        odds_ratio: odds,
    }
}

/// Descriptive statistics per (case, config) and pairwise comparisons.
pub fn report(records: &[RunRecord]) -> StatReport {
    let cases = group(records)
        .into_iter()
        .map(|(case, mode, configs)| {
            let summaries = configs.iter().map(|(c, rs)| summarize(c, rs, mode)).collect();
            let mut comparisons = Vec::new();
            for i in 0..configs.len() {
                for j in i + 1..configs.len() {
                    comparisons.push(compare(
                        mode,
                        (&configs[i].0, &configs[i].1),
                        (&configs[j].0, &configs[j].1),
                    ));
                }
            }
            CaseReport {
                case,
                mode,
                configs: summaries,
                comparisons,
            }
        })
        .collect();
    StatReport { cases }
}

/// Mean timeline value per (case, config) at every sampled evaluation
/// count. A run that stopped early keeps contributing its last sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub case: String,
    pub config: String,
    pub evaluations: u64,
    pub branch_coverage: Option<f64>,
    pub line_coverage: Option<f64>,
    pub best_fitness: Option<f64>,
}

pub fn timeline(records: &[RunRecord]) -> Vec<TimelineRow> {
    let mut rows = Vec::new();
    for (case, _, configs) in group(records) {
        for (config, runs) in configs {
            let mut points: Vec<u64> = runs.iter().flat_map(|r| r.timeline.iter().map(|p| p.evaluations)).collect();
            points.sort_unstable();
            points.dedup();
            for e in points {
                let mut sums: [(f64, usize); 3] = [(0.0, 0); 3];
                for r in &runs {
                    let Some(p) = r.timeline.iter().rev().find(|p| p.evaluations <= e) else {
                        continue;
                    };
                    for (slot, v) in sums.iter_mut().zip([p.branch_coverage, p.line_coverage, p.best_fitness]) {
                        if let Some(v) = v {
                            slot.0 += v;
                            slot.1 += 1;
                        }
                    }
                }
                let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
                rows.push(TimelineRow {
                    case: case.clone(),
                    config: config.clone(),
                    evaluations: e,
                    branch_coverage: mean(sums[0]),
                    line_coverage: mean(sums[1]),
                    best_fitness: mean(sums[2]),
                });
            }
        }
    }
    rows
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::io(path, std::io::Error::other(e))
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub const SUMMARY_COLUMNS: [&str; 12] = [
    "case",
    "mode",
    "config",
    "runs",
    "errors",
    "mean_branch_coverage",
    "sd_branch_coverage",
    "mean_line_coverage",
    "reproduced",
    "reproduction_ratio",
    "mean_evaluations",
    "sd_evaluations",
];

pub const COMPARISON_COLUMNS: [&str; 10] = [
    "case",
    "mode",
    "baseline",
    "treatment",
    "metric",
    "a12",
    "magnitude",
    "p_value",
    "p_exact",
    "odds_ratio",
];

pub const COUNTER_COLUMNS: [&str; 10] = [
    "case",
    "config",
    "runs",
    "mean_calls",
    "sd_calls",
    "mean_active",
    "sd_active",
    "mean_useful",
    "sd_useful",
    "runs_with_useful",
];

pub const TIMELINE_COLUMNS: [&str; 6] = [
    "case",
    "config",
    "evaluations",
    "mean_branch_coverage",
    "mean_line_coverage",
    "mean_best_fitness",
];

/// Writes `report.json`, `summary.csv`, `comparisons.csv`,
/// `bbc_counters.csv`, and `timeline.csv` into `dir`.
pub fn write_report(dir: &Path, records: &[RunRecord]) -> Result<StatReport, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let stats = report(records);
    let json = serde_json::to_string_pretty(&stats).expect("reports always serialize");
    let path = dir.join("report.json");
    std::fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))?;

    let mode_name = |m: Mode| match m {
        Mode::Unit => "unit",
        Mode::Crash => "crash",
    };
    let mut summary = Vec::new();
    let mut comparisons = Vec::new();
    let mut counters = Vec::new();
    for c in &stats.cases {
        for s in &c.configs {
            summary.push(vec![
                c.case.clone(),
                mode_name(c.mode).to_string(),
                s.config.clone(),
                s.runs.to_string(),
                s.errors.to_string(),
                cell(s.branch_coverage.map(|m| m.mean)),
                cell(s.branch_coverage.map(|m| m.sd)),
                cell(s.line_coverage.map(|m| m.mean)),
                s.reproduced.map_or_else(|| "n/a".to_string(), |k| k.to_string()),
                cell(s.reproduction_ratio),
                cell(Some(s.evaluations.mean)),
                cell(Some(s.evaluations.sd)),
            ]);
            let k = &s.counters;
            counters.push(vec![
                c.case.clone(),
                s.config.clone(),
                k.count.to_string(),
                cell(Some(k.calls.mean)),
                cell(Some(k.calls.sd)),
                cell(Some(k.active.mean)),
                cell(Some(k.active.sd)),
                cell(Some(k.useful.mean)),
                cell(Some(k.useful.sd)),
                s.runs_with_useful.to_string(),
            ]);
        }
        for cmp in &c.comparisons {
            comparisons.push(vec![
                c.case.clone(),
                mode_name(c.mode).to_string(),
                cmp.baseline.clone(),
                cmp.treatment.clone(),
                cmp.metric.clone(),
                cell(cmp.a12),
                cmp.magnitude.map_or("n/a", Magnitude::as_str).to_string(),
                cmp.p_value.map_or_else(|| "n/a".to_string(), |p| format!("{p:.6e}")),
                cmp.p_exact.map_or_else(|| "n/a".to_string(), |e| e.to_string()),
                cell(cmp.odds_ratio),
            ]);
        }
    }
    write_csv(&dir.join("summary.csv"), &SUMMARY_COLUMNS, summary)?;
    write_csv(&dir.join("comparisons.csv"), &COMPARISON_COLUMNS, comparisons)?;
    write_csv(&dir.join("bbc_counters.csv"), &COUNTER_COLUMNS, counters)?;
    let rows = timeline(records)
        .into_iter()
        .map(|r| {
            vec![
                r.case,
                r.config,
                r.evaluations.to_string(),
                cell(r.branch_coverage),
                cell(r.line_coverage),
                cell(r.best_fitness),
            ]
        })
        .collect();
    write_csv(&dir.join("timeline.csv"), &TIMELINE_COLUMNS, rows)?;
    Ok(stats)
}
