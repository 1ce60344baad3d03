//! Single-objective crash reproduction: an elitist (μ+λ) genetic algorithm
//! whose every individual calls the target frame's function.

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Budget, SearchConfig};
use super::operators::Operators;
use super::secondary::{GatedBbc, NoSecondary, SecondaryObjective, TieContext};
use super::sort::merge_sort_by;
use super::testcase::TestCase;
use crate::analysis::Subject;
use crate::bbc::{ActiveAge, BbcGate, CounterTable};
use crate::heuristics::crash::bbc_target;
use crate::heuristics::{st_distance, weighted_sum, CrashTarget};
use crate::minilang::{execute, ExecutionTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashFitness {
    WeightedSum,
    StDistance,
}

impl CrashFitness {
    pub fn score(self, subject: &Subject, crash: &CrashTarget, trace: &ExecutionTrace) -> f64 {
        match self {
            CrashFitness::WeightedSum => weighted_sum(subject, crash, trace),
            CrashFitness::StDistance => st_distance(subject, crash, trace),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessSample {
    pub evaluations: u64,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrashResult {
    pub reproduced: bool,
    pub evaluations: u64,
    pub generations: u64,
    pub best_fitness: f64,
    pub best_test: TestCase,
    pub timeline: Vec<FitnessSample>,
    /// Keyed by the frame BBC compared progress towards.
    pub counters: CounterTable,
}

pub fn run_crash_ga(subject: &Subject, crash: &CrashTarget, fitness: CrashFitness, config: &SearchConfig) -> CrashResult {
    match config.bbc {
        Some(gate) => CrashGa::new(subject, crash, fitness, config, GatedBbc(BbcGate::new(gate, config.seed))).run(),
        None => CrashGa::new(subject, crash, fitness, config, NoSecondary).run(),
    }
}

#[derive(Debug, Clone)]
struct Individual {
    test: TestCase,
    trace: ExecutionTrace,
    fitness: f64,
}

pub struct CrashGa<'a, S: SecondaryObjective> {
    subject: &'a Subject,
    crash: &'a CrashTarget,
    kind: CrashFitness,
    config: &'a SearchConfig,
    ops: Operators<'a>,
    rng: ChaCha8Rng,
    secondary: S,
    counters: CounterTable,
    evaluations: u64,
    best: Option<Individual>,
    timeline: Vec<FitnessSample>,
    started: Instant,
}

impl<'a, S: SecondaryObjective> CrashGa<'a, S> {
    pub fn new(
        subject: &'a Subject,
        crash: &'a CrashTarget,
        kind: CrashFitness,
        config: &'a SearchConfig,
        secondary: S,
    ) -> Self {
        if let Err(e) = config.validate() {
            panic!("invalid search configuration: {e}");
        }
        let target = crash.target_function().to_string();
        assert!(
            subject.program.entry_names.contains(&target),
            "target frame function `{target}` must be callable from a test"
        );
        CrashGa {
            subject,
            crash,
            kind,
            config,
            ops: Operators::configured(&subject.program, config, Some(target)),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            secondary,
            counters: CounterTable::new(),
            evaluations: 0,
            best: None,
            timeline: Vec::new(),
            started: Instant::now(),
        }
    }

    fn exhausted(&self) -> bool {
        match self.config.budget {
            Budget::Evaluations(n) => self.evaluations >= n,
            Budget::Seconds(s) => self.started.elapsed().as_secs_f64() >= s,
        }
    }

    fn solved(&self) -> bool {
        self.best.as_ref().is_some_and(|b| b.fitness == 0.0)
    }

    fn evaluate(&mut self, test: TestCase) -> Individual {
        let trace = execute(self.subject, &test, self.config.step_limit);
        self.evaluations += 1;
        // both fitness functions reach 0 exactly when the stack is reproduced
        let fitness = self.kind.score(self.subject, self.crash, &trace);
        let ind = Individual { test, trace, fitness };
        if self.best.as_ref().is_none_or(|b| {
            ind.fitness < b.fitness || (ind.fitness == b.fitness && ind.test.len() < b.test.len())
        }) {
            self.best = Some(ind.clone());
        }
        if self.evaluations.is_multiple_of(self.config.timeline_interval) {
            self.sample();
        }
        ind
    }

    fn sample(&mut self) {
        let best_fitness = self.best.as_ref().map_or(f64::INFINITY, |b| b.fitness);
        self.timeline.push(FitnessSample {
            evaluations: self.evaluations,
            best_fitness,
        });
    }

    /// Fitness, then the secondary objective on ties short of success,
    /// then test length.
    fn compare(&mut self, a: &Individual, b: &Individual) -> Ordering {
        match a.fitness.total_cmp(&b.fitness) {
            Ordering::Equal => {}
            other => return other,
        }
        if a.fitness > 0.0 {
            let std_mode = self.kind == CrashFitness::StDistance;
            if let Some(frame) = bbc_target(self.crash, &a.trace, std_mode) {
                let key = format!("{}:{}", frame.function_name, frame.line);
                let ctx = TieContext {
                    subject: self.subject,
                    function: &frame.function_name,
                    line: frame.line,
                    age: ActiveAge {
                        evaluations: self.evaluations,
                        seconds: self.started.elapsed().as_secs_f64(),
                    },
                };
                let counters = self.counters.entry(key).or_default();
                match self.secondary.compare(&ctx, &a.trace, &b.trace, counters) {
                    v if v < 0 => return Ordering::Less,
                    v if v > 0 => return Ordering::Greater,
                    _ => {}
                }
            }
        }
        a.test.len().cmp(&b.test.len())
    }

    fn sort(&mut self, inds: &mut [Individual]) {
        merge_sort_by(inds, &mut |a, b| self.compare(a, b));
    }

    /// Binary tournament over a population sorted best first.
    fn tournament(&mut self, len: usize) -> usize {
        let a = self.rng.gen_range(0..len);
        let b = self.rng.gen_range(0..len);
        a.min(b)
    }

    pub fn run(mut self) -> CrashResult {
        let n = self.config.population_size;
        let mut population = Vec::with_capacity(n);
        while population.len() < n && !self.exhausted() && !self.solved() {
            let test = self.ops.random_test(&mut self.rng);
            population.push(self.evaluate(test));
        }
        self.sort(&mut population);
        let mut generations = 0;
        while !self.exhausted() && !self.solved() && !population.is_empty() {
            generations += 1;
            let mut offspring = Vec::with_capacity(n);
            while offspring.len() < n && !self.exhausted() && !self.solved() {
                let p1 = self.tournament(population.len());
                let p2 = self.tournament(population.len());
                let (c1, c2, _) = self.ops.crossover(&population[p1].test, &population[p2].test, &mut self.rng);
                let m1 = self.ops.mutate(&c1, &mut self.rng);
                let m2 = self.ops.mutate(&c2, &mut self.rng);
                offspring.push(self.evaluate(m1));
                if offspring.len() < n && !self.exhausted() && !self.solved() {
                    offspring.push(self.evaluate(m2));
                }
            }
            population.extend(offspring);
            self.sort(&mut population);
            population.truncate(n);
        }
        if self.timeline.last().is_none_or(|s| s.evaluations != self.evaluations) {
            self.sample();
        }
        let best = self.best.expect("at least one evaluation");
        CrashResult {
            reproduced: best.fitness == 0.0,
            evaluations: self.evaluations,
            generations,
            best_fitness: best.fitness,
            best_test: best.test,
            timeline: self.timeline,
            counters: self.counters,
        }
    }
}
