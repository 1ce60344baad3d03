//! Many-objective unit-test generation with dynamic target selection.
//!
//! Objectives are lines and predicate sides. An objective joins the search
//! once one of the branch objectives it is control dependent on has been
//! covered, so the search never spends effort on code behind unreached
//! predicates. Survivors are chosen by preference sorting: the best test
//! for each open objective first, then non-dominated fronts.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::archive::Archive;
use super::config::{Budget, SearchConfig};
use super::operators::Operators;
use super::secondary::{GatedBbc, NoSecondary, SecondaryObjective, TieContext};
use super::sort::{crowding_distances, non_dominated_fronts};
use super::testcase::TestCase;
use crate::analysis::Subject;
use crate::cfg::{post_dominators, PostDominators};
use crate::bbc::{ActiveAge, BbcCounters, BbcGate, CounterTable};
use crate::heuristics::{all_objectives, objective_fitness, FitnessValue, ObjectiveId};
use crate::minilang::{execute, ExecutionTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveState {
    Dormant,
    Active,
    Covered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveStatus {
    pub objective: ObjectiveId,
    pub state: ObjectiveState,
    /// Evaluation count at activation.
    pub activated_at: Option<u64>,
    pub covered_at: Option<u64>,
    pub best_fitness: Option<FitnessValue>,
    pub bbc: BbcCounters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSample {
    pub evaluations: u64,
    pub line_coverage: f64,
    pub branch_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub archive: Archive,
    pub timeline: Vec<CoverageSample>,
    pub objectives: Vec<ObjectiveStatus>,
    pub evaluations: u64,
    pub generations: u64,
    pub line_coverage: f64,
    pub branch_coverage: f64,
}

impl UnitResult {
    pub fn counters(&self) -> CounterTable {
        self.objectives
            .iter()
            .map(|o| (o.objective.to_string(), o.bbc))
            .collect()
    }
}

/// Runs the search with BBC tie-breaking when `config.bbc` is set, and with
/// plain length tie-breaking otherwise.
pub fn run_dynamosa(subject: &Subject, config: &SearchConfig) -> UnitResult {
    match config.bbc {
        Some(gate) => DynaMosa::new(subject, config, GatedBbc(BbcGate::new(gate, config.seed))).run(),
        None => DynaMosa::new(subject, config, NoSecondary).run(),
    }
}

#[derive(Debug, Clone)]
struct Individual {
    test: TestCase,
    trace: ExecutionTrace,
    /// Fitness per objective index, filled on demand.
    fitness: Vec<Option<FitnessValue>>,
}

pub struct DynaMosa<'a, S: SecondaryObjective> {
    subject: &'a Subject,
    config: &'a SearchConfig,
    ops: Operators<'a>,
    rng: ChaCha8Rng,
    secondary: S,
    objectives: Vec<ObjectiveStatus>,
    children: Vec<Vec<usize>>,
    /// Active, uncovered objectives.
    targets: BTreeSet<usize>,
    archive: Archive,
    evaluations: u64,
    timeline: Vec<CoverageSample>,
    /// Coverage is sampled after the first update at or past this count.
    next_sample: u64,
    started: Instant,
    line_total: usize,
    branch_total: usize,
    lines_covered: usize,
    branches_covered: usize,
}

impl<'a, S: SecondaryObjective> DynaMosa<'a, S> {
    pub fn new(subject: &'a Subject, config: &'a SearchConfig, secondary: S) -> Self {
        if let Err(e) = config.validate() {
            panic!("invalid search configuration: {e}");
        }
        let ids = all_objectives(subject);
        let (parents, children) = dependency_graph(subject, &ids);
        let objectives: Vec<ObjectiveStatus> = ids
            .into_iter()
            .map(|objective| ObjectiveStatus {
                objective,
                state: ObjectiveState::Dormant,
                activated_at: None,
                covered_at: None,
                best_fitness: None,
                bbc: BbcCounters::default(),
            })
            .collect();
        let branch_total = objectives.iter().filter(|o| o.objective.is_branch()).count();
        let mut engine = DynaMosa {
            subject,
            config,
            ops: Operators::configured(&subject.program, config, None),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            secondary,
            line_total: objectives.len() - branch_total,
            branch_total,
            objectives,
            children,
            targets: BTreeSet::new(),
            archive: Archive::default(),
            evaluations: 0,
            timeline: Vec::new(),
            next_sample: config.timeline_interval,
            started: Instant::now(),
            lines_covered: 0,
            branches_covered: 0,
        };
        for (i, p) in parents.iter().enumerate() {
            if p.is_empty() {
                engine.activate(i);
            }
        }
        engine
    }

    fn exhausted(&self) -> bool {
        match self.config.budget {
            Budget::Evaluations(n) => self.evaluations >= n,
            Budget::Seconds(s) => self.started.elapsed().as_secs_f64() >= s,
        }
    }

    fn activate(&mut self, i: usize) {
        if self.objectives[i].state == ObjectiveState::Dormant {
            self.objectives[i].state = ObjectiveState::Active;
            self.objectives[i].activated_at = Some(self.evaluations);
            self.targets.insert(i);
        }
    }

    fn line_coverage(&self) -> f64 {
        ratio(self.lines_covered, self.line_total)
    }

    fn branch_coverage(&self) -> f64 {
        ratio(self.branches_covered, self.branch_total)
    }

    fn sample(&mut self) {
        let s = CoverageSample {
            evaluations: self.evaluations,
            line_coverage: self.line_coverage(),
            branch_coverage: self.branch_coverage(),
        };
        self.timeline.push(s);
    }

    fn evaluate(&mut self, test: TestCase) -> Individual {
        let trace = execute(self.subject, &test, self.config.step_limit);
        self.evaluations += 1;
        // a shorter test for something already covered replaces the archived one
        for (i, o) in self.objectives.iter().enumerate() {
            if o.state == ObjectiveState::Covered
                && self.archive.get(&o.objective).is_some_and(|t| test.len() < t.len())
                && covers(self.subject, &o.objective, &trace)
            {
                let id = self.objectives[i].objective.clone();
                self.archive.offer(&id, &test);
            }
        }
        Individual {
            test,
            trace,
            fitness: vec![None; self.objectives.len()],
        }
    }

    fn fitness(&mut self, ind: &mut Individual, o: usize) -> FitnessValue {
        if let Some(f) = ind.fitness[o] {
            return f;
        }
        let f = objective_fitness(self.subject, &self.objectives[o].objective, &ind.trace);
        ind.fitness[o] = Some(f);
        let best = &mut self.objectives[o].best_fitness;
        if best.is_none_or(|b| f < b) {
            *best = Some(f);
        }
        f
    }

    /// Records what `inds` cover, then samples coverage when due.
    fn update(&mut self, inds: &mut [Individual]) {
        self.mark_covered(inds);
        if self.evaluations >= self.next_sample {
            self.sample();
            let step = self.config.timeline_interval;
            self.next_sample = (self.evaluations / step + 1) * step;
        }
    }

    /// Marks objectives covered by any of `inds`, activating their
    /// dependents until nothing changes.
    fn mark_covered(&mut self, inds: &mut [Individual]) {
        loop {
            let open: Vec<usize> = self.targets.iter().copied().collect();
            let mut newly_covered = Vec::new();
            for &o in &open {
                // the shortest covering test goes to the archive
                let mut winner: Option<usize> = None;
                for k in 0..inds.len() {
                    if self.fitness(&mut inds[k], o).is_zero()
                        && winner.is_none_or(|w| inds[k].test.len() < inds[w].test.len())
                    {
                        winner = Some(k);
                    }
                }
                if let Some(k) = winner {
                    newly_covered.push((o, k));
                }
            }
            if newly_covered.is_empty() {
                return;
            }
            for (o, k) in newly_covered {
                self.cover(o, &inds[k].test);
            }
        }
    }

    fn cover(&mut self, o: usize, test: &TestCase) {
        let status = &mut self.objectives[o];
        status.state = ObjectiveState::Covered;
        status.covered_at = Some(self.evaluations);
        status.best_fitness = Some(FitnessValue::ZERO);
        self.targets.remove(&o);
        if status.objective.is_branch() {
            self.branches_covered += 1;
        } else {
            self.lines_covered += 1;
        }
        let id = status.objective.clone();
        self.archive.offer(&id, test);
        for c in self.children[o].clone() {
            self.activate(c);
        }
    }

    /// Whether `b` should replace `a` as the best test for objective `o`.
    fn prefers(&mut self, o: usize, a: &mut Individual, b: &mut Individual) -> bool {
        let (fa, fb) = (self.fitness(a, o), self.fitness(b, o));
        if fa != fb {
            return fb < fa;
        }
        let objective = self.objectives[o].objective.clone();
        let (_, line) = objective.target(self.subject);
        let age = ActiveAge {
            evaluations: self.evaluations - self.objectives[o].activated_at.unwrap_or(0),
            seconds: self.started.elapsed().as_secs_f64(),
        };
        let ctx = TieContext {
            subject: self.subject,
            function: objective.function(),
            line,
            age,
        };
        let verdict = self
            .secondary
            .compare(&ctx, &a.trace, &b.trace, &mut self.objectives[o].bbc);
        match verdict {
            v if v > 0 => true,
            v if v < 0 => false,
            _ => b.test.len() < a.test.len(),
        }
    }

    /// Preference sorting followed by non-dominated fronts; returns the
    /// survivors with their (rank, crowding distance).
    fn select(&mut self, mut union: Vec<Individual>) -> (Vec<Individual>, Vec<(usize, f64)>) {
        let n = self.config.population_size;
        let open: Vec<usize> = self.targets.iter().copied().collect();
        if open.is_empty() {
            union.truncate(n);
            let ranks = vec![(0, 0.0); union.len()];
            return (union, ranks);
        }
        let mut first: Vec<usize> = Vec::new();
        for &o in &open {
            let mut champion = 0;
            for k in 1..union.len() {
                let (left, right) = union.split_at_mut(k);
                if self.prefers(o, &mut left[champion], &mut right[0]) {
                    champion = k;
                }
            }
            if !first.contains(&champion) {
                first.push(champion);
            }
        }
        first.sort_unstable();
        let vectors: Vec<Vec<f64>> = union
            .iter_mut()
            .map(|ind| open.iter().map(|&o| self.fitness(ind, o).scalar()).collect::<Vec<f64>>())
            .collect();
        let rest: Vec<usize> = (0..union.len()).filter(|k| !first.contains(k)).collect();
        let rest_vectors: Vec<Vec<f64>> = rest.iter().map(|&k| vectors[k].clone()).collect();
        let mut fronts = vec![first];
        for f in non_dominated_fronts(&rest_vectors) {
            fronts.push(f.into_iter().map(|i| rest[i]).collect());
        }

        let mut chosen: Vec<(usize, usize, f64)> = Vec::new();
        for (rank, front) in fronts.iter().enumerate() {
            if chosen.len() >= n {
                break;
            }
            let refs: Vec<&[f64]> = front.iter().map(|&k| vectors[k].as_slice()).collect();
            let crowd = crowding_distances(&refs);
            let mut members: Vec<(usize, f64)> = front.iter().copied().zip(crowd).collect();
            if chosen.len() + members.len() > n {
                members.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                members.truncate(n - chosen.len());
            }
            chosen.extend(members.into_iter().map(|(k, c)| (k, rank, c)));
        }
        chosen.sort_by_key(|c| c.0);
        let ranks = chosen.iter().map(|&(_, r, c)| (r, c)).collect();
        let keep: Vec<usize> = chosen.iter().map(|c| c.0).collect();
        let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
        let survivors = keep.into_iter().map(|k| slots[k].take().unwrap()).collect();
        (survivors, ranks)
    }

    fn tournament(&mut self, ranks: &[(usize, f64)]) -> usize {
        let a = self.rng.gen_range(0..ranks.len());
        let b = self.rng.gen_range(0..ranks.len());
        let (ra, rb) = (ranks[a], ranks[b]);
        if rb.0 < ra.0 || (rb.0 == ra.0 && rb.1 > ra.1) {
            b
        } else {
            a
        }
    }

    pub fn run(mut self) -> UnitResult {
        let n = self.config.population_size;
        let mut population = Vec::with_capacity(n);
        while population.len() < n && !self.exhausted() {
            let test = self.ops.random_test(&mut self.rng);
            population.push(self.evaluate(test));
        }
        self.update(&mut population);
        let (mut population, mut ranks) = self.select(population);
        let mut generations = 0;

        while !self.exhausted() && !self.targets.is_empty() && !population.is_empty() {
            generations += 1;
            let mut offspring = Vec::with_capacity(n);
            while offspring.len() < n && !self.exhausted() {
                let p1 = self.tournament(&ranks);
                let p2 = self.tournament(&ranks);
                let (c1, c2, _) = self.ops.crossover(&population[p1].test, &population[p2].test, &mut self.rng);
                let m1 = self.ops.mutate(&c1, &mut self.rng);
                let m2 = self.ops.mutate(&c2, &mut self.rng);
                offspring.push(self.evaluate(m1));
                if offspring.len() < n && !self.exhausted() {
                    offspring.push(self.evaluate(m2));
                }
            }
            let mut union = population;
            union.extend(offspring);
            self.update(&mut union);
            (population, ranks) = self.select(union);
        }
        if self.timeline.last().is_none_or(|s| s.evaluations != self.evaluations) {
            self.sample();
        }
        UnitResult {
            line_coverage: self.line_coverage(),
            branch_coverage: self.branch_coverage(),
            archive: self.archive,
            timeline: self.timeline,
            objectives: self.objectives,
            evaluations: self.evaluations,
            generations,
        }
    }
}

fn ratio(covered: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        covered as f64 / total as f64
    }
}

/// Whether `trace` covers `objective` outright.
pub fn covers(subject: &Subject, objective: &ObjectiveId, trace: &ExecutionTrace) -> bool {
    match objective {
        ObjectiveId::Line { function, line } => trace.covers_line(function, *line),
        ObjectiveId::Branch { .. } => objective_fitness(subject, objective, trace).is_zero(),
    }
}

/// Parent and child lists: an objective's parents are the branch objectives
/// of the control dependencies of its block, excluding the block itself.
/// Blocks that post-dominate the entry run on every call and have none, even
/// when a later branch can also lead back to them (a loop header).
pub fn dependency_graph(subject: &Subject, ids: &[ObjectiveId]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let index_of = |id: &ObjectiveId| ids.binary_search(id).ok();
    let pdoms: Vec<PostDominators> = subject.cfgs.iter().map(post_dominators).collect();
    let mut parents = vec![Vec::new(); ids.len()];
    let mut children = vec![Vec::new(); ids.len()];
    for (i, id) in ids.iter().enumerate() {
        let (block, _) = id.target(subject);
        let f = subject.index_of(id.function()).expect("objective function exists");
        if pdoms[f].post_dominates(block, subject.cfgs[f].entry()) {
            continue;
        }
        let cd = &subject.cds[f];
        for &(c, side) in cd.of(block) {
            if c == block {
                continue;
            }
            let parent = ObjectiveId::Branch {
                function: id.function().to_string(),
                block: c,
                side,
            };
            if let Some(p) = index_of(&parent) {
                parents[i].push(p);
                children[p].push(i);
            }
        }
    }
    (parents, children)
}
