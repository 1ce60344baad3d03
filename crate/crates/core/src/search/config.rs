use serde::{Deserialize, Serialize};

use crate::bbc::GateConfig;
use crate::minilang::DEFAULT_STEP_LIMIT;

/// When a search stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Evaluations(u64),
    /// Wall clock; runs are then not reproducible.
    Seconds(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub population_size: usize,
    pub budget: Budget,
    /// Per-statement mutation probability; `None` means 1/n.
    pub mutation_rate: Option<f64>,
    pub crossover_rate: f64,
    /// BBC tie-breaking; `None` leaves ties to test length alone.
    pub bbc: Option<GateConfig>,
    pub seed: u64,
    pub max_test_length: usize,
    pub step_limit: u64,
    /// Coverage is sampled every this many evaluations.
    pub timeline_interval: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population_size: 50,
            budget: Budget::Evaluations(5_000),
            mutation_rate: None,
            crossover_rate: 0.8,
            bbc: None,
            seed: 0,
            max_test_length: 30,
            step_limit: DEFAULT_STEP_LIMIT,
            timeline_interval: 100,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.population_size < 2 {
            return Err("population size must be at least 2".into());
        }
        if let Some(p) = self.mutation_rate {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("mutation rate {p} is outside [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(format!("crossover rate {} is outside [0, 1]", self.crossover_rate));
        }
        if let Some(g) = &self.bbc {
            if !(0.0..=1.0).contains(&g.usage_rate) {
                return Err(format!("BBC usage rate {} is outside [0, 1]", g.usage_rate));
            }
        }
        if matches!(self.budget, Budget::Evaluations(0)) {
            return Err("budget must allow at least one evaluation".into());
        }
        if self.timeline_interval == 0 {
            return Err("timeline interval must be positive".into());
        }
        Ok(())
    }
}
