use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::compute::{compute_bbc, BbcInput};
use super::counters::BbcCounters;
use crate::analysis::Subject;

/// Minimum time an objective must have been active before BBC is consulted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sleep {
    Evaluations(u64),
    Seconds(f64),
}

impl Default for Sleep {
    fn default() -> Self {
        Sleep::Evaluations(0)
    }
}

/// How long an objective has been active.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActiveAge {
    pub evaluations: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub usage_rate: f64,
    #[serde(default)]
    pub sleep: Sleep,
}

/// Sleep-time and usage-rate filter in front of [`compute_bbc`], with its
/// own random stream so that draws never perturb the search's stream.
#[derive(Debug, Clone)]
pub struct BbcGate {
    config: GateConfig,
    rng: ChaCha8Rng,
}

impl BbcGate {
    pub fn new(config: GateConfig, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&config.usage_rate), "usage rate must lie in [0, 1]");
        BbcGate {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x6262_6367_6174_6500),
        }
    }

    pub fn config(&self) -> GateConfig {
        self.config
    }

    /// A zero budget disables sleeping altogether.
    fn asleep(&self, age: ActiveAge) -> bool {
        match self.config.sleep {
            Sleep::Evaluations(n) => n > 0 && age.evaluations <= n,
            Sleep::Seconds(s) => s > 0.0 && age.seconds <= s,
        }
    }

    /// Returns the BBC verdict, or 0 when the gate holds it back.
    pub fn compare(
        &mut self,
        subject: &Subject,
        input: &BbcInput<'_>,
        age: ActiveAge,
        counters: &mut BbcCounters,
    ) -> i64 {
        counters.calls += 1;
        if self.asleep(age) || self.config.usage_rate <= 0.0 {
            return 0;
        }
        if self.config.usage_rate < 1.0 && self.rng.gen::<f64>() >= self.config.usage_rate {
            return 0;
        }
        let outcome = compute_bbc(subject, input);
        if outcome.scenario.is_some() {
            counters.active += 1;
            if outcome.value != 0 {
                counters.useful += 1;
            }
        }
        outcome.value
    }
}
