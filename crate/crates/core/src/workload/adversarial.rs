//! Engineered two-process aliasing workloads.
//!
//! Both processes draw their pcs from synthetic address blocks chosen so
//! that the bimodal index function (`pc mod pht_entries`) maps them onto
//! controlled PHT index sets: identical sets with opposite biases
//! (destructive), identical sets with identical biases (constructive), or
//! disjoint sets (neutral).
//!
//! Each stream has two phases: a warm-up that cycles through a small
//! leading sub-block, then the full block. The phase change makes the
//! per-slice direction-change count of a transition jump, which is what a
//! change-driven reset policy keys on; a stationary stream never moves
//! that measurement.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counter::Outcome;
use crate::error::{Error, Result};
use crate::predictor::PredictorConfig;
use crate::workload::BranchEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversarialMode {
    /// Shared indices, opposite biases.
    Destructive,
    /// Disjoint index sets.
    Neutral,
    /// Shared indices, identical biases.
    Constructive,
}

impl AdversarialMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AdversarialMode::Destructive => "destructive",
            AdversarialMode::Neutral => "neutral",
            AdversarialMode::Constructive => "constructive",
        }
    }
}

impl FromStr for AdversarialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "destructive" => Ok(AdversarialMode::Destructive),
            "neutral" => Ok(AdversarialMode::Neutral),
            "constructive" => Ok(AdversarialMode::Constructive),
            other => Err(Error::config(format!("unknown adversarial mode '{other}'"))),
        }
    }
}

impl fmt::Display for AdversarialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialSpec {
    pub mode: AdversarialMode,
    /// Distinct PHT indices each process touches.
    pub pc_block_count: usize,
    /// Taken probability for process A. In destructive mode process B uses
    /// `1 - bias`; otherwise both use `bias`.
    pub bias: f64,
    /// Branch events per process.
    pub length: usize,
    /// Events per process spent cycling the warm-up sub-block before the
    /// stream expands to the full block.
    pub warmup_len: usize,
    pub seed: u64,
}

impl AdversarialSpec {
    pub fn new(mode: AdversarialMode, seed: u64) -> Self {
        AdversarialSpec {
            mode,
            pc_block_count: 64,
            bias: 0.95,
            length: 100_000,
            warmup_len: 20_000,
            seed,
        }
    }

    fn validate(&self, predictor: &PredictorConfig) -> Result<()> {
        let entries = predictor.pht_entries;
        if self.pc_block_count == 0 {
            return Err(Error::config("pc_block_count must be >= 1"));
        }
        if self.pc_block_count > entries {
            return Err(Error::config(format!(
                "pc_block_count {} exceeds pht_entries {entries}",
                self.pc_block_count
            )));
        }
        if self.mode == AdversarialMode::Neutral && 2 * self.pc_block_count > entries {
            return Err(Error::config(format!(
                "neutral mode needs 2 * pc_block_count <= pht_entries ({} > {entries})",
                2 * self.pc_block_count
            )));
        }
        if !(0.0..=1.0).contains(&self.bias) {
            return Err(Error::config(format!("bias {} outside [0, 1]", self.bias)));
        }
        if self.warmup_len > self.length {
            return Err(Error::config(format!(
                "warmup_len {} exceeds length {}",
                self.warmup_len, self.length
            )));
        }
        Ok(())
    }
}

/// How much of the block the warm-up phase cycles through.
const WARMUP_BLOCK_DIVISOR: usize = 16;

fn stream(
    index_base: usize,
    pc_base: u64,
    block: usize,
    bias: f64,
    length: usize,
    warmup_len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<BranchEvent> {
    let warm_block = (block / WARMUP_BLOCK_DIVISOR).max(1);
    let mut events = Vec::with_capacity(length);
    for i in 0..length {
        let active = if i < warmup_len { warm_block } else { block };
        let idx = index_base + i % active;
        events.push(BranchEvent {
            pc: pc_base + idx as u64,
            outcome: Outcome::from_taken(rng.gen_bool(bias)),
        });
    }
    events
}

/// Generate the two per-process branch sequences for an aliasing scenario.
pub fn gen_adversarial_pair(
    spec: &AdversarialSpec,
    predictor: &PredictorConfig,
) -> Result<[Vec<BranchEvent>; 2]> {
    predictor.validate()?;
    spec.validate(predictor)?;
    let entries = predictor.pht_entries;

    // distinct pc blocks per process (different branch addresses), aligned
    // so that pc mod entries lands on the intended index sets
    let pc_base_a = entries as u64;
    let pc_base_b = 2 * entries as u64;
    let index_base_b = match spec.mode {
        AdversarialMode::Destructive | AdversarialMode::Constructive => 0,
        AdversarialMode::Neutral => spec.pc_block_count,
    };
    let bias_b = match spec.mode {
        AdversarialMode::Destructive => 1.0 - spec.bias,
        _ => spec.bias,
    };

    let mut rng_a = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rng_b = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let a = stream(
        0,
        pc_base_a,
        spec.pc_block_count,
        spec.bias,
        spec.length,
        spec.warmup_len,
        &mut rng_a,
    );
    let b = stream(
        index_base_b,
        pc_base_b,
        spec.pc_block_count,
        bias_b,
        spec.length,
        spec.warmup_len,
        &mut rng_b,
    );
    Ok([a, b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{Predictor, PredictorFamily};

    fn cfg(entries: usize) -> PredictorConfig {
        PredictorConfig::new(PredictorFamily::Bimodal, entries)
    }

    fn index_set(events: &[BranchEvent], entries: usize) -> std::collections::BTreeSet<usize> {
        events.iter().map(|e| e.pc as usize % entries).collect()
    }

    #[test]
    fn destructive_single_index_is_fully_opposed() {
        let spec = AdversarialSpec {
            mode: AdversarialMode::Destructive,
            pc_block_count: 1,
            bias: 1.0,
            length: 200,
            warmup_len: 0,
            seed: 3,
        };
        let [a, b] = gen_adversarial_pair(&spec, &cfg(128)).unwrap();
        assert_eq!(index_set(&a, 128), index_set(&b, 128));
        assert_eq!(index_set(&a, 128).len(), 1);
        assert!(a.iter().all(|e| e.outcome.is_taken()));
        assert!(b.iter().all(|e| !e.outcome.is_taken()));
    }

    #[test]
    fn neutral_index_sets_are_disjoint() {
        let spec = AdversarialSpec {
            mode: AdversarialMode::Neutral,
            pc_block_count: 4,
            bias: 0.9,
            length: 500,
            warmup_len: 100,
            seed: 5,
        };
        let [a, b] = gen_adversarial_pair(&spec, &cfg(128)).unwrap();
        let ia = index_set(&a, 128);
        let ib = index_set(&b, 128);
        assert!(ia.is_disjoint(&ib));
    }

    #[test]
    fn constructive_warm_start_beats_cold_start() {
        let spec = AdversarialSpec {
            mode: AdversarialMode::Constructive,
            pc_block_count: 32,
            bias: 1.0,
            length: 2000,
            warmup_len: 0,
            seed: 9,
        };
        let pcfg = cfg(128);
        let [a, b] = gen_adversarial_pair(&spec, &pcfg).unwrap();

        let mispredicts = |events: &[BranchEvent], p: &mut Predictor| {
            events
                .iter()
                .filter(|e| {
                    let wrong = p.predict(e.pc) != e.outcome;
                    p.update(e.pc, e.outcome);
                    wrong
                })
                .count()
        };

        let mut cold = Predictor::new(pcfg.clone()).unwrap();
        let cold_misses = mispredicts(&b, &mut cold);

        let mut warm = Predictor::new(pcfg).unwrap();
        mispredicts(&a, &mut warm);
        let warm_misses = mispredicts(&b, &mut warm);
        assert!(
            warm_misses < cold_misses,
            "warm {warm_misses} vs cold {cold_misses}"
        );
    }

    #[test]
    fn oversized_blocks_are_rejected() {
        let spec = AdversarialSpec {
            pc_block_count: 256,
            ..AdversarialSpec::new(AdversarialMode::Destructive, 0)
        };
        assert!(gen_adversarial_pair(&spec, &cfg(128)).is_err());
        let spec = AdversarialSpec {
            pc_block_count: 65,
            ..AdversarialSpec::new(AdversarialMode::Neutral, 0)
        };
        assert!(gen_adversarial_pair(&spec, &cfg(128)).is_err());
    }

    #[test]
    fn pairs_are_deterministic_per_seed() {
        let spec = AdversarialSpec::new(AdversarialMode::Destructive, 42);
        let x = gen_adversarial_pair(&spec, &cfg(1024)).unwrap();
        let y = gen_adversarial_pair(&spec, &cfg(1024)).unwrap();
        assert_eq!(x, y);
    }
}
