//! Shared input builders for the benchmark targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use csaf_core::{BranchEvent, Outcome, Pid, TraceEvent};

/// Uniform random branch stream over a bounded pc range.
pub fn random_branches(len: usize, pc_range: u64, seed: u64) -> Vec<BranchEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| BranchEvent {
            pc: rng.gen_range(0..pc_range),
            outcome: Outcome::from_taken(rng.gen_bool(0.6)),
        })
        .collect()
}

/// A two-process trace alternating every `slice_len` branches.
pub fn alternating_trace(len: usize, slice_len: usize, seed: u64) -> Vec<TraceEvent> {
    let branches = random_branches(len, 4096, seed);
    let mut trace = Vec::with_capacity(len + len / slice_len + 1);
    for (i, branch) in branches.into_iter().enumerate() {
        if i % slice_len == 0 {
            trace.push(TraceEvent::Switch {
                next: Pid((i / slice_len % 2) as u32),
            });
        }
        trace.push(TraceEvent::Branch(branch));
    }
    trace
}
