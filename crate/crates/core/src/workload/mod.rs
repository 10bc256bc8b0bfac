//! Multi-process branch trace generation: instrumented benchmark kernels,
//! adversarial aliasing pairs and a round-robin time-slice interleaver.

pub mod adversarial;
pub mod format;
pub mod kernels;

pub use adversarial::{gen_adversarial_pair, AdversarialMode, AdversarialSpec};
pub use format::{parse_trace, write_trace};
pub use kernels::{gen_kernel_trace, KernelName, KernelSpec};

use crate::counter::Outcome;
use crate::csaf::Pid;
use crate::error::{Error, Result};

/// One branch execution: raw instruction address plus resolved direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchEvent {
    pub pc: u64,
    pub outcome: Outcome,
}

/// The simulator's input alphabet: a branch or a context-switch marker
/// naming the incoming process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Branch(BranchEvent),
    Switch { next: Pid },
}

/// Round-robin time-slice schedule over per-pid branch sequences.
///
/// Processes run in ascending pid order, `slice_len` branches at a time.
/// A switch marker precedes each slice except when the same process keeps
/// running (a single remaining process is not re-announced). A process's
/// final partial slice is emitted, then it drops from the rotation.
pub fn interleave(
    sequences: &[(Pid, Vec<BranchEvent>)],
    slice_len: usize,
) -> Result<Vec<TraceEvent>> {
    if slice_len == 0 {
        return Err(Error::config("slice_len must be >= 1"));
    }
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    order.sort_by_key(|&i| sequences[i].0);
    for pair in order.windows(2) {
        if sequences[pair[0]].0 == sequences[pair[1]].0 {
            return Err(Error::config(format!(
                "duplicate pid {} in interleave input",
                sequences[pair[0]].0
            )));
        }
    }
    if sequences.iter().all(|(_, seq)| seq.is_empty()) {
        return Err(Error::EmptyTrace);
    }

    let total: usize = sequences.iter().map(|(_, s)| s.len()).sum();
    let mut out = Vec::with_capacity(total + total / slice_len + sequences.len());
    let mut cursors = vec![0usize; sequences.len()];
    let mut last_pid: Option<Pid> = None;

    loop {
        let mut progressed = false;
        for &i in &order {
            let (pid, seq) = &sequences[i];
            let cursor = cursors[i];
            if cursor >= seq.len() {
                continue;
            }
            progressed = true;
            if last_pid != Some(*pid) {
                out.push(TraceEvent::Switch { next: *pid });
                last_pid = Some(*pid);
            }
            let end = (cursor + slice_len).min(seq.len());
            out.extend(seq[cursor..end].iter().map(|&b| TraceEvent::Branch(b)));
            cursors[i] = end;
        }
        if !progressed {
            break;
        }
    }
    Ok(out)
}
