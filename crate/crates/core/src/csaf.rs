//! Context-switch accuracy framework: per-transition bookkeeping that
//! decides, at each context switch, whether to selectively wipe the PHT
//! entries that flipped direction since the incoming process last ran.
//!
//! The mechanism keeps a fixed-capacity LRU table keyed by
//! (outgoing pid, incoming pid). Each entry stores the direction-change
//! count observed the last time that transition ran and a 2-bit decision
//! counter, initialized to strongly not-taken. The counter is *inverted*
//! (never incremented or decremented) when a transition's change count
//! worsens past a configurable threshold; a counter with its MSB set means
//! "wipe the changed entries on this transition".

use std::fmt;
use std::str::FromStr;

use crate::bits::DirectionMap;
use crate::counter::SaturatingCounter;
use crate::error::{Error, Result};
use crate::lru::LruTable;
use crate::predictor::Predictor;

/// Process identifier carried by context-switch trace markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pid(pub u32);

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What the simulation does to the predictor at each context switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsafMode {
    /// Learned selective resets (the framework proper).
    Csaf,
    /// Never touch the predictor.
    Baseline,
    /// Reset the changed-entry set on every switch, unconditionally.
    AlwaysResetSelective,
    /// Reset the whole predictor on every switch.
    AlwaysResetFull,
}

impl CsafMode {
    pub const ALL: [CsafMode; 4] = [
        CsafMode::Csaf,
        CsafMode::Baseline,
        CsafMode::AlwaysResetSelective,
        CsafMode::AlwaysResetFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CsafMode::Csaf => "csaf",
            CsafMode::Baseline => "baseline",
            CsafMode::AlwaysResetSelective => "always_reset_selective",
            CsafMode::AlwaysResetFull => "always_reset_full",
        }
    }
}

impl FromStr for CsafMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csaf" => Ok(CsafMode::Csaf),
            "baseline" => Ok(CsafMode::Baseline),
            "always_reset_selective" => Ok(CsafMode::AlwaysResetSelective),
            "always_reset_full" => Ok(CsafMode::AlwaysResetFull),
            other => Err(Error::config(format!("unknown csaf mode '{other}'"))),
        }
    }
}

impl fmt::Display for CsafMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DECISION_COUNTER_WIDTH: u8 = 2;

/// Per-(from, to) record: change count seen at the transition's last
/// occurrence plus the reset/keep decision counter.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEntry {
    pub last_change_count: usize,
    pub decision_counter: SaturatingCounter,
}

impl TransitionEntry {
    fn new(observed: usize) -> Self {
        TransitionEntry {
            last_change_count: observed,
            // strongly not-taken: fresh transitions never reset
            decision_counter: SaturatingCounter::new(0, DECISION_COUNTER_WIDTH),
        }
    }
}

/// Number of distinct entries whose direction at slice end differs from
/// slice start.
pub fn slice_change_count(start: &DirectionMap, end: &DirectionMap) -> Result<usize> {
    start.xor_count(end)
}

fn worsened(observed: usize, stored: usize, threshold: f64) -> bool {
    if !threshold.is_finite() {
        return false;
    }
    observed as f64 > stored as f64 * (1.0 + threshold)
}

/// Fixed-capacity LRU map from (from_pid, to_pid) to a `TransitionEntry`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    inner: LruTable<(Pid, Pid), TransitionEntry>,
}

impl TransitionTable {
    pub fn new(capacity: usize) -> Self {
        TransitionTable {
            inner: LruTable::new(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.inner.capacity()
    }

    /// Fold one observed change count into the entry for `key`.
    ///
    /// Absent keys are inserted with the observation and a strongly
    /// not-taken counter, evicting the LRU victim if the table is full.
    /// For present keys the decision counter is inverted iff the count
    /// worsened past `observed > stored * (1 + threshold)`; the stored
    /// count is then replaced and the key becomes most recently used.
    /// Returns the evicted victim, if any.
    pub fn record_outcome(
        &mut self,
        key: (Pid, Pid),
        observed: usize,
        threshold: f64,
    ) -> Option<((Pid, Pid), TransitionEntry)> {
        if let Some(entry) = self.inner.get_refresh(&key) {
            if worsened(observed, entry.last_change_count, threshold) {
                entry.decision_counter.invert();
            }
            entry.last_change_count = observed;
            None
        } else {
            self.inner.insert(key, TransitionEntry::new(observed))
        }
    }

    /// True iff `key` is present and its decision counter indicates taken
    /// (MSB set). The lookup refreshes LRU recency; absent keys never
    /// request a reset.
    pub fn decide_reset(&mut self, key: (Pid, Pid)) -> bool {
        match self.inner.get_refresh(&key) {
            Some(entry) => entry.decision_counter.direction(),
            None => false,
        }
    }

    pub fn peek(&self, key: (Pid, Pid)) -> Option<&TransitionEntry> {
        self.inner.peek(&key)
    }

    /// Keys in recency order, most recently used first.
    pub fn keys(&self) -> impl Iterator<Item = &(Pid, Pid)> {
        self.inner.keys()
    }

    /// Force an entry's contents (experiment/scripting hook). Touches
    /// recency like a normal insert.
    pub fn set_entry(&mut self, key: (Pid, Pid), last_change_count: usize, counter_value: u8) {
        self.inner.insert(
            key,
            TransitionEntry {
                last_change_count,
                decision_counter: SaturatingCounter::new(counter_value, DECISION_COUNTER_WIDTH),
            },
        );
    }
}

/// Bounded per-pid store of direction maps captured at the end of each
/// process's most recent time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStore {
    inner: LruTable<Pid, DirectionMap>,
}

impl SnapshotStore {
    pub fn new(capacity: usize) -> Self {
        SnapshotStore {
            inner: LruTable::new(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn store(&mut self, pid: Pid, map: DirectionMap) {
        self.inner.insert(pid, map);
    }

    pub fn peek(&self, pid: Pid) -> Option<&DirectionMap> {
        self.inner.peek(&pid)
    }

    /// Indices where `pid`'s snapshot differs from `current`. A process
    /// with no snapshot (first run, or evicted) yields the empty set.
    pub fn changed_since_last_run(&mut self, pid: Pid, current: &DirectionMap) -> Result<Vec<usize>> {
        match self.inner.get_refresh(&pid) {
            Some(snapshot) => snapshot.diff_indices(current),
            None => Ok(Vec::new()),
        }
    }
}

/// Action taken on the predictor by one context switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchDecision {
    /// Switch to the already-running pid: nothing happens.
    SelfSwitch,
    /// Predictor left untouched.
    NoReset,
    /// Changed-entry set wiped to the init value.
    SelectiveReset,
    /// Whole predictor reset.
    FullReset,
}

impl SwitchDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            SwitchDecision::SelfSwitch => "self_switch",
            SwitchDecision::NoReset => "none",
            SwitchDecision::SelectiveReset => "selective_reset",
            SwitchDecision::FullReset => "full_reset",
        }
    }
}

impl fmt::Display for SwitchDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What one context switch observed and did.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchReport {
    pub from: Option<Pid>,
    pub to: Pid,
    /// Entries whose direction at slice end differed from slice start.
    pub observed_changes: usize,
    pub decision: SwitchDecision,
    pub reset_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsafConfig {
    pub mode: CsafMode,
    /// Relative worsening factor; a transition's counter inverts when
    /// observed > stored * (1 + threshold). +inf disables inversion.
    pub threshold: f64,
    /// Capacity of the transition table and of the snapshot store.
    pub table_capacity: usize,
}

impl Default for CsafConfig {
    fn default() -> Self {
        CsafConfig {
            mode: CsafMode::Csaf,
            threshold: 0.25,
            table_capacity: 64,
        }
    }
}

impl CsafConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return Err(Error::config(format!(
                "csaf threshold must be >= 0 (got {})",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Live framework state for one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct CsafState {
    config: CsafConfig,
    table: TransitionTable,
    snapshots: SnapshotStore,
    current: Option<Pid>,
    previous: Option<Pid>,
    slice_start: DirectionMap,
}

impl CsafState {
    /// `initial_map` is the predictor's direction map at simulation start;
    /// it seeds the first slice-start snapshot.
    pub fn new(config: CsafConfig, initial_map: DirectionMap) -> Result<Self> {
        config.validate()?;
        let capacity = config.table_capacity;
        Ok(CsafState {
            config,
            table: TransitionTable::new(capacity),
            snapshots: SnapshotStore::new(capacity),
            current: None,
            previous: None,
            slice_start: initial_map,
        })
    }

    pub fn mode(&self) -> CsafMode {
        self.config.mode
    }

    pub fn current_pid(&self) -> Option<Pid> {
        self.current
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }

    /// Mutable access to the transition table (experiment hook).
    pub fn table_mut(&mut self) -> &mut TransitionTable {
        &mut self.table
    }

    pub fn snapshots(&self) -> &SnapshotStore {
        &self.snapshots
    }

    /// Handle the switch from the running process to `next`.
    ///
    /// In order: (1) measure this slice's direction changes, (2) fold the
    /// measurement into the transition that brought the current process in,
    /// (3) snapshot the current process's direction map, (4) apply the
    /// mode's reset policy for the (current -> next) transition, (5) roll
    /// the pid bookkeeping and restart the slice-start map from the
    /// post-reset predictor state.
    pub fn on_context_switch(
        &mut self,
        predictor: &mut Predictor,
        next: Pid,
    ) -> Result<SwitchReport> {
        let end_map = predictor.direction_map();
        let observed = slice_change_count(&self.slice_start, &end_map)?;

        if self.current == Some(next) {
            return Ok(SwitchReport {
                from: self.current,
                to: next,
                observed_changes: observed,
                decision: SwitchDecision::SelfSwitch,
                reset_count: 0,
            });
        }

        if let (Some(prev), Some(cur)) = (self.previous, self.current) {
            self.table
                .record_outcome((prev, cur), observed, self.config.threshold);
        }

        if let Some(cur) = self.current {
            self.snapshots.store(cur, end_map.clone());
        }

        let mut decision = SwitchDecision::NoReset;
        let mut reset_count = 0;
        match self.config.mode {
            CsafMode::Baseline => {}
            CsafMode::Csaf => {
                let wants_reset = match self.current {
                    Some(cur) => self.table.decide_reset((cur, next)),
                    None => false,
                };
                if wants_reset {
                    let set = self.snapshots.changed_since_last_run(next, &end_map)?;
                    predictor.reset_entries(&set)?;
                    reset_count = set.len();
                    decision = SwitchDecision::SelectiveReset;
                }
            }
            CsafMode::AlwaysResetSelective => {
                let set = self.snapshots.changed_since_last_run(next, &end_map)?;
                predictor.reset_entries(&set)?;
                reset_count = set.len();
                decision = SwitchDecision::SelectiveReset;
            }
            CsafMode::AlwaysResetFull => {
                predictor.reset_all();
                reset_count = predictor.tracked_entries();
                decision = SwitchDecision::FullReset;
            }
        }

        let report = SwitchReport {
            from: self.current,
            to: next,
            observed_changes: observed,
            decision,
            reset_count,
        };
        self.previous = self.current;
        self.current = Some(next);
        self.slice_start = predictor.direction_map();
        Ok(report)
    }
}
