//! Two-level saturating-counter branch predictors behind one interface.
//!
//! Five families are implemented: bimodal, gshare, a local two-level
//! predictor, a tournament predictor (global + local components arbitrated
//! by a choice table) and BiMode (taken/not-taken direction PHTs selected
//! by a choice table). All families expose the same introspection and bulk
//! mutation surface: a direction bitmap over their *tracked* entries, a
//! per-update flip report, whole-table inversion and selective resets.
//!
//! Tracked entries are the direction PHTs only. Choice tables and history
//! registers are never part of the direction map, never inverted by
//! `invert_all` and never touched by `reset_entries`; `reset_all` clears
//! everything. For tournament the tracked index space is
//! `[0, n)` = global PHT, `[n, 2n)` = local PHT; for BiMode it is
//! `[0, n)` = taken PHT, `[n, 2n)` = not-taken PHT.

use std::fmt;
use std::str::FromStr;

use crate::bits::DirectionMap;
use crate::counter::{Outcome, SaturatingCounter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorFamily {
    Bimodal,
    Gshare,
    LocalTwoLevel,
    Tournament,
    Bimode,
}

impl PredictorFamily {
    pub const ALL: [PredictorFamily; 5] = [
        PredictorFamily::Bimodal,
        PredictorFamily::Gshare,
        PredictorFamily::LocalTwoLevel,
        PredictorFamily::Tournament,
        PredictorFamily::Bimode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PredictorFamily::Bimodal => "bimodal",
            PredictorFamily::Gshare => "gshare",
            PredictorFamily::LocalTwoLevel => "local_two_level",
            PredictorFamily::Tournament => "tournament",
            PredictorFamily::Bimode => "bimode",
        }
    }
}

impl FromStr for PredictorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bimodal" => Ok(PredictorFamily::Bimodal),
            "gshare" => Ok(PredictorFamily::Gshare),
            "local_two_level" => Ok(PredictorFamily::LocalTwoLevel),
            "tournament" => Ok(PredictorFamily::Tournament),
            "bimode" => Ok(PredictorFamily::Bimode),
            other => Err(Error::config(format!("unknown predictor family '{other}'"))),
        }
    }
}

impl fmt::Display for PredictorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Static predictor geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub family: PredictorFamily,
    /// Entries per PHT; must be a power of two.
    pub pht_entries: usize,
    /// Bits per saturating counter.
    pub counter_width: u8,
    /// Global/local history length in bits.
    pub history_bits: u32,
    /// Value every counter is reset to (weakly not-taken by default).
    pub init_value: u8,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            family: PredictorFamily::Bimodal,
            pht_entries: 128,
            counter_width: 2,
            history_bits: 7,
            init_value: 1,
        }
    }
}

impl PredictorConfig {
    pub fn new(family: PredictorFamily, pht_entries: usize) -> Self {
        PredictorConfig {
            family,
            pht_entries,
            history_bits: pht_entries.trailing_zeros(),
            ..PredictorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.pht_entries.is_power_of_two() {
            return Err(Error::config(format!(
                "pht_entries must be a power of two (got {})",
                self.pht_entries
            )));
        }
        if !(1..=8).contains(&self.counter_width) {
            return Err(Error::config(format!(
                "counter_width must be 1..=8 (got {})",
                self.counter_width
            )));
        }
        if self.history_bits > 32 {
            return Err(Error::config(format!(
                "history_bits must be <= 32 (got {})",
                self.history_bits
            )));
        }
        if self.init_value > SaturatingCounter::max_value(self.counter_width) {
            return Err(Error::config(format!(
                "init_value {} exceeds {}-bit counter range",
                self.init_value, self.counter_width
            )));
        }
        Ok(())
    }

    /// Number of direction-PHT entries covered by the direction map.
    pub fn tracked_entries(&self) -> usize {
        match self.family {
            PredictorFamily::Tournament | PredictorFamily::Bimode => 2 * self.pht_entries,
            _ => self.pht_entries,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PredictorStats {
    /// Branch updates applied.
    pub updates: u64,
    /// Tracked-entry direction flips observed across all updates.
    pub direction_flips: u64,
}

/// Tracked direction-PHT indices touched or flipped by one update.
/// No family touches more than two direction entries per branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntrySet {
    buf: [usize; 2],
    len: usize,
}

impl EntrySet {
    fn none() -> Self {
        EntrySet { buf: [0; 2], len: 0 }
    }

    fn one(a: usize) -> Self {
        EntrySet { buf: [a, 0], len: 1 }
    }

    fn two(a: usize, b: usize) -> Self {
        EntrySet { buf: [a, b], len: 2 }
    }

    fn push(&mut self, idx: usize) {
        self.buf[self.len] = idx;
        self.len += 1;
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.buf[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.as_slice().contains(&idx)
    }
}

impl<'a> IntoIterator for &'a EntrySet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.as_slice().iter()
    }
}

/// Indices of tracked entries whose direction bit flipped in one update.
pub type FlipReport = EntrySet;

/// A flat array of equally sized saturating counters.
#[derive(Debug, Clone, PartialEq, Eq)]
struct CounterTable {
    values: Vec<u8>,
    width: u8,
}

impl CounterTable {
    fn new(len: usize, width: u8, init: u8) -> Self {
        CounterTable {
            values: vec![init; len],
            width,
        }
    }

    #[inline]
    fn direction(&self, idx: usize) -> bool {
        self.values[idx] >> (self.width - 1) != 0
    }

    #[inline]
    fn update(&mut self, idx: usize, outcome: Outcome) -> bool {
        let mut c = SaturatingCounter::new(self.values[idx], self.width);
        let flipped = c.update(outcome);
        self.values[idx] = c.value();
        flipped
    }

    fn invert(&mut self, idx: usize) {
        let mut c = SaturatingCounter::new(self.values[idx], self.width);
        c.invert();
        self.values[idx] = c.value();
    }

    fn fill(&mut self, value: u8) {
        self.values.fill(value);
    }

    fn len(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tables {
    Bimodal {
        pht: CounterTable,
    },
    Gshare {
        pht: CounterTable,
        ghr: u64,
    },
    LocalTwoLevel {
        /// Per-branch history registers, indexed by pc.
        lht: Vec<u64>,
        pht: CounterTable,
    },
    Tournament {
        global: CounterTable,
        local_hist: Vec<u64>,
        local: CounterTable,
        choice: CounterTable,
        ghr: u64,
    },
    Bimode {
        taken: CounterTable,
        not_taken: CounterTable,
        choice: CounterTable,
        ghr: u64,
    },
}

/// One predictor instance: configuration, tables and running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    config: PredictorConfig,
    tables: Tables,
    stats: PredictorStats,
}

impl Predictor {
    pub fn new(config: PredictorConfig) -> Result<Self> {
        config.validate()?;
        let n = config.pht_entries;
        let w = config.counter_width;
        let init = config.init_value;
        let tables = match config.family {
            PredictorFamily::Bimodal => Tables::Bimodal {
                pht: CounterTable::new(n, w, init),
            },
            PredictorFamily::Gshare => Tables::Gshare {
                pht: CounterTable::new(n, w, init),
                ghr: 0,
            },
            PredictorFamily::LocalTwoLevel => Tables::LocalTwoLevel {
                lht: vec![0; n],
                pht: CounterTable::new(n, w, init),
            },
            PredictorFamily::Tournament => Tables::Tournament {
                global: CounterTable::new(n, w, init),
                local_hist: vec![0; n],
                local: CounterTable::new(n, w, init),
                choice: CounterTable::new(n, w, init),
                ghr: 0,
            },
            PredictorFamily::Bimode => Tables::Bimode {
                taken: CounterTable::new(n, w, init),
                not_taken: CounterTable::new(n, w, init),
                choice: CounterTable::new(n, w, init),
                ghr: 0,
            },
        };
        Ok(Predictor {
            config,
            tables,
            stats: PredictorStats::default(),
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn stats(&self) -> PredictorStats {
        self.stats
    }

    pub fn tracked_entries(&self) -> usize {
        self.config.tracked_entries()
    }

    #[inline]
    fn index_mask(&self) -> usize {
        self.config.pht_entries - 1
    }

    #[inline]
    fn history_mask(&self) -> u64 {
        if self.config.history_bits == 0 {
            0
        } else {
            (1u64 << self.config.history_bits) - 1
        }
    }

    /// Predict the direction of the branch at `pc`. Pure read.
    pub fn predict(&self, pc: u64) -> Outcome {
        let mask = self.index_mask();
        let taken = match &self.tables {
            Tables::Bimodal { pht } => pht.direction(pc as usize & mask),
            Tables::Gshare { pht, ghr } => pht.direction((pc ^ ghr) as usize & mask),
            Tables::LocalTwoLevel { lht, pht } => {
                let hist = lht[pc as usize & mask];
                pht.direction(hist as usize & mask)
            }
            Tables::Tournament {
                global,
                local_hist,
                local,
                choice,
                ghr,
            } => {
                let g = global.direction(*ghr as usize & mask);
                let l = local.direction(local_hist[pc as usize & mask] as usize & mask);
                // choice MSB set = trust the global component
                if choice.direction(pc as usize & mask) {
                    g
                } else {
                    l
                }
            }
            Tables::Bimode {
                taken,
                not_taken,
                choice,
                ghr,
            } => {
                let dir_idx = (pc ^ ghr) as usize & mask;
                if choice.direction(pc as usize & mask) {
                    taken.direction(dir_idx)
                } else {
                    not_taken.direction(dir_idx)
                }
            }
        };
        Outcome::from_taken(taken)
    }

    /// Tracked direction entries the update for `pc` would write.
    /// Pure read; used for footprint accounting.
    pub fn access_indices(&self, pc: u64) -> EntrySet {
        let mask = self.index_mask();
        let n = self.config.pht_entries;
        match &self.tables {
            Tables::Bimodal { .. } => EntrySet::one(pc as usize & mask),
            Tables::Gshare { ghr, .. } => EntrySet::one((pc ^ ghr) as usize & mask),
            Tables::LocalTwoLevel { lht, .. } => {
                EntrySet::one(lht[pc as usize & mask] as usize & mask)
            }
            Tables::Tournament {
                local_hist, ghr, ..
            } => EntrySet::two(
                *ghr as usize & mask,
                n + (local_hist[pc as usize & mask] as usize & mask),
            ),
            Tables::Bimode { choice, ghr, .. } => {
                let dir_idx = (pc ^ ghr) as usize & mask;
                if choice.direction(pc as usize & mask) {
                    EntrySet::one(dir_idx)
                } else {
                    EntrySet::one(n + dir_idx)
                }
            }
        }
    }

    /// Apply the resolved outcome for the branch at `pc` and report which
    /// tracked entries flipped direction.
    pub fn update(&mut self, pc: u64, outcome: Outcome) -> FlipReport {
        let mask = self.index_mask();
        let hist_mask = self.history_mask();
        let n = self.config.pht_entries;
        let taken_bit = outcome.is_taken() as u64;
        let mut flips = FlipReport::none();

        match &mut self.tables {
            Tables::Bimodal { pht } => {
                let idx = pc as usize & mask;
                if pht.update(idx, outcome) {
                    flips.push(idx);
                }
            }
            Tables::Gshare { pht, ghr } => {
                let idx = (pc ^ *ghr) as usize & mask;
                if pht.update(idx, outcome) {
                    flips.push(idx);
                }
                *ghr = (*ghr << 1 | taken_bit) & hist_mask;
            }
            Tables::LocalTwoLevel { lht, pht } => {
                let lht_idx = pc as usize & mask;
                let hist = lht[lht_idx];
                let idx = hist as usize & mask;
                if pht.update(idx, outcome) {
                    flips.push(idx);
                }
                lht[lht_idx] = (hist << 1 | taken_bit) & hist_mask;
            }
            Tables::Tournament {
                global,
                local_hist,
                local,
                choice,
                ghr,
            } => {
                let g_idx = *ghr as usize & mask;
                let lht_idx = pc as usize & mask;
                let hist = local_hist[lht_idx];
                let l_idx = hist as usize & mask;
                let c_idx = pc as usize & mask;

                let g_correct = global.direction(g_idx) == outcome.is_taken();
                let l_correct = local.direction(l_idx) == outcome.is_taken();

                if global.update(g_idx, outcome) {
                    flips.push(g_idx);
                }
                if local.update(l_idx, outcome) {
                    flips.push(n + l_idx);
                }
                // the choice table learns which component to trust, moving
                // toward "global" only when exactly one component was right
                if g_correct != l_correct {
                    choice.update(c_idx, Outcome::from_taken(g_correct));
                }

                *ghr = (*ghr << 1 | taken_bit) & hist_mask;
                local_hist[lht_idx] = (hist << 1 | taken_bit) & hist_mask;
            }
            Tables::Bimode {
                taken,
                not_taken,
                choice,
                ghr,
            } => {
                let c_idx = pc as usize & mask;
                let dir_idx = (pc ^ *ghr) as usize & mask;
                let use_taken = choice.direction(c_idx);
                let (table, offset) = if use_taken {
                    (taken, 0)
                } else {
                    (not_taken, n)
                };
                let dir_pred = table.direction(dir_idx);
                if table.update(dir_idx, outcome) {
                    flips.push(offset + dir_idx);
                }
                // the choice table is updated with the outcome except when
                // it disagreed with the outcome but the selected direction
                // PHT was nevertheless correct
                if !(use_taken != outcome.is_taken() && dir_pred == outcome.is_taken()) {
                    choice.update(c_idx, outcome);
                }
                *ghr = (*ghr << 1 | taken_bit) & hist_mask;
            }
        }

        self.stats.updates += 1;
        self.stats.direction_flips += flips.len() as u64;
        flips
    }

    /// Direction bits of every tracked entry, in tracked-index order.
    pub fn direction_map(&self) -> DirectionMap {
        let n = self.config.pht_entries;
        let mut map = DirectionMap::new(self.tracked_entries());
        let mut fill = |offset: usize, table: &CounterTable| {
            for i in 0..table.len() {
                if table.direction(i) {
                    map.set(offset + i, true);
                }
            }
        };
        match &self.tables {
            Tables::Bimodal { pht } => fill(0, pht),
            Tables::Gshare { pht, .. } => fill(0, pht),
            Tables::LocalTwoLevel { pht, .. } => fill(0, pht),
            Tables::Tournament { global, local, .. } => {
                fill(0, global);
                fill(n, local);
            }
            Tables::Bimode {
                taken, not_taken, ..
            } => {
                fill(0, taken);
                fill(n, not_taken);
            }
        }
        map
    }

    fn tracked_table_mut(&mut self, idx: usize) -> Result<(&mut CounterTable, usize)> {
        let n = self.config.pht_entries;
        let len = self.tracked_entries();
        if idx >= len {
            return Err(Error::IndexOutOfRange { index: idx, len });
        }
        let table = match &mut self.tables {
            Tables::Bimodal { pht } => pht,
            Tables::Gshare { pht, .. } => pht,
            Tables::LocalTwoLevel { pht, .. } => pht,
            Tables::Tournament { global, local, .. } => {
                if idx < n {
                    global
                } else {
                    local
                }
            }
            Tables::Bimode {
                taken, not_taken, ..
            } => {
                if idx < n {
                    taken
                } else {
                    not_taken
                }
            }
        };
        Ok((table, idx % n))
    }

    fn tracked_table(&self, idx: usize) -> Result<(&CounterTable, usize)> {
        let n = self.config.pht_entries;
        let len = self.tracked_entries();
        if idx >= len {
            return Err(Error::IndexOutOfRange { index: idx, len });
        }
        let table = match &self.tables {
            Tables::Bimodal { pht } => pht,
            Tables::Gshare { pht, .. } => pht,
            Tables::LocalTwoLevel { pht, .. } => pht,
            Tables::Tournament { global, local, .. } => {
                if idx < n {
                    global
                } else {
                    local
                }
            }
            Tables::Bimode {
                taken, not_taken, ..
            } => {
                if idx < n {
                    taken
                } else {
                    not_taken
                }
            }
        };
        Ok((table, idx % n))
    }

    /// Invert every tracked direction counter. Choice tables and history
    /// registers are untouched.
    pub fn invert_all(&mut self) {
        let invert = |table: &mut CounterTable| {
            for i in 0..table.len() {
                table.invert(i);
            }
        };
        match &mut self.tables {
            Tables::Bimodal { pht } => invert(pht),
            Tables::Gshare { pht, .. } => invert(pht),
            Tables::LocalTwoLevel { pht, .. } => invert(pht),
            Tables::Tournament { global, local, .. } => {
                invert(global);
                invert(local);
            }
            Tables::Bimode {
                taken, not_taken, ..
            } => {
                invert(taken);
                invert(not_taken);
            }
        }
    }

    /// Set the listed tracked entries back to the configured init value.
    /// Every other counter, all history registers and all choice tables
    /// are left bit-identical.
    pub fn reset_entries(&mut self, indices: &[usize]) -> Result<()> {
        let len = self.tracked_entries();
        // validate everything first so a bad index mutates nothing
        for &idx in indices {
            if idx >= len {
                return Err(Error::IndexOutOfRange { index: idx, len });
            }
        }
        let init = self.config.init_value;
        for &idx in indices {
            let (table, local_idx) = self.tracked_table_mut(idx)?;
            table.values[local_idx] = init;
        }
        Ok(())
    }

    /// Full reset: every counter (direction and choice) to init value,
    /// all history registers zeroed. Statistics are preserved.
    pub fn reset_all(&mut self) {
        let init = self.config.init_value;
        match &mut self.tables {
            Tables::Bimodal { pht } => pht.fill(init),
            Tables::Gshare { pht, ghr } => {
                pht.fill(init);
                *ghr = 0;
            }
            Tables::LocalTwoLevel { lht, pht } => {
                lht.fill(0);
                pht.fill(init);
            }
            Tables::Tournament {
                global,
                local_hist,
                local,
                choice,
                ghr,
            } => {
                global.fill(init);
                local_hist.fill(0);
                local.fill(init);
                choice.fill(init);
                *ghr = 0;
            }
            Tables::Bimode {
                taken,
                not_taken,
                choice,
                ghr,
            } => {
                taken.fill(init);
                not_taken.fill(init);
                choice.fill(init);
                *ghr = 0;
            }
        }
    }

    /// Read one tracked counter (introspection hook).
    pub fn tracked_counter(&self, idx: usize) -> Result<SaturatingCounter> {
        let width = self.config.counter_width;
        let (table, local_idx) = self.tracked_table(idx)?;
        Ok(SaturatingCounter::new(table.values[local_idx], width))
    }

    /// Overwrite one tracked counter (bulk-mutation hook for experiments).
    pub fn set_tracked_counter(&mut self, idx: usize, value: u8) -> Result<()> {
        if value > SaturatingCounter::max_value(self.config.counter_width) {
            return Err(Error::config(format!(
                "counter value {value} exceeds {}-bit range",
                self.config.counter_width
            )));
        }
        let (table, local_idx) = self.tracked_table_mut(idx)?;
        table.values[local_idx] = value;
        Ok(())
    }

    /// Overwrite the global history register, where the family has one.
    pub fn set_history(&mut self, bits: u64) {
        let hist_mask = self.history_mask();
        match &mut self.tables {
            Tables::Gshare { ghr, .. }
            | Tables::Tournament { ghr, .. }
            | Tables::Bimode { ghr, .. } => *ghr = bits & hist_mask,
            _ => {}
        }
    }
}
