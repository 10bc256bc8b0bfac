//! Measurement machinery: sliding-window misprediction series, per-process
//! aggregates, differential series, the trace-replay simulation loop and
//! transient-response experiments with periodic predictor disturbances.
//!
//! Event indices throughout are branch ordinals: the number of branch
//! events retired before the measured point. Switch markers do not
//! advance the index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::csaf::{CsafConfig, CsafState, Pid, SwitchReport};
use crate::error::{Error, Result};
use crate::predictor::{Predictor, PredictorConfig};
use crate::workload::TraceEvent;
use crate::Outcome;

/// One simulated branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimRecord {
    /// Branch ordinal within the run.
    pub event: u64,
    pub pid: Pid,
    pub predicted: Outcome,
    pub actual: Outcome,
    pub correct: bool,
}

impl SimRecord {
    pub fn new(event: u64, pid: Pid, predicted: Outcome, actual: Outcome) -> Self {
        SimRecord {
            event,
            pid,
            predicted,
            actual,
            correct: predicted == actual,
        }
    }
}

/// Time-indexed misprediction rates sampled at a fixed window.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    window: usize,
    points: Vec<(u64, f64)>,
}

impl MetricSeries {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean rate over points with index >= `from`.
    pub fn mean_from(&self, from: u64) -> Option<f64> {
        let tail: Vec<f64> = self
            .points
            .iter()
            .filter(|(i, _)| *i >= from)
            .map(|(_, r)| *r)
            .collect();
        if tail.is_empty() {
            None
        } else {
            Some(tail.iter().sum::<f64>() / tail.len() as f64)
        }
    }

    /// Maximum rate over indices in [from, to).
    pub fn max_in(&self, from: u64, to: u64) -> Option<(u64, f64)> {
        self.points
            .iter()
            .filter(|(i, _)| *i >= from && *i < to)
            .fold(None, |best, &(i, r)| match best {
                Some((_, br)) if br >= r => best,
                _ => Some((i, r)),
            })
    }
}

/// Misprediction fraction over the trailing `window` branches, emitted
/// once the window is full.
pub fn sliding_window_series(records: &[SimRecord], window: usize) -> Result<MetricSeries> {
    if window == 0 {
        return Err(Error::config("window must be >= 1"));
    }
    let mut points = Vec::new();
    if records.len() >= window {
        points.reserve(records.len() - window + 1);
        let mut wrong: usize = records[..window].iter().filter(|r| !r.correct).count();
        points.push((records[window - 1].event, wrong as f64 / window as f64));
        for i in window..records.len() {
            wrong += !records[i].correct as usize;
            wrong -= !records[i - window].correct as usize;
            points.push((records[i].event, wrong as f64 / window as f64));
        }
    }
    Ok(MetricSeries { window, points })
}

/// Per-process branch and misprediction totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProcessStats {
    pub branches: u64,
    pub mispredicts: u64,
}

impl ProcessStats {
    pub fn rate(&self) -> f64 {
        if self.branches == 0 {
            0.0
        } else {
            self.mispredicts as f64 / self.branches as f64
        }
    }
}

/// Misprediction fraction per pid over all of that pid's records. Pids
/// with no branches are absent.
pub fn per_process_rates(records: &[SimRecord]) -> BTreeMap<Pid, ProcessStats> {
    let mut out: BTreeMap<Pid, ProcessStats> = BTreeMap::new();
    for r in records {
        let stats = out.entry(r.pid).or_default();
        stats.branches += 1;
        stats.mispredicts += !r.correct as u64;
    }
    out
}

/// Pointwise `a - b` at indices present in both series.
pub fn differential_series(a: &MetricSeries, b: &MetricSeries) -> Result<MetricSeries> {
    if a.window != b.window {
        return Err(Error::config(format!(
            "differential of series with mismatched windows ({} vs {})",
            a.window, b.window
        )));
    }
    let mut points = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.points.len() && j < b.points.len() {
        let (ia, ra) = a.points[i];
        let (ib, rb) = b.points[j];
        match ia.cmp(&ib) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                points.push((ia, ra - rb));
                i += 1;
                j += 1;
            }
        }
    }
    Ok(MetricSeries {
        window: a.window,
        points,
    })
}

/// One context switch as seen by the simulation, stamped with the branch
/// ordinal at which it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchRecord {
    pub event: u64,
    pub report: SwitchReport,
}

/// Distinct tracked entries one time slice touched.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFootprint {
    pub pid: Pid,
    pub start_event: u64,
    pub touched: BTreeSet<usize>,
}

/// Fraction of tracked entries each slice touched.
pub fn footprint_stats(slices: &[SliceFootprint], predictor: &PredictorConfig) -> Vec<f64> {
    let total = predictor.tracked_entries().max(1);
    slices
        .iter()
        .map(|s| s.touched.len() as f64 / total as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub predictor: PredictorConfig,
    pub csaf: CsafConfig,
    pub window: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.predictor.validate()?;
        self.csaf.validate()?;
        if self.window == 0 {
            return Err(Error::config("window must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<SimRecord>,
    pub series: MetricSeries,
    pub switches: Vec<SwitchRecord>,
    pub footprints: Vec<SliceFootprint>,
}

/// Replay a trace through a fresh predictor and CSAF state.
///
/// Switch events drive the context-switch policy; branch events are
/// predicted, then applied. Deterministic end to end.
pub fn run_simulation(trace: &[TraceEvent], config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    match trace.first() {
        Some(TraceEvent::Switch { .. }) => {}
        Some(_) => {
            return Err(Error::TraceStructure(
                "trace must begin with a context-switch marker".into(),
            ))
        }
        None => return Err(Error::TraceStructure("trace is empty".into())),
    }

    let mut predictor = Predictor::new(config.predictor.clone())?;
    let mut csaf = CsafState::new(config.csaf.clone(), predictor.direction_map())?;

    let mut records = Vec::new();
    let mut switches = Vec::new();
    let mut footprints = Vec::new();
    let mut open_slice: Option<SliceFootprint> = None;
    let mut ordinal: u64 = 0;

    for event in trace {
        match event {
            TraceEvent::Switch { next } => {
                let report = csaf.on_context_switch(&mut predictor, *next)?;
                let real_switch = !matches!(
                    report.decision,
                    crate::csaf::SwitchDecision::SelfSwitch
                );
                switches.push(SwitchRecord {
                    event: ordinal,
                    report,
                });
                if real_switch {
                    if let Some(done) = open_slice.take() {
                        footprints.push(done);
                    }
                    open_slice = Some(SliceFootprint {
                        pid: *next,
                        start_event: ordinal,
                        touched: BTreeSet::new(),
                    });
                }
            }
            TraceEvent::Branch(branch) => {
                let slice = open_slice.as_mut().expect("trace begins with a switch");
                let predicted = predictor.predict(branch.pc);
                for &idx in &predictor.access_indices(branch.pc) {
                    slice.touched.insert(idx);
                }
                predictor.update(branch.pc, branch.outcome);
                records.push(SimRecord::new(ordinal, slice.pid, predicted, branch.outcome));
                ordinal += 1;
            }
        }
    }
    if let Some(done) = open_slice.take() {
        footprints.push(done);
    }

    let series = sliding_window_series(&records, config.window)?;
    Ok(SimOutput {
        records,
        series,
        switches,
        footprints,
    })
}

/// Periodic whole-predictor disturbance applied during a transient run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disturbance {
    /// Invert every tracked direction counter.
    Invert,
    /// Reset the whole predictor to its initial state.
    Reset,
}

impl Disturbance {
    pub fn as_str(self) -> &'static str {
        match self {
            Disturbance::Invert => "invert",
            Disturbance::Reset => "reset",
        }
    }
}

impl FromStr for Disturbance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "invert" => Ok(Disturbance::Invert),
            "reset" => Ok(Disturbance::Reset),
            other => Err(Error::config(format!("unknown disturbance '{other}'"))),
        }
    }
}

impl fmt::Display for Disturbance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Recovery is declared when the windowed rate returns to within this
/// absolute margin of the pre-disturbance rate.
pub const RECOVERY_EPSILON: f64 = 0.02;

/// Shape of the misprediction spike following one disturbance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeStats {
    /// Branch ordinal at which the disturbance was applied.
    pub disturbance_event: u64,
    /// Windowed rate immediately before the disturbance.
    pub steady_rate: f64,
    pub peak_rate: f64,
    pub peak_index: u64,
    /// Branches from the disturbance until the rate first returned to
    /// steady + epsilon; the full segment length if it never did.
    pub recovery_length: u64,
    /// Mispredicted branches between this disturbance and the next.
    pub mispredicts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientOutput {
    pub series: MetricSeries,
    pub spikes: Vec<SpikeStats>,
}

/// Replay a trace's branches through a fresh predictor, applying the
/// disturbance after every `period` branches, and measure the spike each
/// disturbance causes. Switch markers are ignored: the transient
/// experiments characterize the bare predictor.
pub fn transient_experiment(
    trace: &[TraceEvent],
    predictor_config: &PredictorConfig,
    disturbance: Disturbance,
    period: u64,
    window: usize,
) -> Result<TransientOutput> {
    if period == 0 {
        return Err(Error::config("period must be >= 1"));
    }
    if period < window as u64 {
        return Err(Error::config(format!(
            "period {period} is smaller than the measurement window {window}"
        )));
    }
    let mut predictor = Predictor::new(predictor_config.clone())?;

    let mut records = Vec::new();
    let mut ordinal: u64 = 0;
    for event in trace {
        let branch = match event {
            TraceEvent::Branch(b) => b,
            TraceEvent::Switch { .. } => continue,
        };
        if ordinal > 0 && ordinal.is_multiple_of(period) {
            match disturbance {
                Disturbance::Invert => predictor.invert_all(),
                Disturbance::Reset => predictor.reset_all(),
            }
        }
        let predicted = predictor.predict(branch.pc);
        predictor.update(branch.pc, branch.outcome);
        records.push(SimRecord::new(ordinal, Pid(0), predicted, branch.outcome));
        ordinal += 1;
    }

    let series = sliding_window_series(&records, window)?;
    let total = ordinal;
    let mut spikes = Vec::new();
    let mut at = period;
    while at < total {
        let segment_end = (at + period).min(total);
        let steady_rate = series
            .points()
            .iter()
            .rev()
            .find(|(i, _)| *i < at)
            .map(|(_, r)| *r)
            .unwrap_or(0.0);
        let (peak_index, mut peak_rate) = series
            .max_in(at, segment_end)
            .unwrap_or((at, steady_rate));
        // a spike never reports below the level it started from
        peak_rate = peak_rate.max(steady_rate);
        let recovery_length = series
            .points()
            .iter()
            .filter(|(i, _)| *i >= at && *i < segment_end)
            .find(|(_, r)| *r <= steady_rate + RECOVERY_EPSILON)
            .map(|(i, _)| i - at)
            .unwrap_or(segment_end - at);
        let mispredicts = records[at as usize..segment_end as usize]
            .iter()
            .filter(|r| !r.correct)
            .count() as u64;
        spikes.push(SpikeStats {
            disturbance_event: at,
            steady_rate,
            peak_rate,
            peak_index,
            recovery_length,
            mispredicts,
        });
        at += period;
    }

    Ok(TransientOutput { series, spikes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csaf::CsafMode;
    use crate::predictor::PredictorFamily;
    use crate::workload::BranchEvent;

    fn rec(event: u64, pid: u32, correct: bool) -> SimRecord {
        SimRecord::new(
            event,
            Pid(pid),
            Outcome::Taken,
            if correct { Outcome::Taken } else { Outcome::NotTaken },
        )
    }

    #[test]
    fn sliding_window_matches_direct_count() {
        // correctness pattern F,T,F,F with window 3 -> rates 2/3 at 2 and 3
        let records = vec![rec(0, 0, false), rec(1, 0, true), rec(2, 0, false), rec(3, 0, false)];
        let series = sliding_window_series(&records, 3).unwrap();
        assert_eq!(series.points(), &[(2, 2.0 / 3.0), (3, 2.0 / 3.0)]);
    }

    #[test]
    fn all_correct_stream_is_constant_zero() {
        let records: Vec<SimRecord> = (0..100).map(|i| rec(i, 0, true)).collect();
        let series = sliding_window_series(&records, 10).unwrap();
        assert!(series.points().iter().all(|(_, r)| *r == 0.0));
        assert_eq!(series.len(), 91);
    }

    #[test]
    fn short_streams_give_empty_series() {
        let records = vec![rec(0, 0, true)];
        let series = sliding_window_series(&records, 5).unwrap();
        assert!(series.is_empty());
    }

    #[test]
    fn per_process_rates_count_per_pid() {
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(rec(i, 1, i >= 3)); // 3 wrong
        }
        let rates = per_process_rates(&records);
        assert_eq!(rates.len(), 1);
        assert_eq!(rates[&Pid(1)].branches, 10);
        assert_eq!(rates[&Pid(1)].mispredicts, 3);
        assert!((rates[&Pid(1)].rate() - 0.3).abs() < 1e-12);
        assert!(per_process_rates(&[]).is_empty());
    }

    #[test]
    fn differential_subtracts_at_common_indices() {
        let a = MetricSeries {
            window: 3,
            points: vec![(2, 0.4), (3, 0.5), (4, 0.6)],
        };
        let b = MetricSeries {
            window: 3,
            points: vec![(3, 0.1), (4, 0.6), (5, 0.9)],
        };
        let d = differential_series(&a, &b).unwrap();
        assert_eq!(d.points().len(), 2);
        assert!((d.points()[0].1 - 0.4).abs() < 1e-12);
        assert_eq!(d.points()[0].0, 3);
        assert!(d.points()[1].1.abs() < 1e-12);

        let d = differential_series(&a, &a).unwrap();
        assert!(d.points().iter().all(|(_, r)| *r == 0.0));

        let c = MetricSeries {
            window: 4,
            points: vec![],
        };
        assert!(differential_series(&a, &c).is_err());
    }

    fn sim_config(mode: CsafMode) -> SimConfig {
        SimConfig {
            predictor: PredictorConfig::new(PredictorFamily::Bimodal, 16),
            csaf: CsafConfig {
                mode,
                ..CsafConfig::default()
            },
            window: 4,
        }
    }

    fn toy_trace() -> Vec<TraceEvent> {
        let mut trace = vec![TraceEvent::Switch { next: Pid(0) }];
        for i in 0..40u64 {
            trace.push(TraceEvent::Branch(BranchEvent {
                pc: i % 4,
                outcome: Outcome::from_taken(i % 2 == 0),
            }));
        }
        trace
    }

    #[test]
    fn single_process_baseline_emits_one_switch_report() {
        let out = run_simulation(&toy_trace(), &sim_config(CsafMode::Baseline)).unwrap();
        assert_eq!(out.switches.len(), 1);
        assert_eq!(out.switches[0].event, 0);
        assert_eq!(out.switches[0].report.reset_count, 0);
        assert_eq!(out.records.len(), 40);
    }

    #[test]
    fn simulation_is_deterministic() {
        let trace = toy_trace();
        let a = run_simulation(&trace, &sim_config(CsafMode::Csaf)).unwrap();
        let b = run_simulation(&trace, &sim_config(CsafMode::Csaf)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn branch_before_switch_is_rejected() {
        let trace = vec![TraceEvent::Branch(BranchEvent {
            pc: 0,
            outcome: Outcome::Taken,
        })];
        assert!(matches!(
            run_simulation(&trace, &sim_config(CsafMode::Baseline)),
            Err(Error::TraceStructure(_))
        ));
    }

    #[test]
    fn baseline_with_zero_capacity_matches_control_loop() {
        let trace = toy_trace();
        let mut cfg = sim_config(CsafMode::Baseline);
        cfg.csaf.table_capacity = 0;
        let out = run_simulation(&trace, &cfg).unwrap();

        // CSAF-free control loop
        let mut p = Predictor::new(cfg.predictor.clone()).unwrap();
        let mut control = Vec::new();
        let mut ordinal = 0u64;
        for ev in &trace {
            if let TraceEvent::Branch(b) = ev {
                let predicted = p.predict(b.pc);
                p.update(b.pc, b.outcome);
                control.push(SimRecord::new(ordinal, Pid(0), predicted, b.outcome));
                ordinal += 1;
            }
        }
        assert_eq!(out.records, control);
    }

    #[test]
    fn footprint_fractions_match_touched_sets() {
        let out = run_simulation(&toy_trace(), &sim_config(CsafMode::Baseline)).unwrap();
        assert_eq!(out.footprints.len(), 1);
        assert_eq!(out.footprints[0].touched.len(), 4); // pcs 0..4 on 16 entries
        let fracs = footprint_stats(&out.footprints, &sim_config(CsafMode::Baseline).predictor);
        assert!((fracs[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn per_pid_rate_times_branches_sums_to_total_mispredicts() {
        let mut trace = vec![TraceEvent::Switch { next: Pid(0) }];
        let mut state = 5u64;
        let mut pid = 0;
        for i in 0..500u64 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(11);
            if i % 50 == 49 {
                pid = (pid + 1) % 3;
                trace.push(TraceEvent::Switch { next: Pid(pid) });
            }
            trace.push(TraceEvent::Branch(BranchEvent {
                pc: state >> 40,
                outcome: Outcome::from_taken(state >> 7 & 3 != 0),
            }));
        }
        let out = run_simulation(&trace, &sim_config(CsafMode::Csaf)).unwrap();
        let rates = per_process_rates(&out.records);
        let total_from_rates: u64 = rates.values().map(|s| s.mispredicts).sum();
        let total: u64 = out.records.iter().filter(|r| !r.correct).count() as u64;
        assert_eq!(total_from_rates, total);
        let branches: u64 = rates.values().map(|s| s.branches).sum();
        assert_eq!(branches, out.records.len() as u64);
    }

    fn single_branch_trace(len: u64) -> Vec<TraceEvent> {
        let mut trace = vec![TraceEvent::Switch { next: Pid(0) }];
        trace.extend((0..len).map(|_| {
            TraceEvent::Branch(BranchEvent {
                pc: 0x40,
                outcome: Outcome::Taken,
            })
        }));
        trace
    }

    #[test]
    fn invert_on_saturated_branch_costs_two_mispredicts() {
        let cfg = PredictorConfig::new(PredictorFamily::Bimodal, 16);
        let out =
            transient_experiment(&single_branch_trace(1000), &cfg, Disturbance::Invert, 100, 2)
                .unwrap();
        assert_eq!(out.spikes.len(), 9);
        for spike in &out.spikes {
            assert_eq!(spike.mispredicts, 2);
            assert!((spike.peak_rate - 1.0).abs() < 1e-12);
            assert_eq!(spike.peak_index, spike.disturbance_event + 1);
            // two corrective updates, then the 2-wide window drains
            assert_eq!(spike.recovery_length, 3);
        }
    }

    #[test]
    fn reset_on_saturated_branch_costs_one_mispredict() {
        let cfg = PredictorConfig::new(PredictorFamily::Bimodal, 16);
        let out =
            transient_experiment(&single_branch_trace(1000), &cfg, Disturbance::Reset, 100, 2)
                .unwrap();
        for spike in &out.spikes {
            assert_eq!(spike.mispredicts, 1);
            assert!((spike.peak_rate - 0.5).abs() < 1e-12);
            assert_eq!(spike.recovery_length, 2);
        }
    }

    #[test]
    fn period_smaller_than_window_is_rejected() {
        let cfg = PredictorConfig::new(PredictorFamily::Bimodal, 16);
        assert!(transient_experiment(
            &single_branch_trace(100),
            &cfg,
            Disturbance::Invert,
            5,
            10
        )
        .is_err());
    }
}
