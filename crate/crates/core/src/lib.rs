//! Trace-driven branch prediction simulator with context-switch-aware
//! selective PHT resets.
//!
//! The crate models two-level saturating-counter predictors, a framework
//! that learns per-(pid, pid) transition behavior and selectively wipes
//! direction-flipped PHT entries at context switches, synthetic
//! multi-process workloads with time-slice scheduling, and the
//! sliding-window measurement machinery used to compare policies.

pub mod bits;
pub mod counter;
pub mod csaf;
pub mod error;
pub mod lru;
pub mod metrics;
pub mod predictor;
pub mod workload;

pub use bits::DirectionMap;
pub use counter::{Outcome, SaturatingCounter};
pub use csaf::{
    CsafConfig, CsafMode, CsafState, Pid, SnapshotStore, SwitchDecision, SwitchReport,
    TransitionEntry, TransitionTable,
};
pub use error::{Error, Result};
pub use metrics::{
    differential_series, footprint_stats, per_process_rates, run_simulation,
    sliding_window_series, transient_experiment, Disturbance, MetricSeries, ProcessStats,
    SimConfig, SimOutput, SimRecord, SliceFootprint, SpikeStats, SwitchRecord, TransientOutput,
};
pub use predictor::{
    EntrySet, FlipReport, Predictor, PredictorConfig, PredictorFamily, PredictorStats,
};
pub use workload::{
    gen_adversarial_pair, gen_kernel_trace, interleave, parse_trace, write_trace,
    AdversarialMode, AdversarialSpec, BranchEvent, KernelName, KernelSpec, TraceEvent,
};
