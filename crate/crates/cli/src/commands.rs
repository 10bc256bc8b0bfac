//! The four experiment subcommands.

use std::fs;

use rayon::prelude::*;

use csaf_core::{
    differential_series, gen_adversarial_pair, gen_kernel_trace, interleave, parse_trace,
    per_process_rates, run_simulation, transient_experiment, write_trace, BranchEvent, CsafMode,
    KernelName, KernelSpec, Pid, SimConfig, SimOutput, TraceEvent,
};

use crate::config::{ExperimentConfig, WorkloadSpec};
use crate::output::{
    compare_csv, per_process_csv, series_csv, spikes_csv, switches_csv, OutDir,
};
use crate::CliError;

fn config_err(e: csaf_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Decorrelate per-kernel data seeds from the experiment seed.
fn mix_seed(seed: u64, lane: u64) -> u64 {
    seed.wrapping_add((lane + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// A runnable trace plus display labels for the pids it contains.
pub type Workload = (Vec<TraceEvent>, Vec<(Pid, String)>);

/// Build the roster workload: one process per kernel, pids in roster
/// order, interleaved round-robin.
pub fn build_kernel_workload(
    names: &[KernelName],
    sizes: &std::collections::BTreeMap<KernelName, u32>,
    seed: u64,
    slice_len: usize,
) -> Result<Workload, CliError> {
    let mut sequences: Vec<(Pid, Vec<BranchEvent>)> = Vec::new();
    let mut labels = Vec::new();
    for (i, &name) in names.iter().enumerate() {
        let spec = KernelSpec {
            name,
            size: sizes.get(&name).copied().unwrap_or(name.default_size()),
            seed: mix_seed(seed, i as u64),
        };
        let events = gen_kernel_trace(&spec).map_err(config_err)?;
        sequences.push((Pid(i as u32), events));
        labels.push((Pid(i as u32), name.as_str().to_string()));
    }
    let trace = interleave(&sequences, slice_len).map_err(config_err)?;
    Ok((trace, labels))
}

/// Materialize the configured workload as a trace plus per-pid labels.
pub fn build_workload(config: &ExperimentConfig) -> Result<Workload, CliError> {
    match &config.workload {
        WorkloadSpec::Kernels { names, sizes } => {
            build_kernel_workload(names, sizes, config.seed, config.slice_len)
        }
        WorkloadSpec::Adversarial { .. } => {
            let spec = config.adversarial_spec().expect("adversarial workload");
            let [a, b] = gen_adversarial_pair(&spec, &config.predictor).map_err(config_err)?;
            let trace = interleave(&[(Pid(0), a), (Pid(1), b)], config.slice_len)
                .map_err(config_err)?;
            let labels = vec![(Pid(0), "p0".to_string()), (Pid(1), "p1".to_string())];
            Ok((trace, labels))
        }
        WorkloadSpec::TraceFile(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
            let trace = parse_trace(&text).map_err(config_err)?;
            let mut pids: Vec<Pid> = trace
                .iter()
                .filter_map(|e| match e {
                    TraceEvent::Switch { next } => Some(*next),
                    _ => None,
                })
                .collect();
            pids.sort_unstable();
            pids.dedup();
            let labels = pids.into_iter().map(|p| (p, format!("p{p}"))).collect();
            Ok((trace, labels))
        }
    }
}

fn simulate_mode(
    config: &ExperimentConfig,
    trace: &[TraceEvent],
    mode: CsafMode,
) -> Result<SimOutput, CliError> {
    let sim = SimConfig {
        predictor: config.predictor.clone(),
        csaf: csaf_core::CsafConfig {
            mode,
            ..config.csaf.clone()
        },
        window: config.window,
    };
    run_simulation(trace, &sim).map_err(config_err)
}

/// `gen`: write the configured workload as a trace file.
pub fn gen(config: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    if matches!(config.workload, WorkloadSpec::TraceFile(_)) {
        return Err(CliError::Config(
            "gen requires a kernel or adversarial workload, not workload.trace".into(),
        ));
    }
    let (trace, _) = build_workload(config)?;
    out.write("trace.txt", &write_trace(&trace))?;
    Ok(())
}

/// `simulate`: one run in the configured mode; series, per-process and
/// switch-report CSVs.
pub fn simulate(config: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let (trace, _) = build_workload(config)?;
    let result = simulate_mode(config, &trace, config.csaf.mode)?;
    let rates = per_process_rates(&result.records);
    out.write("series.csv", &series_csv(&result.series))?;
    out.write("per_process.csv", &per_process_csv(rates.iter()))?;
    out.write("switches.csv", &switches_csv(&result.switches))?;
    Ok(())
}

/// The four policies `compare` runs, in output-column order.
const COMPARE_MODES: [CsafMode; 4] = [
    CsafMode::Baseline,
    CsafMode::Csaf,
    CsafMode::AlwaysResetSelective,
    CsafMode::AlwaysResetFull,
];

/// `compare`: run all four policies on one workload; per-benchmark table,
/// per-mode series and the CSAF-minus-baseline differential series.
pub fn compare(config: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let (trace, labels) = build_workload(config)?;
    let outputs: Vec<SimOutput> = COMPARE_MODES
        .par_iter()
        .map(|&mode| simulate_mode(config, &trace, mode))
        .collect::<Result<_, _>>()?;

    let rates: Vec<_> = outputs
        .iter()
        .map(|o| per_process_rates(&o.records))
        .collect();
    let mut rows = Vec::new();
    for (pid, label) in &labels {
        let row: Vec<f64> = rates
            .iter()
            .map(|r| r.get(pid).map(|s| s.rate()).unwrap_or(0.0))
            .collect();
        rows.push((label.clone(), [row[0], row[1], row[2], row[3]]));
    }
    out.write("compare.csv", &compare_csv(&rows))?;

    let differential =
        differential_series(&outputs[1].series, &outputs[0].series).map_err(config_err)?;
    out.write("differential.csv", &series_csv(&differential))?;
    for (mode, result) in COMPARE_MODES.iter().zip(&outputs) {
        out.write(
            &format!("series_{}.csv", mode.as_str()),
            &series_csv(&result.series),
        )?;
    }
    out.write("switches_csaf.csv", &switches_csv(&outputs[1].switches))?;
    Ok(())
}

/// `transient`: periodic invert/reset disturbances over the workload's
/// branch stream.
pub fn transient(config: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    if config.period < config.window as u64 {
        return Err(CliError::Config(format!(
            "transient.period ({}) must be >= window ({})",
            config.period, config.window
        )));
    }
    let (trace, _) = build_workload(config)?;
    let result = transient_experiment(
        &trace,
        &config.predictor,
        config.disturbance,
        config.period,
        config.window,
    )
    .map_err(config_err)?;
    out.write("transient_series.csv", &series_csv(&result.series))?;
    out.write("spikes.csv", &spikes_csv(&result.spikes))?;
    Ok(())
}
