//! Flat `key = value` experiment configuration.
//!
//! Lines hold one assignment each; `#` starts a comment; blank lines are
//! skipped. Unknown keys are rejected. Absent keys fall back to the
//! defaults documented per field. `--set key=value` overrides are applied
//! after the file, last assignment wins.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use csaf_core::{
    AdversarialMode, AdversarialSpec, CsafConfig, CsafMode, Disturbance, KernelName,
    PredictorConfig, PredictorFamily,
};

use crate::CliError;

/// Where the workload trace comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadSpec {
    Kernels {
        names: Vec<KernelName>,
        sizes: BTreeMap<KernelName, u32>,
    },
    Adversarial {
        mode: AdversarialMode,
        blocks: usize,
        bias: f64,
        length: usize,
        warmup: Option<usize>,
    },
    TraceFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub slice_len: usize,
    pub window: usize,
    pub out_dir: PathBuf,
    pub predictor: PredictorConfig,
    pub csaf: CsafConfig,
    pub workload: WorkloadSpec,
    pub disturbance: Disturbance,
    pub period: u64,
}

impl ExperimentConfig {
    /// The adversarial generator spec implied by this config, seeded from
    /// the experiment seed.
    pub fn adversarial_spec(&self) -> Option<AdversarialSpec> {
        match &self.workload {
            WorkloadSpec::Adversarial {
                mode,
                blocks,
                bias,
                length,
                warmup,
            } => Some(AdversarialSpec {
                mode: *mode,
                pc_block_count: *blocks,
                bias: *bias,
                length: *length,
                warmup_len: warmup.unwrap_or(length / 5),
                seed: self.seed,
            }),
            _ => None,
        }
    }
}

fn err(key: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {message}"))
}

fn parse_num<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| err(key, format!("expected {what}, got '{value}'")))
}

/// Raw assignments with duplicate keys resolved last-wins.
fn collect_assignments(text: &str, source: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{source} line {}: expected 'key = value', got '{raw_line}'",
                idx + 1
            )));
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parse a config file plus `--set key=value` overrides.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[String],
) -> Result<ExperimentConfig, CliError> {
    let mut assignments = collect_assignments(text, "config")?;
    for item in overrides {
        let Some((key, value)) = item.split_once('=') else {
            return Err(CliError::Config(format!(
                "--set expects key=value, got '{item}'"
            )));
        };
        assignments.push((key.trim().to_string(), value.trim().to_string()));
    }
    build(assignments)
}

/// Parse a config file with no overrides.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    parse_config_with_overrides(text, &[])
}

#[derive(Default)]
struct Raw {
    seed: Option<u64>,
    slice_len: Option<usize>,
    window: Option<usize>,
    out_dir: Option<PathBuf>,
    family: Option<PredictorFamily>,
    pht_entries: Option<usize>,
    counter_width: Option<u8>,
    history_bits: Option<u32>,
    init_value: Option<u8>,
    mode: Option<CsafMode>,
    threshold: Option<f64>,
    table_capacity: Option<usize>,
    kernels: Option<Vec<KernelName>>,
    kernel_sizes: BTreeMap<KernelName, u32>,
    adv_mode: Option<AdversarialMode>,
    adv_blocks: Option<usize>,
    adv_bias: Option<f64>,
    adv_length: Option<usize>,
    adv_warmup: Option<usize>,
    trace_path: Option<PathBuf>,
    disturbance: Option<Disturbance>,
    period: Option<u64>,
}

fn build(assignments: Vec<(String, String)>) -> Result<ExperimentConfig, CliError> {
    let mut raw = Raw::default();

    for (key, value) in &assignments {
        match key.as_str() {
            "seed" => raw.seed = Some(parse_num(key, value, "an unsigned integer")?),
            "slice_len" => raw.slice_len = Some(parse_num(key, value, "an unsigned integer")?),
            "window" => raw.window = Some(parse_num(key, value, "an unsigned integer")?),
            "out_dir" => raw.out_dir = Some(PathBuf::from(value)),
            "predictor.family" => {
                raw.family = Some(value.parse().map_err(|e| err(key, e))?);
            }
            "predictor.pht_entries" => {
                raw.pht_entries = Some(parse_num(key, value, "an unsigned integer")?)
            }
            "predictor.counter_width" => {
                raw.counter_width = Some(parse_num(key, value, "a bit count")?)
            }
            "predictor.history_bits" => {
                raw.history_bits = Some(parse_num(key, value, "a bit count")?)
            }
            "predictor.init_value" => {
                raw.init_value = Some(parse_num(key, value, "a counter value")?)
            }
            "csaf.mode" => raw.mode = Some(value.parse().map_err(|e| err(key, e))?),
            "csaf.threshold" => {
                let t: f64 = parse_num(key, value, "a number (or 'inf')")?;
                if t.is_nan() || t < 0.0 {
                    return Err(err(key, format!("threshold must be >= 0, got {value}")));
                }
                raw.threshold = Some(t);
            }
            "csaf.table_capacity" => {
                raw.table_capacity = Some(parse_num(key, value, "an unsigned integer")?)
            }
            "workload.kernels" => {
                let names = if value == "all" {
                    KernelName::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .map(|n| n.trim().parse().map_err(|e| err(key, e)))
                        .collect::<Result<Vec<KernelName>, CliError>>()?
                };
                if names.is_empty() {
                    return Err(err(key, "kernel list is empty"));
                }
                raw.kernels = Some(names);
            }
            "workload.trace" => raw.trace_path = Some(PathBuf::from(value)),
            "workload.adversarial.mode" => {
                raw.adv_mode = Some(value.parse().map_err(|e| err(key, e))?)
            }
            "workload.adversarial.blocks" => {
                raw.adv_blocks = Some(parse_num(key, value, "an unsigned integer")?)
            }
            "workload.adversarial.bias" => {
                let b: f64 = parse_num(key, value, "a probability")?;
                if !(0.0..=1.0).contains(&b) {
                    return Err(err(key, format!("bias must be in [0, 1], got {value}")));
                }
                raw.adv_bias = Some(b);
            }
            "workload.adversarial.length" => {
                raw.adv_length = Some(parse_num(key, value, "an unsigned integer")?)
            }
            "workload.adversarial.warmup" => {
                raw.adv_warmup = Some(parse_num(key, value, "an unsigned integer")?)
            }
            "transient.disturbance" => {
                raw.disturbance = Some(value.parse().map_err(|e| err(key, e))?)
            }
            "transient.period" => raw.period = Some(parse_num(key, value, "an unsigned integer")?),
            other => {
                if let Some(kernel) = other.strip_prefix("workload.size.") {
                    let name: KernelName = kernel.parse().map_err(|e| err(other, e))?;
                    raw.kernel_sizes
                        .insert(name, parse_num(other, value, "an unsigned integer")?);
                } else {
                    return Err(CliError::Config(format!("unknown config key '{other}'")));
                }
            }
        }
    }

    // workload source: explicit trace and adversarial are exclusive with
    // each other and with an explicit kernel roster
    let explicit_sources = [
        raw.trace_path.is_some(),
        raw.adv_mode.is_some(),
        raw.kernels.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if explicit_sources > 1 {
        return Err(CliError::Config(
            "workload.kernels, workload.adversarial.* and workload.trace are mutually exclusive"
                .into(),
        ));
    }
    if raw.adv_mode.is_none()
        && (raw.adv_blocks.is_some()
            || raw.adv_bias.is_some()
            || raw.adv_length.is_some()
            || raw.adv_warmup.is_some())
    {
        return Err(CliError::Config(
            "workload.adversarial.* settings require workload.adversarial.mode".into(),
        ));
    }
    if raw.trace_path.is_some() && !raw.kernel_sizes.is_empty() {
        return Err(CliError::Config(
            "workload.size.* settings do not apply to a trace-file workload".into(),
        ));
    }

    let workload = if let Some(path) = raw.trace_path {
        WorkloadSpec::TraceFile(path)
    } else if let Some(mode) = raw.adv_mode {
        WorkloadSpec::Adversarial {
            mode,
            blocks: raw.adv_blocks.unwrap_or(64),
            bias: raw.adv_bias.unwrap_or(0.95),
            length: raw.adv_length.unwrap_or(100_000),
            warmup: raw.adv_warmup,
        }
    } else {
        WorkloadSpec::Kernels {
            names: raw.kernels.unwrap_or_else(|| KernelName::ALL.to_vec()),
            sizes: raw.kernel_sizes,
        }
    };

    let pht_entries = raw.pht_entries.unwrap_or(128);
    let predictor = PredictorConfig {
        family: raw.family.unwrap_or(PredictorFamily::Bimodal),
        pht_entries,
        counter_width: raw.counter_width.unwrap_or(2),
        history_bits: raw
            .history_bits
            .unwrap_or_else(|| pht_entries.max(1).trailing_zeros()),
        init_value: raw.init_value.unwrap_or(1),
    };
    predictor
        .validate()
        .map_err(|e| CliError::Config(format!("predictor: {e}")))?;

    let csaf = CsafConfig {
        mode: raw.mode.unwrap_or(CsafMode::Csaf),
        threshold: raw.threshold.unwrap_or(0.25),
        table_capacity: raw.table_capacity.unwrap_or(64),
    };
    csaf.validate()
        .map_err(|e| CliError::Config(format!("csaf: {e}")))?;

    let slice_len = raw.slice_len.unwrap_or(10_000);
    if slice_len == 0 {
        return Err(CliError::Config("slice_len: must be >= 1".into()));
    }
    let window = raw.window.unwrap_or(1000);
    if window == 0 {
        return Err(CliError::Config("window: must be >= 1".into()));
    }

    Ok(ExperimentConfig {
        seed: raw.seed.unwrap_or(42),
        slice_len,
        window,
        out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        predictor,
        csaf,
        workload,
        disturbance: raw.disturbance.unwrap_or(Disturbance::Invert),
        period: raw.period.unwrap_or(10_000),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_all_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.slice_len, 10_000);
        assert_eq!(cfg.window, 1000);
        assert_eq!(cfg.predictor.family, PredictorFamily::Bimodal);
        assert_eq!(cfg.predictor.pht_entries, 128);
        assert_eq!(cfg.predictor.history_bits, 7);
        assert_eq!(cfg.csaf.mode, CsafMode::Csaf);
        assert_eq!(cfg.csaf.threshold, 0.25);
        assert_eq!(cfg.csaf.table_capacity, 64);
        assert_eq!(cfg.period, 10_000);
        match cfg.workload {
            WorkloadSpec::Kernels { names, .. } => assert_eq!(names.len(), 11),
            other => panic!("unexpected workload {other:?}"),
        }
    }

    #[test]
    fn bimode_with_entries_parses() {
        let cfg = parse_config("predictor.family = bimode\npredictor.pht_entries = 128\n").unwrap();
        assert_eq!(cfg.predictor.family, PredictorFamily::Bimode);
        assert_eq!(cfg.predictor.pht_entries, 128);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = parse_config("# full line comment\n\nseed = 7 # trailing\n").unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn negative_threshold_is_rejected() {
        let e = parse_config("csaf.threshold = -1\n").unwrap_err();
        assert!(e.to_string().contains("csaf.threshold"));
    }

    #[test]
    fn infinite_threshold_is_accepted() {
        let cfg = parse_config("csaf.threshold = inf\n").unwrap();
        assert!(cfg.csaf.threshold.is_infinite());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_config("predictor.familly = bimodal\n").unwrap_err();
        assert!(e.to_string().contains("unknown config key"));
    }

    #[test]
    fn bad_values_name_their_key() {
        let e = parse_config("predictor.pht_entries = twelve\n").unwrap_err();
        assert!(e.to_string().contains("predictor.pht_entries"));
        let e = parse_config("predictor.pht_entries = 100\n").unwrap_err();
        assert!(e.to_string().contains("power of two"));
    }

    #[test]
    fn overrides_apply_after_the_file() {
        let cfg = parse_config_with_overrides(
            "seed = 1\ncsaf.mode = baseline\n",
            &["seed=9".into(), "csaf.mode=always_reset_full".into()],
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.csaf.mode, CsafMode::AlwaysResetFull);
    }

    #[test]
    fn kernel_roster_and_sizes() {
        let cfg = parse_config(
            "workload.kernels = queens, towers\nworkload.size.queens = 6\n",
        )
        .unwrap();
        match cfg.workload {
            WorkloadSpec::Kernels { names, sizes } => {
                assert_eq!(names, vec![KernelName::Queens, KernelName::Towers]);
                assert_eq!(sizes[&KernelName::Queens], 6);
            }
            other => panic!("unexpected workload {other:?}"),
        }
    }

    #[test]
    fn conflicting_workload_sources_are_rejected() {
        let e = parse_config("workload.trace = t.txt\nworkload.adversarial.mode = neutral\n")
            .unwrap_err();
        assert!(e.to_string().contains("mutually exclusive"));
        let e = parse_config("workload.adversarial.bias = 0.5\n").unwrap_err();
        assert!(e.to_string().contains("require workload.adversarial.mode"));
    }

    #[test]
    fn history_bits_default_tracks_pht_entries() {
        let cfg = parse_config("predictor.pht_entries = 1024\n").unwrap();
        assert_eq!(cfg.predictor.history_bits, 10);
        let cfg = parse_config("predictor.pht_entries = 1024\npredictor.history_bits = 7\n")
            .unwrap();
        assert_eq!(cfg.predictor.history_bits, 7);
    }
}
