//! CSV rendering and failure-safe output writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use csaf_core::{MetricSeries, Pid, ProcessStats, SpikeStats, SwitchRecord};

use crate::CliError;

/// Collects files written by one command so a failure can remove the
/// partial outputs it produced.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(root: PathBuf) -> Self {
        OutDir {
            root,
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.root)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", self.root.display())))?;
        let path = self.root.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Remove everything written so far (best effort).
    pub fn remove_written(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn series_csv(series: &MetricSeries) -> String {
    let mut out = String::from("index,rate\n");
    for (index, rate) in series.points() {
        let _ = writeln!(out, "{index},{rate:.6}");
    }
    out
}

pub fn per_process_csv<'a>(
    rows: impl IntoIterator<Item = (&'a Pid, &'a ProcessStats)>,
) -> String {
    let mut out = String::from("pid,branches,mispredicts,rate\n");
    for (pid, stats) in rows {
        let _ = writeln!(
            out,
            "{pid},{},{},{:.6}",
            stats.branches,
            stats.mispredicts,
            stats.rate()
        );
    }
    out
}

pub fn switches_csv(switches: &[SwitchRecord]) -> String {
    let mut out = String::from("event,from_pid,to_pid,observed_changes,decision,reset_count\n");
    for s in switches {
        let from = match s.report.from {
            Some(pid) => pid.to_string(),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{},{from},{},{},{},{}",
            s.event, s.report.to, s.report.observed_changes, s.report.decision, s.report.reset_count
        );
    }
    out
}

/// Per-benchmark misprediction percentages, one column per policy.
pub fn compare_csv(rows: &[(String, [f64; 4])]) -> String {
    let mut out = String::from("Benchmark,Baseline,CSAF,AlwaysResetSel,AlwaysResetFull\n");
    for (name, [baseline, csaf, sel, full]) in rows {
        let _ = writeln!(
            out,
            "{name},{:.3},{:.3},{:.3},{:.3}",
            baseline * 100.0,
            csaf * 100.0,
            sel * 100.0,
            full * 100.0
        );
    }
    out
}

pub fn spikes_csv(spikes: &[SpikeStats]) -> String {
    let mut out =
        String::from("disturbance,steady_rate,peak_index,peak_rate,recovery_length,mispredicts\n");
    for s in spikes {
        let _ = writeln!(
            out,
            "{},{:.6},{},{:.6},{},{}",
            s.disturbance_event, s.steady_rate, s.peak_index, s.peak_rate, s.recovery_length, s.mispredicts
        );
    }
    out
}
