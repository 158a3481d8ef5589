//! Experiment reports and their JSON/CSV files.

use super::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::io::write_atomic;
use crate::oracle::{Frequency, TestResult};
use crate::seed::{stream_id, Stream};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Statistics at one `v` of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerV {
    pub v: f64,
    pub replicates: u64,
    pub stats: BTreeMap<String, f64>,
    pub frequencies: BTreeMap<String, Frequency>,
}

impl PerV {
    pub fn new(v: f64, replicates: u64) -> Self {
        PerV { v, replicates, stats: BTreeMap::new(), frequencies: BTreeMap::new() }
    }

    pub fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.stats.insert(name.into(), value);
    }

    pub fn freq(&mut self, name: impl Into<String>, f: Frequency) {
        self.frequencies.insert(name.into(), f);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEntry {
    pub label: String,
    pub id: u16,
}

/// How every draw of the run maps to a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLedger {
    pub base_seed: u64,
    /// Replicate `k` at grid index `i` has global index `i * replicates + k`.
    pub replicate_index: String,
    pub generator: String,
    pub streams: Vec<StreamEntry>,
    pub first_stream_id: u64,
    pub last_stream_id: u64,
}

impl SeedLedger {
    pub fn new(cfg: &ExperimentConfig, replicate_count: u64) -> Self {
        SeedLedger {
            base_seed: cfg.base_seed,
            replicate_index: "v_index * replicates + replicate".into(),
            generator: "chacha8, key = splitmix64 expansion of base_seed, stream = (replicate << 16) | label".into(),
            streams: Stream::ALL.iter().map(|s| StreamEntry { label: s.label().into(), id: *s as u16 }).collect(),
            first_stream_id: stream_id(0, Stream::EnvRight),
            last_stream_id: stream_id(replicate_count.saturating_sub(1), Stream::Sampler),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub replicates: u64,
    pub truncated: u64,
    pub rate: f64,
    pub cap: f64,
    pub exceeded: bool,
}

impl Truncation {
    pub fn new(replicates: u64, truncated: u64, cap: f64) -> Self {
        let rate = if replicates == 0 { 0.0 } else { truncated as f64 / replicates as f64 };
        Truncation { replicates, truncated, rate, cap, exceeded: rate > cap }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub per_v: Vec<PerV>,
    pub tests: Vec<TestResult>,
    pub seeds: SeedLedger,
    pub truncation: Truncation,
    pub notes: Vec<String>,
    pub pass: bool,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    pub fn new(cfg: &ExperimentConfig, per_v: Vec<PerV>, tests: Vec<TestResult>, truncated: u64, total: u64) -> Self {
        let pass = tests.iter().all(|t| t.pass);
        ExperimentReport {
            experiment: cfg.experiment,
            config: cfg.clone(),
            per_v,
            tests,
            seeds: SeedLedger::new(cfg, total),
            truncation: Truncation::new(total, truncated, cfg.truncation_cap),
            notes: Vec::new(),
            pass,
            wall_time_secs: 0.0,
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    /// 0 on success, 1 if a test failed, 3 if truncation exceeded the cap.
    pub fn exit_code(&self) -> i32 {
        if self.truncation.exceeded {
            3
        } else if !self.pass {
            1
        } else {
            0
        }
    }

    pub fn test(&self, name: &str) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall-time field removed; equal runs give equal bytes.
    pub fn to_json_without_wall_time(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("wall_time_secs");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// Long-format table: `v,kind,name,value,lower,upper,n`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("v,kind,name,value,lower,upper,n\n");
        for p in &self.per_v {
            for (k, x) in &p.stats {
                let _ = writeln!(s, "{},stat,{k},{x},,,{}", p.v, p.replicates);
            }
            for (k, f) in &p.frequencies {
                let _ = writeln!(s, "{},frequency,{k},{},{},{},{}", p.v, f.freq, f.lower, f.upper, f.n);
            }
        }
        for t in &self.tests {
            let _ = writeln!(s, ",test,{},{},,{},{}", t.name, t.statistic, t.threshold, t.n);
        }
        s
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.experiment.name(), self.config.base_seed)
    }

    /// Write `{experiment}_{base_seed}.json` and `.csv` atomically.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let stem = self.file_stem();
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        write_atomic(&json, self.to_json().as_bytes())?;
        write_atomic(&csv, self.to_csv().as_bytes())?;
        Ok((json, csv))
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} seed={} truncated={}/{} ({:.3}, cap {})\n",
            self.experiment, self.config.base_seed, self.truncation.truncated, self.truncation.replicates,
            self.truncation.rate, self.truncation.cap
        );
        for t in &self.tests {
            s.push_str(&t.line());
            s.push('\n');
        }
        s
    }
}
