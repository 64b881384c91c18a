//! Full runs and their on-disk artifacts.
//!
//! A run directory holds `config.echo`, `rounds.jsonl` (one [`RoundRecord`]
//! per line) and `summary.csv`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::record::{rounds_to_target, RoundRecord, RoundsToTarget};
use super::world::World;
use crate::error::{Error, Result};

pub const CONFIG_FILE: &str = "config.echo";
pub const ROUNDS_FILE: &str = "rounds.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub records: Vec<RoundRecord>,
}

impl RunArtifact {
    pub fn rounds_to_target(&self, target: f64) -> RoundsToTarget {
        rounds_to_target(&self.records, target)
    }
}

/// Runs `config` in memory. Stops early once the target accuracy is reached
/// when `early_stop` is set.
pub fn simulate(config: &ExperimentConfig) -> Result<Vec<RoundRecord>> {
    let mut world = World::new(config)?;
    let mut records = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        let record = world.run_round()?;
        let stop = config.early_stop
            && config
                .target_accuracy
                .zip(record.test_acc)
                .is_some_and(|(target, acc)| acc >= target);
        records.push(record);
        if stop {
            break;
        }
    }
    Ok(records)
}

/// Runs `config` and writes its artifacts under `out_root/<run name>`.
pub fn run_experiment(config: &ExperimentConfig, out_root: impl AsRef<Path>) -> Result<RunArtifact> {
    let dir = out_root.as_ref().join(config.run_name());
    let records = simulate(config)?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_file(&dir.join(CONFIG_FILE), config.echo().as_bytes())?;
    write_rounds(&dir.join(ROUNDS_FILE), &records)?;
    write_file(&dir.join(SUMMARY_FILE), summary_csv(&records).as_bytes())?;
    Ok(RunArtifact {
        dir,
        config: config.clone(),
        records,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_rounds(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records always serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Parses `rounds.jsonl`; errors carry the byte offset of the bad line.
pub fn read_rounds(path: &Path) -> Result<Vec<RoundRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut offset = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        if !line.trim().is_empty() {
            let record = serde_json::from_str(&line).map_err(|e| Error::parse(path, offset, e.to_string()))?;
            records.push(record);
        }
        offset += n as u64;
    }
    if records.is_empty() {
        return Err(Error::parse(path, 0, "no round records"));
    }
    Ok(records)
}

pub fn summary_csv(records: &[RoundRecord]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = String::from("round,train_loss,test_acc,V_t,bytes_up_cum,bytes_down_cum\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.round,
            r.train_loss,
            opt(r.test_acc),
            opt(r.v_t),
            r.bytes_up_cum,
            r.bytes_down_cum
        ));
    }
    out
}

/// Loads a run directory written by [`run_experiment`].
pub fn load_run(dir: &Path) -> Result<RunArtifact> {
    let echo_path = dir.join(CONFIG_FILE);
    let echo = fs::read_to_string(&echo_path).map_err(|e| Error::io(&echo_path, e))?;
    Ok(RunArtifact {
        dir: dir.to_path_buf(),
        config: ExperimentConfig::parse(&echo)?,
        records: read_rounds(&dir.join(ROUNDS_FILE))?,
    })
}
