//! Append-only CSV results ledger and per-experiment JSON summaries.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::{Error, Result};

pub const LEDGER_FILE: &str = "ledger.csv";
pub const LEDGER_HEADER: &str = "experiment,kind,timestamp,config_hash,check,passed,value,detail";

/// One embedded assertion of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value, detail: detail.into() }
    }
}

/// Summary written next to the tables of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Results ledger rooted at an output directory.
#[derive(Debug, Clone)]
pub struct ResultsLedger {
    root: PathBuf,
}

impl ResultsLedger {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.root.join(LEDGER_FILE)
    }

    /// Directory holding the outputs of one experiment.
    pub fn experiment_dir(&self, id: &str) -> Result<PathBuf> {
        let d = self.root.join(id);
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    /// Appends one row per check.
    pub fn append(&self, summary: &Summary) -> Result<()> {
        let path = self.ledger_path();
        let fresh = !path.exists();
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        if fresh {
            writeln!(f, "{LEDGER_HEADER}")?;
        }
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        for c in &summary.checks {
            writeln!(
                f,
                "{},{},{ts},{},{},{},{},{}",
                csv_field(&summary.experiment),
                summary.kind,
                summary.config_hash,
                csv_field(&c.name),
                if c.passed { "PASS" } else { "FAIL" },
                c.value,
                csv_field(&c.detail)
            )?;
        }
        Ok(())
    }

    /// Writes `config.json` and `summary.json` for an experiment.
    pub fn write_summary(&self, config: &ExperimentConfig, summary: &Summary) -> Result<()> {
        let dir = self.experiment_dir(&summary.experiment)?;
        fs::write(dir.join("config.json"), config.to_json()?)?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
        Ok(())
    }

    /// Recomputes the hash of the stored configuration and compares it with the
    /// stored summary.
    pub fn verify(&self, id: &str) -> Result<bool> {
        let dir = self.root.join(id);
        let config = ExperimentConfig::from_json(&fs::read_to_string(dir.join("config.json"))?)?;
        let summary: Summary = serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
        Ok(config.hash()? == summary.config_hash)
    }

    /// Number of data rows in the ledger.
    pub fn rows(&self) -> Result<usize> {
        let text = fs::read_to_string(self.ledger_path())?;
        let mut lines = text.lines();
        match lines.next() {
            Some(LEDGER_HEADER) => Ok(lines.count()),
            _ => Err(Error::Parse("ledger header missing".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::config::{DistanceConfig, Experiment};

    #[test]
    fn append_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let ledger = ResultsLedger::open(dir.path()).unwrap();
        let config = ExperimentConfig::new(Experiment::DistanceIntegral(DistanceConfig::default()));
        let summary = Summary {
            experiment: config.id(),
            kind: "distance-integral".into(),
            config_hash: config.hash().unwrap(),
            seed: 0,
            checks: vec![Check::new("value", true, 3.77, "a, \"quoted\" note")],
            results: serde_json::json!({}),
        };
        ledger.append(&summary).unwrap();
        ledger.append(&summary).unwrap();
        assert_eq!(ledger.rows().unwrap(), 2);
        ledger.write_summary(&config, &summary).unwrap();
        assert!(ledger.verify(&config.id()).unwrap());
        let path = dir.path().join(config.id()).join("config.json");
        let tampered = fs::read_to_string(&path).unwrap().replace("0.02", "0.03");
        fs::write(&path, tampered).unwrap();
        assert!(!ledger.verify(&config.id()).unwrap());
    }
}
