use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// One line of the metrics stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub step: u64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_dqn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_snn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<f64>,
    /// Training steps so far whose pair batch came back empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snn_skipped: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev_score_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snn_acc: Option<f64>,
}

impl MetricRecord {
    pub fn new(step: u64, epsilon: f64) -> Self {
        MetricRecord {
            step,
            epsilon,
            l_dqn: None,
            l_snn: None,
            s1: None,
            s2: None,
            snn_skipped: None,
            dev_score_pct: None,
            snn_acc: None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Append-only JSONL writer.
pub struct MetricsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| CoreError::io(path, e))?;
        Ok(MetricsWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(f),
        })
    }

    /// Reopens a stream, dropping records past `step` so that a resumed
    /// run rewrites them.
    pub fn resume(path: &Path, step: u64) -> Result<Self> {
        // Lines are kept verbatim so the surviving prefix stays byte-identical.
        let kept: Vec<String> = if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
            let mut kept = Vec::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let r: MetricRecord = serde_json::from_str(line)
                    .map_err(|e| CoreError::invalid(format!("{}: {e}", path.display())))?;
                if r.step <= step {
                    kept.push(line.to_string());
                }
            }
            kept
        } else {
            Vec::new()
        };
        let mut w = Self::create(path)?;
        for line in kept {
            writeln!(w.out, "{line}").map_err(|e| CoreError::io(path, e))?;
        }
        w.flush()?;
        let f = OpenOptions::new().append(true).open(path).map_err(|e| CoreError::io(path, e))?;
        w.out = BufWriter::new(f);
        Ok(w)
    }

    pub fn write(&mut self, r: &MetricRecord) -> Result<()> {
        writeln!(self.out, "{}", r.to_line()).map_err(|e| CoreError::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| CoreError::io(&self.path, e))
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRecord>> {
    let f = File::open(path).map_err(|e| CoreError::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| CoreError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CoreError::invalid(format!("{}: {e}", path.display())))?);
    }
    Ok(out)
}
