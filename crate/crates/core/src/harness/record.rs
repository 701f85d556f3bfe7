use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    /// Behaviour-policy episode return, masked whenever the step was masked.
    Train,
    /// Mean greedy return without masking.
    Eval,
}

impl RowKind {
    pub fn name(self) -> &'static str {
        match self {
            RowKind::Train => "train",
            RowKind::Eval => "eval",
        }
    }
}

impl std::fmt::Display for RowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One line of a record file: `{"t":..,"kind":..,"return":..,"epsilon":..,"masked":..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    /// Environment steps completed.
    pub t: u64,
    pub kind: RowKind,
    #[serde(rename = "return")]
    pub episodic_return: f64,
    pub epsilon: f64,
    /// Fraction of the episode's steps that were masked (0 for eval rows).
    pub masked: f64,
}

/// Everything a run produced besides its networks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RecordRow>,
    pub steps: u64,
    pub masked_steps: u64,
    /// Sum of epsilon over all steps.
    pub epsilon_sum: f64,
    /// Executed actions found outside their step's active bounds.
    pub bound_violations: u64,
    /// stderr lines from a hosted prior process.
    pub diagnostics: Vec<String>,
}

impl RunRecord {
    pub fn kind(&self, kind: RowKind) -> impl Iterator<Item = &RecordRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }

    pub fn masked_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.masked_steps as f64 / self.steps as f64
        }
    }

    pub fn mean_epsilon(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.epsilon_sum / self.steps as f64
        }
    }

    /// First evaluation step whose return reaches `threshold`.
    pub fn steps_to_threshold(&self, threshold: f64) -> Option<u64> {
        self.kind(RowKind::Eval).find(|r| r.episodic_return >= threshold).map(|r| r.t)
    }

    pub fn final_eval(&self) -> Option<f64> {
        self.kind(RowKind::Eval).last().map(|r| r.episodic_return)
    }
}

pub fn write_record(path: impl AsRef<Path>, rows: &[RecordRow]) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_record(path: impl AsRef<Path>) -> Result<Vec<RecordRow>, HarnessError> {
    let path = path.as_ref();
    let err = |reason: String| HarnessError::Record { path: path.display().to_string(), reason };
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?);
    }
    Ok(rows)
}
