//! CSV schemas, the count-table reader and the run manifest.
//!
//! Every CSV starts with one `#` comment line carrying the set hash and the
//! seed. Nothing else in a CSV depends on the wall clock, so equal inputs give
//! equal bytes.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use ks21_core::certify::CountTable;
use ks21_core::ks_set::fingerprint;
use ks21_core::sim::ExperimentConfig;
use ks21_core::{BoundSet, KsSet};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, Outcome};

#[derive(Debug, Serialize)]
pub struct EpsilonRow {
    pub state_id: u32,
    pub epsilon: f64,
    pub stderr: f64,
}

#[derive(Debug, Serialize)]
pub struct SigmaRow<'a> {
    pub label: &'a str,
    pub sigma_hat: f64,
    pub stderr: f64,
    pub classical: f64,
    pub classical_corrected: f64,
    pub quantum: f64,
    pub quantum_lower: f64,
    pub quantum_upper: f64,
}

impl<'a> SigmaRow<'a> {
    pub fn new(label: &'a str, sigma_hat: f64, stderr: f64, b: &BoundSet) -> Self {
        Self {
            label,
            sigma_hat,
            stderr,
            classical: b.classical_ideal,
            classical_corrected: b.classical_corrected,
            quantum: b.quantum_ideal,
            quantum_lower: b.quantum_lower,
            quantum_upper: b.quantum_upper,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub pulses: u64,
    pub sigma_hat: f64,
    pub stderr: f64,
}

/// One projector of one prepared state: the schema shared by simulated and
/// measured counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub state: String,
    pub projector: u32,
    pub pulses: u64,
    pub detections: u64,
    pub efficiency: f64,
}

pub fn csv_bytes<T: Serialize>(comment: &str, rows: &[T]) -> Outcome<Vec<u8>> {
    let mut out = format!("# {comment}\n").into_bytes();
    let mut writer = csv::Writer::from_writer(&mut out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Failure::check(format!("cannot encode CSV row: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Failure::check(format!("cannot encode CSV: {e}")))?;
    drop(writer);
    Ok(out)
}

pub fn read_count_rows<R: Read>(source: R) -> Outcome<Vec<CountRow>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source)
        .deserialize()
        .enumerate()
        .map(|(k, row)| row.map_err(|e| Failure::usage(format!("count table row {}: {e}", k + 1))))
        .collect()
}

/// Groups rows by state, in order of first appearance. Projectors of the set
/// without a row count as unsampled.
pub fn count_tables(rows: &[CountRow], set: &KsSet) -> Outcome<Vec<CountTable>> {
    let ids: Vec<u32> = set.vectors().iter().map(|v| v.id()).collect();
    let mut tables: Vec<CountTable> = Vec::new();
    for row in rows {
        let Some(pos) = set.position(row.projector) else {
            return Err(Failure::usage(format!(
                "state {}: projector {} is not in the set",
                row.state, row.projector
            )));
        };
        if row.detections > row.pulses {
            return Err(Failure::usage(format!(
                "state {}, projector {}: {} detections exceed {} pulses",
                row.state, row.projector, row.detections, row.pulses
            )));
        }
        let table = match tables.iter_mut().position(|t| t.label == row.state) {
            Some(k) => &mut tables[k],
            None => {
                tables.push(CountTable {
                    label: row.state.clone(),
                    projector_ids: ids.clone(),
                    pulses: vec![0; ids.len()],
                    detections: vec![0; ids.len()],
                    efficiency: row.efficiency,
                });
                tables.last_mut().unwrap()
            }
        };
        if table.efficiency != row.efficiency {
            return Err(Failure::usage(format!(
                "state {}: efficiency changes between rows",
                row.state
            )));
        }
        table.pulses[pos] += row.pulses;
        table.detections[pos] += row.detections;
    }
    Ok(tables)
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub created: String,
    pub run: &'a str,
    pub set_source: &'a str,
    pub set_sha256: &'a str,
    pub seed: u64,
    pub config: &'a ExperimentConfig,
    pub states: Vec<&'a str>,
    pub epsilon_bar: Option<f64>,
    pub artifacts: Vec<Artifact>,
}

/// Collects files for an output directory and writes them together.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<Artifact>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Outcome<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Outcome<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(Artifact {
            file: name.to_string(),
            sha256: fingerprint(bytes),
        });
        Ok(path)
    }

    pub fn finish(self) -> Vec<Artifact> {
        self.written
    }
}

pub fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            CountRow {
                state: "KS1".into(),
                projector: 1,
                pulses: 10,
                detections: 4,
                efficiency: 0.5,
            },
            CountRow {
                state: "KS1".into(),
                projector: 2,
                pulses: 12,
                detections: 0,
                efficiency: 0.5,
            },
        ];
        let bytes = csv_bytes("seed=1", &rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("# seed=1\nstate,projector,pulses,detections,efficiency\n"));
        assert_eq!(read_count_rows(bytes.as_slice()).unwrap(), rows);
    }

    #[test]
    fn missing_projectors_are_unsampled() {
        let set = KsSet::ks21();
        let rows = vec![CountRow {
            state: "x".into(),
            projector: 5,
            pulses: 10,
            detections: 3,
            efficiency: 1.0,
        }];
        let tables = count_tables(&rows, &set).unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].pulses[4], 10);
        assert_eq!(tables[0].pulses.iter().filter(|&&n| n == 0).count(), 20);
    }

    #[test]
    fn rejects_foreign_projector_and_excess_detections() {
        let set = KsSet::ks21();
        let mut row = CountRow {
            state: "x".into(),
            projector: 22,
            pulses: 10,
            detections: 3,
            efficiency: 1.0,
        };
        assert!(count_tables(&[row.clone()], &set).is_err());
        row.projector = 1;
        row.detections = 11;
        assert!(count_tables(&[row], &set).is_err());
    }
}
