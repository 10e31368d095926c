//! Report bundle: a JSON summary plus CSV tables, written deterministically.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mourre_core::commutator::Verdict;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, ScenarioConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct VerdictEntry {
    pub verdict: Verdict,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub note: String,
    /// hard verdicts decide the exit code
    pub hard: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config_echo: ScenarioConfig,
    pub constants: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, VerdictEntry>,
    pub results: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip form, so reruns produce identical bytes. Very small
/// and very large magnitudes switch to exponent notation.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub summary: Summary,
    pub tables: Vec<Table>,
}

impl ReportBundle {
    pub fn new(config: &ScenarioConfig) -> Self {
        Self {
            summary: Summary {
                schema_version: SCHEMA_VERSION,
                config_echo: config.clone(),
                constants: BTreeMap::new(),
                verdicts: BTreeMap::new(),
                results: BTreeMap::new(),
                notes: Vec::new(),
            },
            tables: Vec::new(),
        }
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.summary.constants.insert(name.into(), value);
    }

    pub fn verdict(&mut self, key: &str, ok: bool, measured: Option<f64>, threshold: Option<f64>, note: &str) {
        self.put_verdict(key, Verdict::from_bool(ok), measured, threshold, note, true);
    }

    pub fn soft_verdict(&mut self, key: &str, ok: bool, measured: Option<f64>, threshold: Option<f64>, note: &str) {
        self.put_verdict(key, Verdict::from_bool(ok), measured, threshold, note, false);
    }

    pub fn not_applicable(&mut self, key: &str, note: &str) {
        self.put_verdict(key, Verdict::NotApplicable, None, None, note, false);
    }

    fn put_verdict(
        &mut self,
        key: &str,
        verdict: Verdict,
        measured: Option<f64>,
        threshold: Option<f64>,
        note: &str,
        hard: bool,
    ) {
        self.summary.verdicts.insert(
            key.into(),
            VerdictEntry {
                verdict,
                measured,
                threshold,
                note: note.into(),
                hard,
            },
        );
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> Result<(), CliError> {
        self.summary.results.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.summary.notes.push(text.into());
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn passed(&self) -> bool {
        self.summary
            .verdicts
            .values()
            .all(|v| !v.hard || v.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.summary
            .verdicts
            .iter()
            .filter(|(_, v)| v.hard && v.verdict == Verdict::Fail)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Tables for the constants and verdicts, so every summary number has a row.
    fn index_tables(&self) -> Vec<Table> {
        let mut constants = Table::new("constants", &["name", "value"]);
        for (k, v) in &self.summary.constants {
            constants.push(vec![k.clone(), num(*v)]);
        }
        let mut verdicts = Table::new("verdicts", &["key", "verdict", "hard", "measured", "threshold", "note"]);
        for (k, v) in &self.summary.verdicts {
            let verdict = match v.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::NotApplicable => "not_applicable",
            };
            verdicts.push(vec![
                k.clone(),
                verdict.into(),
                v.hard.to_string(),
                opt(v.measured),
                opt(v.threshold),
                v.note.clone(),
            ]);
        }
        vec![constants, verdicts]
    }

    pub fn write(&self, dir: &Path, formats: &[Format]) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        if formats.contains(&Format::Json) {
            let text = serde_json::to_string_pretty(&self.summary)?;
            fs::write(dir.join("summary.json"), text + "\n")?;
        }
        if formats.contains(&Format::Csv) {
            for t in self.index_tables().iter().chain(&self.tables) {
                let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name)))?;
                w.write_record(&t.header)?;
                for r in &t.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}
