//! Columnar text tables and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

/// A whitespace-separated table with `#` header lines.
pub struct Table {
    title: Vec<String>,
    columns: Vec<String>,
    body: String,
    rows: usize,
}

impl Table {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        Self {
            title: vec![title.to_string()],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            body: String::new(),
            rows: 0,
        }
    }

    /// Extra `# key: value` header line.
    pub fn meta(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.title.push(format!("{key}: {value}"));
        self
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns.len());
        let line: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        self.body.push_str(&line.join(" "));
        self.body.push('\n');
        self.rows += 1;
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for t in &self.title {
            let _ = writeln!(out, "# {t}");
        }
        let _ = writeln!(out, "# {}", self.columns.join(" "));
        out.push_str(&self.body);
        out
    }
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Everything needed to reproduce a run, plus checksums of its outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    pub derived: BTreeMap<String, Value>,
    pub outputs: Vec<OutputFile>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    pub fn start(dir: &Path, experiment: &str, config: Value, seed: Option<u64>) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        let mut versions = BTreeMap::new();
        versions.insert("kramers-core".into(), kramers_core::VERSION.into());
        versions.insert("kramers-cli".into(), env!("CARGO_PKG_VERSION").into());
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                experiment: experiment.into(),
                config,
                seed,
                versions,
                derived: BTreeMap::new(),
                outputs: Vec::new(),
                started_unix: now(),
                finished_unix: 0.0,
            },
        })
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.manifest.derived.insert(key.into(), v);
    }

    pub fn write(&mut self, name: &str, table: &Table) -> CliResult<()> {
        let text = table.render();
        fs::write(self.dir.join(name), &text)?;
        self.manifest.outputs.push(OutputFile {
            file: name.into(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
            rows: table.rows,
        });
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<Manifest> {
        self.manifest.finished_unix = now();
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(self.dir.join("manifest.json"), json + "\n")?;
        Ok(self.manifest)
    }
}
