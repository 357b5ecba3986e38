use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{AnyConfig, CommandKind};
use crate::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: String,
    /// Path relative to the output directory.
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: CommandKind,
    pub engine_version: String,
    pub seed: Option<u64>,
    pub plot: bool,
    pub config: AnyConfig,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("cannot parse manifest: {e}")))?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported manifest schema_version {} (expected {MANIFEST_SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        Ok(m)
    }
}

/// Single writer for one output directory; every file lands via write-then-rename.
pub struct OutputDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let dest = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))
    }

    pub fn record(&mut self, stage: &str, name: &str) {
        self.artifacts.push(Artifact {
            stage: stage.to_string(),
            path: name.to_string(),
        });
    }

    pub fn json<T: Serialize>(&mut self, stage: &str, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))?;
        text.push('\n');
        self.write_atomic(name, text.as_bytes())?;
        self.record(stage, name);
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, stage: &str, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Invariant(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Invariant(format!("csv: {e}")))?;
        self.write_atomic(name, &bytes)?;
        self.record(stage, name);
        Ok(())
    }

    pub fn text(&mut self, stage: &str, name: &str, body: &str) -> Result<(), CliError> {
        self.write_atomic(name, body.as_bytes())?;
        self.record(stage, name);
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest, CliError> {
        manifest.artifacts = self.artifacts.clone();
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Invariant(e.to_string()))?;
        text.push('\n');
        self.write_atomic(MANIFEST_FILE, text.as_bytes())?;
        Ok(manifest)
    }
}

impl OutputDir {
    /// CSV from an explicit header and pre-formatted cells.
    pub fn csv_table(&mut self, stage: &str, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Invariant(format!("csv: {e}")))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Invariant(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Invariant(format!("csv: {e}")))?;
        self.write_atomic(name, &bytes)?;
        self.record(stage, name);
        Ok(())
    }
}
