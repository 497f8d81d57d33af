use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use convis::report::Artifact;
use convis::{Error, Result};
use serde::Serialize;

/// Written once into every output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_path: Option<String>,
    pub seed: Option<u64>,
    pub model_fingerprint: Option<String>,
    /// Unix seconds; `SOURCE_DATE_EPOCH` when set, for reproducible trees.
    pub created_at: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config_path: None,
            seed: None,
            model_fingerprint: None,
            created_at: timestamp(),
            outputs: Vec::new(),
        }
    }

    pub fn write(mut self, dir: &Path, outputs: &[PathBuf]) -> Result<()> {
        self.outputs = outputs
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned())
            .collect();
        let path = dir.join("manifest.json");
        let mut body = serde_json::to_string_pretty(&self)?;
        body.push('\n');
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    }
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Prints `artifact` as JSON on stdout and, when `out` is given, also
/// writes it as `<name>.json` with a manifest into that directory.
pub fn emit(artifact: &Artifact, out: Option<&Path>, manifest: RunManifest) -> Result<()> {
    let json = artifact.to_json()?;
    print!("{json}");
    if let Some(dir) = out {
        create_dir(dir)?;
        let file = write_file(&dir.join(format!("{}.json", artifact.kind())), &json)?;
        manifest.write(dir, &[file])?;
    }
    Ok(())
}
