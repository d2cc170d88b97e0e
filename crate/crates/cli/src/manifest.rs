//! Per-run manifest: what ran, on which bytes, and how long it took.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub versions: BTreeMap<&'static str, &'static str>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut h = Sha256::new();
    let mut f = File::open(path)?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(format!("{:x}", h.finalize()))
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize) -> Self {
        let versions = BTreeMap::from([
            ("instsel", instsel::VERSION),
            ("instsel-cli", env!("CARGO_PKG_VERSION")),
        ]);
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            inputs: Vec::new(),
            outputs: Vec::new(),
            versions,
            timings: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> std::io::Result<()> {
        self.inputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> std::io::Result<()> {
        self.outputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.insert(stage.to_string(), seconds);
    }
}
