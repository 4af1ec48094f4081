use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_SCHEMA: &str = "twotier.manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to rerun a subcommand. Written last, next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub subcommand: &'static str,
    pub version: &'static str,
    pub parameters: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub errors: Vec<String>,
    pub duration_secs: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

impl RunManifest {
    pub fn start(subcommand: &'static str, parameters: &impl Serialize) -> Result<Self> {
        Ok(RunManifest {
            schema: MANIFEST_SCHEMA,
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            parameters: serde_json::to_value(parameters)?,
            inputs: Vec::new(),
            seeds: Vec::new(),
            outputs: Vec::new(),
            errors: Vec::new(),
            duration_secs: 0.0,
            started: Some(Instant::now()),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256,
        });
        Ok(())
    }

    /// Write a file into `dir` and record it.
    pub fn emit(&mut self, dir: &Path, name: &str, body: impl AsRef<[u8]>) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn record(&mut self, dir: &Path, written: &[PathBuf]) {
        for p in written {
            let name = p.strip_prefix(dir).unwrap_or(p);
            self.outputs.push(name.display().to_string());
        }
    }

    pub fn finish(mut self, dir: &Path) -> Result<Self> {
        self.duration_secs = self.started.map_or(0.0, |s| s.elapsed().as_secs_f64());
        let path = dir.join(MANIFEST_FILE);
        let body = serde_json::to_string_pretty(&self)? + "\n";
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(self)
    }
}
