//! Per-run manifest: the resolved configuration plus content hashes of every
//! input file, so any output directory documents how to reproduce itself.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use cgnp_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// input path -> sha256 of its content
    pub inputs: BTreeMap<String, String>,
    pub created_unix: u64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, inputs: &[&Path]) -> Result<RunManifest> {
        let mut hashes = BTreeMap::new();
        for path in inputs {
            hashes.insert(path.display().to_string(), sha256_file(path)?);
        }
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| Error::Data(e.to_string()))?,
            inputs: hashes,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    /// Write `manifest.json` into the output directory.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let w = BufWriter::new(File::create(out_dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Data(e.to_string()))?;
        Ok(())
    }
}
