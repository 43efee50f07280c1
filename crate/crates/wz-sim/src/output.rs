//! Report files and run manifests.

use crate::error::Result;
use serde::Serialize;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

/// Stable hash of the config text for provenance lines.
pub fn config_hash(source: &str) -> String {
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    source.hash(&mut hasher);
    format!("{:016x}", hasher.finish())
}

/// Written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub artifact_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub config_echo: String,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_source: &str, wall_time_s: f64) -> Self {
        Manifest {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash: config_hash(config_source),
            wall_time_s,
            config_echo: config_source.to_string(),
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::invalid(format!("serialization failed: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

pub fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash("x = 1");
        let b = config_hash("x = 1");
        let c = config_hash("x = 2");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }
}
