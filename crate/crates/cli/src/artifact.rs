//! Content-addressed JSON artifacts. Each file embeds the resolved config and seed;
//! `{kind}.latest` in the same directory names the newest one.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub result: T,
}

#[derive(Debug, Clone)]
pub struct Written {
    pub path: PathBuf,
    dir: PathBuf,
    stem: String,
}

impl Written {
    /// A companion file next to the artifact, e.g. `qlr-<hash>.spectrum.csv`.
    pub fn sibling(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.stem))
    }
}

fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn write<T: Serialize>(config: &RunConfig, kind: &str, result: T) -> Result<Written, CliError> {
    let artifact = Artifact {
        kind: kind.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.sampling.seed,
        config: config.clone(),
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&artifact)?;
    bytes.push(b'\n');
    let dir = config.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let stem = format!("{kind}-{}", short_hash(&bytes));
    let path = dir.join(format!("{stem}.json"));
    // identical content hashes to the same name, so an existing file is already this artifact
    if !path.exists() {
        let tmp = dir.join(format!(".{stem}.json.tmp"));
        std::fs::write(&tmp, &bytes)?;
        std::fs::rename(&tmp, &path)?;
    }
    std::fs::write(dir.join(format!("{kind}.latest")), format!("{stem}.json\n"))?;
    Ok(Written { path, dir, stem })
}

pub fn read<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Artifact<T>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read artifact {}: {e}", path.display())))?;
    let a: Artifact<T> = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{} is not a {kind} artifact: {e}", path.display())))?;
    if a.kind != kind {
        return Err(CliError::Validation(format!("{} is a {} artifact, expected {kind}", path.display(), a.kind)));
    }
    Ok(a)
}

/// The artifact named by `{dir}/{kind}.latest`.
pub fn latest(dir: &Path, kind: &str) -> Result<PathBuf, CliError> {
    let pointer = dir.join(format!("{kind}.latest"));
    let name = std::fs::read_to_string(&pointer).map_err(|_| {
        CliError::Validation(format!("no {kind} artifact in {} (run `qlrlab {kind}` first)", dir.display()))
    })?;
    Ok(dir.join(name.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_content_same_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.output.dir = dir.path().to_path_buf();
        let a = write(&cfg, "probe", vec![1.0, 2.5]).unwrap();
        let b = write(&cfg, "probe", vec![1.0, 2.5]).unwrap();
        assert_eq!(a.path, b.path);
        let c = write(&cfg, "probe", vec![1.0]).unwrap();
        assert_ne!(a.path, c.path);
        assert_eq!(latest(dir.path(), "probe").unwrap(), c.path);
        let back: Artifact<Vec<f64>> = read(&a.path, "probe").unwrap();
        assert_eq!(back.result, vec![1.0, 2.5]);
        assert!(read::<Vec<f64>>(&a.path, "qlr").is_err());
        assert!(latest(dir.path(), "qlr").is_err());
    }
}
