use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use parisi_core::Mixture;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUT_DIR_VAR: &str = "PARISI_OUT_DIR";
pub const REPORT_FORMAT: u32 = 1;

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub report_format: u32,
    /// SHA-256 of the canonical JSON form of the mixture.
    pub mixture_digest: Option<String>,
    pub mixture: Option<Mixture>,
    pub grid: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            report_format: REPORT_FORMAT,
            mixture_digest: None,
            mixture: None,
            grid: None,
            tolerances: BTreeMap::new(),
            seed: None,
            outputs: Vec::new(),
        }
    }

    pub fn mixture(mut self, m: &Mixture) -> Self {
        self.mixture_digest = Some(mixture_digest(m));
        self.mixture = Some(m.clone());
        self
    }

    pub fn grid(mut self, n: usize) -> Self {
        self.grid = Some(n);
        self
    }

    pub fn tol(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }
}

pub fn mixture_digest(m: &Mixture) -> String {
    hex::encode(Sha256::digest(m.to_json().as_bytes()))
}

pub fn read_mixture(path: &Path) -> Result<Mixture> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading mixture {}", path.display()))?;
    Mixture::from_json(&text).with_context(|| format!("parsing mixture {}", path.display()))
}

/// `out` if given, else `default_name` inside `$PARISI_OUT_DIR` or the
/// working directory. Creates the parent directory.
pub fn output_path(out: Option<&Path>, default_name: &str) -> Result<PathBuf> {
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => match env::var_os(OUT_DIR_VAR) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(default_name),
            _ => PathBuf::from(default_name),
        },
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(path)
}

/// `report.json` -> `report.<suffix>`, next to the report.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_formatting_of_the_input() {
        let a = Mixture::from_json(r#"{"coeffs": {"2": 0.5, "4": 0.5}, "h": 0.0}"#).unwrap();
        let b = Mixture::from_json(r#"{ "h": 0, "coeffs": {"4": 0.5, "2": 0.50} }"#).unwrap();
        assert_eq!(mixture_digest(&a), mixture_digest(&b));
        let c = a.with_field(0.1).unwrap();
        assert_ne!(mixture_digest(&a), mixture_digest(&c));
        assert_eq!(mixture_digest(&a).len(), 64);
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar(Path::new("out/report.json"), "measure.csv"),
            PathBuf::from("out/report.measure.csv")
        );
        assert_eq!(sidecar(Path::new("sim"), "hist.csv"), PathBuf::from("sim.hist.csv"));
    }
}
