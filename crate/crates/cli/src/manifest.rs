//! Run manifests: the fully resolved settings of a command, written next to
//! every artifact and accepted back through `--config`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest<T> {
    pub command: String,
    pub tool_version: String,
    pub settings: T,
}

/// `<artifact>.manifest.toml`
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".manifest.toml");
    PathBuf::from(name)
}

pub fn write_manifest<T: Serialize>(artifact: &Path, command: &str, settings: &T) -> Result<PathBuf> {
    let path = manifest_path(artifact);
    let manifest = Manifest {
        command: command.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        settings,
    };
    let text = toml::to_string(&manifest).context("serializing manifest")?;
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Settings from a config file: either a manifest (its `settings` table) or a
/// bare settings table. Without a file, the defaults.
pub fn load_settings<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    if let Some(cmd) = value.get("command").and_then(|v| v.as_str()) {
        anyhow::ensure!(
            cmd == command,
            "{} is a manifest of `{cmd}`, not `{command}`",
            path.display()
        );
    }
    let table = match value.get("settings") {
        Some(toml::Value::Table(t)) => t.clone(),
        Some(_) => anyhow::bail!("{}: `settings` must be a table", path.display()),
        None => value,
    };
    T::deserialize(toml::Value::Table(table)).with_context(|| format!("invalid settings in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct S {
        a: u32,
        b: f64,
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("out.jsonl");
        let s = S { a: 3, b: 0.1 + 0.2 };
        let path = write_manifest(&artifact, "x", &s).unwrap();
        assert!(path.to_string_lossy().ends_with("out.jsonl.manifest.toml"));
        let back: S = load_settings(Some(&path), "x").unwrap();
        assert_eq!(back, s);
        assert!(load_settings::<S>(Some(&path), "y").is_err());
    }

    #[test]
    fn bare_table_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "a = 7\n").unwrap();
        assert_eq!(load_settings::<S>(Some(&p), "x").unwrap(), S { a: 7, b: 0.0 });
        fs::write(&p, "c = 1\n").unwrap();
        assert!(load_settings::<S>(Some(&p), "x").is_err());
        assert_eq!(load_settings::<S>(None, "x").unwrap(), S::default());
    }
}
