use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct Envelope<'a, I: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub inputs: I,
    pub result: R,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("--out-dir: cannot create {}", dir.display()))
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn read_config(path: &Path) -> Result<toml::Table> {
    if !path.is_file() {
        bail!("--config: {} does not exist", path.display());
    }
    let text = fs::read_to_string(path).with_context(|| format!("--config: cannot read {}", path.display()))?;
    text.parse::<toml::Table>().with_context(|| format!("--config: {} is not valid TOML", path.display()))
}

/// Deserializes `section` of `table`, or the whole table when the section is
/// absent and `whole_if_missing` is set.
pub fn section<T: serde::de::DeserializeOwned>(table: &toml::Table, section: &str, whole_if_missing: bool) -> Result<Option<T>> {
    let value = match table.get(section) {
        Some(v) => v.clone(),
        None if whole_if_missing => toml::Value::Table(table.clone()),
        None => return Ok(None),
    };
    value.try_into().map(Some).with_context(|| format!("--config: bad [{section}] section"))
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if items.is_empty() {
        return Err("expected a nonempty comma-separated list of numbers".into());
    }
    items.iter().map(|t| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect()
}
