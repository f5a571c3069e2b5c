//! Plain-text `key = value` configuration. Command-line flags override file
//! entries; whatever a run actually used is echoed to a sidecar file next to
//! its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub type ConfigMap = BTreeMap<String, String>;

/// Parses a `key = value` file; `#` starts a comment, blank lines ignored.
pub fn load_config(path: &Path) -> Result<ConfigMap> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = ConfigMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{} line {}: expected 'key = value'",
                path.display(),
                lineno + 1
            );
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Fills `slot` from the config file when the flag was not given.
pub fn fill<T: std::str::FromStr>(
    slot: &mut Option<T>,
    config: &ConfigMap,
    key: &str,
) -> Result<()>
where
    T::Err: std::fmt::Display,
{
    if slot.is_none() {
        if let Some(raw) = config.get(key) {
            match raw.parse() {
                Ok(v) => *slot = Some(v),
                Err(e) => bail!("config key '{key}': {e}"),
            }
        }
    }
    Ok(())
}

/// Writes the fully resolved configuration of a run for provenance.
pub fn write_resolved(dir: &Path, entries: &[(&str, String)]) -> Result<()> {
    let path = dir.join("resolved_config.txt");
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = std::io::BufWriter::new(file);
    for (key, value) in entries {
        writeln!(out, "{key} = {value}")?;
    }
    Ok(())
}
