use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Environment variable supplying the default output directory.
pub const OUTPUT_DIR_ENV: &str = "FORMDML_OUTPUT_DIR";

/// Simple key=value configuration file. Values given here override the
/// corresponding command-line flags; `#` starts a comment.
#[derive(Debug, Default, Clone)]
pub struct KvConfig {
    map: HashMap<String, String>,
}

impl KvConfig {
    pub fn load(path: &Path) -> CliResult<KvConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config '{}': {e}", path.display())))?;
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!(
                    "config line {}: expected key=value, got '{line}'",
                    lineno + 1
                ))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KvConfig { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn override_string(&self, key: &str, slot: &mut String) {
        if let Some(v) = self.get(key) {
            *slot = v.to_string();
        }
    }

    pub fn override_path(&self, key: &str, slot: &mut Option<PathBuf>) {
        if let Some(v) = self.get(key) {
            *slot = Some(PathBuf::from(v));
        }
    }

    pub fn override_parse<T: std::str::FromStr>(&self, key: &str, slot: &mut T) -> CliResult<()> {
        if let Some(v) = self.get(key) {
            *slot = v
                .parse()
                .map_err(|_| CliError::config(format!("bad value '{v}' for '{key}'")))?;
        }
        Ok(())
    }

    pub fn override_flag(&self, key: &str, slot: &mut bool) -> CliResult<()> {
        if let Some(v) = self.get(key) {
            *slot = match v.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" => true,
                "0" | "false" | "no" => false,
                other => {
                    return Err(CliError::config(format!(
                        "bad boolean '{other}' for '{key}'"
                    )))
                }
            };
        }
        Ok(())
    }
}

/// Resolve the output directory: flag, else environment, else error.
pub fn resolve_output_dir(flag: Option<PathBuf>) -> CliResult<PathBuf> {
    if let Some(dir) = flag {
        return Ok(dir);
    }
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            return Ok(PathBuf::from(dir));
        }
    }
    Err(CliError::config(format!(
        "no output directory: pass --output-dir or set {OUTPUT_DIR_ENV}"
    )))
}
