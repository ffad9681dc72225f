//! `key = value` configuration files. Keys are the long flag names of the
//! command line; `#` starts a comment.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value'")]
    MissingEquals { line: usize },
    #[error("line {line}: empty key")]
    EmptyKey { line: usize },
    #[error("line {line}: invalid key '{key}'")]
    BadKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: '{key}' expects true or false, got '{value}'")]
    BadBool {
        line: usize,
        key: String,
        value: String,
    },
}

/// Flags that take no value on the command line.
pub const SWITCHES: &[&str] = &["full-profile", "sequential"];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigFile {
    pub entries: Vec<(String, String)>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::MissingEquals { line })?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::EmptyKey { line });
        }
        if !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(ConfigError::BadKey {
                line,
                key: key.to_string(),
            });
        }
        if entries.iter().any(|(k, _)| k == key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        if SWITCHES.contains(&key) && !matches!(value, "true" | "false") {
            return Err(ConfigError::BadBool {
                line,
                key: key.to_string(),
                value: value.to_string(),
            });
        }
        entries.push((key.to_string(), value.to_string()));
    }
    Ok(ConfigFile { entries })
}

impl ConfigFile {
    /// Command-line arguments equivalent to the file.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = Vec::new();
        for (k, v) in &self.entries {
            if SWITCHES.contains(&k.as_str()) {
                if v == "true" {
                    args.push(format!("--{k}"));
                }
            } else {
                args.push(format!("--{k}={v}"));
            }
        }
        args
    }
}
