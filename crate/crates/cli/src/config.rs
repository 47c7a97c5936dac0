//! Reading documents and config files. Relative paths inside a config file
//! resolve against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use superpos::channel::{load_channel, BroadcastChannel};
use superpos::scheme::{load_dist, Dist};

use crate::error::{CliError, Result};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn channel(path: &Path) -> Result<BroadcastChannel> {
    load_channel(&read(path)?).map_err(|source| CliError::Document { path: path.to_owned(), source })
}

pub fn dist(path: &Path) -> Result<Dist> {
    load_dist(&read(path)?).map_err(|source| CliError::Document { path: path.to_owned(), source })
}

/// A parsed config and the directory its relative paths hang off.
pub struct Loaded<T> {
    pub value: T,
    base: PathBuf,
}

impl<T> Loaded<T> {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.base.join(p)
        }
    }
}

/// Parses `path`, or returns the default when no config is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<Loaded<T>> {
    let Some(path) = path else {
        return Ok(Loaded { value: T::default(), base: PathBuf::new() });
    };
    let value = toml::from_str(&read(path)?)
        .map_err(|e| CliError::Config { path: path.to_owned(), message: e.to_string() })?;
    Ok(Loaded { value, base: path.parent().map(Path::to_owned).unwrap_or_default() })
}

/// File name up to its first dot, used to name regions.
pub fn stem(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match name.split('.').next() {
        Some(s) if !s.is_empty() => s.to_string(),
        _ => "input".into(),
    }
}
