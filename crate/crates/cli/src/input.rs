//! File loading shared by the commands.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{self, CliError, Result};

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

pub fn json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| error::json(path, e))
}

/// Short identifier for a file: its stem, or the full path when stems collide.
pub fn ids(paths: &[impl AsRef<Path>]) -> Vec<String> {
    let stems: Vec<String> = paths
        .iter()
        .map(|p| p.as_ref().file_stem().map_or_else(|| p.as_ref().display().to_string(), |s| s.to_string_lossy().into_owned()))
        .collect();
    stems
        .iter()
        .zip(paths)
        .map(|(s, p)| if stems.iter().filter(|o| *o == s).count() > 1 { p.as_ref().display().to_string() } else { s.clone() })
        .collect()
}

/// Parses `lo,hi`.
pub fn pair(raw: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = raw.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{raw}`"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Runs `f` over all inputs on scoped threads, keeping input order.
pub fn parallel<T: Send, P: Sync>(inputs: &[P], f: impl Fn(&P) -> Result<T> + Sync) -> Result<Vec<T>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = inputs.iter().map(|p| s.spawn(|| f(p))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}
