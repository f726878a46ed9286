//! CSV writing with a JSON metadata sidecar.
//!
//! The CSV is the reproducible artifact: equal configurations yield equal
//! bytes. The sidecar (`<out>.meta.json`) records the configuration echo,
//! code version, seed and wall time; wall time naturally varies between
//! runs, which is why it lives next to the data instead of in it.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    config: &'a T,
    code_version: &'static str,
    seed: u64,
    wall_time_secs: f64,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

/// Writes the CSV and its sidecar; returns the sidecar path.
pub fn write_artifact<T: Serialize>(
    out: &Path,
    csv: &str,
    config: &T,
    seed: u64,
    started: Instant,
) -> Result<PathBuf> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    let meta = Sidecar {
        config,
        code_version: env!("CARGO_PKG_VERSION"),
        seed,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    let meta_path = sidecar_path(out);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(meta_path)
}

/// Deterministic float formatting for CSV cells.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

pub fn fmt_sci(v: f64) -> String {
    format!("{v:.8e}")
}
