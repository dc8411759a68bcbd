//! File formats, the command line pipeline and the forecast service.

pub mod config;
pub mod io;
pub mod model_file;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod service;

use std::path::Path;

/// Writes `bytes` to a sibling temp file and renames it over `path`, so
/// readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}
