//! File-level interfaces: scenarios, the binary dataset format, and atomic
//! output.

mod dataset;
mod scenario;

use std::io::Write;
use std::path::Path;

pub use dataset::{decode_dataset, encode_dataset, read_dataset, write_dataset, DATASET_VERSION};
pub use scenario::{parse_scenario, parse_scenario_str, Link, Scenario};

use crate::error::{Error, Result};

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
