//! Atomic file output and snapshot directories.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::environment::Measurement;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::snapshot;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Label of the scoring timepoint at the end of `day`.
pub fn timepoint_label(day: u32) -> String {
    format!("day{day:04}")
}

/// `<dir>/<label>.<measurement>.wbfg`
pub fn snapshot_path(dir: &Path, label: &str, m: Measurement) -> PathBuf {
    dir.join(format!("{label}.{m}.wbfg"))
}

pub fn write_snapshot(dir: &Path, label: &str, fields: [&Grid<f32>; 3]) -> Result<()> {
    for m in Measurement::ALL {
        write_atomic(&snapshot_path(dir, label, m), &snapshot::encode_binary(fields[m.index()]))?;
    }
    Ok(())
}

/// Reads every complete `<label>.{tylcv,ccr,humidity}.wbfg` triple in `dir`,
/// ordered by label.
pub fn read_snapshots(dir: &Path) -> Result<BTreeMap<String, [Grid<f32>; 3]>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut partial: BTreeMap<String, [Option<Grid<f32>>; 3]> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(".wbfg") else { continue };
        let Some((label, m)) = stem.rsplit_once('.') else {
            return Err(Error::Format {
                what: "snapshot file name",
                message: format!("{name}: expected <timepoint>.<measurement>.wbfg"),
            });
        };
        let m: Measurement = m.parse().map_err(|_| Error::Format {
            what: "snapshot file name",
            message: format!("{name}: unknown measurement `{m}`"),
        })?;
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let grid = snapshot::decode_binary(&bytes).map_err(|e| Error::Format {
            what: "snapshot",
            message: format!("{}: {e}", path.display()),
        })?;
        partial.entry(label.to_string()).or_default()[m.index()] = Some(grid);
    }
    partial
        .into_iter()
        .map(|(label, [a, b, c])| match (a, b, c) {
            (Some(a), Some(b), Some(c)) => Ok((label, [a, b, c])),
            _ => Err(Error::Format {
                what: "snapshot directory",
                message: format!("{}: timepoint `{label}` lacks some measurements", dir.display()),
            }),
        })
        .collect()
}
