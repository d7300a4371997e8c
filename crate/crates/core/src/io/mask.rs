use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::VertexRegionMask;

/// Parses a mask file: one vertex index per line, `#` starts a comment line,
/// blank lines are skipped.
pub fn parse_mask(text: &str, region_name: &str, origin: &Path) -> Result<VertexRegionMask> {
    let mut indices = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let idx = line.parse::<usize>().map_err(|_| {
            Error::format(
                origin,
                format!("line {}: not a vertex index: {line:?}", n + 1),
            )
        })?;
        indices.push(idx);
    }
    VertexRegionMask::new(indices, region_name)
}

/// Reads a mask file. The region is named after the file stem.
pub fn read_mask(path: impl AsRef<Path>) -> Result<VertexRegionMask> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "region".into());
    parse_mask(&text, &name, path)
}

pub fn write_mask(mask: &VertexRegionMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = format!("# {}\n", mask.region_name());
    for i in mask.indices() {
        text.push_str(&format!("{i}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
