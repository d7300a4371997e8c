use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::{MeshSequence, Vec3};

/// Reads the `v x y z` lines of one OBJ file, ignoring everything else.
/// Extra values after `z` (a `w` component or vertex colors) are skipped.
pub fn parse_obj_vertices(text: &str, origin: &Path) -> Result<Vec<Vec3>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("v") {
            continue;
        }
        let coords: Vec<f64> = tokens
            .take(3)
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(origin, format!("line {}: bad vertex: {e}", n + 1)))?;
        if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::format(
                origin,
                format!("line {}: expected three finite coordinates", n + 1),
            ));
        }
        out.push([coords[0], coords[1], coords[2]]);
    }
    Ok(out)
}

/// One frame per `.obj` file in `dir`, in lexicographic file-name order.
pub fn import_obj_sequence(dir: impl AsRef<Path>, fps: f64) -> Result<MeshSequence> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("obj"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::format(dir, "no .obj files found"));
    }

    let mut frames: Vec<Vec<Vec3>> = Vec::with_capacity(files.len());
    for path in &files {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let verts = parse_obj_vertices(&text, path)?;
        if verts.is_empty() {
            return Err(Error::format(path, "no vertices"));
        }
        if let Some(first) = frames.first() {
            if first.len() != verts.len() {
                return Err(Error::format(
                    path,
                    format!(
                        "vertex count mismatch: {} has {} vertices, {} has {}",
                        files[0].display(),
                        first.len(),
                        path.display(),
                        verts.len()
                    ),
                ));
            }
        }
        frames.push(verts);
    }
    MeshSequence::new(frames, fps)
}
