//! `MSQ1` binary sequence files.
//!
//! Layout, all little-endian:
//!
//! | offset | size        | field                                   |
//! |--------|-------------|-----------------------------------------|
//! | 0      | 4           | magic `b"MSQ1"`                          |
//! | 4      | 4           | frame count `T`, `u32`                   |
//! | 8      | 4           | vertex count `V`, `u32`                  |
//! | 12     | 4           | frames per second, `f32`                 |
//! | 16     | `T·V·3·8`   | coordinates, `f64`, frame, vertex, xyz   |
//!
//! Coordinates round-trip bit for bit. The frame rate is stored as `f32`;
//! rates that are not exactly representable come back rounded.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::MeshSequence;

pub const MAGIC: &[u8; 4] = b"MSQ1";
const HEADER_LEN: usize = 16;

pub fn encode_msq(seq: &MeshSequence) -> Result<Vec<u8>> {
    let frames = u32::try_from(seq.num_frames())
        .map_err(|_| Error::InvalidSequence("too many frames for MSQ".into()))?;
    let vertices = u32::try_from(seq.num_vertices())
        .map_err(|_| Error::InvalidSequence("too many vertices for MSQ".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + seq.as_flat().len() * 24);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&frames.to_le_bytes());
    out.extend_from_slice(&vertices.to_le_bytes());
    out.extend_from_slice(&(seq.fps() as f32).to_le_bytes());
    for c in seq.as_flat().iter().flatten() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    Ok(out)
}

/// Parses an MSQ buffer; `origin` is only used in diagnostics.
pub fn decode_msq(bytes: &[u8], origin: &Path) -> Result<MeshSequence> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            origin,
            format!(
                "truncated header: expected {HEADER_LEN} bytes, got {}",
                bytes.len()
            ),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::format(origin, "bad magic"));
    }
    let word = |at: usize| [bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]];
    let frames = u32::from_le_bytes(word(4)) as usize;
    let vertices = u32::from_le_bytes(word(8)) as usize;
    let fps = f32::from_le_bytes(word(12)) as f64;

    let expected = frames
        .checked_mul(vertices)
        .and_then(|n| n.checked_mul(24))
        .ok_or_else(|| Error::format(origin, "header dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::format(
            origin,
            format!(
                "truncated payload: expected {expected} bytes, got {}",
                payload.len()
            ),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(
            origin,
            format!(
                "trailing bytes after payload: expected {expected} bytes, got {}",
                payload.len()
            ),
        ));
    }
    if frames == 0 || vertices == 0 {
        return Err(Error::format(origin, "header declares an empty sequence"));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::format(origin, format!("invalid fps {fps}")));
    }

    let mut data = Vec::with_capacity(frames * vertices);
    for (idx, chunk) in payload.chunks_exact(24).enumerate() {
        let mut p = [0.0; 3];
        for (c, bytes) in p.iter_mut().zip(chunk.chunks_exact(8)) {
            *c = f64::from_le_bytes(bytes.try_into().expect("8-byte chunk"));
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::format(
                origin,
                format!(
                    "non-finite value at frame {}, vertex {}",
                    idx / vertices,
                    idx % vertices
                ),
            ));
        }
        data.push(p);
    }
    MeshSequence::from_flat(frames, vertices, data, fps)
        .map_err(|e| Error::format(origin, e.to_string()))
}

pub fn write_msq(seq: &MeshSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_msq(seq)?).map_err(|e| Error::io(path, e))
}

pub fn read_msq(path: impl AsRef<Path>) -> Result<MeshSequence> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_msq(&bytes, path)
}
