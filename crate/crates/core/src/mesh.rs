//! Mesh-sequence containers and the geometric helpers shared by the losses
//! and metrics.
//!
//! Frames are stored frame-major in one flat buffer. All per-frame sums run
//! over vertices in index order, left to right, so results are reproducible
//! bit for bit across runs.

use std::fmt;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Squared Euclidean distance between two points.
#[inline]
pub fn sq_dist(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn dist(a: &Vec3, b: &Vec3) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Sum of squared coordinate differences over all vertices of two frames.
pub fn frame_sq_diff(a: &[Vec3], b: &[Vec3]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| sq_dist(p, q)).sum()
}

/// First invariant violated by a candidate sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoFrames,
    NoVertices,
    VertexCountMismatch {
        frame: usize,
        expected: usize,
        got: usize,
    },
    NonFinite {
        frame: usize,
        vertex: usize,
    },
    BadFps(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoFrames => write!(f, "sequence has no frames"),
            Violation::NoVertices => write!(f, "frames have no vertices"),
            Violation::VertexCountMismatch {
                frame,
                expected,
                got,
            } => write!(
                f,
                "vertex count mismatch at frame {frame}: expected {expected}, got {got}"
            ),
            Violation::NonFinite { frame, vertex } => {
                write!(
                    f,
                    "non-finite coordinate at (frame {frame}, vertex {vertex})"
                )
            }
            Violation::BadFps(fps) => write!(f, "fps must be positive and finite, got {fps}"),
        }
    }
}

/// Outcome of [`validate_sequence`].
pub type Validation = std::result::Result<(), Violation>;

/// Checks nested frames against the sequence invariants: at least one frame,
/// at least one vertex, a constant vertex count, finite coordinates and a
/// positive frame rate. Reports the first failure found in frame order.
pub fn validate_sequence(frames: &[Vec<Vec3>], fps: f64) -> Validation {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Violation::BadFps(fps));
    }
    let first = frames.first().ok_or(Violation::NoFrames)?;
    if first.is_empty() {
        return Err(Violation::NoVertices);
    }
    let expected = first.len();
    for (t, frame) in frames.iter().enumerate() {
        if frame.len() != expected {
            return Err(Violation::VertexCountMismatch {
                frame: t,
                expected,
                got: frame.len(),
            });
        }
        if let Some(i) = frame.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Violation::NonFinite {
                frame: t,
                vertex: i,
            });
        }
    }
    Ok(())
}

fn validate_flat(num_frames: usize, num_vertices: usize, data: &[Vec3], fps: f64) -> Validation {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Violation::BadFps(fps));
    }
    if num_frames == 0 {
        return Err(Violation::NoFrames);
    }
    if num_vertices == 0 {
        return Err(Violation::NoVertices);
    }
    debug_assert_eq!(data.len(), num_frames * num_vertices);
    if let Some(idx) = data.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(Violation::NonFinite {
            frame: idx / num_vertices,
            vertex: idx % num_vertices,
        });
    }
    Ok(())
}

/// A time-ordered stack of vertex positions, `T` frames by `V` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSequence {
    data: Vec<Vec3>,
    num_frames: usize,
    num_vertices: usize,
    fps: f64,
    label: Option<String>,
}

impl MeshSequence {
    /// Builds a validated sequence from nested frames.
    pub fn new(frames: Vec<Vec<Vec3>>, fps: f64) -> Result<Self> {
        validate_sequence(&frames, fps).map_err(|v| Error::InvalidSequence(v.to_string()))?;
        let num_frames = frames.len();
        let num_vertices = frames[0].len();
        let data = frames.into_iter().flatten().collect();
        Ok(MeshSequence {
            data,
            num_frames,
            num_vertices,
            fps,
            label: None,
        })
    }

    /// Builds a validated sequence from a frame-major flat buffer.
    pub fn from_flat(
        num_frames: usize,
        num_vertices: usize,
        data: Vec<Vec3>,
        fps: f64,
    ) -> Result<Self> {
        if data.len() != num_frames * num_vertices {
            return Err(Error::InvalidSequence(format!(
                "buffer holds {} points, expected {num_frames} x {num_vertices}",
                data.len()
            )));
        }
        validate_flat(num_frames, num_vertices, &data, fps)
            .map_err(|v| Error::InvalidSequence(v.to_string()))?;
        Ok(MeshSequence {
            data,
            num_frames,
            num_vertices,
            fps,
            label: None,
        })
    }

    /// `num_frames` copies of the same frame.
    pub fn constant(frame: &[Vec3], num_frames: usize, fps: f64) -> Result<Self> {
        let data = (0..num_frames)
            .flat_map(|_| frame.iter().copied())
            .collect();
        Self::from_flat(num_frames, frame.len(), data, fps)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn frame(&self, t: usize) -> &[Vec3] {
        let v = self.num_vertices;
        &self.data[t * v..(t + 1) * v]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[Vec3]> + '_ {
        self.data.chunks_exact(self.num_vertices)
    }

    pub fn as_flat(&self) -> &[Vec3] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<Vec3> {
        self.data
    }

    /// `"TxV"`, used in mismatch diagnostics.
    pub fn shape_string(&self) -> String {
        format!("{}x{}", self.num_frames, self.num_vertices)
    }

    /// Errors unless `other` has the same frame and vertex counts.
    pub fn ensure_same_shape(&self, other: &MeshSequence) -> Result<()> {
        if self.num_frames != other.num_frames || self.num_vertices != other.num_vertices {
            return Err(Error::ShapeMismatch {
                left: self.shape_string(),
                right: other.shape_string(),
            });
        }
        Ok(())
    }

    /// Copy of frames `range` (start inclusive, end exclusive).
    pub fn slice_frames(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.num_frames {
            return Err(Error::InvalidSequence(format!(
                "frame range {start}..{end} outside 0..{}",
                self.num_frames
            )));
        }
        let v = self.num_vertices;
        Ok(MeshSequence {
            data: self.data[start * v..end * v].to_vec(),
            num_frames: end - start,
            num_vertices: v,
            fps: self.fps,
            label: self.label.clone(),
        })
    }

    /// Applies `f` to every point, keeping shape and metadata. The result is
    /// revalidated so a non-finite output surfaces as an error.
    pub fn map_points(&self, mut f: impl FnMut(usize, usize, &Vec3) -> Vec3) -> Result<Self> {
        let v = self.num_vertices;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(idx, p)| f(idx / v, idx % v, p))
            .collect();
        let mut out = Self::from_flat(self.num_frames, v, data, self.fps)?;
        out.label = self.label.clone();
        Ok(out)
    }
}

/// Per-vertex displacements with the same shape rules as [`MeshSequence`].
/// Also used for gradients with respect to predicted vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSequence(MeshSequence);

impl DeformationSequence {
    pub fn new(frames: Vec<Vec<Vec3>>, fps: f64) -> Result<Self> {
        MeshSequence::new(frames, fps).map(DeformationSequence)
    }

    pub fn from_flat(
        num_frames: usize,
        num_vertices: usize,
        data: Vec<Vec3>,
        fps: f64,
    ) -> Result<Self> {
        MeshSequence::from_flat(num_frames, num_vertices, data, fps).map(DeformationSequence)
    }

    pub fn zeros(num_frames: usize, num_vertices: usize, fps: f64) -> Result<Self> {
        Self::from_flat(
            num_frames,
            num_vertices,
            vec![[0.0; 3]; num_frames * num_vertices],
            fps,
        )
    }

    pub fn as_sequence(&self) -> &MeshSequence {
        &self.0
    }

    pub fn num_frames(&self) -> usize {
        self.0.num_frames
    }

    pub fn num_vertices(&self) -> usize {
        self.0.num_vertices
    }

    pub fn frame(&self, t: usize) -> &[Vec3] {
        self.0.frame(t)
    }

    pub fn as_flat(&self) -> &[Vec3] {
        self.0.as_flat()
    }
}

/// Static face geometry that deformations are added to.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTemplate {
    vertices: Vec<Vec3>,
}

impl FaceTemplate {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidSequence("template has no vertices".into()));
        }
        if let Some(i) = vertices
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::InvalidSequence(format!(
                "template vertex {i} has a non-finite coordinate"
            )));
        }
        Ok(FaceTemplate { vertices })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }
}

/// Sorted, duplicate-free set of vertex indices naming a region such as the
/// lips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexRegionMask {
    indices: Vec<usize>,
    region_name: String,
}

impl VertexRegionMask {
    /// Sorts and deduplicates `indices`. Fails on an empty list.
    pub fn new(mut indices: Vec<usize>, region_name: impl Into<String>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::InvalidMask("empty mask".into()));
        }
        Ok(VertexRegionMask {
            indices,
            region_name: region_name.into(),
        })
    }

    /// Mask covering vertices `0..num_vertices`.
    pub fn all(num_vertices: usize, region_name: impl Into<String>) -> Result<Self> {
        Self::new((0..num_vertices).collect(), region_name)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn region_name(&self) -> &str {
        &self.region_name
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Errors if any index is outside `0..num_vertices`.
    pub fn check_against(&self, num_vertices: usize) -> Result<()> {
        match self.indices.last() {
            Some(&max) if max >= num_vertices => Err(Error::InvalidMask(format!(
                "index {max} out of range for {num_vertices} vertices"
            ))),
            _ => Ok(()),
        }
    }
}

/// Adds each deformation frame to the template. The output copies the
/// deformation's frame rate.
pub fn apply_deformation(
    template: &FaceTemplate,
    def: &DeformationSequence,
) -> Result<MeshSequence> {
    let v = template.vertices.len();
    if v != def.num_vertices() {
        return Err(Error::ShapeMismatch {
            left: format!("template with {v} vertices"),
            right: format!("deformation {}", def.0.shape_string()),
        });
    }
    def.0.map_points(|_, i, d| {
        let base = &template.vertices[i];
        [base[0] + d[0], base[1] + d[1], base[2] + d[2]]
    })
}

/// Shifts every vertex of every frame by `offset`.
pub fn translate_sequence(seq: &MeshSequence, offset: Vec3) -> Result<MeshSequence> {
    if offset.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidSequence(
            "translation offset must be finite".into(),
        ));
    }
    seq.map_points(|_, _, p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
}

/// `‖v[k] − v[k−1]‖²` for `k = 1..T` (0-based), summed over all vertices and
/// coordinates. The output has `T − 1` entries; entry `k − 1` belongs to the
/// step that ends at frame `k`.
pub fn frame_difference_norms(seq: &MeshSequence) -> Result<Vec<f64>> {
    if seq.num_frames < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: seq.num_frames,
        });
    }
    Ok((1..seq.num_frames)
        .map(|k| frame_sq_diff(seq.frame(k), seq.frame(k - 1)))
        .collect())
}
