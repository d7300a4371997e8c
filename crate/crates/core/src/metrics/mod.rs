//! Face and lip vertex errors, lip DTW and lip-max.
//!
//! All four metrics are built from the per-vertex Euclidean distance
//! `‖v[t][i] − v̂[t][i]‖₂`. FVE and LVE average it over vertices, then frames.
//! Lip-max takes the largest lip-vertex distance per frame and averages over
//! frames. LDTW aligns the two lip trajectories and divides the warping cost
//! by the warping path length.

mod dtw;

pub use dtw::{dtw, dtw_with, euclidean, DtwOptions, DtwResult};

use crate::error::{Error, Result};
use crate::mesh::{dist, MeshSequence, VertexRegionMask};

/// All four metrics with their per-frame breakdowns.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub fve: f64,
    pub lve: f64,
    pub ldtw: f64,
    pub lip_max: f64,
    /// Largest lip-vertex error over every frame.
    pub lip_max_global: f64,
    pub per_frame_fve: Vec<f64>,
    pub per_frame_lve: Vec<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn check_pair(
    gt: &MeshSequence,
    pred: &MeshSequence,
    lips: Option<&VertexRegionMask>,
) -> Result<()> {
    gt.ensure_same_shape(pred)?;
    if let Some(mask) = lips {
        mask.check_against(gt.num_vertices())?;
    }
    Ok(())
}

/// Mean per-vertex distance of every frame.
pub fn per_frame_vertex_error(gt: &MeshSequence, pred: &MeshSequence) -> Result<Vec<f64>> {
    check_pair(gt, pred, None)?;
    Ok(gt
        .frames()
        .zip(pred.frames())
        .map(|(g, p)| g.iter().zip(p).map(|(a, b)| dist(a, b)).sum::<f64>() / g.len() as f64)
        .collect())
}

/// Mean masked-vertex distance of every frame.
pub fn per_frame_region_error(
    gt: &MeshSequence,
    pred: &MeshSequence,
    mask: &VertexRegionMask,
) -> Result<Vec<f64>> {
    check_pair(gt, pred, Some(mask))?;
    Ok(gt
        .frames()
        .zip(pred.frames())
        .map(|(g, p)| {
            mask.indices()
                .iter()
                .map(|&i| dist(&g[i], &p[i]))
                .sum::<f64>()
                / mask.len() as f64
        })
        .collect())
}

/// Largest masked-vertex distance of every frame.
pub fn per_frame_region_max(
    gt: &MeshSequence,
    pred: &MeshSequence,
    mask: &VertexRegionMask,
) -> Result<Vec<f64>> {
    check_pair(gt, pred, Some(mask))?;
    Ok(gt
        .frames()
        .zip(pred.frames())
        .map(|(g, p)| {
            mask.indices()
                .iter()
                .map(|&i| dist(&g[i], &p[i]))
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Face vertex error.
pub fn fve(gt: &MeshSequence, pred: &MeshSequence) -> Result<f64> {
    per_frame_vertex_error(gt, pred).map(|v| mean(&v))
}

/// Lip vertex error.
pub fn lve(gt: &MeshSequence, pred: &MeshSequence, lips: &VertexRegionMask) -> Result<f64> {
    per_frame_region_error(gt, pred, lips).map(|v| mean(&v))
}

/// Mean over the frames listed in `frames` of the lip vertex error. Used for
/// segment-conditioned evaluation (transition vs. hold frames).
pub fn lve_on_frames(
    gt: &MeshSequence,
    pred: &MeshSequence,
    lips: &VertexRegionMask,
    frames: &[usize],
) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::Empty("frame subset"));
    }
    let per_frame = per_frame_region_error(gt, pred, lips)?;
    frames
        .iter()
        .map(|&t| {
            per_frame.get(t).copied().ok_or_else(|| {
                Error::InvalidSequence(format!("frame {t} outside {} frames", per_frame.len()))
            })
        })
        .sum::<Result<f64>>()
        .map(|s| s / frames.len() as f64)
}

/// Per-frame max lip error averaged over frames.
pub fn lip_max(gt: &MeshSequence, pred: &MeshSequence, lips: &VertexRegionMask) -> Result<f64> {
    per_frame_region_max(gt, pred, lips).map(|v| mean(&v))
}

fn lip_features(seq: &MeshSequence, lips: &VertexRegionMask) -> Vec<Vec<f64>> {
    seq.frames()
        .map(|f| lips.indices().iter().flat_map(|&i| f[i]).collect())
        .collect()
}

/// Mean Euclidean distance between corresponding points of two packed
/// `xyz` feature vectors.
fn mean_point_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 3;
    a.chunks_exact(3)
        .zip(b.chunks_exact(3))
        .map(|(p, q)| euclidean(p, q))
        .sum::<f64>()
        / n as f64
}

/// DTW of the lip trajectories with the mean lip-vertex distance as local
/// cost. The sequences may differ in length.
pub fn ldtw_result(
    gt: &MeshSequence,
    pred: &MeshSequence,
    lips: &VertexRegionMask,
) -> Result<DtwResult> {
    if gt.num_vertices() != pred.num_vertices() {
        return Err(Error::ShapeMismatch {
            left: gt.shape_string(),
            right: pred.shape_string(),
        });
    }
    lips.check_against(gt.num_vertices())?;
    dtw(
        &lip_features(gt, lips),
        &lip_features(pred, lips),
        mean_point_distance,
    )
}

/// Lip DTW distance normalized by warping path length.
pub fn ldtw(gt: &MeshSequence, pred: &MeshSequence, lips: &VertexRegionMask) -> Result<f64> {
    ldtw_result(gt, pred, lips).map(|r| r.normalized())
}

/// Computes every metric for one prediction.
pub fn evaluate(
    gt: &MeshSequence,
    pred: &MeshSequence,
    lips: &VertexRegionMask,
) -> Result<MetricReport> {
    let per_frame_fve = per_frame_vertex_error(gt, pred)?;
    let per_frame_lve = per_frame_region_error(gt, pred, lips)?;
    let maxes = per_frame_region_max(gt, pred, lips)?;
    Ok(MetricReport {
        fve: mean(&per_frame_fve),
        lve: mean(&per_frame_lve),
        ldtw: ldtw(gt, pred, lips)?,
        lip_max: mean(&maxes),
        lip_max_global: maxes.iter().copied().fold(0.0, f64::max),
        per_frame_fve,
        per_frame_lve,
    })
}
