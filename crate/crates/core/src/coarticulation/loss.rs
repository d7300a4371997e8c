use std::fmt;

use super::weights::CoarticulationWeights;
use crate::error::{Error, Result};
use crate::mesh::{frame_sq_diff, DeformationSequence, MeshSequence, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Unweighted reconstruction error.
    Rec,
    /// Velocity (frame-difference) error.
    Vel,
    /// Coarticulation-weighted reconstruction error.
    Pc,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Rec => "rec",
            LossKind::Vel => "vel",
            LossKind::Pc => "pc",
        })
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rec" => Ok(LossKind::Rec),
            "vel" => Ok(LossKind::Vel),
            "pc" => Ok(LossKind::Pc),
            other => Err(Error::InvalidConfig(format!(
                "unknown loss kind {other:?} (expected rec, vel or pc)"
            ))),
        }
    }
}

/// A loss total with its per-frame terms.
///
/// `per_frame[j]` belongs to frame `first_frame + j`. The velocity loss has
/// no term for frame 0, so its `first_frame` is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub per_frame: Vec<f64>,
    pub first_frame: usize,
    pub kind: LossKind,
}

impl LossReport {
    fn from_terms(per_frame: Vec<f64>, first_frame: usize, kind: LossKind) -> Self {
        LossReport {
            total: per_frame.iter().sum(),
            per_frame,
            first_frame,
            kind,
        }
    }
}

fn check_weights(gt: &MeshSequence, w: &CoarticulationWeights) -> Result<()> {
    if w.len() != gt.num_frames() {
        return Err(Error::ShapeMismatch {
            left: format!("{} frames", gt.num_frames()),
            right: format!("{} weights", w.len()),
        });
    }
    Ok(())
}

/// Per-frame reconstruction errors `‖v[t] − v̂[t]‖²`.
pub fn frame_errors(gt: &MeshSequence, pred: &MeshSequence) -> Result<Vec<f64>> {
    gt.ensure_same_shape(pred)?;
    Ok(gt
        .frames()
        .zip(pred.frames())
        .map(|(g, p)| frame_sq_diff(g, p))
        .collect())
}

pub fn loss_rec(gt: &MeshSequence, pred: &MeshSequence) -> Result<LossReport> {
    Ok(LossReport::from_terms(
        frame_errors(gt, pred)?,
        0,
        LossKind::Rec,
    ))
}

fn velocity_residual(gt: &MeshSequence, pred: &MeshSequence, t: usize, i: usize) -> Vec3 {
    let (g1, g0) = (&gt.frame(t)[i], &gt.frame(t - 1)[i]);
    let (p1, p0) = (&pred.frame(t)[i], &pred.frame(t - 1)[i]);
    std::array::from_fn(|c| (p1[c] - p0[c]) - (g1[c] - g0[c]))
}

pub fn loss_vel(gt: &MeshSequence, pred: &MeshSequence) -> Result<LossReport> {
    gt.ensure_same_shape(pred)?;
    if gt.num_frames() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: gt.num_frames(),
        });
    }
    let per_frame = (1..gt.num_frames())
        .map(|t| {
            (0..gt.num_vertices())
                .map(|i| {
                    let r = velocity_residual(gt, pred, t, i);
                    r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
                })
                .sum()
        })
        .collect();
    Ok(LossReport::from_terms(per_frame, 1, LossKind::Vel))
}

/// Weighted reconstruction loss. `w` must come from the ground truth.
pub fn loss_pc(
    gt: &MeshSequence,
    pred: &MeshSequence,
    w: &CoarticulationWeights,
) -> Result<LossReport> {
    check_weights(gt, w)?;
    let per_frame = frame_errors(gt, pred)?
        .into_iter()
        .zip(w.weights())
        .map(|(e, wt)| wt * e)
        .collect();
    Ok(LossReport::from_terms(per_frame, 0, LossKind::Pc))
}

fn gradient_from(gt: &MeshSequence, data: Vec<Vec3>) -> Result<DeformationSequence> {
    DeformationSequence::from_flat(gt.num_frames(), gt.num_vertices(), data, gt.fps())
}

/// Scaled residuals `scale[t] · 2 · (v̂ − v)`, the gradient of a per-frame
/// weighted squared error.
fn weighted_residual_grad(
    gt: &MeshSequence,
    pred: &MeshSequence,
    scale: impl Fn(usize) -> f64,
) -> Vec<Vec3> {
    let v = gt.num_vertices();
    gt.as_flat()
        .iter()
        .zip(pred.as_flat())
        .enumerate()
        .map(|(idx, (g, p))| {
            let s = 2.0 * scale(idx / v);
            [s * (p[0] - g[0]), s * (p[1] - g[1]), s * (p[2] - g[2])]
        })
        .collect()
}

/// Gradient of [`loss_rec`] with respect to `pred`.
pub fn grad_loss_rec(gt: &MeshSequence, pred: &MeshSequence) -> Result<DeformationSequence> {
    gt.ensure_same_shape(pred)?;
    gradient_from(gt, weighted_residual_grad(gt, pred, |_| 1.0))
}

/// Gradient of [`loss_pc`] with respect to `pred`. Exact, since the weights
/// do not depend on the prediction.
pub fn grad_loss_pc(
    gt: &MeshSequence,
    pred: &MeshSequence,
    w: &CoarticulationWeights,
) -> Result<DeformationSequence> {
    gt.ensure_same_shape(pred)?;
    check_weights(gt, w)?;
    let weights = w.weights();
    gradient_from(gt, weighted_residual_grad(gt, pred, |t| weights[t]))
}

/// Gradient of [`loss_vel`] with respect to `pred`. Frame `t` collects `+2r`
/// from the step ending at `t` and `−2r` from the step starting at `t`.
pub fn grad_loss_vel(gt: &MeshSequence, pred: &MeshSequence) -> Result<DeformationSequence> {
    gt.ensure_same_shape(pred)?;
    let n = gt.num_frames();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let v = gt.num_vertices();
    let mut data = vec![[0.0; 3]; n * v];
    for t in 1..n {
        for i in 0..v {
            let r = velocity_residual(gt, pred, t, i);
            for c in 0..3 {
                data[t * v + i][c] += 2.0 * r[c];
                data[(t - 1) * v + i][c] -= 2.0 * r[c];
            }
        }
    }
    gradient_from(gt, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarticulation::weights::{coarticulation_weights, WindowSpec};

    fn one(p: Vec3) -> MeshSequence {
        MeshSequence::new(vec![vec![p]], 30.0).unwrap()
    }

    #[test]
    fn rec_small_cases() {
        let gt = one([0.0; 3]);
        assert_eq!(loss_rec(&gt, &gt).unwrap().total, 0.0);
        assert_eq!(loss_rec(&gt, &one([1.0, 1.0, 0.0])).unwrap().total, 2.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = MeshSequence::constant(&[[0.0; 3]; 2], 3, 30.0).unwrap();
        let b = MeshSequence::constant(&[[0.0; 3]; 3], 3, 30.0).unwrap();
        let err = loss_rec(&a, &b).unwrap_err();
        assert_eq!(err.to_string(), "shape mismatch: 3x2 vs 3x3");
        assert!(loss_vel(&a, &b).is_err());
        assert!(grad_loss_rec(&a, &b).is_err());
        assert!(grad_loss_vel(&a, &b).is_err());
    }

    #[test]
    fn velocity_ignores_constant_offset() {
        let gt = MeshSequence::new(
            vec![
                vec![[0.0, 1.0, 2.0]],
                vec![[0.5, 1.0, 0.0]],
                vec![[3.0, 0.0, 1.0]],
            ],
            30.0,
        )
        .unwrap();
        let pred = crate::mesh::translate_sequence(&gt, [0.25, -0.5, 2.0]).unwrap();
        let r = loss_vel(&gt, &pred).unwrap();
        assert!(r.total.abs() < 1e-24);
        assert_eq!(r.per_frame.len(), 2);
        assert_eq!(r.first_frame, 1);
        assert_eq!(loss_vel(&gt, &gt).unwrap().total, 0.0);
        assert!(matches!(
            loss_vel(&one([0.0; 3]), &one([0.0; 3])),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn vel_gradient_two_frames_by_hand() {
        let gt =
            MeshSequence::new(vec![vec![[0.0, 0.0, 0.0]], vec![[1.0, 0.0, 0.0]]], 30.0).unwrap();
        let pred =
            MeshSequence::new(vec![vec![[0.0, 1.0, 0.0]], vec![[3.0, 0.0, 0.5]]], 30.0).unwrap();
        let g = grad_loss_vel(&gt, &pred).unwrap();
        // (v̂²−v̂¹) − (v²−v¹) = (3,−1,0.5) − (1,0,0) = (2,−1,0.5)
        assert_eq!(g.frame(1), &[[4.0, -2.0, 1.0]]);
        assert_eq!(g.frame(0), &[[-4.0, 2.0, -1.0]]);
    }

    #[test]
    fn pc_gradient_single_frame() {
        let gt = one([0.0; 3]);
        let w = CoarticulationWeights::uniform(1);
        let g = grad_loss_pc(&gt, &one([1.0, 0.0, 0.0]), &w).unwrap();
        assert_eq!(g.frame(0), &[[2.0, 0.0, 0.0]]);
        assert!(grad_loss_pc(&gt, &gt, &w)
            .unwrap()
            .as_flat()
            .iter()
            .all(|p| *p == [0.0; 3]));
    }

    #[test]
    fn pc_micro_example_with_unit_offset() {
        let gt = MeshSequence::new(
            vec![
                vec![[0.0, 0.0, 0.0]],
                vec![[1.0, 0.0, 0.0]],
                vec![[1.0, 0.0, 0.0]],
            ],
            30.0,
        )
        .unwrap();
        let w = coarticulation_weights(&gt, &WindowSpec::new(1)).unwrap();
        let pred = crate::mesh::translate_sequence(&gt, [1.0, 0.0, 0.0]).unwrap();
        let r = loss_pc(&gt, &pred, &w).unwrap();
        assert!((r.total - 1.0).abs() < 1e-12);
        assert_eq!(loss_pc(&gt, &gt, &w).unwrap().total, 0.0);
    }

    #[test]
    fn pc_rejects_weight_length_mismatch() {
        let gt = MeshSequence::constant(&[[0.0; 3]], 3, 30.0).unwrap();
        let w = CoarticulationWeights::uniform(2);
        assert!(matches!(
            loss_pc(&gt, &gt, &w),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(grad_loss_pc(&gt, &gt, &w).is_err());
    }

    #[test]
    fn loss_kind_parses() {
        assert_eq!("pc".parse::<LossKind>().unwrap(), LossKind::Pc);
        assert!("l2".parse::<LossKind>().is_err());
        assert_eq!(LossKind::Vel.to_string(), "vel");
    }
}
