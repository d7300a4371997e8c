use crate::error::{Error, Result};
use crate::mesh::{DeformationSequence, MeshSequence};

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_differences(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            let orig = probe[j];
            probe[j] = orig + step;
            let up = f(&probe);
            probe[j] = orig - step;
            let down = f(&probe);
            probe[j] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Numerical gradient of `loss(gt, pred)` with respect to `pred`.
pub fn finite_difference_gradient<F>(
    loss: F,
    gt: &MeshSequence,
    pred: &MeshSequence,
    step: f64,
) -> Result<DeformationSequence>
where
    F: Fn(&MeshSequence, &MeshSequence) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "step must be positive, got {step}"
        )));
    }
    gt.ensure_same_shape(pred)?;
    let (n, v, fps) = (pred.num_frames(), pred.num_vertices(), pred.fps());
    let flat: Vec<f64> = pred.as_flat().iter().flatten().copied().collect();
    let mut failure = None;
    let grad = central_differences(
        |x| {
            let points = x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            let probe = MeshSequence::from_flat(n, v, points, fps).and_then(|p| loss(gt, &p));
            probe.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        &flat,
        step,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let points = grad.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    DeformationSequence::from_flat(n, v, points, fps)
}

/// Largest coordinate-wise relative error `|a − b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Flattens a gradient field into `x, y, z` order.
pub fn flatten(g: &DeformationSequence) -> Vec<f64> {
    g.as_flat().iter().flatten().copied().collect()
}
