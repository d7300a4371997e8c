use crate::error::{Error, Result};
use crate::mesh::{frame_difference_norms, MeshSequence};

/// How windows are handled near the ends of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Truncate the window at both ends so every frame has an energy.
    #[default]
    Clamp,
    /// Only frames whose full window fits inside the sequence are defined.
    Strict,
}

impl std::str::FromStr for BoundaryPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(BoundaryPolicy::Clamp),
            "strict" => Ok(BoundaryPolicy::Strict),
            other => Err(Error::InvalidConfig(format!(
                "unknown boundary policy {other:?} (expected clamp or strict)"
            ))),
        }
    }
}

/// Temporal window around a frame: radius `sigma`, so `2 * sigma + 1` frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub sigma: usize,
    pub boundary_policy: BoundaryPolicy,
    /// Softmax temperature. `1.0` applies the softmax to raw energies.
    pub temperature: f64,
}

impl WindowSpec {
    pub const DEFAULT_SIGMA: usize = 2;

    pub fn new(sigma: usize) -> Self {
        WindowSpec {
            sigma,
            ..Self::default()
        }
    }

    pub fn strict(sigma: usize) -> Self {
        WindowSpec {
            sigma,
            boundary_policy: BoundaryPolicy::Strict,
            temperature: 1.0,
        }
    }

    pub fn with_policy(mut self, policy: BoundaryPolicy) -> Self {
        self.boundary_policy = policy;
        self
    }

    /// Window size in frames, `2 * sigma + 1`.
    pub fn size(&self) -> usize {
        2 * self.sigma + 1
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            sigma: Self::DEFAULT_SIGMA,
            boundary_policy: BoundaryPolicy::Clamp,
            temperature: 1.0,
        }
    }
}

/// Softmax-normalized per-frame weights and the raw energies behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarticulationWeights {
    weights: Vec<f64>,
    raw_energy: Vec<f64>,
    sigma: usize,
}

impl CoarticulationWeights {
    /// Wraps externally computed weights. They must be positive and sum to 1
    /// within 1e-9.
    pub fn from_parts(weights: Vec<f64>, raw_energy: Vec<f64>, sigma: usize) -> Result<Self> {
        if weights.is_empty() || weights.len() != raw_energy.len() {
            return Err(Error::InvalidConfig(format!(
                "weights ({}) and energies ({}) must be nonempty and equally long",
                weights.len(),
                raw_energy.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if weights
            .iter()
            .any(|w| w.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !w.is_finite())
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidConfig(format!(
                "weights must be positive and sum to one (sum = {sum})"
            )));
        }
        Ok(CoarticulationWeights {
            weights,
            raw_energy,
            sigma,
        })
    }

    /// Equal weights `1/T`, the degenerate case that turns the weighted loss
    /// into a scaled reconstruction loss.
    pub fn uniform(num_frames: usize) -> Self {
        CoarticulationWeights {
            weights: vec![1.0 / num_frames as f64; num_frames],
            raw_energy: vec![0.0; num_frames],
            sigma: 0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn raw_energy(&self) -> &[f64] {
        &self.raw_energy
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Indices `k` (0-based, `k ≥ 1`) of the frame steps `v[k] − v[k−1]` that fall
/// in the window of frame `t`.
fn window_steps(
    num_frames: usize,
    t: usize,
    w: &WindowSpec,
) -> Result<std::ops::RangeInclusive<usize>> {
    if num_frames < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: num_frames,
        });
    }
    if t >= num_frames {
        return Err(Error::Window(format!(
            "frame {t} outside sequence of {num_frames} frames"
        )));
    }
    let sigma = w.sigma;
    match w.boundary_policy {
        BoundaryPolicy::Clamp => {
            let lo = t.saturating_sub(sigma).max(1);
            // Frame 0 with sigma = 0 has no step of its own; use step 1.
            let hi = (t + sigma).min(num_frames - 1).max(lo);
            Ok(lo..=hi)
        }
        BoundaryPolicy::Strict => {
            if t < sigma || t + sigma > num_frames - 1 {
                return Err(Error::Window(format!(
                    "strict window of radius {sigma} needs {sigma} <= t <= T-1-{sigma}, got t={t}, T={num_frames}"
                )));
            }
            let lo = (t - sigma).max(1);
            let hi = t + sigma;
            if lo > hi {
                return Err(Error::Window(format!(
                    "strict window of radius {sigma} at frame {t} contains no frame step"
                )));
            }
            Ok(lo..=hi)
        }
    }
}

fn energy_from_norms(norms: &[f64], steps: std::ops::RangeInclusive<usize>) -> f64 {
    let count = steps.clone().count();
    let total: f64 = steps.map(|k| norms[k - 1]).sum();
    total / count as f64
}

/// Mean squared frame-to-frame displacement inside the window of frame `t`
/// (0-based).
pub fn motion_energy(gt: &MeshSequence, t: usize, w: &WindowSpec) -> Result<f64> {
    let steps = window_steps(gt.num_frames(), t, w)?;
    let norms = frame_difference_norms(gt)?;
    Ok(energy_from_norms(&norms, steps))
}

/// Raw energies for every frame.
///
/// Under [`BoundaryPolicy::Strict`] only interior frames get a windowed
/// energy; frames before the first (after the last) interior frame reuse its
/// value. This fails when no interior frame exists, i.e. `T <= 2 * sigma`.
pub fn motion_energies(gt: &MeshSequence, w: &WindowSpec) -> Result<Vec<f64>> {
    let n = gt.num_frames();
    let norms = frame_difference_norms(gt)?;
    match w.boundary_policy {
        BoundaryPolicy::Clamp => (0..n)
            .map(|t| window_steps(n, t, w).map(|s| energy_from_norms(&norms, s)))
            .collect(),
        BoundaryPolicy::Strict => {
            if n <= 2 * w.sigma {
                return Err(Error::Window(format!(
                    "strict policy requires T > 2*sigma, got T={n}, sigma={}",
                    w.sigma
                )));
            }
            // sigma = 0 leaves frame 0 without a step; it borrows from frame 1.
            let first = w.sigma.max(1);
            let last = n - 1 - w.sigma;
            let interior: Vec<f64> = (first..=last)
                .map(|t| window_steps(n, t, w).map(|s| energy_from_norms(&norms, s)))
                .collect::<Result<_>>()?;
            Ok((0..n)
                .map(|t| interior[t.clamp(first, last) - first])
                .collect())
        }
    }
}

/// Max-subtracted softmax of `values / temperature`.
pub fn softmax(values: &[f64], temperature: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values
        .iter()
        .map(|v| ((v - max) / temperature).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-frame coarticulation weights of a ground-truth sequence.
pub fn coarticulation_weights(gt: &MeshSequence, w: &WindowSpec) -> Result<CoarticulationWeights> {
    if !(w.temperature.is_finite() && w.temperature > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {}",
            w.temperature
        )));
    }
    let raw_energy = motion_energies(gt, w)?;
    let weights = softmax(&raw_energy, w.temperature);
    Ok(CoarticulationWeights {
        weights,
        raw_energy,
        sigma: w.sigma,
    })
}
