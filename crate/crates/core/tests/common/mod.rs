#![allow(dead_code)]

use coartic::{MeshSequence, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sequence(
    rng: &mut impl Rng,
    frames: usize,
    vertices: usize,
    scale: f64,
) -> MeshSequence {
    let nested: Vec<Vec<Vec3>> = (0..frames)
        .map(|_| {
            (0..vertices)
                .map(|_| std::array::from_fn(|_| rng.gen_range(-scale..scale)))
                .collect()
        })
        .collect();
    MeshSequence::new(nested, 30.0).unwrap()
}

pub fn nested(seq: &MeshSequence) -> Vec<Vec<Vec3>> {
    seq.frames().map(|f| f.to_vec()).collect()
}

/// `‖a − b‖²` summed over vertices and coordinates, written out longhand.
pub fn frame_sq(a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for c in 0..3 {
            let d = a[i][c] - b[i][c];
            s += d * d;
        }
    }
    s
}

/// Raw energies from the 1-based definition: frame `t` averages
/// `‖v[k] − v[k−1]‖²` over `k ∈ [max(2, t−σ), min(T, t+σ)]`. An empty window
/// (only `t = 1, σ = 0`) falls back to `k = 2`.
pub fn energies_oracle(seq: &[Vec<Vec3>], sigma: usize) -> Vec<f64> {
    let n = seq.len() as i64;
    let s = sigma as i64;
    (1..=n)
        .map(|t| {
            let lo = (t - s).max(2);
            let hi = (t + s).min(n).max(lo);
            let mut total = 0.0;
            for k in lo..=hi {
                total += frame_sq(&seq[(k - 1) as usize], &seq[(k - 2) as usize]);
            }
            total / (hi - lo + 1) as f64
        })
        .collect()
}

pub fn softmax_oracle(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::MIN, f64::max);
    let z: f64 = x.iter().map(|v| (v - m).exp()).sum();
    x.iter().map(|v| (v - m).exp() / z).collect()
}

pub fn translate_all(seq: &MeshSequence, d: Vec3) -> MeshSequence {
    seq.map_points(|_, _, p| [p[0] + d[0], p[1] + d[1], p[2] + d[2]])
        .unwrap()
}
