use crate::error::{Error, Result};

/// `K` clamped uniform B-spline functions on `[0, 1]`.
///
/// Frame `t` of a `T`-frame sequence sits at `u = t / (T − 1)`. Cubic bases
/// (the default) drop to degree `K − 1` when `K < 4`. Degree 0 with `K = T`
/// reproduces the identity at the frame positions, which is the degenerate
/// full-capacity case.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalBasis {
    num_basis: usize,
    degree: usize,
    knots: Vec<f64>,
}

/// Sparse design matrix: for each frame, the `(basis index, value)` pairs
/// that are nonzero there.
pub type DesignRows = Vec<Vec<(usize, f64)>>;

impl TemporalBasis {
    pub fn new(num_basis: usize, degree: usize) -> Result<Self> {
        if num_basis == 0 {
            return Err(Error::InvalidConfig(
                "basis needs at least one function".into(),
            ));
        }
        if degree >= num_basis {
            return Err(Error::InvalidConfig(format!(
                "degree {degree} needs more than {num_basis} basis functions"
            )));
        }
        let interior = num_basis - degree;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..interior).map(|j| j as f64 / interior as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(TemporalBasis {
            num_basis,
            degree,
            knots,
        })
    }

    /// Cubic basis, or the highest degree `K` allows.
    pub fn cubic(num_basis: usize) -> Result<Self> {
        Self::new(num_basis, 3.min(num_basis.saturating_sub(1)))
    }

    /// Piecewise-constant basis with one function per frame.
    pub fn identity(num_frames: usize) -> Result<Self> {
        Self::new(num_frames, 0)
    }

    pub fn num_basis(&self) -> usize {
        self.num_basis
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn span(&self, u: f64) -> usize {
        let p = self.degree;
        let last = self.num_basis - 1;
        if u >= 1.0 {
            return last;
        }
        // Largest s in [p, last] with knots[s] <= u.
        let mut s = p;
        while s < last && self.knots[s + 1] <= u {
            s += 1;
        }
        s
    }

    /// Nonzero basis values at `u`, as `(index, value)` pairs.
    pub fn eval_nonzero(&self, u: f64) -> Vec<(usize, f64)> {
        let u = u.clamp(0.0, 1.0);
        let p = self.degree;
        let s = self.span(u);
        let k = &self.knots;
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = u - k[s + 1 - j];
            right[j] = k[s + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n.into_iter()
            .enumerate()
            .map(|(r, v)| (s - p + r, v))
            .collect()
    }

    /// Value of basis function `index` at `u`.
    pub fn eval(&self, index: usize, u: f64) -> f64 {
        self.eval_nonzero(u)
            .into_iter()
            .find(|(i, _)| *i == index)
            .map_or(0.0, |(_, v)| v)
    }

    /// Position of frame `t` among `num_frames` frames.
    pub fn frame_position(t: usize, num_frames: usize) -> f64 {
        if num_frames <= 1 {
            0.0
        } else {
            t as f64 / (num_frames - 1) as f64
        }
    }

    pub fn design(&self, num_frames: usize) -> DesignRows {
        (0..num_frames)
            .map(|t| self.eval_nonzero(Self::frame_position(t, num_frames)))
            .collect()
    }
}
