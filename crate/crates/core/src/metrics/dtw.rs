use crate::error::{Error, Result};

/// Optional Sakoe-Chiba band. `None` runs the full recurrence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DtwOptions {
    pub band: Option<usize>,
}

/// Optimal warping cost and the alignment that achieves it.
///
/// `path` holds 0-based `(i, j)` pairs from `(0, 0)` to `(n − 1, m − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub distance: f64,
    pub path: Vec<(usize, usize)>,
}

impl DtwResult {
    pub fn path_length(&self) -> usize {
        self.path.len()
    }

    /// Distance divided by the number of aligned pairs.
    pub fn normalized(&self) -> f64 {
        self.distance / self.path.len() as f64
    }
}

/// Classic DTW with unit steps `(1,0)`, `(0,1)`, `(1,1)`.
pub fn dtw<A, B, F>(a: &[A], b: &[B], cost: F) -> Result<DtwResult>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
    F: Fn(&[f64], &[f64]) -> f64,
{
    dtw_with(a, b, cost, DtwOptions::default())
}

pub fn dtw_with<A, B, F>(a: &[A], b: &[B], cost: F, opts: DtwOptions) -> Result<DtwResult>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
    F: Fn(&[f64], &[f64]) -> f64,
{
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("dtw needs two nonempty sequences"));
    }
    let dim = a[0].as_ref().len();
    if let Some(bad) = a
        .iter()
        .map(|x| x.as_ref().len())
        .chain(b.iter().map(|x| x.as_ref().len()))
        .find(|&d| d != dim)
    {
        return Err(Error::ShapeMismatch {
            left: format!("feature dimension {dim}"),
            right: format!("feature dimension {bad}"),
        });
    }
    let (n, m) = (a.len(), b.len());
    if let Some(r) = opts.band {
        if n.abs_diff(m) > r {
            return Err(Error::InvalidConfig(format!(
                "band radius {r} cannot connect lengths {n} and {m}"
            )));
        }
    }
    let in_band = |i: usize, j: usize| opts.band.is_none_or(|r| i.abs_diff(j) <= r);

    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            if !in_band(i, j) {
                continue;
            }
            let local = cost(a[i].as_ref(), b[j].as_ref());
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    acc[at(i - 1, j - 1)]
                } else {
                    f64::INFINITY
                };
                let up = if i > 0 {
                    acc[at(i - 1, j)]
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    acc[at(i, j - 1)]
                } else {
                    f64::INFINITY
                };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = local + best;
        }
    }

    // Backtrack; ties go to the diagonal, then vertical, then horizontal.
    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while i > 0 || j > 0 {
        let mut next = None;
        let mut best = f64::INFINITY;
        let candidates = [
            (i > 0 && j > 0).then(|| (i - 1, j - 1)),
            (i > 0).then(|| (i - 1, j)),
            (j > 0).then(|| (i, j - 1)),
        ];
        for (ci, cj) in candidates.into_iter().flatten() {
            let d = acc[at(ci, cj)];
            if d < best {
                best = d;
                next = Some((ci, cj));
            }
        }
        (i, j) = next.expect("a finite predecessor exists inside the band");
        path.push((i, j));
    }
    path.reverse();

    Ok(DtwResult {
        distance: acc[at(n - 1, m - 1)],
        path,
    })
}

/// Euclidean distance between two feature vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
