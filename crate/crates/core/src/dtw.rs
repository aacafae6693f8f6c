//! Dynamic time warping between a genuine and a replayed feature sequence.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// `m x n` matrix of local alignment costs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Invalid("cost matrix must be nonempty".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Invalid(
                "costs must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpPath {
    /// `(genuine index, replay index)` pairs from `(0, 0)` to `(m-1, n-1)`.
    pub steps: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl WarpPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks endpoints and step shapes against an `m x n` grid.
    pub fn is_valid_for(&self, m: usize, n: usize) -> bool {
        if self.steps.first() != Some(&(0, 0)) || self.steps.last() != Some(&(m - 1, n - 1)) {
            return false;
        }
        self.steps.windows(2).all(|w| {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
        })
    }
}

/// Euclidean distance between two frames.
pub fn local_cost(g: &[f64], s: &[f64]) -> Result<f64> {
    if g.len() != s.len() {
        return Err(Error::Dimension {
            expected: g.len(),
            got: s.len(),
        });
    }
    Ok(g.iter()
        .zip(s)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

pub fn cost_matrix(g: &FeatureMatrix, s: &FeatureMatrix) -> Result<CostMatrix> {
    if g.is_empty() || s.is_empty() {
        return Err(Error::Invalid("cannot align an empty sequence".into()));
    }
    if g.dim() != s.dim() {
        return Err(Error::Dimension {
            expected: g.dim(),
            got: s.dim(),
        });
    }
    let mut data = Vec::with_capacity(g.n_frames() * s.n_frames());
    for gr in g.rows() {
        for sr in s.rows() {
            data.push(local_cost(gr, sr)?);
        }
    }
    CostMatrix::new(g.n_frames(), s.n_frames(), data)
}

/// Minimum accumulated-cost monotone path through `cost`.
///
/// `acc(i, j) = d(i, j) + min(acc(i-1, j), acc(i, j-1), acc(i-1, j-1))`.
/// Backtracking prefers the diagonal predecessor on ties, then `(i-1, j)`,
/// then `(i, j-1)`.
pub fn dtw_from_cost(cost: &CostMatrix) -> WarpPath {
    let (m, n) = (cost.rows, cost.cols);
    let mut acc = vec![0.0f64; m * n];
    let at = |i: usize, j: usize| i * n + j;
    for i in 0..m {
        for j in 0..n {
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => acc[at(0, j - 1)],
                (_, 0) => acc[at(i - 1, 0)],
                _ => acc[at(i - 1, j - 1)]
                    .min(acc[at(i - 1, j)])
                    .min(acc[at(i, j - 1)]),
            };
            acc[at(i, j)] = cost.get(i, j) + best;
        }
    }

    let mut steps = vec![(m - 1, n - 1)];
    let (mut i, mut j) = (m - 1, n - 1);
    while (i, j) != (0, 0) {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        steps.push((i, j));
    }
    steps.reverse();
    WarpPath {
        steps,
        total_cost: acc[at(m - 1, n - 1)],
    }
}

pub fn dtw_align(g: &FeatureMatrix, s: &FeatureMatrix) -> Result<WarpPath> {
    Ok(dtw_from_cost(&cost_matrix(g, s)?))
}

/// Repeats rows of both sequences along `path` so they have equal length.
pub fn expand_along_path(
    g: &FeatureMatrix,
    s: &FeatureMatrix,
    path: &WarpPath,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let mut gd = Vec::with_capacity(path.len() * g.dim());
    let mut sd = Vec::with_capacity(path.len() * s.dim());
    for &(i, j) in &path.steps {
        if i >= g.n_frames() || j >= s.n_frames() {
            return Err(Error::Invalid(format!(
                "path step ({i}, {j}) outside {}x{} grid",
                g.n_frames(),
                s.n_frames()
            )));
        }
        gd.extend_from_slice(g.row(i));
        sd.extend_from_slice(s.row(j));
    }
    Ok((
        FeatureMatrix::new(g.kind(), g.dim(), gd)?,
        FeatureMatrix::new(s.kind(), s.dim(), sd)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        let v: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        FeatureMatrix::from_rows(FeatureKind::Gfcc, rows[0].len(), &v).unwrap()
    }

    #[test]
    fn local_cost_cases() {
        assert_eq!(local_cost(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(local_cost(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(local_cost(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn worked_example() {
        let g = fm(&[&[0.0], &[1.0]]);
        let s = fm(&[&[0.0], &[0.0], &[1.0]]);
        let p = dtw_align(&g, &s).unwrap();
        assert_eq!(p.total_cost, 0.0);
        assert_eq!(p.steps, vec![(0, 0), (0, 1), (1, 2)]);
        let (ge, se) = expand_along_path(&g, &s, &p).unwrap();
        assert_eq!(ge.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(se.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_is_diagonal() {
        let g = fm(&[&[0.0, 1.0], &[2.0, -1.0], &[0.5, 0.5], &[3.0, 3.0]]);
        let p = dtw_align(&g, &g).unwrap();
        assert_eq!(p.total_cost, 0.0);
        assert_eq!(p.steps, (0..4).map(|i| (i, i)).collect::<Vec<_>>());
        let (a, b) = expand_along_path(&g, &g, &p).unwrap();
        assert_eq!(a, g);
        assert_eq!(b, g);
    }

    #[test]
    fn tie_break_prefers_diagonal_then_vertical() {
        // all-zero costs: every predecessor ties
        let c = CostMatrix::new(3, 2, vec![0.0; 6]).unwrap();
        let p = dtw_from_cost(&c);
        assert_eq!(p.steps, vec![(0, 0), (1, 0), (2, 1)]);
    }

    #[test]
    fn errors() {
        let g = fm(&[&[0.0]]);
        let e = FeatureMatrix::new(FeatureKind::Gfcc, 1, vec![]).unwrap();
        assert!(dtw_align(&g, &e).is_err());
        assert!(dtw_align(&g, &fm(&[&[0.0, 1.0]])).is_err());
        let bad = WarpPath {
            steps: vec![(0, 0), (1, 1)],
            total_cost: 0.0,
        };
        assert!(expand_along_path(&g, &g, &bad).is_err());
        assert!(CostMatrix::new(1, 1, vec![-1.0]).is_err());
    }
}
