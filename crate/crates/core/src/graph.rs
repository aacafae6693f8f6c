//! Frame graphs and the graph Fourier transform.
//!
//! Each analysis frame of `N` samples is treated as a signal on an
//! `N`-node graph. The transform basis is the eigenvector matrix of the
//! graph operator, ordered by ascending eigenvalue (graph frequency).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Topology {
    /// Chain `i -- i+1`.
    #[default]
    Path,
    /// Chain plus the closing edge `N-1 -- 0`.
    Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Operator {
    #[default]
    Laplacian,
    Adjacency,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Topology::Path),
            "cycle" => Ok(Topology::Cycle),
            other => Err(Error::Config(format!("unknown topology `{other}`"))),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Path => "path",
            Topology::Cycle => "cycle",
        })
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(Operator::Laplacian),
            "adjacency" => Ok(Operator::Adjacency),
            other => Err(Error::Config(format!("unknown operator `{other}`"))),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::Laplacian => "laplacian",
            Operator::Adjacency => "adjacency",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GraphSpec {
    pub topology: Topology,
    pub size: usize,
    pub operator: Operator,
}

impl GraphSpec {
    pub fn new(topology: Topology, size: usize, operator: Operator) -> Self {
        Self {
            topology,
            size,
            operator,
        }
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.size;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
            a[(i + 1, i)] = 1.0;
        }
        // for n == 2 the closing edge coincides with the chain edge
        if self.topology == Topology::Cycle && n > 2 {
            a[(n - 1, 0)] = 1.0;
            a[(0, n - 1)] = 1.0;
        }
        a
    }

    /// The symmetric operator whose eigenvectors form the transform basis.
    pub fn operator_matrix(&self) -> DMatrix<f64> {
        let a = self.adjacency();
        match self.operator {
            Operator::Adjacency => a,
            Operator::Laplacian => {
                let degrees: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
                DMatrix::from_diagonal(&DVector::from_vec(degrees)) - a
            }
        }
    }
}

/// Orthonormal eigenbasis of a frame graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GftBasis {
    /// Eigenvectors as columns, ascending by eigenvalue.
    u: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

const SIGN_TOL: f64 = 1e-9;

pub fn build_graph_basis(spec: &GraphSpec) -> Result<GftBasis> {
    if spec.size < 2 {
        return Err(Error::Invalid(format!(
            "graph needs at least 2 nodes, got {}",
            spec.size
        )));
    }
    let eig = SymmetricEigen::new(spec.operator_matrix());
    let mut order: Vec<usize> = (0..spec.size).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let mut u = DMatrix::zeros(spec.size, spec.size);
    let mut eigenvalues = Vec::with_capacity(spec.size);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let lead = col
            .iter()
            .copied()
            .find(|v| v.abs() > SIGN_TOL)
            .unwrap_or(1.0);
        if lead < 0.0 {
            col.neg_mut();
        }
        u.set_column(dst, &col);
        eigenvalues.push(eig.eigenvalues[src]);
    }
    Ok(GftBasis { u, eigenvalues })
}

impl GftBasis {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// The `k`-th basis vector (graph frequency `eigenvalues[k]`).
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.u.column(k).iter().copied().collect()
    }

    /// `max |U^T U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.u.tr_mul(&self.u);
        let n = self.size();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Forward transform `U^T y`.
    pub fn gft(&self, frame: &[f64]) -> Result<Vec<f64>> {
        if frame.len() != self.size() {
            return Err(Error::Dimension {
                expected: self.size(),
                got: frame.len(),
            });
        }
        Ok((0..self.size())
            .map(|k| self.u.column(k).iter().zip(frame).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Inverse transform `U y_hat`.
    pub fn igft(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.size() {
            return Err(Error::Dimension {
                expected: self.size(),
                got: coeffs.len(),
            });
        }
        let y = &self.u * DVector::from_column_slice(coeffs);
        Ok(y.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lap(topology: Topology, n: usize) -> GftBasis {
        build_graph_basis(&GraphSpec::new(topology, n, Operator::Laplacian)).unwrap()
    }

    #[test]
    fn path_two_closed_form() {
        let b = lap(Topology::Path, 2);
        assert!((b.eigenvalues()[0]).abs() < 1e-12);
        assert!((b.eigenvalues()[1] - 2.0).abs() < 1e-12);
        let s = 1.0 / 2f64.sqrt();
        let v0 = b.vector(0);
        let v1 = b.vector(1);
        assert!((v0[0] - s).abs() < 1e-12 && (v0[1] - s).abs() < 1e-12);
        assert!((v1[0] - s).abs() < 1e-12 && (v1[1] + s).abs() < 1e-12);
    }

    #[test]
    fn cycle_eigenvalues_match_cosine_formula() {
        for n in [3usize, 4, 7, 16] {
            let b = lap(Topology::Cycle, n);
            let mut expect: Vec<f64> = (0..n)
                .map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos())
                .collect();
            expect.sort_by(f64::total_cmp);
            for (a, e) in b.eigenvalues().iter().zip(&expect) {
                assert!((a - e).abs() < 1e-10, "n={n}: {a} vs {e}");
            }
        }
        let b = lap(Topology::Cycle, 4);
        for (a, e) in b.eigenvalues().iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn path_laplacian_eigenvectors_are_cosines() {
        // eigenpairs of the path Laplacian: 2 - 2cos(pi k / N), cos(pi k (i + 1/2) / N)
        let n = 16;
        let b = lap(Topology::Path, n);
        for k in 0..n {
            let lam = 2.0 - 2.0 * (PI * k as f64 / n as f64).cos();
            assert!((b.eigenvalues()[k] - lam).abs() < 1e-10);
            let mut v: Vec<f64> = (0..n)
                .map(|i| (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos())
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let got = b.vector(k);
            let dot: f64 = v.iter().zip(&got).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-9, "k={k} dot={dot}");
        }
    }

    #[test]
    fn constant_eigenvector_for_connected_laplacian() {
        for topo in [Topology::Path, Topology::Cycle] {
            let b = lap(topo, 9);
            assert!(b.eigenvalues()[0].abs() < 1e-10);
            let v = b.vector(0);
            let c = 1.0 / 3.0;
            assert!(v.iter().all(|x| (x - c).abs() < 1e-9));
        }
    }

    #[test]
    fn adjacency_ascending() {
        let b = build_graph_basis(&GraphSpec::new(Topology::Path, 8, Operator::Adjacency)).unwrap();
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        assert!(b.orthonormality_error() < 1e-10);
    }

    #[test]
    fn too_small() {
        assert!(
            build_graph_basis(&GraphSpec::new(Topology::Path, 1, Operator::Laplacian)).is_err()
        );
    }

    #[test]
    fn deterministic() {
        let a = lap(Topology::Path, 64);
        let b = lap(Topology::Path, 64);
        assert_eq!(a, b);
    }

    #[test]
    fn gft_constant_and_zero_frames() {
        let b = lap(Topology::Path, 32);
        let c = b.gft(&[1.0; 32]).unwrap();
        assert!((c[0] - 32f64.sqrt()).abs() < 1e-9);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-8));
        assert!(b.gft(&[0.0; 32]).unwrap().iter().all(|&x| x == 0.0));
        assert!(matches!(b.gft(&[0.0; 31]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn inverse_recovers_frame() {
        let b = lap(Topology::Cycle, 12);
        let y: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let back = b.igft(&b.gft(&y).unwrap()).unwrap();
        for (a, c) in y.iter().zip(&back) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_is_psd() {
        for topo in [Topology::Path, Topology::Cycle] {
            for n in [2, 5, 33] {
                assert!(lap(topo, n).eigenvalues()[0] >= -1e-10);
            }
        }
    }
}
