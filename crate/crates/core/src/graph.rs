//! Follower communication topology.
//!
//! Followers are numbered `1..=N`; the first `M` are informed, meaning they
//! observe the exosystem output directly and receive nothing from other
//! followers. The exosystem itself is never stored as a node.

use std::collections::VecDeque;

use crate::linalg::{symmetric_eigenvalues, Lu, NumericPolicy};
use crate::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("need 1 <= n_informed <= n_followers, got N = {n_followers}, M = {n_informed}")]
    InvalidCounts { n_followers: usize, n_informed: usize },
    #[error("edge ({from}, {to}) references a node outside 1..={n}")]
    IndexOutOfRange { from: usize, to: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({from}, {to}) points into informed follower {to}")]
    EdgeIntoInformed { from: usize, to: usize },
    #[error("edge ({from}, {to}) has non-positive or non-finite weight")]
    NonPositiveWeight { from: usize, to: usize },
    #[error("L1 is singular; some uninformed follower is unreachable from the informed set")]
    SingularL1,
    #[error("diagonal scaling is not positive (min q = {min_q:.3e}, lambda0 = {lambda0:.3e})")]
    NonPositiveScaling { min_q: f64, lambda0: f64 },
}

/// A directed edge carrying information from `from` to `to` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub from: usize,
    pub to: usize,
    pub weight: T,
}

impl<T> Edge<T> {
    pub fn new(from: usize, to: usize, weight: T) -> Self {
        Self { from, to, weight }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph<T> {
    n_followers: usize,
    n_informed: usize,
    /// `adjacency[(i, j)] > 0` iff follower `j + 1` sends to follower `i + 1`.
    adjacency: Matrix<T>,
}

/// Laplacian with its uninformed blocks: `L = [[0, 0], [L2, L1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPartition<T> {
    pub full: Matrix<T>,
    pub l1: Matrix<T>,
    pub l2: Matrix<T>,
}

/// Positive diagonal `G = diag(q)` with `G L1 + L1ᵀ G` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling<T> {
    pub q: Vec<T>,
    /// Smallest eigenvalue of `G L1 + L1ᵀ G`.
    pub lambda0: T,
}

impl<T: Scalar> DirectedGraph<T> {
    pub fn new(
        n_followers: usize,
        n_informed: usize,
        edges: &[Edge<T>],
    ) -> Result<Self, GraphError> {
        if n_informed < 1 || n_informed > n_followers {
            return Err(GraphError::InvalidCounts {
                n_followers,
                n_informed,
            });
        }
        let mut adjacency = Matrix::zeros(n_followers, n_followers);
        for e in edges {
            let (from, to) = (e.from, e.to);
            if from < 1 || to < 1 || from > n_followers || to > n_followers {
                return Err(GraphError::IndexOutOfRange {
                    from,
                    to,
                    n: n_followers,
                });
            }
            if from == to {
                return Err(GraphError::SelfLoop(from));
            }
            if to <= n_informed {
                return Err(GraphError::EdgeIntoInformed { from, to });
            }
            if !(e.weight > T::zero()) || !e.weight.is_finite() {
                return Err(GraphError::NonPositiveWeight { from, to });
            }
            adjacency[(to - 1, from - 1)] += e.weight;
        }
        Ok(Self {
            n_followers,
            n_informed,
            adjacency,
        })
    }

    pub fn n_followers(&self) -> usize {
        self.n_followers
    }

    pub fn n_informed(&self) -> usize {
        self.n_informed
    }

    pub fn n_uninformed(&self) -> usize {
        self.n_followers - self.n_informed
    }

    /// Follower `i` (1-based) observes the exosystem directly.
    pub fn is_informed(&self, i: usize) -> bool {
        i >= 1 && i <= self.n_informed
    }

    pub fn adjacency(&self) -> &Matrix<T> {
        &self.adjacency
    }

    /// Weight `a_ij` (1-based): how strongly `j` feeds `i`.
    pub fn weight(&self, i: usize, j: usize) -> T {
        self.adjacency[(i - 1, j - 1)]
    }

    /// Edges as `(from, to, weight)` in row-major order of the adjacency.
    pub fn edges(&self) -> Vec<Edge<T>> {
        let n = self.n_followers;
        let mut out = Vec::new();
        for to in 0..n {
            for from in 0..n {
                let w = self.adjacency[(to, from)];
                if w != T::zero() {
                    out.push(Edge::new(from + 1, to + 1, w));
                }
            }
        }
        out
    }

    /// In-neighbors of follower `i` (1-based) as `(j, a_ij)`.
    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.adjacency
            .row_slice(i - 1)
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != T::zero())
            .map(|(j, &w)| (j + 1, w))
    }

    pub fn laplacian_partition(&self) -> LaplacianPartition<T> {
        let n = self.n_followers;
        let m = self.n_informed;
        let full = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                self.adjacency.row_slice(i).iter().copied().sum()
            } else {
                -self.adjacency[(i, j)]
            }
        });
        LaplacianPartition {
            l1: full.submatrix(m, m, n - m, n - m),
            l2: full.submatrix(m, 0, n - m, m),
            full,
        }
    }

    /// Uninformed followers with no directed path from any informed follower.
    pub fn unreachable_followers(&self) -> Vec<usize> {
        let n = self.n_followers;
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = (0..self.n_informed).collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(j) = queue.pop_front() {
            // information flows j -> i whenever a_ij > 0
            for i in 0..n {
                if !seen[i] && self.adjacency[(i, j)] != T::zero() {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        (0..n).filter(|&i| !seen[i]).map(|i| i + 1).collect()
    }

    /// Every uninformed follower is reachable from some informed follower.
    pub fn check_assumption1(&self) -> bool {
        self.unreachable_followers().is_empty()
    }

    /// The uninformed subgraph is undirected (symmetric weights) and
    /// [`check_assumption1`](Self::check_assumption1) holds.
    pub fn check_assumption6(&self) -> bool {
        let m = self.n_informed;
        let n = self.n_followers;
        let symmetric =
            (m..n).all(|i| (m..i).all(|j| self.adjacency[(i, j)] == self.adjacency[(j, i)]));
        symmetric && self.check_assumption1()
    }

    pub fn diagonal_scaling(&self) -> Result<DiagonalScaling<T>, GraphError> {
        self.laplacian_partition()
            .diagonal_scaling(&NumericPolicy::default())
    }
}

impl<T: Scalar> LaplacianPartition<T> {
    /// Solves `L1ᵀ q = 1` and certifies `q > 0` and
    /// `λ_min(diag(q) L1 + L1ᵀ diag(q)) > 0`.
    pub fn diagonal_scaling(
        &self,
        policy: &NumericPolicy<T>,
    ) -> Result<DiagonalScaling<T>, GraphError> {
        let k = self.l1.nrows();
        if k == 0 {
            return Ok(DiagonalScaling {
                q: Vec::new(),
                lambda0: T::infinity(),
            });
        }
        let lu = Lu::factor(&self.l1.transpose(), policy.singular_tol).map_err(|_| GraphError::SingularL1)?;
        let q = lu.solve(&vec![T::one(); k]);
        let g = Matrix::diagonal(&q);
        let sym = &(&g * &self.l1) + &(&self.l1.transpose() * &g);
        let lambda0 = symmetric_eigenvalues(&sym)[0];
        let min_q = q.iter().copied().fold(T::infinity(), T::min);
        if !(min_q > T::zero()) || !(lambda0 > policy.lambda0_tol) {
            return Err(GraphError::NonPositiveScaling {
                min_q: min_q.to_f64().unwrap_or(f64::NAN),
                lambda0: lambda0.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(DiagonalScaling { q, lambda0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, m: usize, edges: &[(usize, usize, f64)]) -> Result<DirectedGraph<f64>, GraphError> {
        let edges: Vec<_> = edges.iter().map(|&(f, t, w)| Edge::new(f, t, w)).collect();
        DirectedGraph::new(n, m, &edges)
    }

    #[test]
    fn chain_adjacency() {
        let g = graph(3, 1, &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let a = g.adjacency();
        assert_eq!(a.row_slice(0), &[0.0, 0.0, 0.0]);
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(2, 1)], 1.0);
        assert_eq!(a.as_slice().iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn edge_into_informed_rejected() {
        assert_eq!(
            graph(2, 1, &[(2, 1, 1.0)]).unwrap_err(),
            GraphError::EdgeIntoInformed { from: 2, to: 1 }
        );
    }

    #[test]
    fn construction_errors() {
        assert_eq!(graph(3, 1, &[(2, 2, 1.0)]).unwrap_err(), GraphError::SelfLoop(2));
        assert!(matches!(
            graph(3, 1, &[(1, 4, 1.0)]).unwrap_err(),
            GraphError::IndexOutOfRange { .. }
        ));
        assert!(matches!(
            graph(3, 0, &[]).unwrap_err(),
            GraphError::InvalidCounts { .. }
        ));
        assert!(matches!(
            graph(3, 1, &[(1, 2, 0.0)]).unwrap_err(),
            GraphError::NonPositiveWeight { .. }
        ));
    }

    #[test]
    fn two_informed_sparse() {
        let g = graph(4, 2, &[(1, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0)]).unwrap();
        let a = g.adjacency();
        assert_eq!(a.as_slice().iter().filter(|&&x| x != 0.0).count(), 3);
        assert_eq!((a[(2, 0)], a[(3, 1)], a[(3, 2)]), (1.0, 1.0, 1.0));
    }

    #[test]
    fn chain_partition() {
        let p = graph(3, 1, &[(1, 2, 1.0), (2, 3, 1.0)])
            .unwrap()
            .laplacian_partition();
        assert_eq!(
            p.full.to_rows(),
            vec![vec![0.0, 0.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0]]
        );
        assert_eq!(p.l1.to_rows(), vec![vec![1.0, 0.0], vec![-1.0, 1.0]]);
        assert_eq!(p.l2.to_rows(), vec![vec![-1.0], vec![0.0]]);
    }

    #[test]
    fn all_informed_partition_is_empty() {
        let g = graph(3, 3, &[]).unwrap();
        let p = g.laplacian_partition();
        assert_eq!(p.l1.shape(), (0, 0));
        assert_eq!(p.l2.shape(), (0, 3));
        assert!(g.check_assumption1());
        assert!(g.check_assumption6());
    }

    #[test]
    fn star_partition() {
        let p = graph(3, 1, &[(1, 2, 1.0), (1, 3, 1.0)])
            .unwrap()
            .laplacian_partition();
        assert_eq!(p.l1, Matrix::identity(2));
        assert_eq!(p.l2.to_rows(), vec![vec![-1.0], vec![-1.0]]);
    }

    #[test]
    fn reachability() {
        assert!(graph(3, 1, &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap().check_assumption1());
        let g = graph(3, 1, &[(2, 3, 1.0)]).unwrap();
        assert!(!g.check_assumption1());
        assert_eq!(g.unreachable_followers(), vec![2, 3]);
    }

    #[test]
    fn undirected_uninformed_block() {
        let g = graph(3, 1, &[(1, 2, 1.0), (2, 3, 1.0), (3, 2, 1.0)]).unwrap();
        assert!(g.check_assumption6());
        let g = graph(3, 1, &[(1, 2, 1.0), (3, 2, 1.0)]).unwrap();
        assert!(!g.check_assumption6());
    }

    #[test]
    fn scaling_examples() {
        let scalar = LaplacianPartition {
            full: Matrix::zeros(0, 0),
            l1: Matrix::<f64>::from_rows(&[[1.0]]).unwrap(),
            l2: Matrix::zeros(1, 0),
        };
        let s = scalar.diagonal_scaling(&NumericPolicy::default()).unwrap();
        assert_eq!(s.q, vec![1.0]);
        assert!((s.lambda0 - 2.0).abs() < 1e-14);

        let chain = graph(3, 1, &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let s = chain.diagonal_scaling().unwrap();
        assert!((s.q[0] - 2.0).abs() < 1e-14 && (s.q[1] - 1.0).abs() < 1e-14);
        assert!((s.lambda0 - (3.0 - 2f64.sqrt())).abs() < 1e-12);

        let star = graph(4, 1, &[(1, 2, 1.0), (1, 3, 1.0), (1, 4, 1.0)]).unwrap();
        let s = star.diagonal_scaling().unwrap();
        assert!(s.q.iter().all(|&q| (q - 1.0).abs() < 1e-14));
        assert!((s.lambda0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_rejects_unreachable() {
        let g = graph(3, 1, &[(2, 3, 1.0)]).unwrap();
        assert_eq!(g.diagonal_scaling().unwrap_err(), GraphError::SingularL1);
    }
}
