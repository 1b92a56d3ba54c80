use coopreg::graph::{DirectedGraph, Edge};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// (n_followers, n_informed, edges) with edges never entering an informed follower.
fn graph_strategy() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
    (2usize..=10)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, m)| {
            let edge = (1..=n, m + 1..=n, 0.1f64..3.0).prop_filter("no self loops", |(f, t, _)| f != t);
            (Just(n), Just(m), prop::collection::vec(edge, 0..3 * n))
        })
}

fn build(n: usize, m: usize, edges: &[(usize, usize, f64)]) -> DirectedGraph<f64> {
    let edges: Vec<_> = edges.iter().map(|&(f, t, w)| Edge::new(f, t, w)).collect();
    DirectedGraph::new(n, m, &edges).unwrap()
}

/// Reachability from informed followers by transitive closure.
fn closure_reachable(n: usize, m: usize, edges: &[(usize, usize, f64)]) -> Vec<bool> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(f, t, _) in edges {
        r[f - 1][t - 1] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    (0..n).map(|j| (0..m).any(|i| r[i][j])).collect()
}

proptest! {
    #[test]
    fn reachability_matches_transitive_closure((n, m, edges) in graph_strategy()) {
        let g = build(n, m, &edges);
        let reach = closure_reachable(n, m, &edges);
        let unreachable: Vec<usize> = (0..n).filter(|&i| !reach[i]).map(|i| i + 1).collect();
        prop_assert_eq!(g.unreachable_followers(), unreachable.clone());
        prop_assert_eq!(g.check_assumption1(), unreachable.is_empty());
    }

    #[test]
    fn reachable_graphs_admit_diagonal_scaling((n, m, edges) in graph_strategy()) {
        let g = build(n, m, &edges);
        prop_assume!(g.check_assumption1());
        let scaling = g.diagonal_scaling().unwrap();
        prop_assert!(scaling.q.iter().all(|&q| q > 0.0));
        prop_assert!(scaling.lambda0 > 0.0);

        let part = g.laplacian_partition();
        let k = n - m;
        let l1 = DMatrix::from_fn(k, k, |i, j| part.l1[(i, j)]);
        let q = l1.transpose().lu().solve(&DVector::from_element(k, 1.0)).unwrap();
        for (a, b) in q.iter().zip(&scaling.q) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn laplacian_rows_sum_to_zero((n, m, edges) in graph_strategy()) {
        let part = build(n, m, &edges).laplacian_partition();
        for i in 0..n {
            let s: f64 = (0..n).map(|j| part.full[(i, j)]).sum();
            prop_assert!(s.abs() < 1e-12);
        }
    }
}

#[test]
fn symmetric_uninformed_subgraph_satisfies_undirected_condition() {
    let e = |f, t| Edge::new(f, t, 1.0);
    let g = DirectedGraph::new(4, 1, &[e(1, 2), e(2, 3), e(3, 2), e(3, 4), e(4, 3)]).unwrap();
    assert!(g.check_assumption6());
    let g = DirectedGraph::new(4, 1, &[e(1, 2), e(2, 3), e(3, 4), e(4, 3)]).unwrap();
    assert!(!g.check_assumption6());
}
