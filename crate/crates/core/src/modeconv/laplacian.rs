use crate::error::{Error, Result};
use crate::graph::SensorGraph;
use crate::linalg::RMatrix;

/// Symmetrically normalized adjacency and Laplacian, `L = I − A_norm`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedLaplacian {
    pub a_norm: RMatrix,
    pub laplacian: RMatrix,
}

/// `A_norm = D^{-1/2} Â D^{-1/2}` where `Â` is the weighted adjacency with a
/// unit self-loop added on every node that has none (when `self_loops` is
/// set) and `D` its degree matrix. Zero-degree nodes get zero rows.
pub fn normalized_laplacian(graph: &SensorGraph, self_loops: bool) -> Result<NormalizedLaplacian> {
    if let Some(e) = graph.edges().iter().find(|e| e.weight < 0.0) {
        return Err(Error::domain(format!(
            "edge ({}, {}) has negative weight {}",
            e.i, e.j, e.weight
        )));
    }
    let n = graph.node_count();
    let mut a = graph.adjacency();
    if self_loops {
        for i in 0..n {
            if !graph.edges().iter().any(|e| e.i == i && e.j == i) {
                a[(i, i)] = 1.0;
            }
        }
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.row(i).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let a_norm = RMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * a[(i, j)] * inv_sqrt[j]);
    let laplacian = RMatrix::identity(n, n) - &a_norm;
    Ok(NormalizedLaplacian { a_norm, laplacian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SensorGraph {
        let edges = edges
            .iter()
            .map(|&(i, j, weight)| Edge { i, j, weight })
            .collect();
        SensorGraph::new(n, edges, vec![1.0; n], vec![]).unwrap()
    }

    #[test]
    fn two_nodes_without_self_loops() {
        let l = normalized_laplacian(&graph(2, &[(0, 1, 1.0)]), false).unwrap();
        assert_eq!(
            l.laplacian,
            RMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
    }

    #[test]
    fn empty_graph_with_self_loops() {
        let l = normalized_laplacian(&graph(3, &[]), true).unwrap();
        assert_eq!(l.laplacian, RMatrix::zeros(3, 3));
        assert_eq!(l.a_norm, RMatrix::identity(3, 3));
    }

    #[test]
    fn isolated_node_keeps_unit_self_loop() {
        let l = normalized_laplacian(&graph(3, &[(0, 1, 2.0)]), true).unwrap();
        assert_eq!(
            l.a_norm.row(2).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(normalized_laplacian(&graph(2, &[(0, 1, -1.0)]), true).is_err());
    }
}
