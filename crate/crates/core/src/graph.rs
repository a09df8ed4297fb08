use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Sensors as graph nodes, each carrying a lumped mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorGraph {
    node_count: usize,
    edges: Vec<Edge>,
    node_masses: Vec<f64>,
    channel_names: Vec<String>,
}

impl SensorGraph {
    pub fn new(
        node_count: usize,
        edges: Vec<Edge>,
        node_masses: Vec<f64>,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::domain("graph needs at least one node"));
        }
        if node_masses.len() != node_count {
            return Err(Error::domain(format!(
                "expected {node_count} node masses, got {}",
                node_masses.len()
            )));
        }
        if let Some((i, m)) = node_masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(Error::domain(format!("node {i} has non-positive mass {m}")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &edges {
            if e.i >= node_count || e.j >= node_count {
                return Err(Error::domain(format!(
                    "edge ({}, {}) out of range for {node_count} nodes",
                    e.i, e.j
                )));
            }
            if !e.weight.is_finite() {
                return Err(Error::domain(format!(
                    "edge ({}, {}) has non-finite weight",
                    e.i, e.j
                )));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::domain(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
        }
        Ok(Self {
            node_count,
            edges,
            node_masses,
            channel_names,
        })
    }

    /// Path graph `0 - 1 - ... - n-1` with unit weights, the sensor layout along a span.
    pub fn chain(node_masses: Vec<f64>, channel_names: Vec<String>) -> Result<Self> {
        let n = node_masses.len();
        let edges = (1..n)
            .map(|i| Edge {
                i: i - 1,
                j: i,
                weight: 1.0,
            })
            .collect();
        Self::new(n, edges, node_masses, channel_names)
    }

    /// Complete graph with unit weights; `n(n-1)/2` edges.
    pub fn fully_connected(n: usize) -> Result<Self> {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push(Edge { i, j, weight: 1.0 });
            }
        }
        Self::new(n, edges, vec![1.0; n], Vec::new())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_masses(&self) -> &[f64] {
        &self.node_masses
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    /// Undirected edges between distinct nodes.
    pub fn undirected_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.i != e.j).count()
    }

    /// Dense symmetric adjacency; an edge `(i, i)` becomes a diagonal entry.
    pub fn adjacency(&self) -> RMatrix {
        let n = self.node_count;
        let mut a = RMatrix::zeros(n, n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.weight;
            a[(e.j, e.i)] = e.weight;
        }
        a
    }

    /// Same nodes and masses, complete edge set weighted by `|r0[i][j]|`
    /// (pairs with zero weight are dropped).
    pub fn with_correlation_weights(&self, r0: &RMatrix) -> Result<Self> {
        let weights = crate::signal::edge_weights_from_correlation(r0)?;
        let n = self.node_count;
        if weights.nrows() != n {
            return Err(Error::domain(format!(
                "correlation matrix is {}x{}, graph has {n} nodes",
                weights.nrows(),
                weights.ncols()
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if weights[(i, j)] > 0.0 {
                    edges.push(Edge {
                        i,
                        j,
                        weight: weights[(i, j)],
                    });
                }
            }
        }
        Self::new(
            n,
            edges,
            self.node_masses.clone(),
            self.channel_names.clone(),
        )
    }
}
