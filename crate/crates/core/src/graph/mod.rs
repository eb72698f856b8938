//! Simple undirected graphs on dense node ids `0..n`.
//!
//! Edges are kept twice: as a global array of canonical pairs `(i, j)` with
//! `i < j`, sorted lexicographically, and as sorted CSR adjacency lists. The
//! graph is immutable once built.

mod io;
mod laplacian;

pub use io::{edge_list_string, parse_edge_list, read_edge_list, write_edge_list};
pub use laplacian::Laplacian;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list. Repeated pairs in either
    /// orientation are merged; self-loops and out-of-range ids are errors.
    pub fn new<I>(n: usize, edge_list: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (a, b) in edge_list {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::InvalidNode { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoopRejected(a));
            }
            edges.push(if a < b { (a, b) } else { (b, a) });
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_canonical_edges(n, edges))
    }

    /// Builds a graph from pairs that are already canonical (`i < j < n`),
    /// sorted and free of duplicates.
    pub fn from_canonical_edges(n: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(i, j)| i < j && j < n));
        let mut degree = vec![0usize; n];
        for &(i, j) in &edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        // Lexicographic edge order fills every list in ascending order.
        for &(i, j) in &edges {
            neighbors[cursor[i]] = j;
            cursor[i] += 1;
            neighbors[cursor[j]] = i;
            cursor[j] += 1;
        }
        Self {
            n,
            edges,
            offsets,
            neighbors,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_canonical_edges(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_canonical_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical sorted edge array.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Induced subgraph on `nodes`; node `nodes[k]` becomes node `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut position = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            position[v] = k;
        }
        let ascending = nodes.windows(2).all(|w| w[0] < w[1]);
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (position[i], position[j]);
                if a == usize::MAX || b == usize::MAX {
                    None
                } else if a < b {
                    Some((a, b))
                } else {
                    Some((b, a))
                }
            })
            .collect();
        if !ascending {
            edges.sort_unstable();
        }
        Graph::from_canonical_edges(nodes.len(), edges)
    }

    pub fn laplacian(&self) -> Laplacian {
        Laplacian::new(self.n, self.edges.clone())
    }
}

/// `C(n, 2)` as a float.
pub fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// `C(n, 3)` as a float.
pub fn triples(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) * (n - 2.0) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_duplicates_are_merged() {
        let g = Graph::new(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn empty_edge_list() {
        let g = Graph::new(2, []).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn triangle_with_pendant() {
        let g = Graph::new(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && g.has_edge(2, 0));
        assert_eq!(g.neighbors(2), &[0, 1, 3]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            Graph::new(3, [(0, 3)]),
            Err(Error::InvalidNode { node: 3, n: 3 })
        );
        assert_eq!(Graph::new(3, [(1, 1)]), Err(Error::SelfLoopRejected(1)));
    }

    #[test]
    fn isolated_nodes_are_kept() {
        let g = Graph::new(5, [(0, 1)]).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.degree(4), 0);
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let h = g.induced_subgraph(&[1, 2, 4]);
        assert_eq!(h.edges(), &[(0, 1)]);
        let h = g.induced_subgraph(&[4, 0, 3]);
        assert_eq!(h.edges(), &[(0, 1), (0, 2)]);
    }
}
