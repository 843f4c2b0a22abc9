//! Pixel grids and feature partitions.
//!
//! Features are pixels of a `rows x cols` image, numbered row-major:
//! pixel `(r, c)` is feature `r * cols + c`. Adjacency is the
//! 4-neighbourhood (up, down, left, right).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialGrid {
    rows: usize,
    cols: usize,
    edges: Vec<(usize, usize)>,
}

impl SpatialGrid {
    /// Builds the 4-neighbourhood graph of a `rows x cols` grid.
    ///
    /// Edges are stored once each as `(a, b)` with `a < b`, in
    /// lexicographic order.
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let mut edges = Vec::with_capacity(rows * (cols - 1) + (rows - 1) * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Ok(SpatialGrid { rows, cols, edges })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn index_of(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn position_of(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.node_count());
        (index / self.cols, index % self.cols)
    }

    /// Neighbour lists, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::with_capacity(4); self.node_count()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// An assignment of `p` features to `cluster_count` labels.
///
/// Labels cover `0..cluster_count` with no empty cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    cluster_count: usize,
    sizes: Vec<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>, cluster_count: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("partition needs at least one feature"));
        }
        if cluster_count == 0 || cluster_count > labels.len() {
            return Err(Error::invalid(format!(
                "cluster count {} out of range for {} features",
                cluster_count,
                labels.len()
            )));
        }
        let mut sizes = vec![0usize; cluster_count];
        for &l in &labels {
            if l >= cluster_count {
                return Err(Error::invalid(format!(
                    "label {l} exceeds cluster count {cluster_count}"
                )));
            }
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("cluster {empty} is empty")));
        }
        Ok(Partition { labels, cluster_count, sizes })
    }

    pub fn singletons(p: usize) -> Result<Self> {
        Partition::new((0..p).collect(), p)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_count(&self) -> usize {
        self.labels.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Member lists per cluster, each ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.cluster_count];
        for (j, &l) in self.labels.iter().enumerate() {
            m[l].push(j);
        }
        m
    }

    /// Checks that every cluster induces a connected subgraph of `grid`.
    pub fn all_connected(&self, grid: &SpatialGrid) -> Result<bool> {
        if self.labels.len() != grid.node_count() {
            return Err(Error::shape(format!(
                "partition covers {} features but grid has {} nodes",
                self.labels.len(),
                grid.node_count()
            )));
        }
        let adj = grid.adjacency();
        let mut seen = vec![false; self.labels.len()];
        for members in self.members() {
            let label = self.labels[members[0]];
            let mut stack = vec![members[0]];
            let mut reached = 0usize;
            seen[members[0]] = true;
            while let Some(v) = stack.pop() {
                reached += 1;
                for &w in &adj[v] {
                    if !seen[w] && self.labels[w] == label {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            if reached != members.len() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_three_grid_edges() {
        let g = SpatialGrid::new(2, 3).unwrap();
        assert_eq!(
            g.edges(),
            &[(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]
        );
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.position_of(4), (1, 1));
        assert_eq!(g.index_of(1, 1), 4);
    }

    #[test]
    fn single_pixel_grid_has_no_edges() {
        let g = SpatialGrid::new(1, 1).unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn zero_sized_grid_rejected() {
        assert!(SpatialGrid::new(0, 4).is_err());
        assert!(SpatialGrid::new(4, 0).is_err());
    }

    #[test]
    fn adjacency_matches_edges() {
        let g = SpatialGrid::new(3, 3).unwrap();
        let adj = g.adjacency();
        assert_eq!(adj[4], vec![1, 3, 5, 7]);
        assert_eq!(adj[0], vec![1, 3]);
        let degree_sum: usize = adj.iter().map(|l| l.len()).sum();
        assert_eq!(degree_sum, 2 * g.edges().len());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0, 1, 0], 2).is_ok());
        assert!(Partition::new(vec![0, 2, 0], 2).is_err());
        assert!(Partition::new(vec![0, 0, 0], 2).is_err());
        assert!(Partition::new(vec![], 1).is_err());
    }

    #[test]
    fn partition_members_and_sizes() {
        let p = Partition::new(vec![1, 0, 1, 1], 2).unwrap();
        assert_eq!(p.sizes(), &[1, 3]);
        assert_eq!(p.members(), vec![vec![1], vec![0, 2, 3]]);
    }

    #[test]
    fn connectivity_check() {
        let g = SpatialGrid::new(2, 2).unwrap();
        // 0 1
        // 2 3
        let connected = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        assert!(connected.all_connected(&g).unwrap());
        // diagonal pair is not connected in a 4-neighbourhood
        let split = Partition::new(vec![0, 1, 1, 0], 2).unwrap();
        assert!(!split.all_connected(&g).unwrap());
    }

    #[test]
    fn singletons_are_connected() {
        let g = SpatialGrid::new(3, 4).unwrap();
        let p = Partition::singletons(12).unwrap();
        assert!(p.all_connected(&g).unwrap());
    }
}
