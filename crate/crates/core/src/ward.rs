//! Ward clustering of features restricted to a spatial neighbourhood
//! graph.
//!
//! Features are treated as points in sample space (one coordinate per
//! row of the design matrix). Only pairs of clusters that are adjacent
//! in the grid graph may merge, so every cluster at every level of the
//! tree is a connected patch of pixels. The pair merged at each step is
//! the adjacent pair with the smallest Ward cost
//!
//! ```text
//! D(A, B) = |A| |B| / (|A| + |B|) * ||centroid(A) - centroid(B)||^2
//! ```
//!
//! with exact cost ties broken towards the lexicographically smallest
//! `(min id, max id)` pair, which makes the merge sequence fully
//! deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::grid::{Partition, SpatialGrid};

/// One agglomeration step. `left < right` are the ids of the merged
/// clusters and `id` is the id of their union.
///
/// Leaves are ids `0..p`; the merge at index `t` creates id `p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub id: usize,
    pub height: f64,
}

/// A full agglomeration sequence over `p` leaves: exactly `p - 1`
/// merges with non-decreasing heights.
///
/// Constrained agglomeration can produce raw costs that dip below an
/// earlier merge; heights are repaired to a running maximum so the
/// sequence is always a valid dendrogram. Cutting ignores heights and
/// replays merge counts, so the repair never changes cluster content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeTree {
    leaf_count: usize,
    merges: Vec<Merge>,
}

impl MergeTree {
    fn new(leaf_count: usize, merges: Vec<Merge>) -> Self {
        debug_assert_eq!(merges.len() + 1, leaf_count);
        MergeTree { leaf_count, merges }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    cost: f64,
    left: usize,
    right: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.left.cmp(&other.left))
            .then_with(|| self.right.cmp(&other.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn ward_cost(
    sum_a: &Array1<f64>,
    size_a: f64,
    sum_b: &Array1<f64>,
    size_b: f64,
) -> f64 {
    let w = size_a * size_b / (size_a + size_b);
    let mut d = 0.0;
    for (&sa, &sb) in sum_a.iter().zip(sum_b.iter()) {
        let diff = sa / size_a - sb / size_b;
        d += diff * diff;
    }
    w * d
}

/// Agglomerates the columns of `x` over the grid graph into a full
/// merge tree.
///
/// `x` must have exactly one column per grid node. Runs in
/// `O(p log p)` heap operations on top of `O(p n)` per-merge centroid
/// work; stale heap entries are skipped lazily, which is sound because
/// a cluster's centroid never changes while it is alive.
pub fn ward_cluster(x: &DesignMatrix, grid: &SpatialGrid) -> Result<MergeTree> {
    let p = x.n_features();
    if p != grid.node_count() {
        return Err(Error::shape(format!(
            "matrix has {} columns but grid has {} nodes",
            p,
            grid.node_count()
        )));
    }
    let total = 2 * p - 1;
    let mut sums: Vec<Array1<f64>> = Vec::with_capacity(total);
    for col in x.values().columns() {
        sums.push(col.to_owned());
    }
    let mut sizes: Vec<f64> = vec![1.0; p];
    let mut alive = vec![true; p];
    let mut neighbors: Vec<BTreeSet<usize>> = grid
        .adjacency()
        .into_iter()
        .map(|l| l.into_iter().collect())
        .collect();

    let mut heap = BinaryHeap::new();
    for &(a, b) in grid.edges() {
        heap.push(std::cmp::Reverse(Candidate {
            cost: ward_cost(&sums[a], 1.0, &sums[b], 1.0),
            left: a,
            right: b,
        }));
    }

    let mut merges: Vec<Merge> = Vec::with_capacity(p - 1);
    while merges.len() < p - 1 {
        let cand = match heap.pop() {
            Some(std::cmp::Reverse(c)) => c,
            None => return Err(Error::invalid("grid graph is not connected")),
        };
        let (a, b) = (cand.left, cand.right);
        if !alive[a] || !alive[b] {
            continue;
        }
        let id = p + merges.len();
        merges.push(Merge { left: a, right: b, id, height: cand.cost });
        alive[a] = false;
        alive[b] = false;
        alive.push(true);
        let merged_sum = &sums[a] + &sums[b];
        let merged_size = sizes[a] + sizes[b];
        let mut adjacent: BTreeSet<usize> = neighbors[a]
            .union(&neighbors[b])
            .copied()
            .filter(|&d| d != a && d != b)
            .collect();
        adjacent.retain(|&d| alive[d]);
        for &d in &adjacent {
            neighbors[d].remove(&a);
            neighbors[d].remove(&b);
            neighbors[d].insert(id);
            heap.push(std::cmp::Reverse(Candidate {
                cost: ward_cost(&sums[d], sizes[d], &merged_sum, merged_size),
                left: d,
                right: id,
            }));
        }
        sums.push(merged_sum);
        sizes.push(merged_size);
        neighbors.push(adjacent);
    }

    let mut floor = 0.0f64;
    for m in &mut merges {
        floor = floor.max(m.height);
        m.height = floor;
    }
    Ok(MergeTree::new(p, merges))
}

/// Partition obtained by replaying the first `p - clusters` merges.
///
/// Clusters are labelled `0..clusters` in order of their smallest
/// member feature, so `clusters == p` yields the identity labelling.
pub fn cut_tree(tree: &MergeTree, clusters: usize) -> Result<Partition> {
    let p = tree.leaf_count();
    if clusters == 0 || clusters > p {
        return Err(Error::invalid(format!(
            "cannot cut a {p}-leaf tree into {clusters} clusters"
        )));
    }
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    // representative leaf of each cluster id seen so far
    let mut rep: Vec<usize> = (0..p).collect();
    for m in &tree.merges()[..p - clusters] {
        let ra = find(&mut parent, rep[m.left]);
        let rb = find(&mut parent, rep[m.right]);
        parent[rb] = ra;
        rep.push(ra);
    }
    let mut labels = vec![usize::MAX; p];
    let mut next = 0;
    for leaf in 0..p {
        let root = find(&mut parent, leaf);
        if labels[root] == usize::MAX {
            labels[root] = next;
            next += 1;
        }
        labels[leaf] = labels[root];
    }
    debug_assert_eq!(next, clusters);
    Partition::new(labels, clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn matrix(cols: &[[f64; 2]]) -> DesignMatrix {
        let mut rows = vec![vec![0.0; cols.len()]; 2];
        for (j, c) in cols.iter().enumerate() {
            rows[0][j] = c[0];
            rows[1][j] = c[1];
        }
        DesignMatrix::new(
            ndarray::Array2::from_shape_vec(
                (2, cols.len()),
                rows.into_iter().flatten().collect(),
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pair_merge_on_line_grid() {
        let x = matrix(&[[0.0, 0.0], [3.0, 4.0]]);
        let grid = SpatialGrid::new(1, 2).unwrap();
        let tree = ward_cluster(&x, &grid).unwrap();
        assert_eq!(tree.merges().len(), 1);
        let m = tree.merges()[0];
        assert_eq!((m.left, m.right, m.id), (0, 1, 2));
        // (1*1/2) * 25
        assert_abs_diff_eq!(m.height, 12.5);
    }

    #[test]
    fn merge_order_on_square_grid() {
        // pixels 0 1
        //        2 3
        let x = matrix(&[[0.0, 0.0], [0.0, 0.1], [10.0, 10.0], [0.0, 0.2]]);
        let grid = SpatialGrid::new(2, 2).unwrap();
        let tree = ward_cluster(&x, &grid).unwrap();
        let seq: Vec<(usize, usize, usize)> =
            tree.merges().iter().map(|m| (m.left, m.right, m.id)).collect();
        // 0 and 1 are nearest; their union then absorbs 3; 2 joins last
        assert_eq!(seq, vec![(0, 1, 4), (3, 4, 5), (2, 5, 6)]);
        assert_abs_diff_eq!(tree.merges()[0].height, 0.005, epsilon = 1e-12);
        // |{3}| |{0,1}| / 3 * ||(0, 0.2) - (0, 0.05)||^2
        assert_abs_diff_eq!(tree.merges()[1].height, 2.0 / 3.0 * 0.0225, epsilon = 1e-12);
    }

    #[test]
    fn exact_ties_break_towards_smallest_pair() {
        // all columns identical: every adjacent pair costs 0
        let x = matrix(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]);
        let grid = SpatialGrid::new(2, 2).unwrap();
        let tree = ward_cluster(&x, &grid).unwrap();
        let first = tree.merges()[0];
        assert_eq!((first.left, first.right), (0, 1));
        assert!(tree.merges().iter().all(|m| m.height == 0.0));
    }

    #[test]
    fn cut_tree_identity_and_extremes() {
        let x = matrix(&[[0.0, 1.0], [5.0, 2.0], [1.0, 8.0], [4.0, 4.0], [2.0, 2.0], [0.5, 9.0]]);
        let grid = SpatialGrid::new(2, 3).unwrap();
        let tree = ward_cluster(&x, &grid).unwrap();
        let identity = cut_tree(&tree, 6).unwrap();
        assert_eq!(identity.labels(), &[0, 1, 2, 3, 4, 5]);
        let single = cut_tree(&tree, 1).unwrap();
        assert!(single.labels().iter().all(|&l| l == 0));
        assert!(cut_tree(&tree, 0).is_err());
        assert!(cut_tree(&tree, 7).is_err());
    }

    #[test]
    fn cut_labels_are_canonical() {
        let x = matrix(&[[0.0, 0.0], [9.0, 9.0], [0.1, 0.0], [9.0, 8.9]]);
        let grid = SpatialGrid::new(1, 4).unwrap();
        let tree = ward_cluster(&x, &grid).unwrap();
        // merges happen away from feature 0 first, but the cluster
        // containing feature 0 must still be labelled 0
        let part = cut_tree(&tree, 2).unwrap();
        assert_eq!(part.labels(), &[0, 1, 1, 1]);
        let three = cut_tree(&tree, 3).unwrap();
        assert_eq!(three.labels(), &[0, 1, 2, 2]);
    }

    #[test]
    fn tree_serializes_to_json_and_back() {
        let x = matrix(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        let grid = SpatialGrid::new(1, 3).unwrap();
        let tree = ward_cluster(&x, &grid).unwrap();
        let text = serde_json::to_string(&tree).unwrap();
        let back: MergeTree = serde_json::from_str(&text).unwrap();
        assert_eq!(back, tree);
    }

    proptest! {
        #[test]
        fn cuts_are_connected_and_heights_monotone(
            rows in 1usize..4,
            cols in 2usize..5,
            values in proptest::collection::vec(-5.0f64..5.0, 3 * 16),
        ) {
            let p = rows * cols;
            let data: Vec<f64> = values.into_iter().take(3 * p).collect();
            prop_assume!(data.len() == 3 * p);
            let x = DesignMatrix::new(
                ndarray::Array2::from_shape_vec((3, p), data).unwrap()
            ).unwrap();
            let grid = SpatialGrid::new(rows, cols).unwrap();
            let tree = ward_cluster(&x, &grid).unwrap();
            for w in tree.merges().windows(2) {
                prop_assert!(w[0].height <= w[1].height);
            }
            for q in 1..=p {
                let part = cut_tree(&tree, q).unwrap();
                prop_assert_eq!(part.cluster_count(), q);
                prop_assert!(part.all_connected(&grid).unwrap());
            }
        }
    }

    #[test]
    fn rejects_mismatched_grid() {
        let x = matrix(&[[0.0, 0.0], [1.0, 1.0]]);
        let grid = SpatialGrid::new(1, 3).unwrap();
        assert!(ward_cluster(&x, &grid).is_err());
    }
}
