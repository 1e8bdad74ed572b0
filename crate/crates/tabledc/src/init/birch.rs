//! BIRCH clustering-feature tree and center extraction.
//!
//! Leaf entries summarize absorbed points as the triplet
//! (count, linear sum, sum of squared norms). A point is absorbed into its
//! nearest leaf entry when the merged entry radius
//! `sqrt(ss/n - ||ls/n||^2)` stays within the threshold, otherwise it opens
//! a new entry; overfull nodes split on their farthest pair and the split
//! propagates upward. Distances inside the tree are plain Euclidean
//! distances between entry centroids.

use super::{distance_sq, nearest_center, Centroids, InitError, KMEANS_RESTARTS};
use crate::init::kmeans::{weighted_kmeans, Seeding};
use crate::linalg::Matrix;
use crate::rng::RngState;

/// CF-tree parameters: entry radius threshold, maximum children per
/// internal node, maximum entries per leaf.
#[derive(Debug, Clone, Copy)]
pub struct BirchConfig {
    pub threshold: f64,
    pub branching: usize,
    pub leaf_capacity: usize,
}

impl BirchConfig {
    pub fn new(threshold: f64, branching: usize, leaf_capacity: usize) -> Result<Self, InitError> {
        if !(threshold > 0.0) {
            return Err(InitError::InvalidConfig(
                "threshold must be positive".into(),
            ));
        }
        if branching < 2 {
            return Err(InitError::InvalidConfig(
                "branching factor must be >= 2".into(),
            ));
        }
        if leaf_capacity < 1 {
            return Err(InitError::InvalidConfig(
                "leaf capacity must be >= 1".into(),
            ));
        }
        Ok(BirchConfig {
            threshold,
            branching,
            leaf_capacity,
        })
    }

    /// Conventional capacities: branching 50, leaf capacity 50.
    pub fn with_threshold(threshold: f64) -> Result<Self, InitError> {
        BirchConfig::new(threshold, 50, 50)
    }
}

/// The clustering-feature triplet.
#[derive(Debug, Clone)]
pub struct CfStats {
    pub count: usize,
    pub linear_sum: Vec<f64>,
    pub square_sum: f64,
}

impl CfStats {
    fn zero(dim: usize) -> Self {
        CfStats {
            count: 0,
            linear_sum: vec![0.0; dim],
            square_sum: 0.0,
        }
    }

    fn from_point(z: &[f64]) -> Self {
        CfStats {
            count: 1,
            linear_sum: z.to_vec(),
            square_sum: z.iter().map(|v| v * v).sum(),
        }
    }

    fn absorb_point(&mut self, z: &[f64]) {
        self.count += 1;
        for (s, v) in self.linear_sum.iter_mut().zip(z) {
            *s += v;
        }
        self.square_sum += z.iter().map(|v| v * v).sum::<f64>();
    }

    fn merge(&mut self, other: &CfStats) {
        self.count += other.count;
        for (s, v) in self.linear_sum.iter_mut().zip(&other.linear_sum) {
            *s += v;
        }
        self.square_sum += other.square_sum;
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.linear_sum.iter().map(|v| v / n).collect()
    }

    /// `sqrt(ss/n - ||ls/n||^2)`, clamped at zero against rounding.
    pub fn radius(&self) -> f64 {
        let n = self.count as f64;
        let mean_sq: f64 = self.linear_sum.iter().map(|v| (v / n) * (v / n)).sum();
        (self.square_sum / n - mean_sq).max(0.0).sqrt()
    }

    /// Radius the entry would have after absorbing `z`.
    fn radius_with_point(&self, z: &[f64]) -> f64 {
        let n = (self.count + 1) as f64;
        let sq = self.square_sum + z.iter().map(|v| v * v).sum::<f64>();
        let mean_sq: f64 = self
            .linear_sum
            .iter()
            .zip(z)
            .map(|(s, v)| {
                let m = (s + v) / n;
                m * m
            })
            .sum();
        (sq / n - mean_sq).max(0.0).sqrt()
    }

    fn centroid_distance_sq(&self, z: &[f64]) -> f64 {
        let n = self.count as f64;
        self.linear_sum
            .iter()
            .zip(z)
            .map(|(s, v)| {
                let d = s / n - v;
                d * d
            })
            .sum()
    }
}

/// Leaf entry: a CF triplet plus a stable identifier, assigned in creation
/// order, that survives node splits.
#[derive(Debug, Clone)]
pub struct CfEntry {
    pub id: u64,
    pub stats: CfStats,
}

/// Tree node. Leaves hold entries; internal nodes hold children together
/// with one aggregated CF per child.
#[derive(Debug)]
pub struct CfNode {
    leaf: bool,
    entries: Vec<CfEntry>,
    children: Vec<CfNode>,
    child_stats: Vec<CfStats>,
}

impl CfNode {
    fn new_leaf(entries: Vec<CfEntry>) -> Self {
        CfNode {
            leaf: true,
            entries,
            children: Vec::new(),
            child_stats: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf
    }

    pub fn entries(&self) -> &[CfEntry] {
        &self.entries
    }

    pub fn children(&self) -> &[CfNode] {
        &self.children
    }

    pub fn child_stats(&self) -> &[CfStats] {
        &self.child_stats
    }

    /// CF of the whole subtree, summed in index order.
    pub fn aggregate(&self, dim: usize) -> CfStats {
        let mut acc = CfStats::zero(dim);
        if self.leaf {
            for e in &self.entries {
                acc.merge(&e.stats);
            }
        } else {
            for s in &self.child_stats {
                acc.merge(s);
            }
        }
        acc
    }
}

/// Picks the farthest pair of centroids (ties to the lowest index pair) and
/// partitions items to the nearer seed.
fn split_by_farthest_pair<T>(
    items: Vec<T>,
    centroid_of: impl Fn(&T) -> Vec<f64>,
) -> (Vec<T>, Vec<T>) {
    let cents: Vec<Vec<f64>> = items.iter().map(&centroid_of).collect();
    let (mut si, mut sj, mut best) = (0usize, 1usize, -1.0f64);
    for i in 0..cents.len() {
        for j in (i + 1)..cents.len() {
            let d = distance_sq(&cents[i], &cents[j]);
            if d > best {
                best = d;
                si = i;
                sj = j;
            }
        }
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (idx, item) in items.into_iter().enumerate() {
        let da = distance_sq(&cents[idx], &cents[si]);
        let db = distance_sq(&cents[idx], &cents[sj]);
        if da <= db {
            left.push(item);
        } else {
            right.push(item);
        }
    }
    // fully coincident centroids tie everything to the left; halve by
    // index so both sides stay nonempty and within capacity
    if right.is_empty() {
        let half = left.len() / 2;
        right = left.split_off(half);
    }
    (left, right)
}

/// BIRCH clustering-feature tree.
#[derive(Debug)]
pub struct CfTree {
    dim: usize,
    config: BirchConfig,
    root: Option<CfNode>,
    next_entry_id: u64,
    point_count: usize,
}

impl CfTree {
    pub fn new(dim: usize, config: BirchConfig) -> Self {
        CfTree {
            dim,
            config,
            root: None,
            next_entry_id: 0,
            point_count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &BirchConfig {
        &self.config
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn root(&self) -> Option<&CfNode> {
        self.root.as_ref()
    }

    /// Inserts one point, returning the id of the leaf entry that absorbed
    /// it (or that was created for it).
    pub fn insert(&mut self, z: &[f64]) -> Result<u64, InitError> {
        if z.len() != self.dim {
            return Err(InitError::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        self.point_count += 1;

        let Some(root) = self.root.as_mut() else {
            let id = self.next_entry_id;
            self.next_entry_id += 1;
            self.root = Some(CfNode::new_leaf(vec![CfEntry {
                id,
                stats: CfStats::from_point(z),
            }]));
            return Ok(id);
        };

        let (entry_id, split) =
            Self::insert_rec(root, z, &self.config, self.dim, &mut self.next_entry_id);
        if let Some(sibling) = split {
            // the root split: grow a new root above the two halves
            let old_root = self.root.take().unwrap();
            let stats_a = old_root.aggregate(self.dim);
            let stats_b = sibling.aggregate(self.dim);
            self.root = Some(CfNode {
                leaf: false,
                entries: Vec::new(),
                children: vec![old_root, sibling],
                child_stats: vec![stats_a, stats_b],
            });
        }
        Ok(entry_id)
    }

    fn insert_rec(
        node: &mut CfNode,
        z: &[f64],
        config: &BirchConfig,
        dim: usize,
        next_id: &mut u64,
    ) -> (u64, Option<CfNode>) {
        if node.leaf {
            // nearest entry by centroid distance, lowest index on ties
            let mut nearest: Option<usize> = None;
            let mut nearest_d = f64::INFINITY;
            for (i, e) in node.entries.iter().enumerate() {
                let d = e.stats.centroid_distance_sq(z);
                if d < nearest_d {
                    nearest_d = d;
                    nearest = Some(i);
                }
            }
            if let Some(i) = nearest {
                if node.entries[i].stats.radius_with_point(z) <= config.threshold {
                    node.entries[i].stats.absorb_point(z);
                    return (node.entries[i].id, None);
                }
            }

            let id = *next_id;
            *next_id += 1;
            node.entries.push(CfEntry {
                id,
                stats: CfStats::from_point(z),
            });
            if node.entries.len() > config.leaf_capacity {
                let entries = std::mem::take(&mut node.entries);
                let (left, right) = split_by_farthest_pair(entries, |e| e.stats.centroid());
                node.entries = left;
                return (id, Some(CfNode::new_leaf(right)));
            }
            return (id, None);
        }

        // internal: descend into the child with the nearest aggregate centroid
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in node.child_stats.iter().enumerate() {
            let d = s.centroid_distance_sq(z);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }

        let (entry_id, split) = Self::insert_rec(&mut node.children[best], z, config, dim, next_id);
        match split {
            None => {
                node.child_stats[best].absorb_point(z);
            }
            Some(sibling) => {
                let kept = node.children.remove(best);
                node.child_stats.remove(best);
                let kept_stats = kept.aggregate(dim);
                let sib_stats = sibling.aggregate(dim);
                node.children.push(kept);
                node.child_stats.push(kept_stats);
                node.children.push(sibling);
                node.child_stats.push(sib_stats);
                if node.children.len() > config.branching {
                    let children = std::mem::take(&mut node.children);
                    let stats = std::mem::take(&mut node.child_stats);
                    let pairs: Vec<(CfNode, CfStats)> = children.into_iter().zip(stats).collect();
                    let (left, right) = split_by_farthest_pair(pairs, |(_, s)| s.centroid());
                    let (lc, ls): (Vec<CfNode>, Vec<CfStats>) = left.into_iter().unzip();
                    let (rc, rs): (Vec<CfNode>, Vec<CfStats>) = right.into_iter().unzip();
                    node.children = lc;
                    node.child_stats = ls;
                    return (
                        entry_id,
                        Some(CfNode {
                            leaf: false,
                            entries: Vec::new(),
                            children: rc,
                            child_stats: rs,
                        }),
                    );
                }
            }
        }
        (entry_id, None)
    }

    /// Leaf entries in depth-first order.
    pub fn leaf_entries(&self) -> Vec<&CfEntry> {
        let mut out = Vec::new();
        fn walk<'a>(node: &'a CfNode, out: &mut Vec<&'a CfEntry>) {
            if node.leaf {
                out.extend(node.entries.iter());
            } else {
                for child in &node.children {
                    walk(child, out);
                }
            }
        }
        if let Some(root) = &self.root {
            walk(root, &mut out);
        }
        out
    }

    pub fn leaf_entry_count(&self) -> usize {
        self.leaf_entries().len()
    }
}

fn build_tree(z: &Matrix, config: &BirchConfig) -> Result<CfTree, InitError> {
    let mut tree = CfTree::new(z.cols(), *config);
    for i in 0..z.rows() {
        tree.insert(z.row(i))?;
    }
    Ok(tree)
}

/// One probe of the threshold grid search.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdStep {
    pub threshold: f64,
    pub leaf_entries: usize,
}

/// Result of the geometric grid search over the CF-tree threshold.
#[derive(Debug, Clone)]
pub struct ThresholdSearch {
    pub threshold: f64,
    pub steps: Vec<ThresholdStep>,
}

const MAX_HALVINGS: usize = 20;

/// Average pairwise distance over a deterministic sample of at most 512
/// rows, halved. This is the top of the threshold grid.
fn initial_threshold(z: &Matrix) -> f64 {
    let n = z.rows();
    let sample: Vec<usize> = if n <= 512 {
        (0..n).collect()
    } else {
        (0..512).map(|i| i * n / 512).collect()
    };
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in sample.iter().enumerate() {
        for &j in sample.iter().skip(a + 1) {
            total += distance_sq(z.row(i), z.row(j)).sqrt();
            pairs += 1;
        }
    }
    if pairs == 0 {
        return f64::MIN_POSITIVE;
    }
    let t0 = 0.5 * total / pairs as f64;
    if t0 > 0.0 {
        t0
    } else {
        f64::MIN_POSITIVE
    }
}

/// Grid search for the largest threshold that yields at least `k` leaf
/// entries with a stable entry count (under 10% movement when halved once
/// more). Records every probed threshold with its leaf-entry count.
pub fn threshold_search(
    z: &Matrix,
    k: usize,
    config: &BirchConfig,
) -> Result<ThresholdSearch, InitError> {
    if z.rows() < k {
        return Err(InitError::TooFewPoints {
            needed: k,
            got: z.rows(),
        });
    }
    let t0 = initial_threshold(z);
    let mut steps: Vec<ThresholdStep> = Vec::new();
    let count_at = |t: f64, steps: &mut Vec<ThresholdStep>| -> Result<usize, InitError> {
        let cfg = BirchConfig {
            threshold: t,
            ..*config
        };
        let count = build_tree(z, &cfg)?.leaf_entry_count();
        steps.push(ThresholdStep {
            threshold: t,
            leaf_entries: count,
        });
        Ok(count)
    };

    let mut current = count_at(t0, &mut steps)?;
    for step in 0..=MAX_HALVINGS {
        let t = t0 / (1u64 << step) as f64;
        let next = count_at(t / 2.0, &mut steps)?;
        if current >= k && ((next as f64 - current as f64).abs() < 0.1 * current as f64) {
            return Ok(ThresholdSearch {
                threshold: t,
                steps,
            });
        }
        current = next;
    }
    Err(InitError::InsufficientSubclusters {
        needed: k,
        available: current,
    })
}

/// The threshold chosen by [`threshold_search`].
pub fn tune_threshold(z: &Matrix, k: usize, config: &BirchConfig) -> Result<f64, InitError> {
    threshold_search(z, k, config).map(|s| s.threshold)
}

/// Builds a CF-tree over the rows of `z`, reduces its leaf-entry centroids
/// to `k` centers with count-weighted k-means (k-means++ seeding,
/// [`KMEANS_RESTARTS`] restarts), assigns every row to its nearest center,
/// and returns the per-cluster means.
pub fn birch_init(
    z: &Matrix,
    k: usize,
    config: &BirchConfig,
    rng: &mut RngState,
) -> Result<Centroids, InitError> {
    if k == 0 {
        return Err(InitError::InvalidConfig("k must be >= 1".into()));
    }
    if z.rows() < k {
        return Err(InitError::TooFewPoints {
            needed: k,
            got: z.rows(),
        });
    }

    let tree = build_tree(z, config)?;
    let entries = tree.leaf_entries();
    if entries.len() < k {
        return Err(InitError::InsufficientSubclusters {
            needed: k,
            available: entries.len(),
        });
    }

    let mut sub_centroids = Matrix::zeros(entries.len(), z.cols());
    let mut weights = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let c = e.stats.centroid();
        sub_centroids.row_mut(i).copy_from_slice(&c);
        weights.push(e.stats.count as f64);
    }

    let reduced = weighted_kmeans(
        &sub_centroids,
        &weights,
        k,
        KMEANS_RESTARTS,
        Seeding::PlusPlus,
        rng,
    )?;

    // assign original points to the reduced centers, then take per-cluster means
    let mut assignment: Vec<usize> = (0..z.rows())
        .map(|i| nearest_center(z.row(i), &reduced.centers))
        .collect();
    let centers = means_with_rescue(z, &mut assignment, k);
    Ok(Centroids {
        centers,
        assignment,
    })
}

/// Per-cluster means; an empty cluster steals the point farthest from its
/// own center (deterministically, first maximum) and means are recomputed.
pub(crate) fn means_with_rescue(z: &Matrix, assignment: &mut [usize], k: usize) -> Matrix {
    let dim = z.cols();
    loop {
        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (i, &a) in assignment.iter().enumerate() {
            counts[a] += 1;
            let row = z.row(i);
            let dest = sums.row_mut(a);
            for (d, v) in dest.iter_mut().zip(row) {
                *d += v;
            }
        }
        let empty = counts.iter().position(|&c| c == 0);
        match empty {
            None => {
                for c in 0..k {
                    let n = counts[c] as f64;
                    for v in sums.row_mut(c) {
                        *v /= n;
                    }
                }
                return sums;
            }
            Some(dead) => {
                // centers of nonempty clusters, used to find the farthest point
                let mut centers = sums;
                for c in 0..k {
                    if counts[c] > 0 {
                        let n = counts[c] as f64;
                        for v in centers.row_mut(c) {
                            *v /= n;
                        }
                    }
                }
                let mut far_idx = 0;
                let mut far_d = -1.0;
                for (i, &a) in assignment.iter().enumerate() {
                    if counts[a] <= 1 {
                        continue; // do not empty another cluster
                    }
                    let d = distance_sq(z.row(i), centers.row(a));
                    if d > far_d {
                        far_d = d;
                        far_idx = i;
                    }
                }
                assignment[far_idx] = dead;
            }
        }
    }
}
