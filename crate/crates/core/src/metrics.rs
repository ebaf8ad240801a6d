//! Structural measurements taken directly on a tree.
//!
//! These are the empirical counterparts of [`crate::closed_form`]: BFS
//! distances, double-sweep diameter, Wiener index (linear and all-pairs),
//! degree statistics, power-law fitting and exact hitting times.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rayon::prelude::*;
use thiserror::Error;

use crate::tree::Tree;

/// Largest tree the all-pairs oracles accept.
pub const BRUTE_FORCE_LIMIT: usize = 20_000;

/// Largest tree on which the all-ordered-pairs hitting average is computed.
pub const PAIRWISE_HITTING_LIMIT: usize = 500;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("vertex {vertex} out of range for a tree with {n} vertices")]
    IndexOutOfRange { vertex: usize, n: usize },
    #[error("tree with {n} vertices exceeds the limit of {limit} for this computation")]
    TooLarge { n: usize, limit: usize },
    #[error("power-law fit needs at least 3 points in the window, got {0}")]
    InsufficientPoints(usize),
    #[error("power-law fit needs positive coordinates, got ({0}, {1})")]
    NonPositiveValue(f64, f64),
}

fn check_vertex(tree: &Tree, v: usize) -> Result<(), MetricsError> {
    if v >= tree.vertex_count() {
        return Err(MetricsError::IndexOutOfRange {
            vertex: v,
            n: tree.vertex_count(),
        });
    }
    Ok(())
}

pub fn bfs_distances(tree: &Tree, source: usize) -> Result<Vec<u32>, MetricsError> {
    check_vertex(tree, source)?;
    let mut dist = vec![u32::MAX; tree.vertex_count()];
    let mut queue = VecDeque::with_capacity(tree.vertex_count());
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in tree.neighbors(u) {
            let v = v as usize;
            if dist[v] == u32::MAX {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    Ok(dist)
}

fn farthest(dist: &[u32]) -> (usize, u32) {
    // first vertex attaining the maximum, so results are deterministic
    dist.iter()
        .enumerate()
        .fold((0, 0), |best, (v, &d)| if d > best.1 { (v, d) } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Diameter {
    pub length: u64,
    pub endpoints: (usize, usize),
}

/// Exact diameter of a tree by two breadth-first sweeps.
pub fn diameter_double_bfs(tree: &Tree) -> Diameter {
    let from_zero = bfs_distances(tree, 0).expect("tree is nonempty");
    let (x, _) = farthest(&from_zero);
    let from_x = bfs_distances(tree, x).expect("x is a vertex");
    let (y, d) = farthest(&from_x);
    Diameter {
        length: d as u64,
        endpoints: (x.min(y), x.max(y)),
    }
}

/// BFS order from vertex 0 together with each vertex's parent.
fn bfs_tree(tree: &Tree) -> (Vec<u32>, Vec<u32>) {
    let n = tree.vertex_count();
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![u32::MAX; n];
    parent[0] = 0;
    order.push(0u32);
    let mut head = 0;
    while head < order.len() {
        let u = order[head] as usize;
        head += 1;
        for &v in tree.neighbors(u) {
            if parent[v as usize] == u32::MAX {
                parent[v as usize] = u as u32;
                order.push(v);
            }
        }
    }
    (order, parent)
}

/// Subtree sizes for the tree rooted at 0, accumulated in reverse BFS order.
fn subtree_sizes(order: &[u32], parent: &[u32]) -> Vec<u32> {
    let mut size = vec![1u32; order.len()];
    for &v in order.iter().skip(1).rev() {
        size[parent[v as usize] as usize] += size[v as usize];
    }
    size
}

/// Wiener index in O(n): each edge lies on `s·(n − s)` shortest paths.
pub fn wiener_linear(tree: &Tree) -> BigUint {
    let n = tree.vertex_count() as u128;
    let (order, parent) = bfs_tree(tree);
    let size = subtree_sizes(&order, &parent);
    let total: u128 = order
        .iter()
        .skip(1)
        .map(|&v| {
            let s = size[v as usize] as u128;
            s * (n - s)
        })
        .sum();
    BigUint::from(total)
}

/// Wiener index as the sum of all-pairs BFS distances.
pub fn wiener_brute(tree: &Tree) -> Result<BigUint, MetricsError> {
    let n = tree.vertex_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(MetricsError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let ordered: u128 = (0..n)
        .into_par_iter()
        .map(|s| {
            let dist = bfs_distances(tree, s).expect("source in range");
            dist.iter().map(|&d| d as u128).sum::<u128>()
        })
        .sum();
    Ok(BigUint::from(ordered / 2))
}

/// Maximum BFS eccentricity over all sources.
pub fn diameter_brute(tree: &Tree) -> Result<u64, MetricsError> {
    let n = tree.vertex_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(MetricsError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    Ok((0..n)
        .into_par_iter()
        .map(|s| *bfs_distances(tree, s).unwrap().iter().max().unwrap() as u64)
        .max()
        .unwrap_or(0))
}

pub fn degree_histogram(tree: &Tree) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for k in tree.degrees() {
        *hist.entry(k).or_insert(0) += 1;
    }
    hist
}

/// One point of the cumulative degree distribution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CumulativePoint {
    pub degree: usize,
    /// Number of vertices with degree at least `degree`.
    pub at_least: usize,
    /// `at_least / n`.
    pub fraction: f64,
}

/// `P_cum(k)` at every observed degree `k`, ascending in `k`.
pub fn cumulative_from_histogram(hist: &BTreeMap<usize, usize>) -> Vec<CumulativePoint> {
    let n: usize = hist.values().sum();
    let mut remaining = n;
    let mut points = Vec::with_capacity(hist.len());
    for (&degree, &count) in hist {
        points.push(CumulativePoint {
            degree,
            at_least: remaining,
            fraction: remaining as f64 / n as f64,
        });
        remaining -= count;
    }
    points
}

pub fn cumulative_degree(tree: &Tree) -> Vec<CumulativePoint> {
    cumulative_from_histogram(&degree_histogram(tree))
}

/// Default fitting window: every observed degree except the degree-1 class
/// and the single largest degree class. `None` when nothing is left.
pub fn default_fit_window(hist: &BTreeMap<usize, usize>) -> Option<(usize, usize)> {
    let degrees: Vec<usize> = hist.keys().copied().filter(|&k| k > 1).collect();
    match degrees.len() {
        0 | 1 => None,
        len => Some((degrees[0], degrees[len - 2])),
    }
}

/// Least-squares slope of `ln P` against `ln k` over points with
/// `k_min ≤ k ≤ k_max`, returned with its sign flipped.
pub fn fit_powerlaw_exponent(points: &[(f64, f64)], k_min: f64, k_max: f64) -> Result<f64, MetricsError> {
    let window: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(k, _)| k >= k_min && k <= k_max)
        .collect();
    if let Some(&(k, p)) = window.iter().find(|&&(k, p)| k <= 0.0 || p <= 0.0) {
        return Err(MetricsError::NonPositiveValue(k, p));
    }
    if window.len() < 3 {
        return Err(MetricsError::InsufficientPoints(window.len()));
    }
    let logs: Vec<(f64, f64)> = window.iter().map(|&(k, p)| (k.ln(), p.ln())).collect();
    Ok(-ols_slope(&logs))
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(xy: &[(f64, f64)]) -> f64 {
    let len = xy.len() as f64;
    let mean_x = xy.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = xy.iter().map(|p| p.1).sum::<f64>() / len;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in xy {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    sxy / sxx
}

/// Exact hitting times on one tree.
///
/// On a tree the walk from `u` to `v` must cross every edge of the unique
/// path in order, and crossing `x → y` takes `2·m + 1` expected steps where
/// `m` is the number of edges on `x`'s side of `{x, y}`. With the tree
/// rooted at 0 that side has `size(x) − 1` edges when `y` is `x`'s parent
/// and `n − size(y) − 1` when `y` is a child of `x`.
pub struct HittingTimes<'a> {
    tree: &'a Tree,
    parent: Vec<u32>,
    depth: Vec<u32>,
    size: Vec<u32>,
}

impl<'a> HittingTimes<'a> {
    pub fn new(tree: &'a Tree) -> Self {
        let (order, parent) = bfs_tree(tree);
        let size = subtree_sizes(&order, &parent);
        let mut depth = vec![0u32; tree.vertex_count()];
        for &v in order.iter().skip(1) {
            depth[v as usize] = depth[parent[v as usize] as usize] + 1;
        }
        HittingTimes {
            tree,
            parent,
            depth,
            size,
        }
    }

    /// Expected steps of a simple random walk from `u` until it first
    /// reaches `v`.
    pub fn between(&self, u: usize, v: usize) -> Result<u64, MetricsError> {
        check_vertex(self.tree, u)?;
        check_vertex(self.tree, v)?;
        let n = self.tree.vertex_count() as u64;
        let (mut a, mut b) = (u, v);
        let mut total = 0u64;
        // climb from the deeper side until both meet at the common ancestor
        while a != b {
            if self.depth[a] >= self.depth[b] {
                // u-side step a -> parent(a): a's component is its subtree
                total += 2 * self.size[a] as u64 - 1;
                a = self.parent[a] as usize;
            } else {
                // v-side step parent(b) -> b: the walker's component is
                // everything outside b's subtree
                total += 2 * (n - self.size[b] as u64) - 1;
                b = self.parent[b] as usize;
            }
        }
        Ok(total)
    }
}

pub fn exact_hitting_time(tree: &Tree, u: usize, v: usize) -> Result<u64, MetricsError> {
    HittingTimes::new(tree).between(u, v)
}

fn rational(num: BigUint, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Mean hitting time over ordered pairs, `2W/n`.
pub fn mean_hitting_exact(tree: &Tree) -> BigRational {
    let n = tree.vertex_count();
    let value = rational(wiener_linear(tree) * 2u32, n);
    #[cfg(debug_assertions)]
    if n <= PAIRWISE_HITTING_LIMIT {
        debug_assert_eq!(Ok(&value), mean_hitting_by_pairs(tree).as_ref());
    }
    value
}

/// Average of [`exact_hitting_time`] over all `n(n − 1)` ordered pairs.
pub fn mean_hitting_by_pairs(tree: &Tree) -> Result<BigRational, MetricsError> {
    let n = tree.vertex_count();
    if n > PAIRWISE_HITTING_LIMIT {
        return Err(MetricsError::TooLarge {
            n,
            limit: PAIRWISE_HITTING_LIMIT,
        });
    }
    let hitting = HittingTimes::new(tree);
    let mut sum = 0u128;
    for u in 0..n {
        for v in 0..n {
            sum += hitting.between(u, v)? as u128;
        }
    }
    Ok(BigRational::new(BigInt::from(sum), BigInt::from(n * (n - 1))))
}
