//! Monte Carlo simulation of simple random walks.
//!
//! Randomness is drawn from ChaCha8 substreams keyed by `master_seed`: the
//! 64-bit stream id of the cipher selects an independent substream for every
//! work unit (a chunk of walks for a single pair, or one sampled pair for the
//! mean estimate). Work units are merged in index order, so an estimate is
//! bitwise identical for a given seed whatever the number of workers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::tree::Tree;

pub const DEFAULT_STEP_CAP: u64 = 10_000_000_000;

/// Walks per substream when estimating a single pair.
const WALKS_PER_CHUNK: u64 = 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("walk exceeded the step cap of {0}")]
    StepCapExceeded(u64),
    #[error("vertex {vertex} out of range for a tree with {n} vertices")]
    IndexOutOfRange { vertex: usize, n: usize },
    #[error("{0} must be at least 1")]
    ZeroSamples(&'static str),
    #[error("mean hitting time needs at least two vertices")]
    TooSmall,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    pub step_cap: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            step_cap: DEFAULT_STEP_CAP,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Completed walks.
    pub samples: u64,
    pub master_seed: u64,
    /// Longest completed walk.
    pub max_steps_hit: u64,
    /// Walks aborted at the step cap; any nonzero value invalidates `mean`.
    pub truncated_count: u64,
}

impl WalkEstimate {
    pub fn is_valid(&self) -> bool {
        self.truncated_count == 0
    }

    /// `|mean − exact| / std_error`; zero when both numerator and
    /// denominator vanish, `None` for a nonzero miss with zero error.
    pub fn z_score(&self, exact: f64) -> Option<f64> {
        let miss = (self.mean - exact).abs();
        if self.std_error > 0.0 {
            Some(miss / self.std_error)
        } else if miss == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// Independent generator for work unit `stream` under `master_seed`.
pub fn substream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Runs one walk from `u` until it first reaches `v`, stepping to a
/// uniformly chosen neighbor each time.
pub fn sample_hitting<R: Rng + ?Sized>(
    tree: &Tree,
    u: usize,
    v: usize,
    rng: &mut R,
    step_cap: u64,
) -> Result<u64, WalkError> {
    check_vertex(tree, u)?;
    check_vertex(tree, v)?;
    let mut at = u;
    let mut steps = 0u64;
    while at != v {
        if steps == step_cap {
            return Err(WalkError::StepCapExceeded(step_cap));
        }
        let neighbors = tree.neighbors(at);
        at = neighbors[uniform_index(rng, neighbors.len() as u32)] as usize;
        steps += 1;
    }
    Ok(steps)
}

/// Unbiased draw from `0..len` by multiply-and-shift with rejection of the
/// few low products that would over-represent some outcomes.
#[inline]
fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, len: u32) -> usize {
    let mut product = rng.next_u32() as u64 * len as u64;
    if (product as u32) < len {
        let threshold = len.wrapping_neg() % len;
        while (product as u32) < threshold {
            product = rng.next_u32() as u64 * len as u64;
        }
    }
    (product >> 32) as usize
}

fn check_vertex(tree: &Tree, v: usize) -> Result<(), WalkError> {
    if v >= tree.vertex_count() {
        return Err(WalkError::IndexOutOfRange {
            vertex: v,
            n: tree.vertex_count(),
        });
    }
    Ok(())
}

/// Running sums over completed walks, merged in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: u64,
    sum: f64,
    sum_sq: f64,
    max: u64,
    truncated: u64,
}

impl Accumulator {
    fn push(&mut self, result: Result<u64, WalkError>) {
        match result {
            Ok(steps) => {
                let x = steps as f64;
                self.count += 1;
                self.sum += x;
                self.sum_sq += x * x;
                self.max = self.max.max(steps);
            }
            Err(_) => self.truncated += 1,
        }
    }

    fn merge(mut self, other: &Accumulator) -> Accumulator {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.max = self.max.max(other.max);
        self.truncated += other.truncated;
        self
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance.
    fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let c = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / c) / (c - 1.0)).max(0.0)
    }
}

fn run_in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, WalkError> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| WalkError::Pool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Estimates `H_{u→v}` from `samples` independent walks.
pub fn estimate_hitting(
    tree: &Tree,
    u: usize,
    v: usize,
    samples: u64,
    master_seed: u64,
    config: &WalkConfig,
) -> Result<WalkEstimate, WalkError> {
    check_vertex(tree, u)?;
    check_vertex(tree, v)?;
    if samples == 0 {
        return Err(WalkError::ZeroSamples("samples"));
    }
    let chunks = samples.div_ceil(WALKS_PER_CHUNK);
    let partial: Vec<Accumulator> = run_in_pool(config.workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = substream(master_seed, chunk);
                let walks = WALKS_PER_CHUNK.min(samples - chunk * WALKS_PER_CHUNK);
                let mut acc = Accumulator::default();
                for _ in 0..walks {
                    acc.push(sample_hitting(tree, u, v, &mut rng, config.step_cap));
                }
                acc
            })
            .collect()
    })?;
    let total = partial.iter().fold(Accumulator::default(), |a, b| a.merge(b));
    let std_error = if total.count > 0 {
        (total.variance() / total.count as f64).sqrt()
    } else {
        0.0
    };
    Ok(WalkEstimate {
        mean: total.mean(),
        std_error,
        samples: total.count,
        master_seed,
        max_steps_hit: total.max,
        truncated_count: total.truncated,
    })
}

/// Estimates the mean hitting time over ordered pairs `u ≠ v`.
///
/// `pair_samples` ordered pairs are drawn uniformly with replacement and
/// `walks_per_pair` walks are run for each. Walks sharing a pair are
/// correlated through it, so the standard error is taken from the spread of
/// the per-pair means (when only one pair is drawn, from the walks).
pub fn estimate_mean_hitting(
    tree: &Tree,
    pair_samples: u64,
    walks_per_pair: u64,
    master_seed: u64,
    config: &WalkConfig,
) -> Result<WalkEstimate, WalkError> {
    let n = tree.vertex_count();
    if n < 2 {
        return Err(WalkError::TooSmall);
    }
    if pair_samples == 0 {
        return Err(WalkError::ZeroSamples("pair_samples"));
    }
    if walks_per_pair == 0 {
        return Err(WalkError::ZeroSamples("walks_per_pair"));
    }
    let per_pair: Vec<Accumulator> = run_in_pool(config.workers, || {
        (0..pair_samples)
            .into_par_iter()
            .map(|pair| {
                let mut rng = substream(master_seed, pair);
                let u = rng.gen_range(0..n);
                let mut v = rng.gen_range(0..n - 1);
                if v >= u {
                    v += 1;
                }
                let mut acc = Accumulator::default();
                for _ in 0..walks_per_pair {
                    acc.push(sample_hitting(tree, u, v, &mut rng, config.step_cap));
                }
                acc
            })
            .collect()
    })?;

    let total = per_pair.iter().fold(Accumulator::default(), |a, b| a.merge(b));
    let mut pair_means = Accumulator::default();
    for acc in per_pair.iter().filter(|a| a.count > 0) {
        let m = acc.mean();
        pair_means.count += 1;
        pair_means.sum += m;
        pair_means.sum_sq += m * m;
    }
    let std_error = if pair_means.count >= 2 {
        (pair_means.variance() / pair_means.count as f64).sqrt()
    } else if total.count > 0 {
        (total.variance() / total.count as f64).sqrt()
    } else {
        0.0
    };
    Ok(WalkEstimate {
        mean: total.mean(),
        std_error,
        samples: total.count,
        master_seed,
        max_steps_hit: total.max,
        truncated_count: total.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::{grow, GrowthModel, Operator, DEFAULT_VERTEX_BUDGET};
    use crate::metrics::HittingTimes;
    use crate::tree::{resolve_seed, SeedSpec};

    fn seed(spec: SeedSpec) -> Tree {
        resolve_seed(&spec).unwrap()
    }

    #[test]
    fn uniform_index_is_uniform() {
        let mut rng = substream(5, 0);
        let mut counts = [0u32; 6];
        for _ in 0..60_000 {
            counts[uniform_index(&mut rng, 6)] += 1;
        }
        // each cell ~ Binomial(60000, 1/6): sd ~ 91
        assert!(counts.iter().all(|&c| (c as i64 - 10_000).abs() < 500), "{counts:?}");
        assert_eq!(uniform_index(&mut rng, 1), 0);
    }

    #[test]
    fn trivial_walks() {
        let edge = seed(SeedSpec::Edge);
        let mut rng = substream(1, 0);
        assert_eq!(sample_hitting(&edge, 0, 0, &mut rng, 10), Ok(0));
        assert_eq!(sample_hitting(&edge, 0, 1, &mut rng, 10), Ok(1));
        let path6 = seed(SeedSpec::Path(6));
        for _ in 0..100 {
            assert_eq!(sample_hitting(&path6, 0, 1, &mut rng, 10), Ok(1));
            assert_eq!(sample_hitting(&path6, 5, 4, &mut rng, 10), Ok(1));
        }
    }

    #[test]
    fn step_cap_aborts() {
        let path6 = seed(SeedSpec::Path(6));
        let mut rng = substream(1, 0);
        assert_eq!(
            sample_hitting(&path6, 0, 5, &mut rng, 3),
            Err(WalkError::StepCapExceeded(3))
        );
        let est = estimate_hitting(
            &path6,
            0,
            5,
            50,
            9,
            &WalkConfig {
                step_cap: 5,
                workers: None,
            },
        )
        .unwrap();
        assert!(est.truncated_count > 0);
        assert!(!est.is_valid());
        assert_eq!(est.samples + est.truncated_count, 50);
    }

    #[test]
    fn edge_estimates_are_exact() {
        let edge = seed(SeedSpec::Edge);
        let est = estimate_hitting(&edge, 0, 1, 10_000, 3, &WalkConfig::default()).unwrap();
        assert_eq!((est.mean, est.std_error, est.samples), (1.0, 0.0, 10_000));
        let est = estimate_mean_hitting(&edge, 100, 3, 3, &WalkConfig::default()).unwrap();
        assert_eq!((est.mean, est.std_error), (1.0, 0.0));
        assert_eq!(est.z_score(1.0), Some(0.0));
    }

    #[test]
    fn path_pair_estimate() {
        let path6 = seed(SeedSpec::Path(6));
        let est = estimate_hitting(&path6, 1, 0, 100_000, 42, &WalkConfig::default()).unwrap();
        assert!(est.z_score(9.0).unwrap() < 3.0, "{est:?}");
    }

    #[test]
    fn grown_tree_pairs() {
        let tree = grow(&GrowthModel::new(Operator::Phi, 2, SeedSpec::Edge), DEFAULT_VERTEX_BUDGET).unwrap();
        let exact = HittingTimes::new(&tree);
        for (i, (u, v)) in [(0, 1), (25, 4), (7, 19), (12, 0)].into_iter().enumerate() {
            let est = estimate_hitting(&tree, u, v, 20_000, 100 + i as u64, &WalkConfig::default()).unwrap();
            let h = exact.between(u, v).unwrap() as f64;
            assert!(est.z_score(h).unwrap() < 3.0, "{u}->{v}: {est:?} vs {h}");
        }
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let tree = grow(&GrowthModel::new(Operator::Phi, 2, SeedSpec::Edge), DEFAULT_VERTEX_BUDGET).unwrap();
        let one = WalkConfig {
            step_cap: DEFAULT_STEP_CAP,
            workers: Some(1),
        };
        let three = WalkConfig {
            workers: Some(3),
            ..one
        };
        let a = estimate_mean_hitting(&tree, 500, 4, 77, &one).unwrap();
        let b = estimate_mean_hitting(&tree, 500, 4, 77, &one).unwrap();
        let c = estimate_mean_hitting(&tree, 500, 4, 77, &three).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = estimate_mean_hitting(&tree, 500, 4, 78, &one).unwrap();
        assert_ne!(a.mean, d.mean);
        let e = estimate_hitting(&tree, 3, 9, 5000, 5, &one).unwrap();
        let f = estimate_hitting(&tree, 3, 9, 5000, 5, &three).unwrap();
        assert_eq!(e, f);
    }

    #[test]
    fn argument_errors() {
        let edge = seed(SeedSpec::Edge);
        let cfg = WalkConfig::default();
        assert_eq!(
            estimate_hitting(&edge, 0, 1, 0, 1, &cfg),
            Err(WalkError::ZeroSamples("samples"))
        );
        assert_eq!(
            estimate_hitting(&edge, 0, 2, 1, 1, &cfg),
            Err(WalkError::IndexOutOfRange { vertex: 2, n: 2 })
        );
        assert_eq!(
            estimate_mean_hitting(&edge, 1, 0, 1, &cfg),
            Err(WalkError::ZeroSamples("walks_per_pair"))
        );
    }
}
