//! Exact closed-form predictions for trees grown by Φ and Φ*.
//!
//! Vertex counts and Wiener indices are arbitrary-precision integers; the
//! mean hitting time is an exact rational. Nothing here builds a graph.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use crate::tree::Tree;

/// Exact degree → vertex-count map.
pub type DegreeCensus = BTreeMap<BigUint, BigUint>;

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

/// `5^t (n0 − 1) + 1`; shared by Φ and Φ*.
pub fn vertex_count(n0: u64, t: u32) -> BigUint {
    assert!(n0 >= 2, "seed needs at least two vertices");
    big(5).pow(t) * big(n0 - 1) + 1u32
}

/// `3^t (d0 + 1) − 1`, from `D_t = 3 D_{t−1} + 2`.
pub fn diameter_phi(d0: u64, t: u32) -> BigUint {
    assert!(d0 >= 1, "seed diameter is at least one");
    big(3).pow(t) * big(d0 + 1) - 1u32
}

/// `d0 + 2t`.
pub fn diameter_phi_star(d0: u64, t: u32) -> BigUint {
    assert!(d0 >= 1, "seed diameter is at least one");
    big(d0) + big(2 * t as u64)
}

/// Smallest Wiener index of a tree on `n0` vertices (the star).
fn min_wiener(n0: u64) -> BigUint {
    big(n0 - 1) * big(n0 - 1)
}

/// Iterates `W_t = 75 W_{t−1} − 20 n_{t−1}² + 20 n_{t−1}` from the seed's
/// Wiener index `w0` and vertex count `n0`.
///
/// Panics if `w0` is below `(n0 − 1)²`, which no tree on `n0` vertices has.
pub fn wiener_recurrence(w0: &BigUint, n0: u64, t: u32) -> BigUint {
    assert!(n0 >= 2, "seed needs at least two vertices");
    assert!(
        *w0 >= min_wiener(n0),
        "w0 = {w0} is not the Wiener index of a tree on {n0} vertices"
    );
    let mut w = w0.clone();
    let mut n = big(n0);
    for _ in 0..t {
        let n_minus_one = &n - 1u32;
        w = w * 75u32 - (&n * &n_minus_one) * 20u32;
        n = n_minus_one * 5u32 + 1u32;
    }
    w
}

/// Mean hitting time of Φ-grown trees, evaluated directly from the closed
/// form in `5^t`, `15^t` and `75^t` (no recurrence):
///
/// `⟨H_t⟩ = 2/n_t · { 75^t W0 − 4·5^t [ (15^t − 5^t)/10 · m² + (15^t − 1)/14 · m ] }`
/// with `m = n0 − 1`.
pub fn mean_hitting_closed(w0: &BigUint, n0: u64, t: u32) -> BigRational {
    assert!(n0 >= 2, "seed needs at least two vertices");
    let int = |x: BigUint| BigRational::from_integer(BigInt::from(x));
    let m = int(big(n0 - 1));
    let p5 = int(big(5).pow(t));
    let p15 = int(big(15).pow(t));
    let p75 = int(big(75).pow(t));
    let one = BigRational::one();

    let bracket = (&p15 - &p5) / int(big(10)) * &m * &m + (&p15 - &one) / int(big(14)) * &m;
    let wiener = p75 * int(w0.clone()) - int(big(4)) * &p5 * bracket;
    let n_t = p5 * m + one;
    let value = int(big(2)) * wiener / n_t;
    debug_assert_eq!(
        value,
        BigRational::new(
            BigInt::from(wiener_recurrence(w0, n0, t) * 2u32),
            BigInt::from(vertex_count(n0, t))
        )
    );
    value
}

fn add_count(census: &mut DegreeCensus, degree: BigUint, count: BigUint) {
    if count.is_zero() {
        return;
    }
    *census.entry(degree).or_insert_with(BigUint::zero) += count;
}

fn seed_census(seed: &Tree, factor: &BigUint, census: &mut DegreeCensus) {
    let mut seed_degrees: BTreeMap<usize, u64> = BTreeMap::new();
    for k in seed.degrees() {
        *seed_degrees.entry(k).or_default() += 1;
    }
    for (k, count) in seed_degrees {
        add_count(census, big(k as u64) * factor, big(count));
    }
}

/// Predicted degree census of `Φ^t(seed)`.
///
/// A seed vertex of degree `k` ends at `k·2^t`; the `2(n_{j−1} − 1)`
/// subdivision vertices born at step `j` end at `2^{t−j+1}`, and the same
/// number of leaves born at step `j` end at `2^{t−j}`.
pub fn degree_census_phi(seed: &Tree, t: u32) -> DegreeCensus {
    let n0 = seed.vertex_count() as u64;
    let mut census = DegreeCensus::new();
    seed_census(seed, &big(2).pow(t), &mut census);
    for j in 1..=t {
        let cohort = (vertex_count(n0, j - 1) - 1u32) * 2u32;
        add_count(&mut census, big(2).pow(t - j + 1), cohort.clone());
        add_count(&mut census, big(2).pow(t - j), cohort);
    }
    census
}

/// Predicted degree census of `Φ*^t(seed)`: every vertex born at step `j`
/// is a leaf at birth and ends at degree `3^{t−j}`.
pub fn degree_census_phi_star(seed: &Tree, t: u32) -> DegreeCensus {
    let n0 = seed.vertex_count() as u64;
    let mut census = DegreeCensus::new();
    seed_census(seed, &big(3).pow(t), &mut census);
    for j in 1..=t {
        let cohort = (vertex_count(n0, j - 1) - 1u32) * 4u32;
        add_count(&mut census, big(3).pow(t - j), cohort);
    }
    census
}

/// Asymptotic exponents implied by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExponentSet {
    /// Cumulative degree exponent of Φ trees, `ln5/ln2`.
    pub gamma: f64,
    /// Cumulative degree exponent of Φ* trees, `ln5/ln3`.
    pub gamma_star: f64,
    /// Mean-hitting-time exponent of Φ trees, `1 + ln3/ln5`.
    pub chi: f64,
    /// Diameter exponent of Φ trees, `ln3/ln5`.
    pub diameter_exponent: f64,
    /// Mean-hitting-time exponent of Φ* trees; holds only up to a `ln n`
    /// factor, see `chi_star_has_log_factor`.
    pub chi_star: f64,
    pub chi_star_has_log_factor: bool,
}

pub fn predicted_exponents() -> ExponentSet {
    let (ln2, ln3, ln5) = (2f64.ln(), 3f64.ln(), 5f64.ln());
    let diameter_exponent = ln3 / ln5;
    ExponentSet {
        gamma: ln5 / ln2,
        gamma_star: ln5 / ln3,
        chi: 1.0 + diameter_exponent,
        diameter_exponent,
        chi_star: 1.0,
        chi_star_has_log_factor: true,
    }
}

/// Seed measurements a closed-form series starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedParams {
    pub n0: u64,
    pub d0: u64,
    pub w0: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesRow {
    pub t: u32,
    pub n: BigUint,
    pub diameter: BigUint,
    /// Absent for Φ*, which has no exact Wiener closed form.
    pub wiener: Option<BigUint>,
    pub mean_hitting: Option<BigRational>,
}

/// Closed-form values for `t = 0..=t_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSeries {
    pub seed: SeedParams,
    pub rows: Vec<SeriesRow>,
}

impl ExactSeries {
    pub fn phi(seed: SeedParams, t_max: u32) -> Self {
        let rows = (0..=t_max)
            .map(|t| SeriesRow {
                t,
                n: vertex_count(seed.n0, t),
                diameter: diameter_phi(seed.d0, t),
                wiener: Some(wiener_recurrence(&seed.w0, seed.n0, t)),
                mean_hitting: Some(mean_hitting_closed(&seed.w0, seed.n0, t)),
            })
            .collect();
        ExactSeries { seed, rows }
    }

    /// Φ* rows carry `n` and `D` only; `t = 0` also echoes the seed's W.
    pub fn phi_star(seed: SeedParams, t_max: u32) -> Self {
        let rows = (0..=t_max)
            .map(|t| {
                let seed_row = t == 0;
                SeriesRow {
                    t,
                    n: vertex_count(seed.n0, t),
                    diameter: diameter_phi_star(seed.d0, t),
                    wiener: seed_row.then(|| seed.w0.clone()),
                    mean_hitting: seed_row.then(|| {
                        BigRational::new(
                            BigInt::from(seed.w0.clone() * 2u32),
                            BigInt::from(seed.n0),
                        )
                    }),
                }
            })
            .collect();
        ExactSeries { seed, rows }
    }
}
