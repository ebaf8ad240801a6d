//! Measurement reports pairing empirical metrics with closed-form
//! predictions, and their JSON rendering.
//!
//! JSON conventions: exact integers are decimal strings, exact rationals are
//! `{"num": "...", "den": "..."}` objects.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::closed_form::{self, DegreeCensus, SeedParams};
use crate::growth::Operator;
use crate::metrics::{self, CumulativePoint, Diameter};
use crate::tree::Tree;

/// Closed-form expectations for `operator^t(seed)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub operator: Operator,
    pub steps: u32,
    pub n: BigUint,
    pub diameter: BigUint,
    /// Only Φ has an exact Wiener closed form.
    pub wiener: Option<BigUint>,
    pub mean_hitting: Option<BigRational>,
    pub degree_census: DegreeCensus,
}

/// `n0`, `D0` and `W0` measured on a seed tree.
pub fn seed_params(seed: &Tree) -> SeedParams {
    SeedParams {
        n0: seed.vertex_count() as u64,
        d0: metrics::diameter_double_bfs(seed).length,
        w0: metrics::wiener_linear(seed),
    }
}

pub fn predict(seed: &Tree, operator: Operator, steps: u32) -> Prediction {
    let p = seed_params(seed);
    match operator {
        Operator::Phi => Prediction {
            operator,
            steps,
            n: closed_form::vertex_count(p.n0, steps),
            diameter: closed_form::diameter_phi(p.d0, steps),
            wiener: Some(closed_form::wiener_recurrence(&p.w0, p.n0, steps)),
            mean_hitting: Some(closed_form::mean_hitting_closed(&p.w0, p.n0, steps)),
            degree_census: closed_form::degree_census_phi(seed, steps),
        },
        Operator::PhiStar => Prediction {
            operator,
            steps,
            n: closed_form::vertex_count(p.n0, steps),
            diameter: closed_form::diameter_phi_star(p.d0, steps),
            wiener: None,
            mean_hitting: None,
            degree_census: closed_form::degree_census_phi_star(seed, steps),
        },
    }
}

/// Measured minus predicted, per metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deltas {
    pub n: BigInt,
    pub diameter: BigInt,
    pub wiener: Option<BigInt>,
    pub mean_hitting: Option<BigRational>,
    pub degree_census_matches: bool,
}

impl Deltas {
    pub fn all_zero(&self) -> bool {
        self.n.is_zero()
            && self.diameter.is_zero()
            && self.wiener.as_ref().is_none_or(Zero::is_zero)
            && self.mean_hitting.as_ref().is_none_or(Zero::is_zero)
            && self.degree_census_matches
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub k_min: usize,
    pub k_max: usize,
    pub exponent: Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub edge_count: usize,
    pub diameter: Diameter,
    pub wiener: BigUint,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub cumulative_points: Vec<CumulativePoint>,
    pub mean_hitting: BigRational,
    pub fit: Option<PowerLawFit>,
    pub prediction: Option<Prediction>,
    pub closed_form_deltas: Option<Deltas>,
}

/// Converts an observed histogram into the census key type.
pub fn census_from_histogram(hist: &BTreeMap<usize, usize>) -> DegreeCensus {
    hist.iter()
        .map(|(&k, &c)| (BigUint::from(k), BigUint::from(c)))
        .collect()
}

fn signed(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}

/// Measures `tree`; when `prediction` is given, every exact metric is paired
/// with its delta. `fit_window` defaults to [`metrics::default_fit_window`].
pub fn analyze(tree: &Tree, prediction: Option<Prediction>, fit_window: Option<(usize, usize)>) -> MetricsReport {
    let degree_histogram = metrics::degree_histogram(tree);
    let cumulative_points = metrics::cumulative_from_histogram(&degree_histogram);
    let wiener = metrics::wiener_linear(tree);
    let n = tree.vertex_count();
    let mean_hitting = BigRational::new(signed(&wiener) * 2, BigInt::from(n));
    let diameter = metrics::diameter_double_bfs(tree);

    let fit = fit_window
        .or_else(|| metrics::default_fit_window(&degree_histogram))
        .map(|(k_min, k_max)| {
            let points: Vec<(f64, f64)> = cumulative_points
                .iter()
                .map(|p| (p.degree as f64, p.fraction))
                .collect();
            PowerLawFit {
                k_min,
                k_max,
                exponent: metrics::fit_powerlaw_exponent(&points, k_min as f64, k_max as f64)
                    .map_err(|e| e.to_string()),
            }
        });

    let closed_form_deltas = prediction.as_ref().map(|p| Deltas {
        n: BigInt::from(n) - signed(&p.n),
        diameter: BigInt::from(diameter.length) - signed(&p.diameter),
        wiener: p.wiener.as_ref().map(|w| signed(&wiener) - signed(w)),
        mean_hitting: p.mean_hitting.as_ref().map(|h| &mean_hitting - h),
        degree_census_matches: census_from_histogram(&degree_histogram) == p.degree_census,
    });

    MetricsReport {
        n,
        edge_count: tree.edge_count(),
        diameter,
        wiener,
        degree_histogram,
        cumulative_points,
        mean_hitting,
        fit,
        prediction,
        closed_form_deltas,
    }
}

pub fn exact_int<T: ToString>(x: &T) -> Value {
    Value::String(x.to_string())
}

pub fn exact_ratio(r: &BigRational) -> Value {
    json!({ "num": r.numer().to_string(), "den": r.denom().to_string() })
}

/// Renders `r` in plain decimal notation with `significant` significant
/// digits (integers with more digits are printed in full), rounding half
/// away from zero.
pub fn decimal(r: &BigRational, significant: usize) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = r.abs();
    let int_part = abs.to_integer();
    let int_digits = if int_part.is_zero() { 0 } else { int_part.to_string().len() };
    let frac_digits = if int_digits >= significant {
        0
    } else if int_digits > 0 {
        significant - int_digits
    } else {
        // leading zeros after the decimal point do not count
        let mut zeros = 0;
        let mut scaled = abs.clone() * BigInt::from(10);
        while scaled < BigRational::from_integer(BigInt::from(1)) {
            zeros += 1;
            scaled *= BigInt::from(10);
        }
        zeros + significant
    };
    let scale = BigInt::from(10).pow(frac_digits as u32);
    let scaled = abs * BigRational::from_integer(scale);
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let rounded = if rem * 2 >= *scaled.denom() { q + 1 } else { q };
    let digits = rounded.to_string();
    if frac_digits == 0 {
        return format!("{sign}{digits}");
    }
    let digits = format!("{digits:0>width$}", width = frac_digits + 1);
    let (whole, frac) = digits.split_at(digits.len() - frac_digits);
    format!("{sign}{whole}.{frac}")
}

/// Natural logarithm of a nonnegative big integer, accurate for values far
/// beyond the `f64` range.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn rational_ln(r: &BigRational) -> f64 {
    big_ln(&r.numer().magnitude().clone()) - big_ln(&r.denom().magnitude().clone())
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    rational_ln(r).exp() * if r.is_negative() { -1.0 } else { 1.0 }
}

fn census_json(c: &DegreeCensus) -> Value {
    Value::Array(
        c.iter()
            .map(|(k, n)| json!({ "degree": k.to_string(), "count": n.to_string() }))
            .collect(),
    )
}

impl MetricsReport {
    pub fn to_json(&self) -> Value {
        let histogram: Vec<Value> = self
            .degree_histogram
            .iter()
            .map(|(k, c)| json!({ "degree": k, "count": c }))
            .collect();
        let cumulative: Vec<Value> = self
            .cumulative_points
            .iter()
            .map(|p| json!({ "degree": p.degree, "at_least": p.at_least, "p_cum": p.fraction }))
            .collect();
        let fit = self.fit.as_ref().map(|f| match &f.exponent {
            Ok(e) => json!({ "k_min": f.k_min, "k_max": f.k_max, "exponent": e }),
            Err(msg) => json!({ "k_min": f.k_min, "k_max": f.k_max, "error": msg }),
        });
        let prediction = self.prediction.as_ref().map(|p| {
            json!({
                "model": p.operator.as_str(),
                "steps": p.steps,
                "n": exact_int(&p.n),
                "diameter": exact_int(&p.diameter),
                "wiener": p.wiener.as_ref().map(exact_int),
                "mean_hitting": p.mean_hitting.as_ref().map(exact_ratio),
                "degree_census": census_json(&p.degree_census),
            })
        });
        let deltas = self.closed_form_deltas.as_ref().map(|d| {
            json!({
                "n": exact_int(&d.n),
                "diameter": exact_int(&d.diameter),
                "wiener": d.wiener.as_ref().map(exact_int),
                "mean_hitting": d.mean_hitting.as_ref().map(exact_ratio),
                "degree_census_matches": d.degree_census_matches,
                "all_zero": d.all_zero(),
            })
        });
        json!({
            "n": self.n,
            "edge_count": self.edge_count,
            "diameter": self.diameter.length,
            "diameter_endpoints": [self.diameter.endpoints.0, self.diameter.endpoints.1],
            "wiener": exact_int(&self.wiener),
            "mean_hitting": exact_ratio(&self.mean_hitting),
            "mean_hitting_decimal": decimal(&self.mean_hitting, 12),
            "degree_histogram": histogram,
            "cumulative_points": cumulative,
            "fit": fit,
            "prediction": prediction,
            "closed_form_deltas": deltas,
        })
    }
}
