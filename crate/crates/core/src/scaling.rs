//! Scaling sweeps over growth steps: closed-form rows for any `t`,
//! empirical rows for trees small enough to build, optional Monte Carlo
//! estimates, and log-log slopes against the vertex count.

use std::io::Write;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::closed_form::{self, ExactSeries};
use crate::growth::{grow_step, GrowthError, Operator};
use crate::metrics::{self, ols_slope};
use crate::report::{big_ln, decimal, rational_ln, rational_to_f64, seed_params};
use crate::tree::Tree;
use crate::walk::{estimate_mean_hitting, WalkConfig, WalkError, WalkEstimate};

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub operator: Operator,
    pub t_min: u32,
    pub t_max: u32,
    /// Largest `t` for which the tree is built and measured.
    pub empirical_max: Option<u32>,
    /// Largest `t` for which Monte Carlo walks are run.
    pub monte_carlo_max: Option<u32>,
    pub pairs: u64,
    pub walks_per_pair: u64,
    /// Row `t` uses master seed `rng_seed + t`.
    pub rng_seed: u64,
    pub walk: WalkConfig,
    /// Rows included in the slope regressions; defaults to all rows.
    pub fit_t_min: Option<u32>,
    pub fit_t_max: Option<u32>,
    pub vertex_budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRow {
    pub n: usize,
    pub diameter: u64,
    pub wiener: BigUint,
    pub mean_hitting: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub t: u32,
    pub n: BigUint,
    pub diameter: BigUint,
    pub wiener: Option<BigUint>,
    pub mean_hitting: Option<BigRational>,
    pub empirical: Option<EmpiricalRow>,
    pub monte_carlo: Option<WalkEstimate>,
    /// Increment of `ln⟨H⟩` over `ln n` from the previous row.
    pub dlog_h_dlog_n: Option<f64>,
    pub dlog_d_dlog_n: Option<f64>,
}

impl ScalingRow {
    /// Closed-form mean hitting time when one exists, else the measured one.
    pub fn best_mean_hitting(&self) -> Option<&BigRational> {
        self.mean_hitting
            .as_ref()
            .or(self.empirical.as_ref().map(|e| &e.mean_hitting))
    }

    pub fn monte_carlo_z_score(&self) -> Option<f64> {
        let exact = rational_to_f64(self.best_mean_hitting()?);
        self.monte_carlo?.z_score(exact)
    }

    pub fn monte_carlo_relative_error(&self) -> Option<f64> {
        let exact = rational_to_f64(self.best_mean_hitting()?);
        Some((self.monte_carlo?.mean - exact).abs() / exact)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub operator: Operator,
    pub rows: Vec<ScalingRow>,
    pub fit_t_min: u32,
    pub fit_t_max: u32,
    pub slope_log_h: Option<f64>,
    pub slope_log_d: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScalingError {
    #[error("invalid sweep: {0}")]
    Config(String),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

pub fn run_sweep(seed: &Tree, config: &ScalingConfig) -> Result<ScalingTable, ScalingError> {
    if config.t_min > config.t_max {
        return Err(ScalingError::Config(format!(
            "t-min {} exceeds t-max {}",
            config.t_min, config.t_max
        )));
    }
    let params = seed_params(seed);
    let series = match config.operator {
        Operator::Phi => ExactSeries::phi(params, config.t_max),
        Operator::PhiStar => ExactSeries::phi_star(params, config.t_max),
    };
    let empirical_max = config.empirical_max.map(|e| e.min(config.t_max));

    let mut tree = seed.clone();
    let mut built = 0u32;
    let mut rows: Vec<ScalingRow> = Vec::new();
    for exact in series.rows.into_iter().filter(|r| r.t >= config.t_min) {
        let t = exact.t;
        let mut empirical = None;
        let mut monte_carlo = None;
        if empirical_max.is_some_and(|e| t <= e) {
            while built < t {
                built += 1;
                tree = grow_step(&tree, config.operator, built, config.vertex_budget)?;
            }
            let wiener = metrics::wiener_linear(&tree);
            let n = tree.vertex_count();
            empirical = Some(EmpiricalRow {
                n,
                diameter: metrics::diameter_double_bfs(&tree).length,
                mean_hitting: BigRational::new(BigInt::from(wiener.clone()) * 2, BigInt::from(n)),
                wiener,
            });
            if config.monte_carlo_max.is_some_and(|m| t <= m) {
                monte_carlo = Some(estimate_mean_hitting(
                    &tree,
                    config.pairs,
                    config.walks_per_pair,
                    config.rng_seed.wrapping_add(t as u64),
                    &config.walk,
                )?);
            }
        }
        let mut row = ScalingRow {
            t,
            n: exact.n,
            diameter: exact.diameter,
            wiener: exact.wiener,
            mean_hitting: exact.mean_hitting,
            empirical,
            monte_carlo,
            dlog_h_dlog_n: None,
            dlog_d_dlog_n: None,
        };
        if let Some(prev) = rows.last() {
            let dn = big_ln(&row.n) - big_ln(&prev.n);
            row.dlog_d_dlog_n = Some((big_ln(&row.diameter) - big_ln(&prev.diameter)) / dn);
            if let (Some(h), Some(h_prev)) = (row.best_mean_hitting(), prev.best_mean_hitting()) {
                row.dlog_h_dlog_n = Some((rational_ln(h) - rational_ln(h_prev)) / dn);
            }
        }
        rows.push(row);
    }

    let fit_t_min = config.fit_t_min.unwrap_or(config.t_min);
    let fit_t_max = config.fit_t_max.unwrap_or(config.t_max);
    let in_window = |r: &&ScalingRow| r.t >= fit_t_min && r.t <= fit_t_max;
    let h_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(in_window)
        .filter_map(|r| Some((big_ln(&r.n), rational_ln(r.best_mean_hitting()?))))
        .collect();
    let d_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(in_window)
        .map(|r| (big_ln(&r.n), big_ln(&r.diameter)))
        .collect();
    let slope = |pts: &[(f64, f64)]| (pts.len() >= 2).then(|| ols_slope(pts));

    Ok(ScalingTable {
        operator: config.operator,
        slope_log_h: slope(&h_points),
        slope_log_d: slope(&d_points),
        rows,
        fit_t_min,
        fit_t_max,
    })
}

pub const CSV_HEADER: [&str; 15] = [
    "t",
    "n",
    "diameter",
    "wiener",
    "mean_hitting",
    "empirical_n",
    "empirical_diameter",
    "empirical_wiener",
    "empirical_mean_hitting",
    "mc_mean_hitting",
    "mc_std_error",
    "mc_samples",
    "mc_z_score",
    "dlog_h_dlog_n",
    "dlog_d_dlog_n",
];

fn float(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.15e}")).unwrap_or_default()
}

impl ScalingTable {
    /// Writes the table as CSV followed by `#`-prefixed footer lines with
    /// the fitted slopes and their predicted values.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let e = r.empirical.as_ref();
            writer.write_record([
                r.t.to_string(),
                r.n.to_string(),
                r.diameter.to_string(),
                r.wiener.as_ref().map(ToString::to_string).unwrap_or_default(),
                r.mean_hitting.as_ref().map(|h| decimal(h, 15)).unwrap_or_default(),
                e.map(|e| e.n.to_string()).unwrap_or_default(),
                e.map(|e| e.diameter.to_string()).unwrap_or_default(),
                e.map(|e| e.wiener.to_string()).unwrap_or_default(),
                e.map(|e| decimal(&e.mean_hitting, 15)).unwrap_or_default(),
                float(r.monte_carlo.map(|m| m.mean)),
                float(r.monte_carlo.map(|m| m.std_error)),
                r.monte_carlo.map(|m| m.samples.to_string()).unwrap_or_default(),
                float(r.monte_carlo_z_score()),
                float(r.dlog_h_dlog_n),
                float(r.dlog_d_dlog_n),
            ])?;
        }
        let mut out = writer.into_inner().map_err(|e| e.into_error())?;
        let exponents = closed_form::predicted_exponents();
        let expected_h = match self.operator {
            Operator::Phi => exponents.chi,
            Operator::PhiStar => exponents.chi_star,
        };
        writeln!(out, "# fit_window,{},{}", self.fit_t_min, self.fit_t_max)?;
        writeln!(out, "# slope_log_h_vs_log_n,{},{expected_h:.15e}", float(self.slope_log_h))?;
        if self.operator == Operator::Phi {
            writeln!(
                out,
                "# slope_log_d_vs_log_n,{},{:.15e}",
                float(self.slope_log_d),
                exponents.diameter_exponent
            )?;
        } else {
            writeln!(out, "# slope_log_d_vs_log_n,{},", float(self.slope_log_d))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::DEFAULT_VERTEX_BUDGET;
    use crate::tree::{resolve_seed, SeedSpec};

    fn config(operator: Operator, t_min: u32, t_max: u32) -> ScalingConfig {
        ScalingConfig {
            operator,
            t_min,
            t_max,
            empirical_max: None,
            monte_carlo_max: None,
            pairs: 100,
            walks_per_pair: 1,
            rng_seed: 0,
            walk: WalkConfig::default(),
            fit_t_min: None,
            fit_t_max: None,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        }
    }

    #[test]
    fn closed_form_rows_need_no_trees() {
        let seed = resolve_seed(&SeedSpec::Edge).unwrap();
        let table = run_sweep(&seed, &config(Operator::Phi, 0, 40)).unwrap();
        assert_eq!(table.rows.len(), 41);
        assert!(table.rows.iter().all(|r| r.empirical.is_none()));
        assert_eq!(table.rows[2].wiener, Some(BigUint::from(2025u32)));
        assert!(table.rows[0].dlog_h_dlog_n.is_none());
        assert!(table.rows[40].dlog_h_dlog_n.is_some());
    }

    #[test]
    fn empirical_rows_match_closed_forms() {
        let seed = resolve_seed(&SeedSpec::Path(3)).unwrap();
        let mut cfg = config(Operator::Phi, 0, 4);
        cfg.empirical_max = Some(3);
        let table = run_sweep(&seed, &cfg).unwrap();
        for row in &table.rows[..4] {
            let e = row.empirical.as_ref().unwrap();
            assert_eq!(BigUint::from(e.n), row.n);
            assert_eq!(BigUint::from(e.diameter), row.diameter);
            assert_eq!(Some(&e.wiener), row.wiener.as_ref());
        }
        assert!(table.rows[4].empirical.is_none());
    }

    #[test]
    fn csv_layout() {
        let seed = resolve_seed(&SeedSpec::Edge).unwrap();
        let mut cfg = config(Operator::Phi, 0, 2);
        cfg.empirical_max = Some(2);
        cfg.monte_carlo_max = Some(1);
        let table = run_sweep(&seed, &cfg).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("0,2,1,1,1.00000000000000,2,1,1,"));
        assert!(lines[2].starts_with("1,6,5,35,11.6666666666667,6,5,35,11.6666666666667,"));
        assert!(lines[3].starts_with("2,26,17,2025,155.769230769231,26,17,2025,"));
        assert!(lines[3].split(',').nth(9).unwrap().is_empty());
        assert!(lines[4].starts_with("# fit_window,0,2"));
        assert!(lines[5].starts_with("# slope_log_h_vs_log_n,"));
    }

    #[test]
    fn phi_star_uses_measured_hitting() {
        let seed = resolve_seed(&SeedSpec::Edge).unwrap();
        let mut cfg = config(Operator::PhiStar, 1, 3);
        cfg.empirical_max = Some(3);
        let table = run_sweep(&seed, &cfg).unwrap();
        assert!(table.rows.iter().all(|r| r.wiener.is_none()));
        assert_eq!(table.rows[0].empirical.as_ref().unwrap().wiener, BigUint::from(29u32));
        assert!(table.slope_log_h.is_some());
    }

    #[test]
    fn inverted_range_is_rejected() {
        let seed = resolve_seed(&SeedSpec::Edge).unwrap();
        assert!(matches!(
            run_sweep(&seed, &config(Operator::Phi, 3, 2)),
            Err(ScalingError::Config(_))
        ));
    }
}
