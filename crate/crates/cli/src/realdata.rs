//! Real-network pipeline: for each network choose `q` by the double
//! bootstrap, report a 90% interval for the normalized triangle density, then
//! regress the point estimates on network size and on log edge density.
//!
//! `realdata_<scheme>.csv` columns: name, n, edge_density, t_hat, ci_lower,
//! ci_upper, chosen_q, frac_degenerate, resid_n, resid_log_rho.
//! `realdata_<scheme>_ols.csv` columns: regressor, slope, intercept.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use netboot::bootstrap::{bootstrap_ci, choose_q, SelectionSize};
use netboot::rng::labels;
use netboot::statistics::{edge_density, TriangleDensity};
use netboot::{Graph, Resampler, Scheme, Statistic, Stream};

use crate::config::ExperimentConfig;
use crate::{write_csv, HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// In input order.
    pub residuals: Vec<f64>,
}

/// Least-squares line `y ≈ intercept + slope·x`.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(HarnessError::DegenerateDesign(
            "x and y differ in length".into(),
        ));
    }
    if x.len() < 3 {
        return Err(HarnessError::DegenerateDesign(format!(
            "{} points, need at least 3",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * x.iter().map(|v| v * v).sum::<f64>() {
        return Err(HarnessError::DegenerateDesign("constant regressor".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - intercept - slope * a)
        .collect();
    Ok(OlsFit {
        slope,
        intercept,
        residuals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkRow {
    pub name: String,
    pub n: usize,
    pub edge_density: f64,
    pub t_hat: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub chosen_q: f64,
    pub frac_degenerate: f64,
    pub resid_n: Option<f64>,
    pub resid_log_rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealDataReport {
    pub networks: Vec<NetworkRow>,
    /// `T̂` on `n` (or `log n`); absent with fewer than three networks.
    pub fit_n: Option<OlsFit>,
    pub fit_log_rho: Option<OlsFit>,
    pub degenerate_runs: usize,
}

#[derive(Serialize)]
struct FitRow {
    regressor: &'static str,
    slope: f64,
    intercept: f64,
}

impl RealDataReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_csv(path, &self.networks)
    }

    pub fn write_fits(&self, path: &Path) -> Result<()> {
        let rows: Vec<FitRow> = [("n", &self.fit_n), ("log_edge_density", &self.fit_log_rho)]
            .into_iter()
            .filter_map(|(regressor, fit)| {
                fit.as_ref().map(|f| FitRow {
                    regressor,
                    slope: f.slope,
                    intercept: f.intercept,
                })
            })
            .collect();
        write_csv(path, &rows)
    }
}

/// Interval for one network at the `q` chosen by the double bootstrap.
fn analyze_one(
    name: &str,
    g: &Graph,
    scheme: Scheme,
    config: &ExperimentConfig,
    stream: Stream,
) -> Result<(NetworkRow, bool)> {
    let stat = TriangleDensity {
        estimator: config.estimator,
    };
    let t_hat = stat.evaluate_full(g)?.value();
    let size = SelectionSize {
        outer: config.b,
        inner: config.b_inner(),
    };
    let selection = choose_q(
        g,
        &stat,
        scheme,
        &config.candidates,
        size,
        config.alpha,
        stream.derive(labels::SELECTION),
    )?;
    let run = bootstrap_ci(
        g,
        &stat,
        Resampler::plan(scheme, selection.chosen)?,
        config.b,
        config.alpha,
        stream.derive(labels::REPLICATE),
    )?;
    let row = NetworkRow {
        name: name.to_string(),
        n: g.n(),
        edge_density: edge_density(g)?,
        t_hat,
        ci_lower: run.ci().lower,
        ci_upper: run.ci().upper,
        chosen_q: selection.chosen,
        frac_degenerate: run.degenerate_fraction(),
        resid_n: None,
        resid_log_rho: None,
    };
    Ok((row, run.degenerate_run))
}

pub fn analyze_networks(
    graphs: &[(String, Graph)],
    scheme: Scheme,
    config: &ExperimentConfig,
    stream: Stream,
) -> Result<RealDataReport> {
    let results = graphs
        .par_iter()
        .enumerate()
        .map(|(i, (name, g))| analyze_one(name, g, scheme, config, stream.derive(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let degenerate_runs = results.iter().filter(|(_, d)| *d).count();
    let mut networks: Vec<NetworkRow> = results.into_iter().map(|(row, _)| row).collect();

    let (mut fit_n, mut fit_log_rho) = (None, None);
    if networks.len() >= 3 {
        let t: Vec<f64> = networks.iter().map(|r| r.t_hat).collect();
        let sizes: Vec<f64> = networks
            .iter()
            .map(|r| {
                if config.log_n {
                    (r.n as f64).ln()
                } else {
                    r.n as f64
                }
            })
            .collect();
        let log_rho: Vec<f64> = networks.iter().map(|r| r.edge_density.ln()).collect();
        fit_n = ols_fit(&sizes, &t).ok();
        fit_log_rho = if log_rho.iter().all(|v| v.is_finite()) {
            ols_fit(&log_rho, &t).ok()
        } else {
            None
        };
        for (k, row) in networks.iter_mut().enumerate() {
            row.resid_n = fit_n.as_ref().map(|f| f.residuals[k]);
            row.resid_log_rho = fit_log_rho.as_ref().map(|f| f.residuals[k]);
        }
    }
    Ok(RealDataReport {
        networks,
        fit_n,
        fit_log_rho,
        degenerate_runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let fit = ols_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn constant_response() {
        let fit = ols_fit(&[1.0, 5.0, 2.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn hand_computed_fit() {
        let fit = ols_fit(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept + 2.0 / 3.0).abs() < 1e-12);
        for (r, want) in fit.residuals.iter().zip([1.0 / 6.0, -1.0 / 3.0, 1.0 / 6.0]) {
            assert!((r - want).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_designs() {
        assert!(matches!(
            ols_fit(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(HarnessError::DegenerateDesign(_))
        ));
        assert!(matches!(
            ols_fit(&[1.0, 2.0], &[1.0, 2.0]),
            Err(HarnessError::DegenerateDesign(_))
        ));
    }

    #[test]
    fn residuals_sum_to_zero() {
        let x = [3.0, 7.5, 1.0, 9.0, 4.2];
        let y = [0.9, 1.4, 1.1, 0.7, 1.3];
        let fit = ols_fit(&x, &y).unwrap();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-8 * norm);
    }
}
