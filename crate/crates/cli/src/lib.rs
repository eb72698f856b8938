//! Experiment harness: configuration, Monte-Carlo drivers, CSV and JSON
//! output, and the real-data pipeline.

pub mod config;
pub mod experiment;
pub mod realdata;

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use netboot::community::{BetheHessianK, EcvK};
use netboot::statistics::{EdgeDensity, PartialEstimator, TriangleDensity};
use netboot::{Statistic, StatisticId};

pub use config::{ExperimentConfig, Task};
pub use experiment::run_experiment;
pub use realdata::{ols_fit, OlsFit};

/// Invalid configuration, located by a JSON field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] netboot::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("degenerate run: {0}")]
    Degenerate(String),
    #[error("regression design is degenerate: {0}")]
    DegenerateDesign(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 for degenerate runs
    /// under `--strict`, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Degenerate(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Caps the global worker pool at `NETBOOT_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("NETBOOT_THREADS") {
        let threads: usize = value.trim().parse().map_err(|_| ConfigError {
            field: "NETBOOT_THREADS".into(),
            message: format!("`{value}` is not a positive integer"),
        })?;
        if threads == 0 {
            return Err(ConfigError {
                field: "NETBOOT_THREADS".into(),
                message: "must be positive".into(),
            }
            .into());
        }
        // Fails only if the pool was already built, in which case it stays as is.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(())
}

/// Graph statistic by identifier. The regression statistic needs data and is
/// built separately.
pub fn graph_statistic(
    id: StatisticId,
    estimator: PartialEstimator,
    k_max: usize,
) -> Result<Box<dyn Statistic>> {
    Ok(match id {
        StatisticId::TriangleDensity => Box::new(TriangleDensity { estimator }),
        StatisticId::EdgeDensity => Box::new(EdgeDensity),
        StatisticId::NumCommunitiesBh => Box::new(BetheHessianK),
        StatisticId::NumCommunitiesEcv => Box::new(EcvK::new(k_max)),
        StatisticId::CohesionBeta => {
            return Err(ConfigError {
                field: "stat".into(),
                message: "cohesion_beta needs covariates; use the regress subcommand".into(),
            }
            .into())
        }
    })
}

/// Reads a regression data file: a header row, then `y, x_1, ..., x_p` per node.
pub fn read_regression_csv(path: &Path) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| netboot::Error::ParseError {
                        line: line + 2,
                        message: format!("`{field}` is not a number"),
                    })
            })
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        if row.len() < 2 {
            return Err(netboot::Error::ParseError {
                line: line + 2,
                message: "need y and at least one covariate".into(),
            }
            .into());
        }
        if rows.first().is_some_and(|first| first.len() != row.len()) {
            return Err(netboot::Error::ParseError {
                line: line + 2,
                message: "ragged row".into(),
            }
            .into());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(netboot::Error::InvalidInput("regression data file has no rows".into()).into());
    }
    let n = rows.len();
    let p = rows[0].len() - 1;
    let y = DVector::from_iterator(n, rows.iter().map(|r| r[0]));
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j + 1]);
    Ok((x, y))
}

/// Writes rows with a header taken from the row type.
pub fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
