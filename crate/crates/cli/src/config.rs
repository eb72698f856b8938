//! Experiment configuration, read from JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use netboot::generators::SbmParams;
use netboot::regression::{CohesionDesign, DroppedNodes};
use netboot::statistics::PartialEstimator;
use netboot::Scheme;

use crate::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Triangle,
    Communities,
    Regression,
    Stabsel,
    Realdata,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Triangle => "triangle",
            Task::Communities => "communities",
            Task::Regression => "regression",
            Task::Stabsel => "stabsel",
            Task::Realdata => "realdata",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum GeneratorConfig {
    Er { n: usize, rho: f64 },
    Sbm { sizes: Vec<usize>, rho: f64, t: f64 },
}

impl GeneratorConfig {
    pub fn n(&self) -> usize {
        match self {
            GeneratorConfig::Er { n, .. } => *n,
            GeneratorConfig::Sbm { sizes, .. } => sizes.iter().sum(),
        }
    }

    /// Number of planted communities.
    pub fn k(&self) -> usize {
        match self {
            GeneratorConfig::Er { .. } => 1,
            GeneratorConfig::Sbm { sizes, .. } => sizes.len(),
        }
    }
}

/// Regression simulation: three blocks of 200 nodes, centres −1, 0, 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub rho: f64,
    pub t: f64,
    pub sigma_alpha: f64,
    #[serde(default = "default_p")]
    pub p: usize,
    /// Number of non-zero coefficients; all when absent.
    #[serde(default)]
    pub nonzero: Option<usize>,
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
    #[serde(default)]
    pub dropped: DroppedNodes,
}

impl DesignConfig {
    pub fn design(&self) -> CohesionDesign {
        CohesionDesign {
            nonzero: self.nonzero,
            ..CohesionDesign::three_blocks(self.rho, self.t, self.sigma_alpha, self.p)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunityMethod {
    /// Bethe-Hessian for node and row samples, edge cross-validation for pair samples.
    #[default]
    Auto,
    Bh,
    Ecv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub design: Option<DesignConfig>,
    /// Edge-list files for the real-data task.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub one_based: bool,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_grid")]
    pub q_grid: Vec<f64>,
    #[serde(default = "default_b")]
    pub b: usize,
    /// Inner bootstrap size of the double bootstrap; `b` when absent.
    #[serde(default)]
    pub b_inner: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Run the double bootstrap in every rep (regression) or network (real data).
    #[serde(default)]
    pub select_q: bool,
    #[serde(default = "default_grid")]
    pub candidates: Vec<f64>,
    #[serde(default)]
    pub estimator: PartialEstimator,
    #[serde(default)]
    pub community_method: CommunityMethod,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Add the naive node bootstrap to the regression task.
    #[serde(default)]
    pub include_naive: bool,
    /// Regress on `log n` instead of `n` in the real-data summary.
    #[serde(default)]
    pub log_n: bool,
    /// Length of the `λ2` path in stability selection.
    #[serde(default = "default_path_points")]
    pub path_points: usize,
}

fn default_p() -> usize {
    5
}
fn default_lambda1() -> f64 {
    1.0
}
fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}
fn default_grid() -> Vec<f64> {
    (1..=8).map(|k| k as f64 / 10.0).collect()
}
fn default_b() -> usize {
    200
}
fn default_alpha() -> f64 {
    0.1
}
fn default_reps() -> usize {
    100
}
fn default_output() -> PathBuf {
    PathBuf::from("netboot-out")
}
fn default_k_max() -> usize {
    6
}
fn default_path_points() -> usize {
    20
}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

fn check_fractions(field: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(err(field, "must not be empty"));
    }
    for (i, &q) in values.iter().enumerate() {
        if !(q > 0.0 && q <= 1.0) {
            return Err(err(&format!("{field}[{i}]"), format!("{q} outside (0, 1]")));
        }
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(err(field, "must be strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| err("$", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn b_inner(&self) -> usize {
        self.b_inner.unwrap_or(self.b)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_fractions("q_grid", &self.q_grid)?;
        check_fractions("candidates", &self.candidates)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(err("alpha", format!("{} outside (0, 1)", self.alpha)));
        }
        if self.b < 2 {
            return Err(err("b", "must be at least 2"));
        }
        if self.b_inner.is_some_and(|b| b < 2) {
            return Err(err("b_inner", "must be at least 2"));
        }
        if self.reps == 0 {
            return Err(err("reps", "must be at least 1"));
        }
        if self.schemes.is_empty() && !(self.task == Task::Regression && self.include_naive) {
            return Err(err("schemes", "must not be empty"));
        }
        if self.k_max == 0 {
            return Err(err("k_max", "must be at least 1"));
        }
        match self.task {
            Task::Triangle | Task::Communities => self.validate_generator(),
            Task::Regression | Task::Stabsel => self.validate_design(),
            Task::Realdata => {
                if self.inputs.is_empty() {
                    return Err(err(
                        "inputs",
                        "the real-data task needs at least one edge list",
                    ));
                }
                Ok(())
            }
        }
    }

    fn validate_generator(&self) -> Result<(), ConfigError> {
        let generator = self
            .generator
            .as_ref()
            .ok_or_else(|| err("generator", "required for this task"))?;
        match generator {
            GeneratorConfig::Er { n, rho } => {
                if *n < 4 {
                    return Err(err("generator.n", "must be at least 4"));
                }
                if !(0.0..=1.0).contains(rho) {
                    return Err(err("generator.rho", format!("{rho} outside [0, 1]")));
                }
            }
            GeneratorConfig::Sbm { sizes, rho, t } => {
                let params = SbmParams::new(sizes.clone(), *rho, *t);
                if sizes.is_empty() || sizes.contains(&0) {
                    return Err(err("generator.sizes", "community sizes must be positive"));
                }
                params
                    .block_probabilities()
                    .map_err(|e| err("generator", e.to_string()))?;
            }
        }
        Ok(())
    }

    fn validate_design(&self) -> Result<(), ConfigError> {
        let design = self
            .design
            .as_ref()
            .ok_or_else(|| err("design", "required for this task"))?;
        if design.p == 0 {
            return Err(err("design.p", "must be at least 1"));
        }
        if design.nonzero.is_some_and(|k| k > design.p) {
            return Err(err("design.nonzero", "exceeds p"));
        }
        if !(design.sigma_alpha >= 0.0) {
            return Err(err("design.sigma_alpha", "must be >= 0"));
        }
        if !(design.lambda1 >= 0.0) || !design.lambda1.is_finite() {
            return Err(err("design.lambda1", "must be finite and >= 0"));
        }
        SbmParams::equal(3, 200, design.rho, design.t)
            .block_probabilities()
            .map_err(|e| err("design", e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_triangle_config() {
        let c = ExperimentConfig::from_json(
            r#"{"task": "triangle", "generator": {"model": "er", "n": 300, "rho": 0.05}}"#,
        )
        .unwrap();
        assert_eq!(c.schemes, Scheme::ALL.to_vec());
        assert_eq!(c.q_grid.len(), 8);
        assert_eq!(c.b_inner(), 200);
    }

    #[test]
    fn field_paths_in_errors() {
        let bad = r#"{"task": "triangle", "generator": {"model": "er", "n": 300, "rho": 0.05}, "q_grid": [0.2, 1.5]}"#;
        assert_eq!(
            ExperimentConfig::from_json(bad).unwrap_err().field,
            "q_grid[1]"
        );
        let bad = r#"{"task": "triangle", "generator": {"model": "er", "n": 300, "rho": 0.05}, "q_grid": [0.3, 0.2]}"#;
        assert_eq!(
            ExperimentConfig::from_json(bad).unwrap_err().field,
            "q_grid"
        );
        let bad = r#"{"task": "triangle", "generator": {"model": "er", "n": 300, "rho": 0.05}, "alpha": 1.0}"#;
        assert_eq!(ExperimentConfig::from_json(bad).unwrap_err().field, "alpha");
        let bad = r#"{"task": "regression"}"#;
        assert_eq!(
            ExperimentConfig::from_json(bad).unwrap_err().field,
            "design"
        );
        let bad = r#"{"task": "triangle", "generator": {"model": "sbm", "sizes": [10, 10], "rho": 0.9, "t": 9}}"#;
        assert_eq!(
            ExperimentConfig::from_json(bad).unwrap_err().field,
            "generator"
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad =
            r#"{"task": "triangle", "generator": {"model": "er", "n": 30, "rho": 0.1}, "bee": 3}"#;
        assert_eq!(ExperimentConfig::from_json(bad).unwrap_err().field, "$");
    }
}
