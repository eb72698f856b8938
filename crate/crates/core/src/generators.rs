//! Erdős–Rényi and stochastic block model generators.
//!
//! The block model is parametrised by the expected all-pairs edge density
//! `rho` and the within/between probability ratio `t`. With `W` the number
//! of within-community pairs, the between-block multiplier is
//! `γ2 = C(n,2) / (t·W + C(n,2) − W)` and `γ1 = t·γ2`, so that
//! `B_kl = ρ·γ1` on the diagonal and `ρ·γ2` off it, and the expected density
//! over all pairs is exactly `ρ`.
//!
//! Pairs are visited in canonical `(i < j)` order with exactly one draw each.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pairs, Graph};
use crate::rng::Bernoulli;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    /// Community sizes `n_k`; nodes are labelled blockwise in this order.
    pub sizes: Vec<usize>,
    pub rho: f64,
    pub t: f64,
}

impl SbmParams {
    pub fn new(sizes: Vec<usize>, rho: f64, t: f64) -> Self {
        Self { sizes, rho, t }
    }

    /// `k` communities of `size` nodes each.
    pub fn equal(k: usize, size: usize, rho: f64, t: f64) -> Self {
        Self::new(vec![size; k], rho, t)
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Community label of every node, blockwise.
    pub fn labels(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &size)| std::iter::repeat(k).take(size))
            .collect()
    }

    /// Calibrated `(γ1, γ2)`.
    pub fn multipliers(&self) -> (f64, f64) {
        let all = pairs(self.n());
        let within: f64 = self.sizes.iter().map(|&s| pairs(s)).sum();
        let gamma2 = all / (self.t * within + (all - within));
        (self.t * gamma2, gamma2)
    }

    /// `(within, between)` edge probabilities.
    pub fn block_probabilities(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let (g1, g2) = self.multipliers();
        let within = self.rho * g1;
        let between = self.rho * g2;
        if within > 1.0 {
            return Err(Error::InfeasibleDensity(within));
        }
        Ok((within, between))
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter(
                "community sizes must be non-empty and positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "density {} outside [0, 1]",
                self.rho
            )));
        }
        if !(self.t >= 1.0) || !self.t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ratio t = {} must be finite and >= 1",
                self.t
            )));
        }
        Ok(())
    }
}

pub fn generate_sbm<R: RngCore + ?Sized>(params: &SbmParams, rng: &mut R) -> Result<Graph> {
    let (within, between) = params.block_probabilities()?;
    let labels = params.labels();
    let within = Bernoulli::new(within);
    let between = Bernoulli::new(between);
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let trial = if labels[i] == labels[j] {
                &within
            } else {
                &between
            };
            if trial.sample(rng) {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_canonical_edges(n, edges))
}

pub fn generate_er<R: RngCore + ?Sized>(n: usize, rho: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "density {rho} outside [0, 1]"
        )));
    }
    let trial = Bernoulli::new(rho);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if trial.sample(rng) {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_canonical_edges(n, edges))
}
