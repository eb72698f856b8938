//! Network statistics on full graphs, induced subsamples and partial graphs,
//! and the [`Statistic`] interface the bootstrap engine evaluates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pairs, triples, Graph};
use crate::subsampling::{PartialGraph, Subsample};

/// Value of a (possibly vector-valued) statistic. `defined == false` marks a
/// degenerate evaluation whose value is recorded but carries no information.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatValue {
    pub values: Vec<f64>,
    pub defined: bool,
}

impl StatValue {
    pub fn scalar(value: f64) -> Self {
        Self {
            values: vec![value],
            defined: true,
        }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Self {
            values,
            defined: true,
        }
    }

    /// Degenerate value: zeros of the given dimension.
    pub fn degenerate(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            defined: false,
        }
    }

    pub fn value(&self) -> f64 {
        self.values[0]
    }
}

/// A network statistic the bootstrap engine can evaluate on any subsample.
pub trait Statistic: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize {
        1
    }

    /// Statistic of a subsample drawn from `parent`.
    fn evaluate(&self, parent: &Graph, sample: &Subsample) -> Result<StatValue>;

    /// Statistic of a fully observed graph.
    fn evaluate_full(&self, g: &Graph) -> Result<StatValue>;

    /// The same statistic for the subgraph induced by `nodes` (parent ids,
    /// ascending). Statistics that carry node-level data subset it here.
    fn restrict(&self, nodes: &[usize]) -> Box<dyn Statistic>;
}

/// `|E| / C(n, 2)`.
pub fn edge_density(g: &Graph) -> Result<f64> {
    if g.n() < 2 {
        return Err(Error::Undefined("edge density needs at least two nodes"));
    }
    Ok(g.edge_count() as f64 / pairs(g.n()))
}

/// Triangles by sorted-adjacency intersection: for each edge `(i, j)`,
/// `i < j`, count common neighbours `k > j`.
pub fn triangle_count(g: &Graph) -> u64 {
    let mut total = 0u64;
    for &(i, j) in g.edges() {
        let a = g.neighbors(i);
        let b = g.neighbors(j);
        let mut x = a.partition_point(|&k| k <= j);
        let mut y = b.partition_point(|&k| k <= j);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    total += 1;
                    x += 1;
                    y += 1;
                }
            }
        }
    }
    total
}

fn ratio_triangle_density(edges: f64, pair_count: f64, tri: u64, triple_count: f64) -> StatValue {
    let rho = edges / pair_count;
    if rho == 0.0 || tri == 0 {
        return StatValue::degenerate(1);
    }
    StatValue::scalar(tri as f64 / triple_count / rho.powi(3))
}

/// `T = ρ⁻³ · triangles / C(n, 3)`.
///
/// A graph without triangles (including an edgeless one) returns value 0
/// flagged as not defined.
pub fn normalized_triangle_density(g: &Graph) -> Result<StatValue> {
    if g.n() < 3 {
        return Err(Error::Undefined(
            "triangle density needs at least three nodes",
        ));
    }
    Ok(ratio_triangle_density(
        g.edge_count() as f64,
        pairs(g.n()),
        triangle_count(g),
        triples(g.n()),
    ))
}

/// Mask-restricted estimator: `ρ̂ = observed edges / observed pairs`,
/// `T̂ = ρ̂⁻³ · (observed triangles) / (fully observed triples)`.
pub fn partial_triangle_density(pg: &PartialGraph) -> Result<StatValue> {
    let pair_count = pg.observed_pair_count();
    if pair_count == 0.0 {
        return Err(Error::Undefined("no observed pairs"));
    }
    let triple_count = pg.observed_triple_count();
    if triple_count == 0.0 {
        return Err(Error::Undefined("no fully observed triple"));
    }
    // Every triangle of the observed-edge graph has all three pairs in the mask.
    let tri = triangle_count(pg.observed());
    Ok(ratio_triangle_density(
        pg.observed().edge_count() as f64,
        pair_count,
        tri,
        triple_count,
    ))
}

/// Unobserved pairs read as absent edges on the full node set.
pub fn zero_filled_triangle_density(pg: &PartialGraph) -> Result<StatValue> {
    normalized_triangle_density(pg.observed())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartialEstimator {
    #[default]
    Masked,
    ZeroFilled,
}

impl FromStr for PartialEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "masked" => Ok(Self::Masked),
            "zero-filled" => Ok(Self::ZeroFilled),
            other => Err(Error::InvalidParameter(format!(
                "unknown triangle estimator `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TriangleDensity {
    pub estimator: PartialEstimator,
}

impl Statistic for TriangleDensity {
    fn name(&self) -> String {
        "triangle_density".into()
    }

    fn evaluate(&self, _parent: &Graph, sample: &Subsample) -> Result<StatValue> {
        match sample {
            Subsample::Induced(s) => normalized_triangle_density(&s.graph),
            Subsample::Naive(s) => normalized_triangle_density(&s.graph),
            Subsample::Partial(pg) => match self.estimator {
                PartialEstimator::Masked => partial_triangle_density(pg),
                PartialEstimator::ZeroFilled => zero_filled_triangle_density(pg),
            },
        }
    }

    fn evaluate_full(&self, g: &Graph) -> Result<StatValue> {
        normalized_triangle_density(g)
    }

    fn restrict(&self, _nodes: &[usize]) -> Box<dyn Statistic> {
        Box::new(*self)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EdgeDensity;

impl Statistic for EdgeDensity {
    fn name(&self) -> String {
        "edge_density".into()
    }

    fn evaluate(&self, _parent: &Graph, sample: &Subsample) -> Result<StatValue> {
        match sample {
            Subsample::Induced(s) => edge_density(&s.graph).map(StatValue::scalar),
            Subsample::Naive(s) => edge_density(&s.graph).map(StatValue::scalar),
            Subsample::Partial(pg) => {
                let pair_count = pg.observed_pair_count();
                if pair_count == 0.0 {
                    return Err(Error::Undefined("no observed pairs"));
                }
                Ok(StatValue::scalar(
                    pg.observed().edge_count() as f64 / pair_count,
                ))
            }
        }
    }

    fn evaluate_full(&self, g: &Graph) -> Result<StatValue> {
        edge_density(g).map(StatValue::scalar)
    }

    fn restrict(&self, _nodes: &[usize]) -> Box<dyn Statistic> {
        Box::new(*self)
    }
}

/// Statistic identifiers accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticId {
    TriangleDensity,
    EdgeDensity,
    NumCommunitiesBh,
    NumCommunitiesEcv,
    CohesionBeta,
}

impl StatisticId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TriangleDensity => "triangle_density",
            Self::EdgeDensity => "edge_density",
            Self::NumCommunitiesBh => "num_communities_bh",
            Self::NumCommunitiesEcv => "num_communities_ecv",
            Self::CohesionBeta => "cohesion_beta",
        }
    }
}

impl fmt::Display for StatisticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatisticId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::TriangleDensity,
            Self::EdgeDensity,
            Self::NumCommunitiesBh,
            Self::NumCommunitiesEcv,
            Self::CohesionBeta,
        ]
        .into_iter()
        .find(|id| id.as_str() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown statistic `{s}`")))
    }
}
