//! Percentile bootstrap intervals from network subsamples, and the double
//! bootstrap that picks the node-pair fraction `q`.
//!
//! Replicate `b` of a run always draws from `stream.derive(b)`, and results
//! are written by index, so a run is bit-identical for any thread count.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{labels, Stream};
use crate::statistics::{StatValue, Statistic};
use crate::subsampling::{Resampler, SamplingPlan, Scheme};

/// Attempts per replicate before an empty subsample is recorded as degenerate.
pub const MAX_EMPTY_RETRIES: usize = 100;

/// Fraction of degenerate replicates above which a run carries a warning.
pub const WARNING_FRACTION: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// 1-based order-statistic indices `(l, u)` of a `100(1 − α)%` percentile
/// interval: `l = max(1, ⌊(α/2)·B⌋)`, `u = ⌈(1 − α/2)·B⌉` clamped to `[1, B]`.
pub fn percentile_indices(b: usize, alpha: f64) -> (usize, usize) {
    let bf = b as f64;
    let lower = ((alpha / 2.0 * bf).floor() as usize).max(1);
    let upper = ((1.0 - alpha / 2.0) * bf).ceil() as usize;
    (lower.min(b), upper.clamp(1, b))
}

/// Percentile interval of `values` (any order).
pub fn percentile_interval(values: &[f64], alpha: f64) -> Interval {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (l, u) = percentile_indices(sorted.len(), alpha);
    Interval {
        lower: sorted[l - 1],
        upper: sorted[u - 1],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapRun {
    pub statistic: String,
    pub resampler: String,
    pub q: Option<f64>,
    pub alpha: f64,
    pub seed: u64,
    pub replicates: Vec<StatValue>,
    /// One interval per coordinate of the statistic.
    pub intervals: Vec<Interval>,
    pub degenerate: usize,
    /// More than 10% of replicates degenerate.
    pub warning: bool,
    /// At least half of the replicates degenerate.
    pub degenerate_run: bool,
}

impl BootstrapRun {
    /// Interval of a scalar statistic.
    pub fn ci(&self) -> Interval {
        self.intervals[0]
    }

    pub fn degenerate_fraction(&self) -> f64 {
        self.degenerate as f64 / self.replicates.len() as f64
    }

    /// Fraction of coordinates whose interval contains `target`.
    pub fn coverage_of(&self, target: &[f64]) -> f64 {
        let hits = self
            .intervals
            .iter()
            .zip(target)
            .filter(|(iv, &t)| iv.contains(t))
            .count();
        hits as f64 / self.intervals.len() as f64
    }

    pub fn mean_width(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum::<f64>() / self.intervals.len() as f64
    }
}

fn evaluate_replicate<S: Statistic + ?Sized>(
    g: &Graph,
    stat: &S,
    resampler: &Resampler,
    stream: Stream,
) -> Result<StatValue> {
    let mut rng = stream.rng();
    for _ in 0..MAX_EMPTY_RETRIES {
        match resampler.draw(g, &mut rng) {
            Ok(sample) => {
                return match stat.evaluate(g, &sample) {
                    Err(Error::Undefined(_)) => Ok(StatValue::degenerate(stat.dim())),
                    other => other,
                };
            }
            Err(Error::EmptySample) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(StatValue::degenerate(stat.dim()))
}

/// Percentile bootstrap from `b` subsamples of `g`.
pub fn bootstrap_ci<S: Statistic + ?Sized>(
    g: &Graph,
    stat: &S,
    resampler: Resampler,
    b: usize,
    alpha: f64,
    stream: Stream,
) -> Result<BootstrapRun> {
    if b < 2 {
        return Err(Error::InvalidParameter(format!("bootstrap size {b} < 2")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let replicates = (0..b)
        .into_par_iter()
        .map(|i| evaluate_replicate(g, stat, &resampler, stream.derive(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(stat, &resampler, alpha, stream, replicates))
}

fn summarize<S: Statistic + ?Sized>(
    stat: &S,
    resampler: &Resampler,
    alpha: f64,
    stream: Stream,
    replicates: Vec<StatValue>,
) -> BootstrapRun {
    let b = replicates.len();
    let dim = stat.dim();
    let intervals = (0..dim)
        .map(|c| {
            let column: Vec<f64> = replicates.iter().map(|r| r.values[c]).collect();
            percentile_interval(&column, alpha)
        })
        .collect();
    let degenerate = replicates.iter().filter(|r| !r.defined).count();
    BootstrapRun {
        statistic: stat.name(),
        resampler: resampler.label(),
        q: match resampler {
            Resampler::Subsample(plan) => Some(plan.q),
            Resampler::Naive => None,
        },
        alpha,
        seed: stream.key(),
        replicates,
        intervals,
        degenerate,
        warning: degenerate as f64 > WARNING_FRACTION * b as f64,
        degenerate_run: 2 * degenerate >= b,
    }
}

/// Random split into halves of sizes `⌈n/2⌉` and `⌊n/2⌋`, each ascending.
pub fn split_halves(n: usize, stream: Stream) -> (Vec<usize>, Vec<usize>) {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut stream.rng());
    let mut first = nodes[..n.div_ceil(2)].to_vec();
    let mut second = nodes[n.div_ceil(2)..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}

#[derive(Clone, Debug, Serialize)]
pub struct QSelection {
    pub candidates: Vec<f64>,
    pub coverages: Vec<f64>,
    /// Mean width of the inner intervals, averaged over coordinates and splits.
    pub widths: Vec<f64>,
    /// Candidates where at least half of the inner runs were degenerate.
    pub degenerate: Vec<bool>,
    pub chosen: f64,
    pub alpha: f64,
}

impl QSelection {
    pub fn chosen_index(&self) -> usize {
        self.candidates
            .iter()
            .position(|&q| q == self.chosen)
            .expect("chosen is a candidate")
    }
}

/// Sizes for the double bootstrap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectionSize {
    /// Number of random half-splits.
    pub outer: usize,
    /// Bootstrap size of each inner interval.
    pub inner: usize,
}

impl SelectionSize {
    pub fn same(b: usize) -> Self {
        Self { outer: b, inner: b }
    }
}

/// Double bootstrap choice of `q`.
///
/// For each split `b` the nodes are halved into `V1`, `V2`; the statistic on
/// the subgraph induced by `V1` is the target, and the interval comes from
/// bootstrapping the subgraph induced by `V2` at each candidate `q`. The
/// split is shared across candidates. The chosen `q` minimises
/// `(π_j − (1 − α))²`, ties going to the smallest `q`.
pub fn choose_q<S: Statistic + ?Sized>(
    g: &Graph,
    stat: &S,
    scheme: Scheme,
    candidates: &[f64],
    size: SelectionSize,
    alpha: f64,
    stream: Stream,
) -> Result<QSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate fractions".into()));
    }
    let plans = candidates
        .iter()
        .map(|&q| SamplingPlan::new(scheme, q).map(Resampler::Subsample))
        .collect::<Result<Vec<_>>>()?;
    if g.n() < 4 {
        return Err(Error::InvalidParameter(format!(
            "graph on {} nodes is too small to split",
            g.n()
        )));
    }
    if size.outer == 0 {
        return Err(Error::InvalidParameter("no half-splits requested".into()));
    }

    // outcomes[b][j] = (coverage indicator, inner width, inner run degenerate)
    let outcomes = (0..size.outer)
        .into_par_iter()
        .map(|b| -> Result<Vec<(f64, f64, bool)>> {
            let (v1, v2) = split_halves(g.n(), stream.derive(labels::SPLIT).derive(b as u64));
            let g1 = g.induced_subgraph(&v1);
            let target = match stat.restrict(&v1).evaluate_full(&g1) {
                Err(Error::Undefined(_)) => StatValue::degenerate(stat.dim()),
                other => other?,
            };
            let g2 = g.induced_subgraph(&v2);
            let stat2 = stat.restrict(&v2);
            plans
                .iter()
                .zip(candidates)
                .map(|(plan, &q)| {
                    let inner = stream
                        .derive(labels::SELECTION)
                        .derive(b as u64)
                        .derive_f64(q);
                    let run = bootstrap_ci(&g2, stat2.as_ref(), *plan, size.inner, alpha, inner)?;
                    Ok((
                        run.coverage_of(&target.values),
                        run.mean_width(),
                        run.degenerate_run,
                    ))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let outer = size.outer as f64;
    let coverages: Vec<f64> = (0..candidates.len())
        .map(|j| outcomes.iter().map(|row| row[j].0).sum::<f64>() / outer)
        .collect();
    let widths: Vec<f64> = (0..candidates.len())
        .map(|j| outcomes.iter().map(|row| row[j].1).sum::<f64>() / outer)
        .collect();
    let degenerate: Vec<bool> = (0..candidates.len())
        .map(|j| 2 * outcomes.iter().filter(|row| row[j].2).count() >= size.outer)
        .collect();
    if degenerate.iter().all(|&d| d) {
        return Err(Error::SelectionFailed);
    }

    let chosen = select_fraction(candidates, &coverages, alpha);
    Ok(QSelection {
        candidates: candidates.to_vec(),
        coverages,
        widths,
        degenerate,
        chosen,
        alpha,
    })
}

/// `argmin_j (π_j − (1 − α))²`, smallest `q` on ties.
pub fn select_fraction(candidates: &[f64], coverages: &[f64], alpha: f64) -> f64 {
    let target = 1.0 - alpha;
    let mut best: Option<(f64, f64)> = None;
    for (&q, &pi) in candidates.iter().zip(coverages) {
        let loss = (pi - target).powi(2);
        best = match best {
            Some((bq, bl)) if bl < loss || (bl == loss && bq <= q) => Some((bq, bl)),
            _ => Some((q, loss)),
        };
    }
    best.expect("non-empty candidates").0
}

/// One row of a width/coverage table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub q: f64,
    pub mean_width: f64,
    /// Monte-Carlo standard error of `mean_width`.
    pub width_se: f64,
    pub coverage: f64,
    /// Mean fraction of degenerate replicates per run.
    pub frac_degenerate: f64,
    /// Runs with at least half of their replicates degenerate.
    pub degenerate_runs: usize,
}

/// Monte-Carlo width/coverage study: for each rep a parent graph is drawn,
/// its statistic is the target, and one bootstrap run is made per `q`.
///
/// `parent` receives the rep's stream and must be deterministic in it.
#[allow(clippy::too_many_arguments)]
pub fn coverage_experiment<S, F>(
    parent: F,
    stat: &S,
    scheme: Scheme,
    q_grid: &[f64],
    b: usize,
    alpha: f64,
    reps: usize,
    stream: Stream,
) -> Result<Vec<CoverageRow>>
where
    S: Statistic + ?Sized,
    F: Fn(Stream) -> Result<Graph> + Sync,
{
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let plans = q_grid
        .iter()
        .map(|&q| Resampler::plan(scheme, q))
        .collect::<Result<Vec<_>>>()?;

    // per_rep[r][j] = (width, covered, degenerate fraction, degenerate run)
    let per_rep = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<(f64, f64, f64, bool)>> {
            let g = parent(stream.derive(labels::PARENT_GRAPH).derive(r as u64))?;
            let target = match stat.evaluate_full(&g) {
                Err(Error::Undefined(_)) => StatValue::degenerate(stat.dim()),
                other => other?,
            };
            plans
                .iter()
                .zip(q_grid)
                .map(|(plan, &q)| {
                    let s = stream
                        .derive(labels::REPLICATE)
                        .derive(r as u64)
                        .derive(scheme as u64)
                        .derive_f64(q);
                    let run = bootstrap_ci(&g, stat, *plan, b, alpha, s)?;
                    Ok((
                        run.mean_width(),
                        run.coverage_of(&target.values),
                        run.degenerate_fraction(),
                        run.degenerate_run,
                    ))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let n = reps as f64;
    Ok(q_grid
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let mean_width = per_rep.iter().map(|row| row[j].0).sum::<f64>() / n;
            let ss: f64 = per_rep
                .iter()
                .map(|row| (row[j].0 - mean_width).powi(2))
                .sum();
            let width_se = if reps > 1 {
                (ss / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            CoverageRow {
                q,
                mean_width,
                width_se,
                coverage: per_rep.iter().map(|row| row[j].1).sum::<f64>() / n,
                frac_degenerate: per_rep.iter().map(|row| row[j].2).sum::<f64>() / n,
                degenerate_runs: per_rep.iter().filter(|row| row[j].3).count(),
            }
        })
        .collect())
}
