//! Estimators of the number of communities.
//!
//! * Bethe-Hessian: count the negative eigenvalues of
//!   `H(r) = (r² − 1)I − rA + D` at `r = sqrt(2|E|/n)`.
//! * Edge cross-validation: complete a node-pair sample at ranks `1..=K_max`
//!   and keep the rank whose scores best rank the held-out pairs (AUC).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{labels, Stream};
use crate::statistics::{StatValue, Statistic};
use crate::subsampling::{
    pair_sample, ObservedMask, PartialGraph, SamplingPlan, Scheme, SpectralCompletion, Subsample,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMethod {
    BetheHessian,
    EcvAuc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KEstimate {
    pub k_hat: usize,
    pub method: KMethod,
    /// Ascending eigenvalues of `H(r)`, or the AUC of each rank.
    pub diagnostics: Vec<f64>,
}

/// Dense Bethe-Hessian at `r = sqrt(average degree)`.
pub fn bethe_hessian(g: &Graph) -> Result<DMatrix<f64>> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    let n = g.n();
    let r = (2.0 * g.edge_count() as f64 / n as f64).sqrt();
    let mut h = DMatrix::zeros(n, n);
    for v in 0..n {
        h[(v, v)] = r * r - 1.0 + g.degree(v) as f64;
    }
    for &(i, j) in g.edges() {
        h[(i, j)] = -r;
        h[(j, i)] = -r;
    }
    Ok(h)
}

/// Number of eigenvalues of `H(r)` below `−1e-8·‖H‖_∞`, at least 1.
pub fn bethe_hessian_k(g: &Graph) -> Result<KEstimate> {
    let h = bethe_hessian(g)?;
    let norm = h
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut eigenvalues: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let negative = eigenvalues
        .iter()
        .take_while(|&&l| l < -1e-8 * norm)
        .count();
    Ok(KEstimate {
        k_hat: negative.max(1),
        method: KMethod::BetheHessian,
        diagnostics: eigenvalues,
    })
}

/// Mann-Whitney AUC: `P(s⁺ > s⁻) + ½·P(s⁺ = s⁻)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(
            "scores and labels differ in length".into(),
        ));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of mid-ranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + end + 1) as f64 / 2.0;
        rank_sum += mid_rank * order[start..end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end;
    }
    let (p, q) = (positives as f64, negatives as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Rank maximising the held-out AUC of the low-rank completion of a
/// node-pair sample; ties go to the smallest rank.
pub fn ecv_auc_k(pg: &PartialGraph, k_max: usize, parent: &Graph) -> Result<KEstimate> {
    let mask = match pg.mask() {
        ObservedMask::Pairs(mask) => mask,
        ObservedMask::Rows(_) => {
            return Err(Error::UnsupportedSample(
                "edge cross-validation needs a node-pair sample",
            ))
        }
    };
    let n = parent.n();
    if mask.n() != n {
        return Err(Error::InvalidInput(
            "sample and parent differ in size".into(),
        ));
    }
    if k_max == 0 || k_max > n {
        return Err(Error::InvalidRank {
            rank: k_max,
            dim: n,
        });
    }
    let held_out: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !mask.contains(i, j))
        .collect();
    let truth: Vec<bool> = held_out
        .iter()
        .map(|&(i, j)| parent.has_edge(i, j))
        .collect();
    if !truth.contains(&true) || !truth.contains(&false) {
        return Err(Error::UndefinedAuc);
    }
    let completion = SpectralCompletion::new(pg)?;
    let scores = completion.pair_scores_by_rank(&held_out, k_max)?;
    let aucs = scores
        .iter()
        .map(|s| auc(s, &truth))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, &a) in aucs.iter().enumerate() {
        if a > aucs[best] {
            best = k;
        }
    }
    Ok(KEstimate {
        k_hat: best + 1,
        method: KMethod::EcvAuc,
        diagnostics: aucs,
    })
}

fn undefined_without_edges(e: Error) -> Error {
    match e {
        Error::NoEdges => Error::Undefined("no edges in sample"),
        other => other,
    }
}

/// Bethe-Hessian count as a bootstrap statistic. Partial samples are read
/// with unobserved pairs as non-edges.
#[derive(Clone, Copy, Debug, Default)]
pub struct BetheHessianK;

impl Statistic for BetheHessianK {
    fn name(&self) -> String {
        "num_communities_bh".into()
    }

    fn evaluate(&self, _parent: &Graph, sample: &Subsample) -> Result<StatValue> {
        self.evaluate_full(sample.graph())
    }

    fn evaluate_full(&self, g: &Graph) -> Result<StatValue> {
        bethe_hessian_k(g)
            .map(|k| StatValue::scalar(k.k_hat as f64))
            .map_err(undefined_without_edges)
    }

    fn restrict(&self, _nodes: &[usize]) -> Box<dyn Statistic> {
        Box::new(*self)
    }
}

/// Edge cross-validation count. Replicates must be node-pair samples; on a
/// fully observed graph a fixed pair mask at fraction `holdout_q` is drawn
/// from `seed`.
#[derive(Clone, Copy, Debug)]
pub struct EcvK {
    pub k_max: usize,
    pub holdout_q: f64,
    pub seed: u64,
}

impl EcvK {
    pub fn new(k_max: usize) -> Self {
        Self {
            k_max,
            holdout_q: 0.9,
            seed: 0,
        }
    }
}

impl Statistic for EcvK {
    fn name(&self) -> String {
        "num_communities_ecv".into()
    }

    fn evaluate(&self, parent: &Graph, sample: &Subsample) -> Result<StatValue> {
        let pg = match sample {
            Subsample::Partial(pg) => pg,
            _ => {
                return Err(Error::UnsupportedSample(
                    "edge cross-validation needs a node-pair sample",
                ))
            }
        };
        match ecv_auc_k(pg, self.k_max.min(parent.n()), parent) {
            Ok(k) => Ok(StatValue::scalar(k.k_hat as f64)),
            Err(Error::UndefinedAuc) => Err(Error::Undefined("held-out pairs have a single class")),
            Err(e) => Err(e),
        }
    }

    fn evaluate_full(&self, g: &Graph) -> Result<StatValue> {
        let plan = SamplingPlan::new(Scheme::Pair, self.holdout_q)?;
        let mut rng = Stream::new(self.seed).derive(labels::MASK).rng();
        let pg = match pair_sample(g, &plan, &mut rng) {
            Ok(pg) => pg,
            Err(Error::EmptySample) => return Err(Error::Undefined("empty hold-out mask")),
            Err(e) => return Err(e),
        };
        self.evaluate(g, &Subsample::Partial(pg))
    }

    fn restrict(&self, _nodes: &[usize]) -> Box<dyn Statistic> {
        Box::new(*self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsampling::PairMask;

    #[test]
    fn auc_examples() {
        assert_eq!(
            auc(&[1.0, 2.0, 3.0, 4.0], &[false, false, true, true]).unwrap(),
            1.0
        );
        assert_eq!(auc(&[1.0; 4], &[false, true, false, true]).unwrap(), 0.5);
        assert_eq!(auc(&[3.0, 1.0, 2.0], &[true, false, true]).unwrap(), 1.0);
        assert_eq!(auc(&[1.0, 2.0], &[true, false]).unwrap(), 0.0);
        assert_eq!(auc(&[1.0, 2.0], &[true, true]), Err(Error::UndefinedAuc));
    }

    #[test]
    fn two_cliques() {
        let clique = |offset: usize| {
            (0..20).flat_map(move |i| (i + 1..20).map(move |j| (i + offset, j + offset)))
        };
        let g = Graph::new(40, clique(0).chain(clique(20))).unwrap();
        let est = bethe_hessian_k(&g).unwrap();
        assert_eq!(est.k_hat, 2);
        assert_eq!(est.diagnostics.len(), 40);
    }

    #[test]
    fn edgeless_graph() {
        assert_eq!(bethe_hessian_k(&Graph::empty(5)), Err(Error::NoEdges));
    }

    #[test]
    fn hessian_is_symmetric() {
        let g = Graph::new(6, [(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        let h = bethe_hessian(&g).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn single_rank_is_chosen() {
        let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let mask = PairMask::from_pairs(6, &[(0, 1), (1, 2), (0, 5), (2, 4)]).unwrap();
        let pg = PartialGraph::from_pair_mask(&g, mask);
        let est = ecv_auc_k(&pg, 1, &g).unwrap();
        assert_eq!(est.k_hat, 1);
        assert_eq!(est.diagnostics.len(), 1);
    }

    #[test]
    fn ecv_rejects_row_samples() {
        let g = Graph::complete(5);
        let pg = PartialGraph::from_rows(&g, crate::subsampling::RowSet::new(5, &[0]));
        assert!(matches!(
            ecv_auc_k(&pg, 2, &g),
            Err(Error::UnsupportedSample(_))
        ));
    }
}
