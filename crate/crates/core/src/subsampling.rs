//! Node, row and node-pair subsampling, unified by the node-pair fraction `q`.
//!
//! | scheme | unit kept with prob. `p` | observed pairs      | `q(p)`          |
//! |--------|--------------------------|---------------------|-----------------|
//! | node   | node                     | both ends kept      | `p²`            |
//! | row    | adjacency row            | at least one end    | `1 − (1 − p)²`  |
//! | pair   | unordered pair           | the pair itself     | `p`             |
//!
//! Node sampling yields an induced [`Graph`]; row and pair sampling yield a
//! [`PartialGraph`] on the parent's node set, where zeros inside the mask are
//! true absences.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pairs, triples, Graph};
use crate::regression::{naive_node_bootstrap, NaiveSample};
use crate::rng::Bernoulli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Node,
    Row,
    Pair,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Node, Scheme::Row, Scheme::Pair];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Node => "node",
            Scheme::Row => "row",
            Scheme::Pair => "pair",
        }
    }

    /// Expected node-pair fraction for unit probability `p`.
    pub fn q_from_p(self, p: f64) -> f64 {
        match self {
            Scheme::Node => p * p,
            Scheme::Row => 1.0 - (1.0 - p) * (1.0 - p),
            Scheme::Pair => p,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(Scheme::Node),
            "row" => Ok(Scheme::Row),
            "pair" => Ok(Scheme::Pair),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Per-unit probability that yields node-pair fraction `q` under `scheme`.
pub fn q_to_p(scheme: Scheme, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidFraction(q));
    }
    Ok(match scheme {
        Scheme::Node => q.sqrt(),
        Scheme::Row => 1.0 - (1.0 - q).sqrt(),
        Scheme::Pair => q,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub scheme: Scheme,
    pub q: f64,
    pub p: f64,
}

impl SamplingPlan {
    pub fn new(scheme: Scheme, q: f64) -> Result<Self> {
        Ok(Self {
            scheme,
            q,
            p: q_to_p(scheme, q)?,
        })
    }

    fn expect(&self, scheme: Scheme) -> Result<()> {
        if self.scheme == scheme {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "plan is for {} sampling, not {}",
                self.scheme, scheme
            )))
        }
    }
}

/// Induced subgraph from node sampling plus the map back to parent ids.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSample {
    pub graph: Graph,
    /// `kept[k]` is the parent id of sample node `k`; ascending.
    pub kept: Vec<usize>,
}

pub fn node_sample<R: RngCore + ?Sized>(
    g: &Graph,
    plan: &SamplingPlan,
    rng: &mut R,
) -> Result<NodeSample> {
    plan.expect(Scheme::Node)?;
    let trial = Bernoulli::new(plan.p);
    let kept: Vec<usize> = (0..g.n()).filter(|_| trial.sample(rng)).collect();
    if kept.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(NodeSample {
        graph: g.induced_subgraph(&kept),
        kept,
    })
}

/// Sampled row set `S`; the observed pairs are those touching `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowSet {
    members: Vec<bool>,
    size: usize,
}

impl RowSet {
    pub fn new(n: usize, rows: &[usize]) -> Self {
        let mut members = vec![false; n];
        for &r in rows {
            members[r] = true;
        }
        let size = members.iter().filter(|&&m| m).count();
        Self { members, size }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members[v]
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(v, _)| v)
    }
}

/// Explicit set of observed unordered pairs, one bit per canonical index
/// `idx(i, j) = i·n − i(i+1)/2 + (j − i − 1)` for `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairMask {
    n: usize,
    bits: Vec<u64>,
    count: usize,
}

impl PairMask {
    pub fn empty(n: usize) -> Self {
        let total = n * n.saturating_sub(1) / 2;
        Self {
            n,
            bits: vec![0; total.div_ceil(64)],
            count: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut mask = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                mask.insert(i, j);
            }
        }
        mask
    }

    pub fn from_pairs(n: usize, list: &[(usize, usize)]) -> Result<Self> {
        let mut mask = Self::empty(n);
        for &(a, b) in list {
            if a >= n || b >= n {
                return Err(Error::InvalidNode { node: a.max(b), n });
            }
            if a == b {
                return Err(Error::SelfLoopRejected(a));
            }
            mask.insert(a.min(b), a.max(b));
        }
        Ok(mask)
    }

    #[inline]
    pub fn index(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn insert(&mut self, i: usize, j: usize) {
        let idx = Self::index(self.n, i, j);
        let (w, b) = (idx / 64, idx % 64);
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let idx = Self::index(self.n, i, j);
        self.bits[idx / 64] & (1 << (idx % 64)) != 0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Observed pairs in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (i + 1..n)
                .filter(move |&j| self.contains(i, j))
                .map(move |j| (i, j))
        })
    }

    /// Symmetric adjacency bitsets of the mask graph, `n` rows of `⌈n/64⌉` words.
    fn adjacency_rows(&self) -> (Vec<u64>, usize) {
        let n = self.n;
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![0u64; n * words];
        // Canonical index of (i, i + 1) and of the first pair of row i + 1.
        let (mut i, mut row_start, mut row_end) = (0usize, 0usize, n.saturating_sub(1));
        for (w, &word) in self.bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let idx = w * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                while idx >= row_end {
                    i += 1;
                    row_start = row_end;
                    row_end += n - i - 1;
                }
                let j = i + 1 + (idx - row_start);
                rows[i * words + j / 64] |= 1 << (j % 64);
                rows[j * words + i / 64] |= 1 << (i % 64);
            }
        }
        (rows, words)
    }

    /// Number of triples `{i, j, k}` with all three pairs in the mask.
    pub fn closed_triples(&self) -> u64 {
        let n = self.n;
        if n < 3 || self.count < 3 {
            return 0;
        }
        let (rows, words) = self.adjacency_rows();
        let mut total = 0u64;
        for i in 0..n {
            let row_i = &rows[i * words..(i + 1) * words];
            for (wj, &word) in row_i.iter().enumerate().skip((i + 1) / 64) {
                // Only j > i.
                let mut word = if wj == (i + 1) / 64 {
                    word & !((1u64 << ((i + 1) % 64)) - 1)
                } else {
                    word
                };
                while word != 0 {
                    let j = wj * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    let row_j = &rows[j * words..(j + 1) * words];
                    // Only k > j.
                    let start = j + 1;
                    let first = start / 64;
                    if first >= words {
                        continue;
                    }
                    let low_mask = if start % 64 == 0 {
                        !0u64
                    } else {
                        !((1u64 << (start % 64)) - 1)
                    };
                    total += u64::from((row_i[first] & row_j[first] & low_mask).count_ones());
                    for w in first + 1..words {
                        total += u64::from((row_i[w] & row_j[w]).count_ones());
                    }
                }
            }
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservedMask {
    Rows(RowSet),
    Pairs(PairMask),
}

/// Parent graph seen through a mask of observed pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialGraph {
    mask: ObservedMask,
    /// Parent edges that fall inside the mask, on the parent's node set.
    observed: Graph,
}

impl PartialGraph {
    pub fn from_rows(parent: &Graph, rows: RowSet) -> Self {
        let edges = parent
            .edges()
            .iter()
            .copied()
            .filter(|&(i, j)| rows.contains(i) || rows.contains(j))
            .collect();
        Self {
            observed: Graph::from_canonical_edges(parent.n(), edges),
            mask: ObservedMask::Rows(rows),
        }
    }

    pub fn from_pair_mask(parent: &Graph, mask: PairMask) -> Self {
        debug_assert_eq!(mask.n(), parent.n());
        let edges = parent
            .edges()
            .iter()
            .copied()
            .filter(|&(i, j)| mask.contains(i, j))
            .collect();
        Self {
            observed: Graph::from_canonical_edges(parent.n(), edges),
            mask: ObservedMask::Pairs(mask),
        }
    }

    pub fn parent_n(&self) -> usize {
        self.observed.n()
    }

    pub fn mask(&self) -> &ObservedMask {
        &self.mask
    }

    /// Observed edges as a graph on the parent's node set (unobserved pairs read as absent).
    pub fn observed(&self) -> &Graph {
        &self.observed
    }

    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        match &self.mask {
            ObservedMask::Rows(rows) => i != j && (rows.contains(i) || rows.contains(j)),
            ObservedMask::Pairs(mask) => mask.contains(i, j),
        }
    }

    pub fn observed_pair_count(&self) -> f64 {
        match &self.mask {
            ObservedMask::Rows(rows) => {
                let s = rows.len();
                let rest = self.parent_n() - s;
                pairs(s) + (s * rest) as f64
            }
            ObservedMask::Pairs(mask) => mask.len() as f64,
        }
    }

    /// Triples whose three pairs are all observed.
    pub fn observed_triple_count(&self) -> f64 {
        match &self.mask {
            // At least two of the three nodes must be sampled rows.
            ObservedMask::Rows(rows) => {
                let s = rows.len();
                let rest = self.parent_n() - s;
                triples(s) + pairs(s) * rest as f64
            }
            ObservedMask::Pairs(mask) => mask.closed_triples() as f64,
        }
    }
}

pub fn row_sample<R: RngCore + ?Sized>(
    g: &Graph,
    plan: &SamplingPlan,
    rng: &mut R,
) -> Result<PartialGraph> {
    plan.expect(Scheme::Row)?;
    let trial = Bernoulli::new(plan.p);
    let rows: Vec<usize> = (0..g.n()).filter(|_| trial.sample(rng)).collect();
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(PartialGraph::from_rows(g, RowSet::new(g.n(), &rows)))
}

pub fn pair_sample<R: RngCore + ?Sized>(
    g: &Graph,
    plan: &SamplingPlan,
    rng: &mut R,
) -> Result<PartialGraph> {
    plan.expect(Scheme::Pair)?;
    let n = g.n();
    let trial = Bernoulli::new(plan.p);
    let mut mask = PairMask::empty(n);
    let total = n * n.saturating_sub(1) / 2;
    for (w, word) in mask.bits.iter_mut().enumerate() {
        let len = (total - w * 64).min(64);
        for b in 0..len {
            *word |= u64::from(trial.sample(rng)) << b;
        }
        mask.count += word.count_ones() as usize;
    }
    if mask.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(PartialGraph::from_pair_mask(g, mask))
}

/// Output of one resampling draw.
#[derive(Clone, Debug, PartialEq)]
pub enum Subsample {
    Induced(NodeSample),
    Partial(PartialGraph),
    Naive(NaiveSample),
}

impl Subsample {
    /// The sample viewed as a graph: induced subgraph, observed-edge graph on
    /// the parent's nodes, or the naive bootstrap graph.
    pub fn graph(&self) -> &Graph {
        match self {
            Subsample::Induced(s) => &s.graph,
            Subsample::Partial(pg) => pg.observed(),
            Subsample::Naive(s) => &s.graph,
        }
    }
}

/// How replicates are drawn from the observed graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Resampler {
    Subsample(SamplingPlan),
    /// Nodes drawn `n` times with replacement (no fraction).
    Naive,
}

impl Resampler {
    pub fn plan(scheme: Scheme, q: f64) -> Result<Self> {
        SamplingPlan::new(scheme, q).map(Resampler::Subsample)
    }

    pub fn draw<R: RngCore + ?Sized>(&self, g: &Graph, rng: &mut R) -> Result<Subsample> {
        match self {
            Resampler::Subsample(plan) => match plan.scheme {
                Scheme::Node => node_sample(g, plan, rng).map(Subsample::Induced),
                Scheme::Row => row_sample(g, plan, rng).map(Subsample::Partial),
                Scheme::Pair => pair_sample(g, plan, rng).map(Subsample::Partial),
            },
            Resampler::Naive => naive_node_bootstrap(g, rng).map(Subsample::Naive),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Resampler::Subsample(plan) => plan.scheme.name().to_string(),
            Resampler::Naive => "naive".to_string(),
        }
    }
}

/// Eigendecomposition of the rescaled observed adjacency `M = A_obs / q̂`,
/// with eigenpairs ordered by decreasing `|λ|`.
pub struct SpectralCompletion {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralCompletion {
    pub fn new(pg: &PartialGraph) -> Result<Self> {
        let n = pg.parent_n();
        if !matches!(pg.mask(), ObservedMask::Pairs(_)) {
            return Err(Error::UnsupportedSample(
                "low-rank completion needs a node-pair sample",
            ));
        }
        let observed = pg.observed_pair_count();
        if observed == 0.0 {
            return Err(Error::EmptySample);
        }
        let q_hat = observed / pairs(n);
        let mut m = DMatrix::zeros(n, n);
        for &(i, j) in pg.observed().edges() {
            m[(i, j)] = 1.0 / q_hat;
            m[(j, i)] = 1.0 / q_hat;
        }
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .total_cmp(&eig.eigenvalues[a].abs())
                .then(a.cmp(&b))
        });
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = eig.eigenvectors.select_columns(&order);
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Leading eigenvalues by magnitude.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn check_rank(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.dim() {
            return Err(Error::InvalidRank {
                rank: k,
                dim: self.dim(),
            });
        }
        Ok(())
    }

    /// Rank-`k` reconstruction `Σ_{l<k} λ_l v_l v_lᵀ`.
    pub fn scores(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_rank(k)?;
        let v = self.eigenvectors.columns(0, k);
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            &self.eigenvalues[..k],
        ));
        Ok(&v * lambda * v.transpose())
    }

    /// Scores of the listed pairs for every rank `1..=k_max`: entry `[k-1][t]`
    /// is the rank-`k` score of `pairs[t]`.
    pub fn pair_scores_by_rank(
        &self,
        pair_list: &[(usize, usize)],
        k_max: usize,
    ) -> Result<Vec<Vec<f64>>> {
        self.check_rank(k_max)?;
        let mut running = vec![0.0; pair_list.len()];
        let mut out = Vec::with_capacity(k_max);
        for l in 0..k_max {
            let lambda = self.eigenvalues[l];
            let v = self.eigenvectors.column(l);
            for (score, &(i, j)) in running.iter_mut().zip(pair_list) {
                *score += lambda * v[i] * v[j];
            }
            out.push(running.clone());
        }
        Ok(out)
    }
}

/// Rank-`k` spectral completion of a node-pair sample.
pub fn complete_low_rank(pg: &PartialGraph, k: usize) -> Result<DMatrix<f64>> {
    let n = pg.parent_n();
    if k == 0 || k > n {
        return Err(Error::InvalidRank { rank: k, dim: n });
    }
    SpectralCompletion::new(pg)?.scores(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate_er;
    use crate::rng::Stream;

    #[test]
    fn fraction_conversions() {
        assert!((q_to_p(Scheme::Node, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((q_to_p(Scheme::Row, 0.75).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(q_to_p(Scheme::Pair, 0.3).unwrap(), 0.3);
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                q_to_p(Scheme::Node, bad),
                Err(Error::InvalidFraction(_))
            ));
        }
    }

    #[test]
    fn canonical_index_is_dense() {
        let n = 7;
        let mut seen = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                seen.push(PairMask::index(n, i, j));
            }
        }
        assert_eq!(seen, (0..21).collect::<Vec<_>>());
    }

    #[test]
    fn node_sample_full_probability_is_identity() {
        let mut rng = Stream::new(4).rng();
        let g = generate_er(30, 0.2, &mut rng).unwrap();
        let plan = SamplingPlan::new(Scheme::Node, 1.0).unwrap();
        let s = node_sample(&g, &plan, &mut rng).unwrap();
        assert_eq!(s.kept, (0..30).collect::<Vec<_>>());
        assert_eq!(s.graph, g);
    }

    #[test]
    fn node_sample_of_complete_graph_is_complete() {
        let g = Graph::complete(10);
        let plan = SamplingPlan::new(Scheme::Node, 0.25).unwrap();
        let mut rng = Stream::new(5).rng();
        for _ in 0..20 {
            if let Ok(s) = node_sample(&g, &plan, &mut rng) {
                assert_eq!(s.graph, Graph::complete(s.kept.len()));
            }
        }
    }

    #[test]
    fn plan_scheme_must_match() {
        let g = Graph::complete(4);
        let plan = SamplingPlan::new(Scheme::Row, 0.5).unwrap();
        let mut rng = Stream::new(6).rng();
        assert!(node_sample(&g, &plan, &mut rng).is_err());
        assert!(pair_sample(&g, &plan, &mut rng).is_err());
    }

    #[test]
    fn row_set_on_path() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let pg = PartialGraph::from_rows(&g, RowSet::new(3, &[0]));
        let mask: Vec<(usize, usize)> = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .filter(|&(i, j)| pg.contains_pair(i, j))
            .collect();
        assert_eq!(mask, vec![(0, 1), (0, 2)]);
        assert_eq!(pg.observed().edges(), &[(0, 1)]);
        assert_eq!(pg.observed_pair_count(), 2.0);
    }

    #[test]
    fn full_row_and_pair_masks_observe_everything() {
        let mut rng = Stream::new(7).rng();
        let g = generate_er(25, 0.3, &mut rng).unwrap();
        for scheme in [Scheme::Row, Scheme::Pair] {
            let plan = SamplingPlan::new(scheme, 1.0).unwrap();
            let pg = match scheme {
                Scheme::Row => row_sample(&g, &plan, &mut rng).unwrap(),
                _ => pair_sample(&g, &plan, &mut rng).unwrap(),
            };
            assert_eq!(pg.observed(), &g);
            assert_eq!(pg.observed_pair_count(), pairs(25));
            assert_eq!(pg.observed_triple_count(), triples(25));
        }
    }

    #[test]
    fn pair_mask_on_triangle() {
        let g = Graph::complete(3);
        let pg = PartialGraph::from_pair_mask(&g, PairMask::from_pairs(3, &[(0, 1)]).unwrap());
        assert_eq!(pg.observed().edges(), &[(0, 1)]);
        assert_eq!(pg.observed_triple_count(), 0.0);
    }

    #[test]
    fn closed_triples_brute_force() {
        let mut rng = Stream::new(8).rng();
        for trial in 0..20 {
            let n = 3 + trial * 4;
            let g = generate_er(n, 0.5, &mut rng).unwrap();
            let mask = PairMask::from_pairs(n, g.edges()).unwrap();
            let mut brute = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        if mask.contains(i, j) && mask.contains(j, k) && mask.contains(i, k) {
                            brute += 1;
                        }
                    }
                }
            }
            assert_eq!(mask.closed_triples(), brute, "n = {n}");
        }
    }

    #[test]
    fn full_rank_completion_recovers_matrix() {
        let mut rng = Stream::new(9).rng();
        let g = generate_er(20, 0.3, &mut rng).unwrap();
        let pg = PartialGraph::from_pair_mask(&g, PairMask::full(20));
        let a = complete_low_rank(&pg, 20).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let want = if g.has_edge(i, j) { 1.0 } else { 0.0 };
                assert!((a[(i, j)] - want).abs() < 1e-8);
            }
        }
        assert!(matches!(
            complete_low_rank(&pg, 21),
            Err(Error::InvalidRank { .. })
        ));
        assert!(matches!(
            complete_low_rank(&pg, 0),
            Err(Error::InvalidRank { .. })
        ));
    }

    #[test]
    fn completion_of_empty_observation_is_zero() {
        let g = Graph::empty(10);
        let pg =
            PartialGraph::from_pair_mask(&g, PairMask::from_pairs(10, &[(0, 1), (2, 3)]).unwrap());
        let a = complete_low_rank(&pg, 3).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
    }
}
