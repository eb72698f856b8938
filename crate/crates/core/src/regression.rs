//! Linear regression with a network cohesion penalty,
//!
//! `‖Y − α − Xβ‖² + λ1·αᵀLα + λ2·‖β‖₁`,
//!
//! its bootstrap over subsampled networks, stability selection, and the naive
//! node bootstrap used as a baseline.
//!
//! Both solvers profile out the node effects: for fixed `β` the optimal `α`
//! is `C⁻¹(Y − Xβ)` with `C = I + λ1·L`, leaving `(Y − Xβ)ᵀW(Y − Xβ)` with
//! `W = I − C⁻¹`. `C` is factored once over the nodes that have edges;
//! isolated nodes decouple and absorb their residual entirely.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::RngCore;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_ci, BootstrapRun};
use crate::error::{Error, Result};
use crate::generators::{generate_sbm, SbmParams};
use crate::graph::{Graph, Laplacian};
use crate::rng::{labels, Stream};
use crate::statistics::{StatValue, Statistic};
use crate::subsampling::{Resampler, Subsample};

/// Graph built from `n` node draws with replacement: positions `i ≠ j` are
/// adjacent when the drawn parent nodes are adjacent or identical.
#[derive(Clone, Debug, PartialEq)]
pub struct NaiveSample {
    pub graph: Graph,
    /// `draws[i]` is the parent node at position `i`.
    pub draws: Vec<usize>,
}

pub fn naive_node_bootstrap<R: RngCore + ?Sized>(g: &Graph, rng: &mut R) -> Result<NaiveSample> {
    let n = g.n();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let draws: Vec<usize> = (0..n)
        .map(|_| (rng.next_u64() % n as u64) as usize)
        .collect();
    Ok(naive_from_draws(g, draws))
}

/// Naive bootstrap graph for explicit draws.
pub fn naive_from_draws(g: &Graph, draws: Vec<usize>) -> NaiveSample {
    let mut positions: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for (i, &v) in draws.iter().enumerate() {
        positions[v].push(i);
    }
    let mut edges = Vec::new();
    for &(u, v) in g.edges() {
        for &i in &positions[u] {
            for &j in &positions[v] {
                edges.push((i, j));
            }
        }
    }
    for group in &positions {
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::new(draws.len(), edges).expect("positions are distinct and in range");
    NaiveSample { graph, draws }
}

/// Treatment of nodes left out of a node subsample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DroppedNodes {
    /// Zero rows and columns in the embedded Laplacian; `α_i` stays free.
    #[default]
    ZeroPad,
    /// `α_i = 0`, so the node enters as a plain least-squares observation.
    FixZero,
}

#[derive(Clone, Copy, Debug)]
pub struct CohesionProblem<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: &'a DVector<f64>,
    pub laplacian: &'a Laplacian,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Nodes whose effect is fixed at zero.
    pub fixed_zero: Option<&'a [bool]>,
}

impl<'a> CohesionProblem<'a> {
    pub fn new(
        x: &'a DMatrix<f64>,
        y: &'a DVector<f64>,
        laplacian: &'a Laplacian,
        lambda1: f64,
    ) -> Self {
        Self {
            x,
            y,
            laplacian,
            lambda1,
            lambda2: 0.0,
            fixed_zero: None,
        }
    }

    pub fn with_lambda2(mut self, lambda2: f64) -> Self {
        self.lambda2 = lambda2;
        self
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.x.nrows() != n || self.laplacian.n() != n {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: X is {}x{}, Y has {n} entries, L is {}x{}",
                self.x.nrows(),
                self.x.ncols(),
                self.laplacian.n(),
                self.laplacian.n()
            )));
        }
        if let Some(mask) = self.fixed_zero {
            if mask.len() != n {
                return Err(Error::InvalidInput(
                    "fixed-node mask has the wrong length".into(),
                ));
            }
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in X or Y".into()));
        }
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Objective at `(α, β)`.
    pub fn objective(&self, alpha: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        let resid = self.y - alpha - self.x * beta;
        resid.norm_squared()
            + self.lambda1 * self.laplacian.quadratic_form(alpha.as_slice())
            + self.lambda2 * beta.lp_norm(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohesionFit {
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub objective: f64,
    /// Indices with `β_j ≠ 0`.
    pub active_set: Vec<usize>,
    /// False when the sweep cap was reached first.
    pub converged: bool,
    /// Objective after each coordinate sweep (empty for the direct solve).
    pub history: Vec<f64>,
    /// Ridge added to the normal equations, 0 when none was needed.
    pub jitter: f64,
}

#[derive(Clone, Copy, Debug)]
enum NodeKind {
    Coupled(usize),
    Free,
    Fixed,
}

/// The problem with `α` profiled out: `f(β) = βᵀGβ − 2cᵀβ + y_w`.
struct Profile {
    kind: Vec<NodeKind>,
    /// `C_a⁻¹X_a`, `C_a⁻¹Y_a` over the coupled nodes.
    zx: DMatrix<f64>,
    zy: DVector<f64>,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    y_w: f64,
    delta: f64,
}

impl Profile {
    /// With `delta > 0` the whole system carries a ridge: `C = (1 + δ)I + λ1L`.
    fn new(prob: &CohesionProblem, delta: f64, freeze_alpha: bool) -> Result<Self> {
        let n = prob.n();
        let p = prob.p();
        let degrees = prob.laplacian.degrees();
        let mut kind = Vec::with_capacity(n);
        let mut coupled = Vec::new();
        for i in 0..n {
            let fixed = freeze_alpha || prob.fixed_zero.is_some_and(|m| m[i]);
            kind.push(if fixed {
                NodeKind::Fixed
            } else if prob.lambda1 > 0.0 && degrees[i] > 0 {
                coupled.push(i);
                NodeKind::Coupled(coupled.len() - 1)
            } else {
                NodeKind::Free
            });
        }

        let m = coupled.len();
        let mut c = DMatrix::<f64>::zeros(m, m);
        for (a, &i) in coupled.iter().enumerate() {
            c[(a, a)] = 1.0 + delta + prob.lambda1 * degrees[i] as f64;
        }
        for &(i, j) in prob.laplacian.edges() {
            if let (NodeKind::Coupled(a), NodeKind::Coupled(b)) = (kind[i], kind[j]) {
                c[(a, b)] -= prob.lambda1;
                c[(b, a)] -= prob.lambda1;
            }
        }
        let xa = prob.x.select_rows(&coupled);
        let ya = DVector::from_iterator(m, coupled.iter().map(|&i| prob.y[i]));
        let (zx, zy) = if m > 0 {
            let chol: Cholesky<f64, Dyn> = Cholesky::new(c).ok_or_else(|| {
                Error::InvalidInput("cohesion matrix is not positive definite".into())
            })?;
            (chol.solve(&xa), chol.solve(&ya))
        } else {
            (DMatrix::zeros(0, p), DVector::zeros(0))
        };

        let mut gram = xa.transpose() * (&xa - &zx);
        let mut cross = xa.transpose() * (&ya - &zy);
        let mut y_w = ya.dot(&(&ya - &zy));
        let free_weight = delta / (1.0 + delta);
        for i in 0..n {
            let w = match kind[i] {
                NodeKind::Coupled(_) => continue,
                NodeKind::Free => free_weight,
                NodeKind::Fixed => 1.0,
            };
            if w == 0.0 {
                continue;
            }
            let row = prob.x.row(i);
            gram += w * row.transpose() * row;
            cross += w * prob.y[i] * row.transpose();
            y_w += w * prob.y[i] * prob.y[i];
        }
        // Symmetrise away rounding from the two triangle halves.
        let gram = (&gram + gram.transpose()) * 0.5;
        Ok(Self {
            kind,
            zx,
            zy,
            gram,
            cross,
            y_w,
            delta,
        })
    }

    fn alpha(&self, prob: &CohesionProblem, beta: &DVector<f64>) -> DVector<f64> {
        let coupled = &self.zy - &self.zx * beta;
        let resid = prob.y - prob.x * beta;
        DVector::from_iterator(
            prob.n(),
            self.kind.iter().enumerate().map(|(i, k)| match *k {
                NodeKind::Coupled(a) => coupled[a],
                NodeKind::Free => resid[i] / (1.0 + self.delta),
                NodeKind::Fixed => 0.0,
            }),
        )
    }
}

fn active_set(beta: &DVector<f64>) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Relative eigenvalue floor below which the normal equations get a ridge.
const CONDITION_FLOOR: f64 = 1e-12;

fn well_conditioned(gram: &DMatrix<f64>) -> bool {
    if gram.nrows() == 0 {
        return true;
    }
    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    max > 0.0 && min > CONDITION_FLOOR * max
}

/// Profile whose `β` Gram matrix carries the jitter ridge when it is near
/// singular; the same ridge is applied to the node effects.
fn conditioned_profile(prob: &CohesionProblem, freeze_alpha: bool) -> Result<(Profile, f64)> {
    let mut profile = Profile::new(prob, 0.0, freeze_alpha)?;
    if well_conditioned(&profile.gram) {
        return Ok((profile, 0.0));
    }
    let (n, p) = (prob.n() as f64, prob.p() as f64);
    let jitter = 1e-8 * (n + prob.x.norm_squared() + prob.lambda1 * prob.laplacian.trace()) / (n + p);
    profile = Profile::new(prob, jitter, freeze_alpha)?;
    for j in 0..prob.p() {
        profile.gram[(j, j)] += jitter;
    }
    Ok((profile, jitter))
}

/// Exact minimiser of the ridge-free objective (`λ2` must be 0).
///
/// When the profiled normal equations are numerically singular the whole
/// system gets `δ·I` with `δ = 1e-8·trace(MᵀM + λ1P)/(n + p)`, `M = [I | X]`.
pub fn fit_cohesion(prob: &CohesionProblem) -> Result<CohesionFit> {
    prob.validate()?;
    if prob.lambda2 != 0.0 {
        return Err(Error::InvalidInput(
            "fit_cohesion needs lambda2 = 0; use the lasso solver".into(),
        ));
    }
    let (profile, jitter) = conditioned_profile(prob, false)?;
    let system = &profile.gram;
    let beta = match Cholesky::new(system.clone()) {
        Some(chol) => chol.solve(&profile.cross),
        None => system
            .clone()
            .lu()
            .solve(&profile.cross)
            .ok_or_else(|| Error::InvalidInput("singular normal equations".into()))?,
    };
    let alpha = profile.alpha(prob, &beta);
    Ok(CohesionFit {
        objective: prob.objective(&alpha, &beta),
        active_set: active_set(&beta),
        alpha,
        beta,
        converged: true,
        history: Vec::new(),
        jitter,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    pub max_sweeps: usize,
    /// Relative objective decrease that ends the sweeps.
    pub tol: f64,
    /// Hold `α = 0` (plain lasso).
    pub freeze_alpha: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 10_000,
            tol: 1e-10,
            freeze_alpha: false,
        }
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent on the profiled lasso, warm-started at `beta`.
fn coordinate_descent(
    profile: &Profile,
    lambda2: f64,
    opts: &LassoOptions,
    beta: &mut DVector<f64>,
) -> (bool, Vec<f64>) {
    let p = beta.len();
    let gram = &profile.gram;
    let max_diag = (0..p).fold(0.0f64, |m, j| m.max(gram[(j, j)]));
    let mut g_beta = gram * &*beta;
    let objective = |beta: &DVector<f64>, g_beta: &DVector<f64>| {
        beta.dot(g_beta) - 2.0 * profile.cross.dot(beta) + profile.y_w + lambda2 * beta.lp_norm(1)
    };
    let mut history = Vec::new();
    let mut previous = objective(beta, &g_beta);
    for _ in 0..opts.max_sweeps {
        let mut max_step = 0.0f64;
        for j in 0..p {
            let gjj = gram[(j, j)];
            let old = beta[j];
            let new = if gjj <= 1e-14 * max_diag {
                0.0
            } else {
                let z = profile.cross[j] - (g_beta[j] - gjj * old);
                soft_threshold(z, lambda2 / 2.0) / gjj
            };
            if new != old {
                let step = new - old;
                g_beta.axpy(step, &gram.column(j), 1.0);
                beta[j] = new;
                max_step = max_step.max(step.abs() * gjj.sqrt());
            }
        }
        let mut current = objective(beta, &g_beta);
        history.push(current);
        let scale = 1.0 + current.abs();
        if previous - current < opts.tol * scale && max_step * max_step < opts.tol * scale {
            if let Some(polished) = polish(profile, lambda2, beta) {
                let value = objective(&polished, &(gram * &polished));
                if value <= current {
                    *beta = polished;
                    g_beta = gram * &*beta;
                    current = value;
                    history.push(current);
                }
            }
            if kkt_violation(profile, lambda2, beta, &g_beta) <= KKT_TOL * (1.0 + profile.cross.amax()) {
                return (true, history);
            }
        }
        previous = current;
    }
    (false, history)
}

const KKT_TOL: f64 = 1e-10;

/// Largest violation of the profiled optimality conditions
/// `2(Gβ − c)_j + λ2·sign(β_j) = 0`, `|2(Gβ − c)_j| ≤ λ2` at zeros.
fn kkt_violation(profile: &Profile, lambda2: f64, beta: &DVector<f64>, g_beta: &DVector<f64>) -> f64 {
    (0..beta.len())
        .map(|j| {
            let grad = 2.0 * (g_beta[j] - profile.cross[j]);
            if beta[j] == 0.0 {
                (grad.abs() - lambda2).max(0.0)
            } else {
                (grad + lambda2 * beta[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Exact solution on the current support and signs, if it keeps them.
fn polish(profile: &Profile, lambda2: f64, beta: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let k = support.len();
    let g = DMatrix::from_fn(k, k, |a, b| profile.gram[(support[a], support[b])]);
    let rhs = DVector::from_fn(k, |a, _| profile.cross[support[a]] - 0.5 * lambda2 * beta[support[a]].signum());
    let solved = Cholesky::new(g)?.solve(&rhs);
    let mut out = DVector::zeros(beta.len());
    for (a, &j) in support.iter().enumerate() {
        if solved[a].signum() != beta[j].signum() {
            return None;
        }
        out[j] = solved[a];
    }
    Some(out)
}

/// Block coordinate descent: the node effects are solved exactly and the
/// coefficients updated by soft thresholding on the profiled objective.
pub fn fit_cohesion_lasso(prob: &CohesionProblem, opts: &LassoOptions) -> Result<CohesionFit> {
    Ok(lasso_path(prob, &[prob.lambda2], opts)?
        .pop()
        .expect("one fit"))
}

/// Lasso fits along a `λ2` path, each warm-started from the previous one.
pub fn lasso_path(
    prob: &CohesionProblem,
    lambdas: &[f64],
    opts: &LassoOptions,
) -> Result<Vec<CohesionFit>> {
    prob.validate()?;
    if lambdas.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput(
            "lambda2 values must be finite and >= 0".into(),
        ));
    }
    let (profile, jitter) = conditioned_profile(prob, opts.freeze_alpha)?;
    let mut beta = DVector::zeros(prob.p());
    Ok(lambdas
        .iter()
        .map(|&lambda2| {
            let (converged, history) = coordinate_descent(&profile, lambda2, opts, &mut beta);
            let alpha = profile.alpha(prob, &beta);
            let prob = prob.with_lambda2(lambda2);
            CohesionFit {
                objective: prob.objective(&alpha, &beta),
                active_set: active_set(&beta),
                alpha,
                beta: beta.clone(),
                converged,
                history,
                jitter,
            }
        })
        .collect())
}

/// `points` values spaced logarithmically over `[0.01, 1]·‖XᵀY‖_∞`, descending.
pub fn lambda2_path(x: &DMatrix<f64>, y: &DVector<f64>, points: usize) -> Vec<f64> {
    let top = (x.transpose() * y).amax();
    match points {
        0 => Vec::new(),
        1 => vec![top],
        _ => (0..points)
            .map(|k| top * 0.01f64.powf(k as f64 / (points - 1) as f64))
            .collect(),
    }
}

/// Laplacian of a subsample on the parent's node set.
fn embedded_laplacian(n: usize, sample: &Subsample) -> Laplacian {
    match sample {
        Subsample::Induced(s) => Laplacian::new(
            n,
            s.graph
                .edges()
                .iter()
                .map(|&(a, b)| (s.kept[a], s.kept[b]))
                .collect(),
        ),
        Subsample::Partial(pg) => pg.observed().laplacian(),
        Subsample::Naive(s) => s.graph.laplacian(),
    }
}

/// Shared data of the regression statistics: covariates, response and `λ1`.
#[derive(Clone, Debug)]
pub struct CohesionData {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lambda1: f64,
    pub dropped: DroppedNodes,
}

impl CohesionData {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, lambda1: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidInput(format!(
                "X has {} rows but Y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        Ok(Self {
            x,
            y,
            lambda1,
            dropped: DroppedNodes::default(),
        })
    }

    pub fn with_dropped(mut self, dropped: DroppedNodes) -> Self {
        self.dropped = dropped;
        self
    }

    fn restrict(&self, nodes: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(nodes),
            y: DVector::from_iterator(nodes.len(), nodes.iter().map(|&i| self.y[i])),
            lambda1: self.lambda1,
            dropped: self.dropped,
        }
    }

    /// Solve the problem posed by a replicate. Naive samples carry their
    /// own `(X, Y)` rows; subsamples keep the full data.
    fn with_sample<T>(
        &self,
        parent: &Graph,
        sample: &Subsample,
        solve: impl FnOnce(&CohesionProblem) -> Result<T>,
    ) -> Result<T> {
        let n = self.y.len();
        if parent.n() != n {
            return Err(Error::InvalidInput(format!(
                "graph has {} nodes but data has {n} rows",
                parent.n()
            )));
        }
        let laplacian = embedded_laplacian(n, sample);
        match sample {
            Subsample::Naive(s) => {
                let x = self.x.select_rows(&s.draws);
                let y = DVector::from_iterator(n, s.draws.iter().map(|&i| self.y[i]));
                solve(&CohesionProblem::new(&x, &y, &laplacian, self.lambda1))
            }
            Subsample::Induced(s) if self.dropped == DroppedNodes::FixZero => {
                let mut fixed = vec![true; n];
                for &v in &s.kept {
                    fixed[v] = false;
                }
                let mut prob = CohesionProblem::new(&self.x, &self.y, &laplacian, self.lambda1);
                prob.fixed_zero = Some(&fixed);
                solve(&prob)
            }
            _ => solve(&CohesionProblem::new(
                &self.x,
                &self.y,
                &laplacian,
                self.lambda1,
            )),
        }
    }

    fn check_graph(&self, g: &Graph) -> Result<()> {
        if g.n() != self.y.len() {
            return Err(Error::InvalidInput(format!(
                "graph has {} nodes but data has {} rows",
                g.n(),
                self.y.len()
            )));
        }
        Ok(())
    }
}

/// `β̂` of the cohesion regression, refit with each replicate's Laplacian.
#[derive(Clone, Debug)]
pub struct CohesionBeta {
    pub data: CohesionData,
}

impl CohesionBeta {
    pub fn new(data: CohesionData) -> Self {
        Self { data }
    }

    pub fn fit_full(&self, g: &Graph) -> Result<CohesionFit> {
        self.data.check_graph(g)?;
        let laplacian = g.laplacian();
        fit_cohesion(&CohesionProblem::new(
            &self.data.x,
            &self.data.y,
            &laplacian,
            self.data.lambda1,
        ))
    }
}

impl Statistic for CohesionBeta {
    fn name(&self) -> String {
        "cohesion_beta".into()
    }

    fn dim(&self) -> usize {
        self.data.x.ncols()
    }

    fn evaluate(&self, parent: &Graph, sample: &Subsample) -> Result<StatValue> {
        self.data
            .with_sample(parent, sample, |prob| fit_cohesion(prob))
            .map(|fit| StatValue::vector(fit.beta.iter().copied().collect()))
    }

    fn evaluate_full(&self, g: &Graph) -> Result<StatValue> {
        self.fit_full(g)
            .map(|fit| StatValue::vector(fit.beta.iter().copied().collect()))
    }

    fn restrict(&self, nodes: &[usize]) -> Box<dyn Statistic> {
        Box::new(Self {
            data: self.data.restrict(nodes),
        })
    }
}

/// Lasso support indicators along a `λ2` path, flattened as `[l·p + j]`.
#[derive(Clone, Debug)]
pub struct LassoSupport {
    pub data: CohesionData,
    pub lambdas: Vec<f64>,
    pub options: LassoOptions,
}

impl LassoSupport {
    fn indicators(&self, prob: &CohesionProblem) -> Result<StatValue> {
        let fits = lasso_path(prob, &self.lambdas, &self.options)?;
        Ok(StatValue::vector(
            fits.iter()
                .flat_map(|fit| fit.beta.iter().map(|&b| if b != 0.0 { 1.0 } else { 0.0 }))
                .collect(),
        ))
    }
}

impl Statistic for LassoSupport {
    fn name(&self) -> String {
        "lasso_support".into()
    }

    fn dim(&self) -> usize {
        self.data.x.ncols() * self.lambdas.len()
    }

    fn evaluate(&self, parent: &Graph, sample: &Subsample) -> Result<StatValue> {
        self.data
            .with_sample(parent, sample, |prob| self.indicators(prob))
    }

    fn evaluate_full(&self, g: &Graph) -> Result<StatValue> {
        self.data.check_graph(g)?;
        let laplacian = g.laplacian();
        self.indicators(&CohesionProblem::new(
            &self.data.x,
            &self.data.y,
            &laplacian,
            self.data.lambda1,
        ))
    }

    fn restrict(&self, nodes: &[usize]) -> Box<dyn Statistic> {
        Box::new(Self {
            data: self.data.restrict(nodes),
            lambdas: self.lambdas.clone(),
            options: self.options,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaUncertainty {
    pub run: BootstrapRun,
    /// Fit on the full graph.
    pub beta_hat: Vec<f64>,
    pub max_width: f64,
    pub min_width: f64,
    /// Mean per-coordinate coverage of the true `β`, when known.
    pub coverage: Option<f64>,
    /// Squared error of the replicate-mean `β̂` against the true `β`, when known.
    pub mse_of_mean: Option<f64>,
}

/// Per-coordinate percentile intervals for `β` from subsampled (or naively
/// bootstrapped) networks.
pub fn beta_uncertainty(
    g: &Graph,
    stat: &CohesionBeta,
    resampler: Resampler,
    b: usize,
    alpha: f64,
    truth: Option<&[f64]>,
    stream: Stream,
) -> Result<BetaUncertainty> {
    let beta_hat: Vec<f64> = stat.fit_full(g)?.beta.iter().copied().collect();
    let run = bootstrap_ci(g, stat, resampler, b, alpha, stream)?;
    let widths: Vec<f64> = run.intervals.iter().map(|iv| iv.width()).collect();
    let max_width = widths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_width = widths.iter().copied().fold(f64::INFINITY, f64::min);
    let (coverage, mse_of_mean) = match truth {
        Some(beta) => {
            if beta.len() != stat.dim() {
                return Err(Error::InvalidInput("true beta has the wrong length".into()));
            }
            let p = beta.len() as f64;
            let bf = run.replicates.len() as f64;
            let mse = (0..beta.len())
                .map(|j| {
                    let mean = run.replicates.iter().map(|r| r.values[j]).sum::<f64>() / bf;
                    (mean - beta[j]).powi(2)
                })
                .sum::<f64>()
                / p;
            (Some(run.coverage_of(beta)), Some(mse))
        }
        None => (None, None),
    };
    Ok(BetaUncertainty {
        run,
        beta_hat,
        max_width,
        min_width,
        coverage,
        mse_of_mean,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilitySelection {
    pub lambdas: Vec<f64>,
    /// Selection frequency of each predictor, maximised over the path.
    pub frequencies: Vec<f64>,
    /// `per_lambda[l][j]`.
    pub per_lambda: Vec<Vec<f64>>,
    pub replicates: usize,
}

/// Selection frequencies of the cohesion lasso over `b` resampled networks.
pub fn stability_selection(
    g: &Graph,
    data: &CohesionData,
    lambdas: &[f64],
    resampler: Resampler,
    b: usize,
    stream: Stream,
) -> Result<StabilitySelection> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda2 path".into()));
    }
    data.check_graph(g)?;
    let stat = LassoSupport {
        data: data.clone(),
        lambdas: lambdas.to_vec(),
        options: LassoOptions::default(),
    };
    let run = bootstrap_ci(g, &stat, resampler, b, 0.1, stream)?;
    let p = data.x.ncols();
    let bf = b as f64;
    let per_lambda: Vec<Vec<f64>> = (0..lambdas.len())
        .map(|l| {
            (0..p)
                .map(|j| {
                    run.replicates
                        .iter()
                        .map(|r| r.values[l * p + j])
                        .sum::<f64>()
                        / bf
                })
                .collect()
        })
        .collect();
    let frequencies = (0..p)
        .map(|j| per_lambda.iter().map(|row| row[j]).fold(0.0, f64::max))
        .collect();
    Ok(StabilitySelection {
        lambdas: lambdas.to_vec(),
        frequencies,
        per_lambda,
        replicates: b,
    })
}

/// Block-model simulation with community-centred node effects:
/// `α_i ~ N(c_k, σ_α²)`, `x_i ~ N(0, I_p)`, `y_i ~ N(α_i + βᵀx_i, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohesionDesign {
    pub sbm: SbmParams,
    pub centers: Vec<f64>,
    pub sigma_alpha: f64,
    pub p: usize,
    /// Leading coefficients drawn from `N(1, 1)`; the rest are zero.
    /// `None` draws all of them.
    pub nonzero: Option<usize>,
}

/// One draw of a [`CohesionDesign`].
#[derive(Clone, Debug)]
pub struct CohesionSample {
    pub graph: Graph,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub labels: Vec<usize>,
}

impl CohesionDesign {
    /// Three blocks of 200 nodes with centres −1, 0, 1.
    pub fn three_blocks(rho: f64, t: f64, sigma_alpha: f64, p: usize) -> Self {
        Self {
            sbm: SbmParams::equal(3, 200, rho, t),
            centers: vec![-1.0, 0.0, 1.0],
            sigma_alpha,
            p,
            nonzero: None,
        }
    }

    /// The sparse variant: 100 predictors, 25 of them active.
    pub fn sparse(rho: f64, t: f64, sigma_alpha: f64) -> Self {
        Self {
            nonzero: Some(25),
            ..Self::three_blocks(rho, t, sigma_alpha, 100)
        }
    }

    pub fn support(&self) -> Vec<bool> {
        let k = self.nonzero.unwrap_or(self.p).min(self.p);
        (0..self.p).map(|j| j < k).collect()
    }

    pub fn generate(&self, stream: Stream) -> Result<CohesionSample> {
        if self.centers.len() != self.sbm.k() {
            return Err(Error::InvalidParameter(
                "one centre per community is required".into(),
            ));
        }
        if !(self.sigma_alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_alpha = {} < 0",
                self.sigma_alpha
            )));
        }
        let graph = generate_sbm(&self.sbm, &mut stream.derive(labels::PARENT_GRAPH).rng())?;
        let labels = self.sbm.labels();
        let n = labels.len();
        let mut rng = stream.derive(labels::COVARIATES).rng();
        let unit = Normal::new(1.0, 1.0).expect("valid normal");
        let support = self.support();
        let beta = DVector::from_iterator(
            self.p,
            support
                .iter()
                .map(|&s| if s { unit.sample(&mut rng) } else { 0.0 }),
        );
        let alpha = DVector::from_iterator(
            n,
            labels.iter().map(|&k| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.centers[k] + self.sigma_alpha * z
            }),
        );
        // Row by row, so node i's covariates do not depend on p's column order.
        let mut x = DMatrix::zeros(n, self.p);
        for i in 0..n {
            for j in 0..self.p {
                x[(i, j)] = StandardNormal.sample(&mut rng);
            }
        }
        let noise = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
        let y = &alpha + &x * &beta + noise;
        Ok(CohesionSample {
            graph,
            x,
            y,
            alpha,
            beta,
            labels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate_er;

    fn random_problem(
        seed: u64,
        n: usize,
        p: usize,
        rho: f64,
    ) -> (Graph, DMatrix<f64>, DVector<f64>) {
        let stream = Stream::new(seed);
        let g = generate_er(n, rho, &mut stream.derive(1).rng()).unwrap();
        let mut rng = stream.derive(2).rng();
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let y = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        (g, x, y)
    }

    #[test]
    fn naive_identity_draws() {
        let g = Graph::new(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(naive_from_draws(&g, (0..5).collect()).graph, g);
    }

    #[test]
    fn naive_duplicate_draws_connect() {
        let g = Graph::empty(2);
        let s = naive_from_draws(&g, vec![0, 0]);
        assert_eq!(s.graph.edges(), &[(0, 1)]);
    }

    #[test]
    fn naive_duplicates_inherit_edges() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let s = naive_from_draws(&g, vec![1, 0, 0]);
        assert_eq!(s.graph.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let (g, x, y) = random_problem(1, 60, 4, 0.1);
        let l = g.laplacian();
        let prob = CohesionProblem::new(&x, &y, &l, 2.0);
        let fit = fit_cohesion(&prob).unwrap();
        let resid = &y - &fit.alpha - &x * &fit.beta;
        let grad_alpha =
            -2.0 * &resid + 2.0 * 2.0 * DVector::from_vec(l.apply(fit.alpha.as_slice()));
        let grad_beta = -2.0 * x.transpose() * &resid;
        assert!(grad_alpha.amax() < 1e-8);
        assert!(grad_beta.amax() < 1e-8);
    }

    #[test]
    fn zero_cohesion_interpolates() {
        let (g, x, y) = random_problem(2, 30, 3, 0.2);
        let l = g.laplacian();
        let fit = fit_cohesion(&CohesionProblem::new(&x, &y, &l, 0.0)).unwrap();
        assert!(fit.jitter > 0.0);
        assert!(fit.objective <= 1e-10);
    }

    #[test]
    fn huge_cohesion_flattens_effects() {
        let g = Graph::new(50, (0..49).map(|i| (i, i + 1))).unwrap();
        let stream = Stream::new(3);
        let mut rng = stream.rng();
        let x = DMatrix::from_fn(50, 2, |_, _| StandardNormal.sample(&mut rng));
        let y = DVector::from_fn(50, |i, _| {
            3.0 + 0.1 * i as f64 + Distribution::<f64>::sample(&StandardNormal, &mut rng)
        });
        let l = g.laplacian();
        let fit = fit_cohesion(&CohesionProblem::new(&x, &y, &l, 1e8)).unwrap();
        let mean = fit.alpha.mean();
        let spread = fit
            .alpha
            .iter()
            .map(|a| (a - mean).abs())
            .fold(0.0, f64::max);
        assert!(spread < 1e-3 * mean.abs(), "spread {spread}, mean {mean}");
    }

    #[test]
    fn lasso_full_shrinkage() {
        let (g, x, y) = random_problem(4, 40, 5, 0.15);
        let l = g.laplacian();
        let top = (x.transpose() * &y).amax();
        let prob = CohesionProblem::new(&x, &y, &l, 1.0).with_lambda2(1e6 * top);
        let fit = fit_cohesion_lasso(&prob, &LassoOptions::default()).unwrap();
        assert!(fit.beta.iter().all(|&b| b == 0.0));
        let c = DMatrix::identity(40, 40) + l.to_dense();
        let alpha = c.lu().solve(&y).unwrap();
        assert!((&fit.alpha - alpha).amax() < 1e-10);
    }

    #[test]
    fn lasso_orthonormal_closed_form() {
        // Columns of X are orthonormal.
        let (_, raw, y) = random_problem(5, 30, 4, 0.0);
        let q = raw.qr().q();
        let l = Laplacian::zeros(30);
        let lambda2 = 0.3;
        let prob = CohesionProblem::new(&q, &y, &l, 0.0).with_lambda2(lambda2);
        let opts = LassoOptions {
            freeze_alpha: true,
            ..LassoOptions::default()
        };
        let fit = fit_cohesion_lasso(&prob, &opts).unwrap();
        let xty = q.transpose() * &y;
        for j in 0..4 {
            assert!((fit.beta[j] - soft_threshold(xty[j], lambda2 / 2.0)).abs() < 1e-10);
        }
        assert!(fit.alpha.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn lasso_without_penalty_matches_direct_solve() {
        let (g, x, y) = random_problem(6, 80, 6, 0.08);
        let l = g.laplacian();
        let prob = CohesionProblem::new(&x, &y, &l, 1.5);
        let direct = fit_cohesion(&prob).unwrap();
        let lasso = fit_cohesion_lasso(&prob, &LassoOptions::default()).unwrap();
        assert!(lasso.converged);
        assert!((direct.objective - lasso.objective).abs() < 1e-6 * (1.0 + direct.objective.abs()));
        for w in lasso.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn path_is_descending_log_grid() {
        let (_, x, y) = random_problem(7, 20, 3, 0.0);
        let path = lambda2_path(&x, &y, 20);
        let top = (x.transpose() * &y).amax();
        assert!((path[0] - top).abs() < 1e-12 * top);
        assert!((path[19] - 0.01 * top).abs() < 1e-12 * top);
        assert!(path.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = DMatrix::zeros(4, 2);
        let y = DVector::zeros(5);
        let l = Laplacian::zeros(5);
        assert!(matches!(
            fit_cohesion(&CohesionProblem::new(&x, &y, &l, 1.0)),
            Err(Error::InvalidInput(_))
        ));
        let y = DVector::from_element(4, f64::NAN);
        let l = Laplacian::zeros(4);
        assert!(matches!(
            fit_cohesion(&CohesionProblem::new(&x, &y, &l, 1.0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn fixed_nodes_enter_as_least_squares() {
        let (g, x, y) = random_problem(8, 40, 2, 0.1);
        let l = g.laplacian();
        let fixed = vec![true; 40];
        let mut prob = CohesionProblem::new(&x, &y, &l, 1.0);
        prob.fixed_zero = Some(&fixed);
        let fit = fit_cohesion(&prob).unwrap();
        let ols = (x.transpose() * &x)
            .lu()
            .solve(&(x.transpose() * &y))
            .unwrap();
        assert!((fit.beta - ols).amax() < 1e-10);
        assert!(fit.alpha.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn design_shapes() {
        let design = CohesionDesign::sparse(0.2, 10.0, 0.1);
        let sample = design.generate(Stream::new(9)).unwrap();
        assert_eq!(sample.x.shape(), (600, 100));
        assert_eq!(sample.beta.iter().filter(|&&b| b != 0.0).count(), 25);
        assert_eq!(sample.graph.n(), 600);
    }
}
