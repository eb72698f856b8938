use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use netboot::bootstrap::bootstrap_ci;
use netboot::community::{bethe_hessian_k, ecv_auc_k};
use netboot::generators::{generate_er, generate_sbm, SbmParams};
use netboot::graph::pairs;
use netboot::regression::{
    beta_uncertainty, fit_cohesion, naive_node_bootstrap, stability_selection, CohesionBeta,
    CohesionData, CohesionDesign, CohesionProblem,
};
use netboot::statistics::{EdgeDensity, TriangleDensity};
use netboot::subsampling::{complete_low_rank, pair_sample, PairMask, PartialGraph, SamplingPlan};
use netboot::{Graph, Resampler, Scheme, Stream};

#[test]
fn observed_pair_fraction_matches_q() {
    let g = Graph::complete(120);
    let total = pairs(120);
    for scheme in Scheme::ALL {
        let q = 0.3;
        let resampler = Resampler::plan(scheme, q).unwrap();
        let stream = Stream::new(11).derive(scheme as u64);
        let reps = 400;
        let mut fractions = Vec::with_capacity(reps);
        for r in 0..reps {
            let sample = resampler
                .draw(&g, &mut stream.derive(r as u64).rng())
                .unwrap();
            fractions.push(sample.graph().edge_count() as f64 / total);
        }
        let mean = fractions.iter().sum::<f64>() / reps as f64;
        let sd =
            (fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        let se = sd / (reps as f64).sqrt();
        assert!(
            (mean - q).abs() < 4.0 * se + 1e-3,
            "{scheme}: mean {mean}, se {se}"
        );
    }
}

#[test]
fn naive_bootstrap_collision_edges() {
    let g = Graph::empty(5);
    let stream = Stream::new(12);
    let reps = 2000;
    let counts: Vec<f64> = (0..reps)
        .map(|r| {
            naive_node_bootstrap(&g, &mut stream.derive(r).rng())
                .unwrap()
                .graph
                .edge_count() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / reps as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let sigma = (var / reps as f64).sqrt();
    assert!(
        (mean - 2.0).abs() < 4.0 * sigma,
        "mean {mean}, sigma {sigma}"
    );
}

#[test]
fn bethe_hessian_on_er_finds_one_community() {
    let stream = Stream::new(13);
    let hits = (0..100)
        .filter(|&r| {
            let g = generate_er(600, 0.1, &mut stream.derive(r).rng()).unwrap();
            bethe_hessian_k(&g).unwrap().k_hat == 1
        })
        .count();
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn rank_one_completion_recovers_direction() {
    // Planted rank-one probabilities P_ij = u_i u_j.
    let n = 200;
    let stream = Stream::new(14);
    let mut rng = stream.derive(0).rng();
    let u: Vec<f64> = (0..n).map(|i| 0.3 + 0.5 * (i as f64 / n as f64)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rand::Rng::random::<f64>(&mut rng) < u[i] * u[j] {
                edges.push((i, j));
            }
        }
    }
    let g = Graph::new(n, edges).unwrap();
    let pg = pair_sample(
        &g,
        &SamplingPlan::new(Scheme::Pair, 0.5).unwrap(),
        &mut stream.derive(1).rng(),
    )
    .unwrap();
    let m = complete_low_rank(&pg, 1).unwrap();
    let truth = DMatrix::from_fn(n, n, |i, j| u[i] * u[j]);
    let cosine = m.dot(&truth) / (m.norm() * truth.norm());
    assert!(cosine > 0.9, "cosine {cosine}");
}

#[test]
fn edge_cross_validation_prefers_planted_rank() {
    let params = SbmParams::equal(2, 100, 0.2, 8.0);
    let stream = Stream::new(15);
    let g = generate_sbm(&params, &mut stream.derive(0).rng()).unwrap();
    let pg = pair_sample(
        &g,
        &SamplingPlan::new(Scheme::Pair, 0.5).unwrap(),
        &mut stream.derive(1).rng(),
    )
    .unwrap();
    let est = ecv_auc_k(&pg, 4, &g).unwrap();
    assert!(
        est.diagnostics[1] > est.diagnostics[0],
        "{:?}",
        est.diagnostics
    );
}

#[test]
fn near_full_mask_recovers_planted_structure() {
    let params = SbmParams::equal(2, 60, 0.3, 20.0);
    let stream = Stream::new(16);
    let g = generate_sbm(&params, &mut stream.derive(0).rng()).unwrap();
    let all: Vec<(usize, usize)> = (0..120)
        .flat_map(|i| (i + 1..120).map(move |j| (i, j)))
        .collect();
    let kept: Vec<(usize, usize)> = all
        .iter()
        .copied()
        .filter(|&(i, j)| (i * 131 + j * 7) % 100 != 0)
        .collect();
    let pg = PartialGraph::from_pair_mask(&g, PairMask::from_pairs(120, &kept).unwrap());
    let est = ecv_auc_k(&pg, 3, &g).unwrap();
    assert!(est.diagnostics[1] > 0.8, "{:?}", est.diagnostics);
}

#[test]
fn percentiles_converge_with_b() {
    let stream = Stream::new(17);
    let g = generate_er(150, 0.1, &mut stream.derive(0).rng()).unwrap();
    let resampler = Resampler::plan(Scheme::Node, 0.3).unwrap();
    let small = bootstrap_ci(&g, &EdgeDensity, resampler, 500, 0.1, stream.derive(1)).unwrap();
    let large = bootstrap_ci(&g, &EdgeDensity, resampler, 5000, 0.1, stream.derive(2)).unwrap();
    let mut values: Vec<f64> = large.replicates.iter().map(|r| r.value()).collect();
    values.sort_by(f64::total_cmp);
    let quantile = |level: f64| {
        values[((level * values.len() as f64).ceil() as usize).clamp(1, values.len()) - 1]
    };
    // Two standard errors of a quantile estimated from 500 draws, on the level scale.
    for (level, endpoint) in [(0.05, small.ci().lower), (0.95, small.ci().upper)] {
        let slack = 2.0 * (level * (1.0 - level) / 500.0f64).sqrt();
        let (lo, hi) = (quantile(level - slack), quantile(level + slack));
        assert!(
            lo <= endpoint && endpoint <= hi,
            "level {level}: {endpoint} not in [{lo}, {hi}]"
        );
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let stream = Stream::new(18);
    let g = generate_er(200, 0.05, &mut stream.derive(0).rng()).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            Scheme::ALL
                .iter()
                .map(|&scheme| {
                    let resampler = Resampler::plan(scheme, 0.3).unwrap();
                    bootstrap_ci(
                        &g,
                        &TriangleDensity::default(),
                        resampler,
                        64,
                        0.1,
                        stream.derive(1),
                    )
                    .unwrap()
                })
                .collect::<Vec<_>>()
        })
    };
    let one = run(1);
    let four = run(4);
    for (a, b) in one.iter().zip(&four) {
        assert_eq!(a.replicates, b.replicates);
        assert_eq!(a.intervals, b.intervals);
    }
}

#[test]
fn cohesion_beats_least_squares_on_block_design() {
    let design = CohesionDesign::three_blocks(0.2, 10.0, 0.1, 5);
    let stream = Stream::new(19);
    let (mut mse_cohesion, mut mse_ols) = (0.0, 0.0);
    for r in 0..100 {
        let s = design.generate(stream.derive(r)).unwrap();
        let l = s.graph.laplacian();
        let fit = fit_cohesion(&CohesionProblem::new(&s.x, &s.y, &l, 1.0)).unwrap();
        let ols = (s.x.transpose() * &s.x)
            .lu()
            .solve(&(s.x.transpose() * &s.y))
            .unwrap();
        mse_cohesion += (&fit.beta - &s.beta).norm_squared();
        mse_ols += (&ols - &s.beta).norm_squared();
    }
    assert!(
        mse_cohesion < mse_ols,
        "cohesion {mse_cohesion}, ols {mse_ols}"
    );
}

#[test]
fn directional_derivatives_are_nonnegative_at_optimum() {
    let stream = Stream::new(20);
    let g = generate_er(80, 0.1, &mut stream.derive(0).rng()).unwrap();
    let mut rng = stream.derive(1).rng();
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = DMatrix::from_fn(80, 4, |_, _| normal());
    let y = DVector::from_fn(80, |_, _| normal());
    let l = g.laplacian();
    let prob = CohesionProblem::new(&x, &y, &l, 1.0);
    let fit = fit_cohesion(&prob).unwrap();
    let h = 1e-5;
    for _ in 0..20 {
        let da = DVector::from_fn(80, |_, _| normal());
        let db = DVector::from_fn(4, |_, _| normal());
        let plus = prob.objective(&(&fit.alpha + h * &da), &(&fit.beta + h * &db));
        let minus = prob.objective(&(&fit.alpha - h * &da), &(&fit.beta - h * &db));
        let base = fit.objective;
        assert!((plus - base) / h >= -1e-6 * (1.0 + base));
        assert!((minus - base) / h >= -1e-6 * (1.0 + base));
    }
}

#[test]
fn no_cohesion_means_no_bootstrap_variation() {
    let design = CohesionDesign::three_blocks(0.2, 10.0, 0.1, 3);
    let s = design.generate(Stream::new(21)).unwrap();
    let stat = CohesionBeta::new(CohesionData::new(s.x.clone(), s.y.clone(), 0.0).unwrap());
    let resampler = Resampler::plan(Scheme::Node, 0.3).unwrap();
    let out = beta_uncertainty(
        &s.graph,
        &stat,
        resampler,
        20,
        0.1,
        Some(s.beta.as_slice()),
        Stream::new(22),
    )
    .unwrap();
    assert_eq!(out.max_width, 0.0);
    let coverage = out.coverage.unwrap() * 3.0;
    assert!((coverage - coverage.round()).abs() < 1e-12);
}

#[test]
fn unpenalised_lasso_selects_everything() {
    let design = CohesionDesign::three_blocks(0.2, 10.0, 0.1, 6);
    let s = design.generate(Stream::new(23)).unwrap();
    let data = CohesionData::new(s.x, s.y, 1.0).unwrap();
    let resampler = Resampler::plan(Scheme::Pair, 0.3).unwrap();
    let sel = stability_selection(&s.graph, &data, &[0.0], resampler, 10, Stream::new(24)).unwrap();
    assert!(
        sel.frequencies.iter().all(|&f| f == 1.0),
        "{:?}",
        sel.frequencies
    );
}
