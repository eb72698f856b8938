use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use netboot::bootstrap::{percentile_indices, percentile_interval};
use netboot::community::{auc, bethe_hessian_k};
use netboot::graph::{edge_list_string, parse_edge_list};
use netboot::regression::{fit_cohesion, naive_from_draws, CohesionProblem};
use netboot::statistics::{normalized_triangle_density, partial_triangle_density, triangle_count};
use netboot::subsampling::{q_to_p, PairMask, PartialGraph, RowSet};
use netboot::{Graph, Scheme};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..n * 3).prop_map(move |pairs| {
            Graph::new(n, pairs.into_iter().filter(|(a, b)| a != b)).unwrap()
        })
    })
}

fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    Graph::new(g.n(), g.edges().iter().map(|&(i, j)| (perm[i], perm[j]))).unwrap()
}

fn brute_triangles(g: &Graph) -> u64 {
    let n = g.n();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if g.has_edge(i, j) && g.has_edge(j, k) && g.has_edge(i, k) {
                    count += 1;
                }
            }
        }
    }
    count
}

proptest! {
    #[test]
    fn fraction_round_trip(q in 1e-6f64..=1.0) {
        for scheme in Scheme::ALL {
            let p = q_to_p(scheme, q).unwrap();
            prop_assert!((scheme.q_from_p(p) - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn triangles_match_brute_force(g in graph_strategy(20)) {
        prop_assert_eq!(triangle_count(&g), brute_triangles(&g));
    }

    #[test]
    fn relabeling_preserves_statistics(g in graph_strategy(20), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..g.n()).collect();
        let mut state = seed;
        for i in (1..perm.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let h = relabel(&g, &perm);
        prop_assert_eq!(triangle_count(&g), triangle_count(&h));
        prop_assert_eq!(normalized_triangle_density(&g).unwrap(), normalized_triangle_density(&h).unwrap());
        if g.edge_count() > 0 {
            prop_assert_eq!(bethe_hessian_k(&g).unwrap().k_hat, bethe_hessian_k(&h).unwrap().k_hat);
        }
    }

    #[test]
    fn edge_list_round_trip(g in graph_strategy(30)) {
        prop_assert_eq!(parse_edge_list(&edge_list_string(&g), false).unwrap(), g);
    }

    #[test]
    fn degrees_sum_to_twice_edges(g in graph_strategy(30)) {
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
        prop_assert!(g.laplacian().row_sums().iter().all(|&s| s == 0));
    }

    #[test]
    fn full_masks_reduce_to_definition(g in graph_strategy(15)) {
        let full = normalized_triangle_density(&g).unwrap();
        let n = g.n();
        let pairs = PartialGraph::from_pair_mask(&g, PairMask::full(n));
        let rows = PartialGraph::from_rows(&g, RowSet::new(n, &(0..n).collect::<Vec<_>>()));
        for pg in [pairs, rows] {
            match partial_triangle_density(&pg) {
                Ok(t) => {
                    prop_assert_eq!(t.defined, full.defined);
                    prop_assert!((t.value() - full.value()).abs() <= 1e-12);
                }
                Err(_) => prop_assert_eq!(g.edge_count(), 0),
            }
        }
    }

    #[test]
    fn interval_is_order_free_and_uses_replicates(
        values in prop::collection::vec(-1e3f64..1e3, 2..300),
        alpha in 0.01f64..0.99,
        rotate in 0usize..300,
    ) {
        let iv = percentile_interval(&values, alpha);
        prop_assert!(iv.lower <= iv.upper);
        prop_assert!(values.contains(&iv.lower) && values.contains(&iv.upper));
        let mut shuffled = values.clone();
        shuffled.reverse();
        let len = shuffled.len();
        shuffled.rotate_left(rotate % len);
        prop_assert_eq!(percentile_interval(&shuffled, alpha), iv);
        let (l, u) = percentile_indices(values.len(), alpha);
        prop_assert!(1 <= l && l <= u && u <= values.len());
    }

    #[test]
    fn auc_ignores_monotone_transforms(
        scores in prop::collection::vec(-5.0f64..5.0, 4..60),
        flips in prop::collection::vec(any::<bool>(), 60),
    ) {
        let mut labels: Vec<bool> = flips[..scores.len()].to_vec();
        labels[0] = true;
        labels[1] = false;
        let a = auc(&scores, &labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
        prop_assert!((a - auc(&transformed, &labels).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn naive_identity_draws_are_identity(g in graph_strategy(25)) {
        prop_assert_eq!(naive_from_draws(&g, (0..g.n()).collect()).graph, g);
    }

    #[test]
    fn cohesion_fit_is_relabeling_invariant(g in graph_strategy(25), seed in any::<u64>()) {
        let n = g.n();
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let x = DMatrix::from_fn(n, 2, |_, _| next());
        let y = DVector::from_fn(n, |_, _| next());
        let perm: Vec<usize> = (0..n).rev().collect();
        let h = relabel(&g, &perm);
        let mut xp = x.clone();
        let mut yp = y.clone();
        for i in 0..n {
            xp.set_row(perm[i], &x.row(i));
            yp[perm[i]] = y[i];
        }
        let lg = g.laplacian();
        let lh = h.laplacian();
        let a = fit_cohesion(&CohesionProblem::new(&x, &y, &lg, 1.0)).unwrap();
        let b = fit_cohesion(&CohesionProblem::new(&xp, &yp, &lh, 1.0)).unwrap();
        prop_assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
        let fitted_a = &a.alpha + &x * &a.beta;
        let fitted_b = &b.alpha + &xp * &b.beta;
        // Fitted values come from cancelling α against Xβ.
        let scale = 1.0 + a.alpha.amax() + (&x * &a.beta).amax();
        for i in 0..n {
            prop_assert!((fitted_a[i] - fitted_b[perm[i]]).abs() < 1e-10 * scale);
        }
        // β is unique only when the normal equations needed no ridge, and is
        // then accurate to about cond(G)·ε relative.
        if a.jitter == 0.0 && b.jitter == 0.0 {
            prop_assert!((&a.beta - &b.beta).amax() < 1e-6 * (1.0 + a.beta.amax()));
        }
    }
}
