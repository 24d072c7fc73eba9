use ndarray::{Array1, Array2};
use proptest::prelude::*;

use cftransport::transport::{
    barycentric_map, brute_force_coupling, check_cyclical_monotonicity, quantile_coupling_1d, solve_kantorovich,
    solve_quadratic, sq_euclidean_cost, DiscreteDistribution, MARGINAL_TOL,
};

fn cloud(n: usize, d: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-10.0..10.0f64, n * d).prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
}

fn weights(n: usize) -> impl Strategy<Value = Array1<f64>> {
    prop::collection::vec(0.05..1.0f64, n).prop_map(|v| {
        let total: f64 = v.iter().sum();
        Array1::from(v.into_iter().map(|w| w / total).collect::<Vec<_>>())
    })
}

fn weighted(n: usize, d: usize) -> impl Strategy<Value = DiscreteDistribution> {
    (cloud(n, d), weights(n)).prop_map(|(x, w)| DiscreteDistribution::new(x, w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_small_matches_vertex_enumeration(
        (p, q) in (1usize..=3, 1usize..=4, 1usize..=3)
            .prop_filter("polytope small enough", |(n, m, _)| n * m <= 12)
            .prop_flat_map(|(n, m, d)| (weighted(n, d), weighted(m, d)))
    ) {
        let cost = sq_euclidean_cost(&p, &q).unwrap();
        let c = solve_kantorovich(&p, &q, &cost).unwrap();
        let brute = brute_force_coupling(&p, &q, &cost).unwrap();
        prop_assert!(c.is_feasible());
        prop_assert!((c.cost(&cost).unwrap() - brute.cost(&cost).unwrap()).abs() <= 1e-9);
        prop_assert!(c.nnz() < p.len() + q.len());
    }

    #[test]
    fn arbitrary_costs_match_permutations(
        n in 1usize..=5,
        seed_cost in prop::collection::vec(0.0..100.0f64, 25),
    ) {
        let cost = Array2::from_shape_fn((n, n), |(i, j)| seed_cost[i * 5 + j]);
        let p = DiscreteDistribution::uniform_1d(&vec![0.0; n]).unwrap();
        let c = solve_kantorovich(&p, &p, &cost).unwrap();
        let brute = brute_force_coupling(&p, &p, &cost).unwrap();
        prop_assert!((c.cost(&cost).unwrap() - brute.cost(&cost).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn one_dimensional_solvers_agree(
        (p, q) in (1usize..=12, 1usize..=12).prop_flat_map(|(n, m)| (weighted(n, 1), weighted(m, 1)))
    ) {
        let cost = sq_euclidean_cost(&p, &q).unwrap();
        let a = quantile_coupling_1d(&p, &q).unwrap();
        let b = solve_quadratic(&p, &q).unwrap();
        prop_assert!(a.is_feasible());
        prop_assert!((a.cost(&cost).unwrap() - b.cost(&cost).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn optimal_plans_are_cyclically_monotone(
        (p, q) in (2usize..=15, 2usize..=15, 1usize..=3).prop_flat_map(|(n, m, d)| (weighted(n, d), weighted(m, d)))
    ) {
        let cost = sq_euclidean_cost(&p, &q).unwrap();
        let c = solve_kantorovich(&p, &q, &cost).unwrap();
        prop_assert!(check_cyclical_monotonicity(&c, &cost, 200, 1).unwrap().passed());
        let (rows, cols) = c.marginal_residual();
        prop_assert!(rows.max(cols) <= MARGINAL_TOL);
    }

    #[test]
    fn transpose_solves_reverse_problem(
        (p, q) in (1usize..=10, 1usize..=10, 1usize..=2).prop_flat_map(|(n, m, d)| (weighted(n, d), weighted(m, d)))
    ) {
        let forward = solve_quadratic(&p, &q).unwrap();
        let backward = solve_quadratic(&q, &p).unwrap();
        let cost = sq_euclidean_cost(&q, &p).unwrap();
        prop_assert!((forward.transpose().cost(&cost).unwrap() - backward.cost(&cost).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn barycentric_images_of_translation(x in cloud(8, 2), shift in (-5.0..5.0f64, -5.0..5.0f64)) {
        let p = DiscreteDistribution::uniform(x.clone()).unwrap();
        let moved = x.mapv(|v| v) + &ndarray::array![shift.0, shift.1];
        let q = DiscreteDistribution::uniform(moved.clone()).unwrap();
        let c = solve_quadratic(&p, &q).unwrap();
        let t = barycentric_map(&c, &p, &q).unwrap();
        for (img, want) in t.images().iter().zip(moved.iter()) {
            prop_assert!((img - want).abs() <= 1e-9);
        }
    }
}
