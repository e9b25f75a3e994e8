mod common;

use common::*;
use lipfilter::oracles::exact_l0_distance;
use lipfilter::tester::{disagreement_table, half_width, TesterParams};
use lipfilter::{Graph, Rational, Seed, Vertex};
use proptest::prelude::*;
use rand::seq::index;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The defined filter outputs extend to a Lipschitz function, so the
    /// exhaustive disagreement rate is at least the distance to Lipschitz.
    #[test]
    fn disagreement_rate_bounds_the_distance(d in 4usize..=7, eps_idx in 0usize..4, seed in any::<u64>()) {
        let eps = [0.05, 0.1, 0.2, 0.3][eps_idx];
        let mut rng = rng(seed);
        let g = Graph::hypercube(d).unwrap();
        let r = rng.gen_range(2..=12);
        let mut values = random_lipschitz_values(&mut rng, &g, r);
        let corrupt = rng.gen_range(0..=5);
        for x in index::sample(&mut rng, values.len(), corrupt) {
            values[x] = half(rng.gen_range(0..=2 * r));
        }
        let f = table(&g, r, &values);
        let (dist, _) = exact_l0_distance(&g, &f, 64).unwrap();
        let params = TesterParams::new(d, eps).unwrap();
        let pivot = Vertex(rng.gen_range(0..g.num_vertices()));
        let indicators = disagreement_table(&g, &f, &params, pivot, &Seed::from_u64(seed)).unwrap();
        let omega = Rational::new(indicators.iter().filter(|b| **b).count() as i64, indicators.len() as i64);
        prop_assert!(omega >= dist, "ω = {} < distance {}", omega, dist);
    }
}

/// Lipschitz inputs lose at most an ε/d fraction to truncation for at
/// least 7/12 of the pivots.
#[test]
fn truncation_of_lipschitz_inputs_is_rare() {
    let d = 16;
    let g = Graph::hypercube(d).unwrap();
    let mut rng = rng(12);
    for eps in [0.01, 0.1, 0.3] {
        let t = half_width(d, eps);
        for _ in 0..4 {
            let values: Vec<f64> = random_lipschitz_values(&mut rng, &g, d as i64).iter().map(Rational::to_f64).collect();
            let pivots = 60;
            let good = (0..pivots)
                .filter(|_| {
                    let fp = values[rng.gen_range(0..values.len())];
                    let outside = values.iter().filter(|v| (**v - fp).abs() > t).count();
                    (outside as f64) <= eps / d as f64 * values.len() as f64
                })
                .count();
            assert!(12 * good >= 7 * pivots, "eps {eps}: {good}/{pivots} pivots");
        }
    }
}

/// `Pr[|g(x) - µ| ≥ √(d ln(d/γ))] ≤ γ/d` for Lipschitz `g` on the cube.
#[test]
fn lipschitz_functions_concentrate() {
    let d = 16;
    let g = Graph::hypercube(d).unwrap();
    let mut rng = rng(13);
    let mut functions: Vec<Vec<f64>> = vec![g.vertices().map(|x| x.0.count_ones() as f64).collect()];
    for _ in 0..4 {
        functions.push(random_lipschitz_values(&mut rng, &g, d as i64).iter().map(Rational::to_f64).collect());
    }
    for values in &functions {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        for gamma in [0.05, 0.5, 1.0] {
            let s = (d as f64 * (d as f64 / gamma).ln()).sqrt();
            let tail = values.iter().filter(|v| (**v - mean).abs() >= s).count() as f64 / n;
            assert!(tail <= gamma / d as f64, "γ={gamma}: tail {tail}");
        }
    }
}
