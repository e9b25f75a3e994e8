//! Exact distances to the Lipschitz class on small domains.

pub mod lp;
pub mod vertex_cover;

pub use lp::{Cmp, Lp, Solution};
pub use vertex_cover::min_vertex_cover;

use crate::error::{Error, Result};
use crate::function::{materialize, materialize_total, FunctionOracle, Value};
use crate::graph::{Graph, Vertex};
use crate::rational::Rational;
use crate::violation::violation_edges;

/// Largest domain the exact oracles accept.
pub const MAX_EXACT_VERTICES: u64 = 4096;

/// Default cap on the cover size searched by [`exact_l0_distance`].
pub const DEFAULT_COVER_CAP: usize = 4096;

fn check_size(g: &Graph) -> Result<()> {
    if g.num_vertices() > MAX_EXACT_VERTICES {
        return Err(Error::SizeExceeded(format!(
            "{} vertices, the exact oracles handle at most {MAX_EXACT_VERTICES}",
            g.num_vertices()
        )));
    }
    Ok(())
}

/// Canonical minimum vertex cover of the violation graph `B_{0,f}`.
pub fn canonical_cover(g: &Graph, values: &[Value], cap: usize) -> Result<Vec<Vertex>> {
    let edges: Vec<(Vertex, Vertex)> = violation_edges(g, values, &Rational::zero())
        .into_iter()
        .map(|e| e.endpoints())
        .collect();
    Ok(min_vertex_cover(&edges, cap)?.1)
}

/// `(dist_0(f, Lip), cover)` where the distance is `|cover| / |V|`.
///
/// A minimum vertex cover of `B_{0,f}` is exactly a minimum set of values to
/// change, since the rest then extends to a Lipschitz function.
pub fn exact_l0_distance(g: &Graph, f: &dyn FunctionOracle, cap: usize) -> Result<(Rational, Vec<Vertex>)> {
    check_size(g)?;
    let values = materialize(g, f)?;
    let cover = canonical_cover(g, &values, cap)?;
    let dist = Rational::new(cover.len() as i64, g.num_vertices() as i64);
    Ok((dist, cover))
}

/// `(dist_1(f, Lip), h)` with `h` an optimal Lipschitz function.
///
/// Solves `min (1/|V|) Σ e_x` subject to `|h_x - f_x| ≤ e_x` and
/// `|h_x - h_y| ≤ 1` on edges, with `h` shifted so that every variable is
/// nonnegative.
pub fn exact_l1_distance(g: &Graph, f: &dyn FunctionOracle) -> Result<(Rational, Vec<Rational>)> {
    check_size(g)?;
    let values = materialize_total(g, f)?;
    let n = values.len();
    let lo = values.iter().min().cloned().unwrap_or_else(Rational::zero);
    let one = Rational::one;
    // variables: u_x = h_x - lo in 0..n, e_x in n..2n
    let mut lp = Lp::new(2 * n);
    for (x, fx) in values.iter().enumerate() {
        lp.set_cost(n + x, one());
        let shifted = fx - &lo;
        lp.constrain(vec![(x, one()), (n + x, -one())], Cmp::Le, shifted.clone());
        lp.constrain(vec![(x, one()), (n + x, one())], Cmp::Ge, shifted);
    }
    for (u, v) in g.edges() {
        let (u, v) = (u.0 as usize, v.0 as usize);
        lp.constrain(vec![(u, one()), (v, -one())], Cmp::Le, one());
        lp.constrain(vec![(v, one()), (u, -one())], Cmp::Le, one());
    }
    let solution = lp.minimize()?;
    let h = solution.z[..n].iter().map(|u| u + &lo).collect();
    Ok((solution.value / Rational::from_integer(n as i64), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::TableFunction;
    use crate::graph::is_c_lipschitz;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn table(g: &Graph, values: &[i64]) -> TableFunction {
        let r = values.iter().copied().max().unwrap_or(0);
        TableFunction::from_values(g, q(r), values.iter().map(|&v| q(v)).collect()).unwrap()
    }

    #[test]
    fn two_point_distances() {
        let g = Graph::hypergrid(2, 1).unwrap();
        let f = table(&g, &[0, 4]);
        assert_eq!(exact_l0_distance(&g, &f, 10).unwrap().0, Rational::new(1, 2));
        let (d1, h) = exact_l1_distance(&g, &f).unwrap();
        assert_eq!(d1, Rational::new(3, 2));
        assert!((&h[0] - &h[1]).abs() <= q(1));
    }

    #[test]
    fn peak_distances() {
        let g = Graph::hypergrid(3, 1).unwrap();
        let f = table(&g, &[0, 3, 0]);
        assert_eq!(exact_l0_distance(&g, &f, 10).unwrap(), (Rational::new(1, 3), vec![Vertex(1)]));
        assert_eq!(exact_l1_distance(&g, &f).unwrap().0, Rational::new(2, 3));
    }

    #[test]
    fn lipschitz_functions_are_at_distance_zero() {
        let g = Graph::hypercube(3).unwrap();
        let f = table(&g, &[0, 1, 1, 2, 1, 2, 2, 3]);
        assert_eq!(exact_l0_distance(&g, &f, 10).unwrap(), (q(0), vec![]));
        assert_eq!(exact_l1_distance(&g, &f).unwrap().0, q(0));
    }

    #[test]
    fn rejects_large_domains() {
        let g = Graph::hypercube(13).unwrap();
        let f = crate::function::FnOracle::new(&g, Some((q(0), q(0))), |_| Value::from(0));
        assert!(matches!(exact_l1_distance(&g, &f), Err(Error::SizeExceeded(_))));
    }

    /// Independent ℓ1 check: on a path the optimal `h` can be taken with
    /// values in a half-integer grid when `f` is integral, so a brute-force
    /// search over that grid finds the optimum.
    fn brute_l1_path(values: &[i64]) -> Rational {
        let lo = *values.iter().min().unwrap() * 2;
        let hi = *values.iter().max().unwrap() * 2;
        let n = values.len();
        let mut best: Option<i64> = None;
        let mut h = vec![lo; n];
        loop {
            if h.windows(2).all(|w| (w[0] - w[1]).abs() <= 2) {
                let cost: i64 = h.iter().zip(values).map(|(a, b)| (a - 2 * b).abs()).sum();
                best = Some(best.map_or(cost, |b| b.min(cost)));
            }
            let mut i = 0;
            loop {
                if i == n {
                    return Rational::new(best.unwrap(), 2 * n as i64);
                }
                if h[i] < hi {
                    h[i] += 1;
                    break;
                }
                h[i] = lo;
                i += 1;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn l1_matches_brute_force_on_paths(values in proptest::collection::vec(0i64..=4, 2..=5)) {
            let g = Graph::hypergrid(values.len() as u64, 1).unwrap();
            let f = table(&g, &values);
            let (d1, h) = exact_l1_distance(&g, &f).unwrap();
            prop_assert_eq!(&d1, &brute_l1_path(&values));
            let witness = TableFunction::from_values(&g, q(4), h.clone());
            if let Ok(w) = witness {
                prop_assert!(is_c_lipschitz(&g, &w, &q(1)).unwrap());
            }
            let total: Rational = h.iter().zip(&values).map(|(a, &b)| (a - &q(b)).abs()).fold(q(0), |s, x| s + x);
            prop_assert_eq!(total / q(values.len() as i64), d1);
        }

        #[test]
        fn l1_bounded_by_range_times_l0(d in 1usize..=4, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let g = Graph::hypercube(d).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<i64> = (0..1 << d).map(|_| rng.gen_range(0..=4)).collect();
            let f = table(&g, &values);
            let (d0, cover) = exact_l0_distance(&g, &f, 64).unwrap();
            let (d1, _) = exact_l1_distance(&g, &f).unwrap();
            prop_assert_eq!(d0.is_zero(), d1.is_zero());
            // moving the cover to the Lipschitz extension costs at most r per vertex
            prop_assert!(d1 <= &d0 * &q(4));
            prop_assert_eq!(Rational::new(cover.len() as i64, 1 << d), d0);
        }
    }
}
