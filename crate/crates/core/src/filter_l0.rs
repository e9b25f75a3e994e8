//! The ℓ0-respecting filter: values on a vertex cover of the violation
//! graph are replaced by the Lipschitz extension of the rest.
//!
//! The local version takes the LCA-matched vertices of `B_{0,f}` as the
//! cover and evaluates the extension `max(lo, max_y f(y) - dist(x, y))` over
//! unmatched `y` within distance `⌊r⌋`.

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::filter_l1::Budgets;
use crate::function::{FunctionOracle, Value};
use crate::graph::{BallKind, Graph, Vertex, UNREACHABLE};
use crate::matching::MatchingLca;
use crate::rational::Rational;
use crate::seed::Seed;
use crate::violation::{score, ViolationGraph};

/// Local query access to the ℓ0 filter output for one seed.
pub struct LocalFilter0<'a> {
    lca: MatchingLca<ViolationGraph<'a>>,
    lo: Rational,
    radius: u64,
    ball_budget: u64,
}

impl<'a> LocalFilter0<'a> {
    pub fn new<F: FunctionOracle + 'a>(graph: &'a Graph, f: F, seed: &Seed, budgets: Budgets) -> Result<Self> {
        let (lo, hi) = f
            .bounds()
            .ok_or_else(|| Error::InvalidParam("the filter needs a declared range".into()))?;
        let radius = (&hi - &lo).floor_i64().max(0) as u64;
        let viol = ViolationGraph::over(graph, f, Rational::zero(), budgets.ball)?;
        Ok(Self { lca: MatchingLca::new(viol, seed, budgets.edges), lo, radius, ball_budget: budgets.ball })
    }

    fn graph(&self) -> &Graph {
        self.lca.graph().graph()
    }

    /// Whether `x` is in the matching (the cover this seed uses).
    pub fn is_matched(&self, x: Vertex) -> Result<bool> {
        Ok(self.lca.match_of(x)?.is_some())
    }

    pub fn query(&self, x: Vertex) -> Result<Value> {
        let viol = self.lca.graph();
        let fx = viol.value(x)?;
        if fx.is_undefined() || self.lca.match_of(x)?.is_none() {
            return Ok(fx);
        }
        let mut best = self.lo.clone();
        for (y, dist) in self.graph().ball(x, self.radius, BallKind::Closed, self.ball_budget)? {
            let Value::Defined(fy) = viol.value(y)? else { continue };
            let candidate = fy - Rational::from_integer(dist as i64);
            // cheap bound first; only a possible improvement needs the matching
            if candidate > best && self.lca.match_of(y)?.is_none() {
                best = candidate;
            }
        }
        Ok(Value::Defined(best))
    }
}

/// Extension of `f` off `cover`, assigning cover vertices in the given order.
///
/// Each cover vertex gets `max(lo, max_v g(v) - dist(u, v))` over every
/// vertex already assigned (all of `V \ cover` plus earlier cover vertices);
/// undefined values never contribute and stay undefined.
pub fn global_filter_l0(g: &Graph, values: &[Value], lo: &Rational, cover: &[Vertex]) -> Result<Vec<Value>> {
    let n = g.num_vertices();
    if values.len() as u64 != n {
        return Err(Error::InvalidParam("value table does not match the domain".into()));
    }
    let in_cover: FxHashSet<Vertex> = cover.iter().copied().collect();
    let outside: Vec<Vertex> = g.vertices().filter(|v| !in_cover.contains(v)).collect();
    for (i, &a) in outside.iter().enumerate() {
        for &b in &outside[i + 1..] {
            if score(&values[a.0 as usize], &values[b.0 as usize], g.dist_unchecked(a, b)).is_positive() {
                return Err(Error::NotACover(g.encode(a), g.encode(b)));
            }
        }
    }
    let mut out = values.to_vec();
    let mut assigned: Vec<Vertex> = outside
        .into_iter()
        .filter(|v| !values[v.0 as usize].is_undefined())
        .collect();
    for &u in cover {
        if values[u.0 as usize].is_undefined() {
            continue;
        }
        let mut best = lo.clone();
        for &v in &assigned {
            let dist = g.dist_unchecked(u, v);
            if dist == UNREACHABLE {
                continue;
            }
            let candidate = out[v.0 as usize].defined().expect("assigned") - &Rational::from_integer(dist as i64);
            if candidate > best {
                best = candidate;
            }
        }
        out[u.0 as usize] = Value::Defined(best);
        assigned.push(u);
    }
    Ok(out)
}

/// Every vertex matched by the seed's LCA on `B_{0,f}`, in index order.
pub fn matched_set<F: FunctionOracle>(g: &Graph, f: F, seed: &Seed, budgets: Budgets) -> Result<Vec<Vertex>> {
    let filter = LocalFilter0::new(g, f, seed, budgets)?;
    let mut out = Vec::new();
    for v in g.vertices() {
        if filter.is_matched(v)? {
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{materialize, TableFunction};
    use crate::violation::violation_edges;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn global_examples() {
        let g = Graph::hypergrid(3, 1).unwrap();
        let values = vec![Value::from(0), Value::from(9), Value::from(2)];
        let out = global_filter_l0(&g, &values, &q(0), &[Vertex(1)]).unwrap();
        assert_eq!(out[1], Value::from(1));
        let g = Graph::hypergrid(2, 1).unwrap();
        let values = vec![Value::from(0), Value::from(4)];
        assert_eq!(
            global_filter_l0(&g, &values, &q(0), &[Vertex(0), Vertex(1)]).unwrap(),
            vec![Value::from(0), Value::from(0)]
        );
        assert!(matches!(global_filter_l0(&g, &values, &q(0), &[]), Err(Error::NotACover(..))));
        let g = Graph::hypergrid(3, 1).unwrap();
        let lipschitz = vec![Value::from(0), Value::from(1), Value::from(1)];
        assert_eq!(global_filter_l0(&g, &lipschitz, &q(0), &[]).unwrap(), lipschitz);
    }

    #[test]
    fn local_two_point() {
        let g = Graph::hypergrid(2, 1).unwrap();
        let f = TableFunction::from_values(&g, q(4), vec![q(0), q(4)]).unwrap();
        for s in 0..10 {
            let filter = LocalFilter0::new(&g, &f, &Seed::from_u64(s), Budgets::default()).unwrap();
            assert_eq!(filter.query(Vertex(0)).unwrap(), Value::from(0));
            assert_eq!(filter.query(Vertex(1)).unwrap(), Value::from(0));
        }
    }

    #[test]
    fn undefined_stays_undefined() {
        let g = Graph::hypergrid(3, 1).unwrap();
        let f = TableFunction::dense(&g, Some((q(0), q(4))), vec![Value::from(0), Value::Undefined, Value::from(4)])
            .unwrap();
        let filter = LocalFilter0::new(&g, &f, &Seed::from_u64(0), Budgets::default()).unwrap();
        assert_eq!(filter.query(Vertex(1)).unwrap(), Value::Undefined);
        // the endpoints are violated (gap 4 at distance 2); one of them is reassigned
        let outputs: Vec<Value> = g.vertices().map(|v| filter.query(v).unwrap()).collect();
        let (a, b) = (outputs[0].defined().unwrap(), outputs[2].defined().unwrap());
        assert!((a - b).abs() <= q(2));
        assert!(outputs[0] != Value::from(0) || outputs[2] != Value::from(4));
    }

    fn cube_strategy() -> impl Strategy<Value = (usize, Vec<i64>, i64)> {
        (1usize..=6, 1i64..=5).prop_flat_map(|(d, r)| (Just(d), proptest::collection::vec(0i64..=r, 1 << d), Just(r)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn local_output_is_lipschitz_extension_of_matched_cover((d, values, r) in cube_strategy(), seed in any::<u64>(), perm in any::<u64>()) {
            let g = Graph::hypercube(d).unwrap();
            let f = TableFunction::from_values(&g, q(r), values.iter().map(|&v| q(v)).collect()).unwrap();
            let seed = Seed::from_u64(seed);
            let filter = LocalFilter0::new(&g, &f, &seed, Budgets::default()).unwrap();
            let local: Vec<Value> = g.vertices().map(|v| filter.query(v).unwrap()).collect();
            let table = materialize(&g, &f).unwrap();
            let cover = matched_set(&g, &f, &seed, Budgets::default()).unwrap();
            // the matched set covers every violated pair
            for e in violation_edges(&g, &table, &q(0)) {
                let (u, v) = e.endpoints();
                prop_assert!(cover.contains(&u) || cover.contains(&v));
            }
            let global = global_filter_l0(&g, &table, &q(0), &cover).unwrap();
            prop_assert_eq!(&local, &global);
            let mut shuffled = cover.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(perm));
            prop_assert_eq!(&global_filter_l0(&g, &table, &q(0), &shuffled).unwrap(), &global);
            for (u, v) in g.edges() {
                let (a, b) = (local[u.0 as usize].defined().unwrap(), local[v.0 as usize].defined().unwrap());
                prop_assert!((a - b).abs() <= q(1));
            }
            for v in g.vertices() {
                if !cover.contains(&v) {
                    prop_assert_eq!(&local[v.0 as usize], &table[v.0 as usize]);
                }
            }
        }
    }
}
