//! Violation scores and the violation-graph neighbor oracle.

use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::function::{FunctionOracle, Value};
use crate::graph::{BallKind, Graph, Vertex, UNREACHABLE};
use crate::matching::{EdgeId, LocalGraph};
use crate::rational::Rational;

/// Default cap on vertices enumerated by one ball exploration.
pub const DEFAULT_BALL_BUDGET: u64 = 1 << 22;

/// Anything that assigns values to vertices: a function oracle or an
/// intermediate filter round.
pub trait ValueSource: Send + Sync {
    fn value(&self, x: Vertex) -> Result<Value>;

    fn bounds(&self) -> Option<(Rational, Rational)>;

    fn support(&self) -> Option<Vec<usize>> {
        None
    }
}

impl<F: FunctionOracle + ?Sized> ValueSource for F {
    fn value(&self, x: Vertex) -> Result<Value> {
        self.lookup(x)
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        FunctionOracle::bounds(self)
    }

    fn support(&self) -> Option<Vec<usize>> {
        FunctionOracle::support(self)
    }
}

/// `max(0, |a - b| - dist)`, zero for undefined values or unreachable pairs.
pub fn score(a: &Value, b: &Value, dist: u64) -> Rational {
    match (a, b) {
        (Value::Defined(a), Value::Defined(b)) if dist != UNREACHABLE => {
            let gap = (a - b).abs() - Rational::from_integer(dist as i64);
            if gap.is_positive() {
                gap
            } else {
                Rational::zero()
            }
        }
        _ => Rational::zero(),
    }
}

/// `VS_f(x, y)`.
pub fn violation_score(g: &Graph, f: &dyn ValueSource, x: Vertex, y: Vertex) -> Result<Rational> {
    let dist = g.dist(x, y)?;
    Ok(score(&f.value(x)?, &f.value(y)?, dist))
}

/// Neighbor oracle of the violation graph `B_{τ,f}`: `y` is adjacent to `x`
/// iff `VS_f(x, y) > τ`.
///
/// Neighbor lists and values are cached for the lifetime of the oracle.
pub struct ViolationGraph<'a> {
    graph: &'a Graph,
    source: Arc<dyn ValueSource + 'a>,
    tau: Rational,
    lo: Rational,
    hi: Rational,
    budget: u64,
    support: Option<Vec<usize>>,
    values: Mutex<FxHashMap<Vertex, Value>>,
    neighbors: Mutex<FxHashMap<Vertex, Arc<[Vertex]>>>,
}

impl<'a> ViolationGraph<'a> {
    pub fn over<S: ValueSource + 'a>(graph: &'a Graph, source: S, tau: Rational, budget: u64) -> Result<Self> {
        Self::new(graph, Arc::new(source), tau, budget)
    }

    pub fn new(graph: &'a Graph, source: Arc<dyn ValueSource + 'a>, tau: Rational, budget: u64) -> Result<Self> {
        if tau.is_negative() {
            return Err(Error::InvalidParam(format!("negative threshold {tau}")));
        }
        let (lo, hi) = source
            .bounds()
            .ok_or_else(|| Error::InvalidParam("violation search needs a bounded range".into()))?;
        // a support only helps on coordinate domains
        let support = source.support().filter(|_| graph.dim().is_some());
        Ok(Self {
            graph,
            source,
            tau,
            lo,
            hi,
            budget,
            support,
            values: Mutex::new(FxHashMap::default()),
            neighbors: Mutex::new(FxHashMap::default()),
        })
    }

    pub fn tau(&self) -> &Rational {
        &self.tau
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn bounds(&self) -> (&Rational, &Rational) {
        (&self.lo, &self.hi)
    }

    /// Cached value of the underlying source.
    pub fn value(&self, x: Vertex) -> Result<Value> {
        if let Some(v) = self.values.lock().expect("value lock").get(&x) {
            return Ok(v.clone());
        }
        let v = self.source.value(x)?;
        self.values.lock().expect("value lock").insert(x, v.clone());
        Ok(v)
    }

    /// Sorted list of `y` with `dist(x, y) < |f(x) - f(y)| - τ`.
    pub fn viol(&self, x: Vertex) -> Result<Arc<[Vertex]>> {
        if let Some(list) = self.neighbors.lock().expect("neighbor lock").get(&x) {
            return Ok(list.clone());
        }
        let list: Arc<[Vertex]> = self.compute(x)?.into();
        self.neighbors.lock().expect("neighbor lock").insert(x, list.clone());
        Ok(list)
    }

    fn compute(&self, x: Vertex) -> Result<Vec<Vertex>> {
        self.graph.check(x)?;
        let Value::Defined(fx) = self.value(x)? else {
            return Ok(Vec::new());
        };
        // no value in [lo, hi] is further than `reach` from f(x)
        let reach = (&fx - &self.lo).max(&self.hi - &fx);
        if reach <= self.tau {
            return Ok(Vec::new());
        }
        let radius = ((&reach - &self.tau).ceil_i64() - 1).max(0) as u64;
        let mut out = Vec::new();
        match &self.support {
            Some(support) => self.compute_junta(x, &fx, radius, support, &mut out)?,
            None => {
                for (y, dist) in self.graph.ball(x, radius, BallKind::Closed, self.budget)? {
                    if let Value::Defined(fy) = self.value(y)? {
                        if (&fx - &fy).abs().exceeds_by(&self.tau, dist) {
                            out.push(y);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The source ignores coordinates outside `support`: read one
    /// representative per projection, then extend each violated
    /// representative along the ignored coordinates.
    fn compute_junta(
        &self,
        x: Vertex,
        fx: &Rational,
        radius: u64,
        support: &[usize],
        out: &mut Vec<Vertex>,
    ) -> Result<()> {
        let d = self.graph.dim().expect("coordinate domain");
        let rest: Vec<usize> = (0..d).filter(|i| !support.contains(i)).collect();
        let mut reps = Vec::new();
        self.graph.ball_in_coords(x, support, radius, self.budget, &mut |z, dist| reps.push((z, dist)))?;
        let mut enumerated = reps.len() as u64;
        for (z, dist_k) in reps {
            let Value::Defined(fz) = self.value(z)? else { continue };
            let excess = (fx - &fz).abs() - &self.tau - Rational::from_integer(dist_k as i64);
            if !excess.is_positive() {
                continue;
            }
            let extra = (excess.ceil_i64() - 1).max(0) as u64;
            let remaining = self.budget.saturating_sub(enumerated);
            self.graph.ball_in_coords(z, &rest, extra, remaining, &mut |y, _| {
                enumerated += 1;
                out.push(y);
            })?;
        }
        Ok(())
    }

    /// `x` has at least one violated partner at threshold `τ`.
    pub fn is_dangerous(&self, x: Vertex) -> Result<bool> {
        Ok(!self.viol(x)?.is_empty())
    }
}

impl LocalGraph for ViolationGraph<'_> {
    fn local_neighbors(&self, x: Vertex) -> Result<Arc<[Vertex]>> {
        self.viol(x)
    }
}

/// `x` is in some violated pair of `f` (threshold 0).
pub fn is_dangerous<F: FunctionOracle + ?Sized>(g: &Graph, f: &F, x: Vertex) -> Result<bool> {
    ViolationGraph::over(g, f, Rational::zero(), DEFAULT_BALL_BUDGET)?.is_dangerous(x)
}

/// All edges of `B_{τ,f}` by an all-pairs scan over a value table.
pub fn violation_edges(g: &Graph, values: &[Value], tau: &Rational) -> Vec<EdgeId> {
    let mut out = Vec::new();
    let n = g.num_vertices();
    for a in 0..n {
        let Value::Defined(fa) = &values[a as usize] else { continue };
        for b in a + 1..n {
            let Value::Defined(fb) = &values[b as usize] else { continue };
            let dist = g.dist_unchecked(Vertex(a), Vertex(b));
            if dist != UNREACHABLE && (fa - fb).abs().exceeds_by(tau, dist) {
                out.push(EdgeId::new(Vertex(a), Vertex(b)));
            }
        }
    }
    out
}

/// Largest violation score over all pairs of a value table.
pub fn max_violation_score(g: &Graph, values: &[Value]) -> Rational {
    let n = g.num_vertices();
    let mut best = Rational::zero();
    for a in 0..n {
        for b in a + 1..n {
            let s = score(&values[a as usize], &values[b as usize], g.dist_unchecked(Vertex(a), Vertex(b)));
            if s > best {
                best = s;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{FnOracle, TableFunction};
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn line(values: &[i64]) -> (Graph, TableFunction) {
        let g = Graph::hypergrid(values.len() as u64, 1).unwrap();
        let r = *values.iter().max().unwrap();
        let f = TableFunction::from_values(&g, q(r.max(0)), values.iter().map(|&v| q(v)).collect()).unwrap();
        (g, f)
    }

    #[test]
    fn score_examples() {
        let g = Graph::hypercube(2).unwrap();
        let f = TableFunction::from_fn(&g, q(3), |v| if v.0 == 3 { q(3) } else { q(0) }).unwrap();
        assert_eq!(violation_score(&g, &f, Vertex(0), Vertex(3)).unwrap(), q(1));
        assert_eq!(score(&Value::from(1), &Value::Defined(Rational::new(3, 2)), 1), q(0));
        assert_eq!(score(&Value::Undefined, &Value::from(9), 1), q(0));
        assert_eq!(score(&Value::from(0), &Value::from(9), UNREACHABLE), q(0));
    }

    #[test]
    fn viol_examples() {
        let (g, f) = line(&[0, 3, 0]);
        let b = ViolationGraph::over(&g, &f, q(0), 1000).unwrap();
        assert_eq!(&*b.viol(Vertex(0)).unwrap(), &[Vertex(1)]);
        let (g, f) = line(&[0, 4]);
        let b = ViolationGraph::over(&g, &f, q(3), 1000).unwrap();
        assert!(b.viol(Vertex(0)).unwrap().is_empty());
        let b = ViolationGraph::over(&g, &f, Rational::new(5, 2), 1000).unwrap();
        assert_eq!(&*b.viol(Vertex(0)).unwrap(), &[Vertex(1)]);
    }

    #[test]
    fn dangerous_examples() {
        let (g, f) = line(&[0, 4]);
        assert!(is_dangerous(&g, &f, Vertex(0)).unwrap());
        assert!(is_dangerous(&g, &f, Vertex(1)).unwrap());
        let (g, f) = line(&[0, 1, 0]);
        assert!(g.vertices().all(|x| !is_dangerous(&g, &f, x).unwrap()));
    }

    #[test]
    fn undefined_points_have_no_violations() {
        let g = Graph::hypergrid(3, 1).unwrap();
        let f = TableFunction::dense(&g, Some((q(0), q(5))), vec![Value::from(0), Value::Undefined, Value::from(5)])
            .unwrap();
        let b = ViolationGraph::over(&g, &f, q(0), 100).unwrap();
        assert!(b.viol(Vertex(1)).unwrap().is_empty());
        assert_eq!(&*b.viol(Vertex(0)).unwrap(), &[Vertex(2)]);
    }

    fn random_table(d: usize, values: &[i64]) -> (Graph, TableFunction) {
        let g = Graph::hypercube(d).unwrap();
        let f = TableFunction::from_fn(&g, q(6), |v| q(values[v.0 as usize])).unwrap();
        (g, f)
    }

    fn cube_strategy() -> impl Strategy<Value = (usize, Vec<i64>)> {
        (1usize..=6).prop_flat_map(|d| (Just(d), proptest::collection::vec(0i64..=6, 1 << d)))
    }

    proptest! {
        #[test]
        fn ball_search_matches_all_pairs((d, values) in cube_strategy(), tau_num in 0i64..12) {
            let (g, f) = random_table(d, &values);
            let tau = Rational::new(tau_num, 2);
            let table: Vec<Value> = values.iter().map(|&v| Value::from(v)).collect();
            let edges = violation_edges(&g, &table, &tau);
            let b = ViolationGraph::over(&g, &f, tau.clone(), u64::MAX).unwrap();
            for x in g.vertices() {
                let mut want: Vec<Vertex> = edges.iter().filter_map(|e| {
                    let (u, v) = e.endpoints();
                    if u == x { Some(v) } else if v == x { Some(u) } else { None }
                }).collect();
                want.sort_unstable();
                prop_assert_eq!(&*b.viol(x).unwrap(), &want[..]);
                for &y in &want {
                    prop_assert!(violation_score(&g, &f, x, y).unwrap() > tau);
                    prop_assert!(b.viol(y).unwrap().contains(&x));
                }
            }
        }

        #[test]
        fn score_is_symmetric((d, values) in cube_strategy(), a in any::<u64>(), b in any::<u64>()) {
            let (g, f) = random_table(d, &values);
            let n = g.num_vertices();
            let (x, y) = (Vertex(a % n), Vertex(b % n));
            prop_assert_eq!(violation_score(&g, &f, x, y).unwrap(), violation_score(&g, &f, y, x).unwrap());
        }

        #[test]
        fn reverse_triangle_on_violation_paths(n in 3u64..7, d in 1usize..=2, values in proptest::collection::vec(0i64..=8, 49)) {
            let g = Graph::hypergrid(n, d).unwrap();
            let table: Vec<Value> = g.vertices().map(|v| Value::from(values[v.0 as usize])).collect();
            let val = |v: Vertex| table[v.0 as usize].defined().unwrap().clone();
            let vs = |a: Vertex, b: Vertex| score(&table[a.0 as usize], &table[b.0 as usize], g.dist_unchecked(a, b));
            for x in g.vertices() {
                for y in g.vertices() {
                    if !(vs(x, y).is_positive() && val(x) < val(y)) { continue; }
                    for z in g.vertices() {
                        if vs(y, z).is_positive() && val(y) < val(z) {
                            prop_assert!(vs(x, z) >= vs(x, y) + vs(y, z));
                        }
                    }
                }
            }
        }

        #[test]
        fn junta_search_matches_plain(d in 3usize..=7, k in 1usize..=3, values in proptest::collection::vec(0i64..=5, 8), tau_num in 0i64..6) {
            let g = Graph::hypercube(d).unwrap();
            let support: Vec<usize> = (0..k).map(|i| (i * 2) % d).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            let proj = |v: Vertex| support.iter().fold(0usize, |acc, &i| acc * 2 + g.coord(v, i) as usize);
            let plain = FnOracle::new(&g, Some((q(0), q(5))), |v| Value::from(values[proj(v)]));
            let junta = FnOracle::new(&g, Some((q(0), q(5))), |v| Value::from(values[proj(v)])).with_support(support.clone());
            let tau = Rational::new(tau_num, 2);
            let a = ViolationGraph::over(&g, &plain, tau.clone(), u64::MAX).unwrap();
            let b = ViolationGraph::over(&g, &junta, tau, u64::MAX).unwrap();
            for x in g.vertices() {
                prop_assert_eq!(a.viol(x).unwrap(), b.viol(x).unwrap());
            }
        }
    }
}
